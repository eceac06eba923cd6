"""Quantum-group covariant boundary correlation functions via screened
Coulomb-gas integrals."""

__version__ = "0.1.0"
