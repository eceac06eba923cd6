"""Correlation functions attached to tensor product vectors.

Each basis vector of the tensor product maps to a function on the chamber
through an exact coefficient table that trades the nested contour
integrals for real ordered ones.  The triangular-array bookkeeping behind
that table is easy to get wrong, so every build of a one- or two-group
table is compared against an independently coded closed form, and the
test suite checks low orders against the direct contour oracle.

Vectors combine at the exact coefficient level before any quadrature
runs.  Cancellations that close the integration surface for highest
weight vectors are therefore exact, which is what makes the anchor drop
out of F_hwv up to quadrature error only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .coulomb import (
    ChamberPoint,
    QuadratureSpec,
    ScreeningConfig,
    b_const,
    delta_fusion,
    h_weight,
    tilde_rho,
)
from .qseries import (
    KappaParams,
    LaurentPoly,
    QScalar,
    Q_ONE,
    Q_ZERO,
    eval_q,
    qbinom,
    qfact,
    qint,
    qmultinom,
)
from .uqsl2 import (
    Q_COMM,
    TensorSpace,
    TensorVector,
    act,
    is_hwv,
    project,
    r_minus,
    r_plus,
    submodule_vector,
)

_SEPARATIONS = (1e-2, 1e-3, 1e-4)
_S_VALUES = (1e2, 1e3, 1e4)


# -- reduction of basis functions to real integrals ------------------------


@dataclass(frozen=True, eq=False)
class ReductionTable:
    """Exact coefficients carrying one basis function onto the rephased
    real integrals: the function equals sum over entries of
    coefficient * tilde_rho at the assignment m."""

    dims: tuple
    l: ScreeningConfig
    entries: dict

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not isinstance(self.l, ScreeningConfig):
            object.__setattr__(self, "l", ScreeningConfig(tuple(self.l)))
        n = len(dims)
        if len(self.l.counts) != n:
            raise ValueError(
                f"screening configuration has {len(self.l.counts)} groups,"
                f" expected {n}"
            )
        clean = {}
        for m, coeff in self.entries.items():
            m = tuple(int(mi) for mi in m)
            if len(m) != n or any(mi < 0 for mi in m):
                raise ValueError(f"bad screening assignment {m}")
            if sum(m) != self.l.total:
                raise ValueError(
                    f"assignment {m} does not conserve the screening count"
                )
            run_l = run_m = 0
            for li, mi in zip(self.l.counts, m):
                run_l += li
                run_m += mi
                if run_l > run_m:
                    raise ValueError(
                        f"assignment {m} moves screening variables away"
                        " from the anchor"
                    )
            if not coeff.is_zero():
                clean[m] = coeff
        object.__setattr__(self, "entries", clean)


def _compositions(total, parts):
    """Weak compositions of total into the given number of parts."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def _group_prefactor(d, l):
    """Ladder product for one group; contains an exact zero once l >= d."""
    out = QScalar.q_power(l * (l - 1) // 2)
    for t in range(1, l + 1):
        out = out * (QScalar.q_power(d - t) - QScalar.q_power(t - d))
    return out


def _general_entries(dims, counts):
    """Triangular-array sum over loop reassignments.

    Group i distributes its counts[i] loops over slots 1..i; slot j
    collects the loops of all groups at or beyond it.  Each reassignment
    carries a q-multinomial and integer q-powers for the crossings it
    introduces.
    """
    n = len(dims)
    pref = Q_ONE
    for d, l in zip(dims, counts):
        pref = pref * _group_prefactor(d, l)
    if pref.is_zero():
        return {}
    entries = {}
    slot_choices = [_compositions(counts[i], i + 1) for i in range(n)]
    for arrays in product(*slot_choices):
        mult = Q_ONE
        expo = 0
        for gi, parts in enumerate(arrays):
            mult = mult * qmultinom(counts[gi], parts)
            s = sum(parts)
            expo -= (s * s - sum(p * p for p in parts)) // 2
        for i in range(n):
            ki = arrays[i]
            for ip in range(i + 1, n):
                kip = arrays[ip]
                # later-group loops parked strictly left of earlier ones
                expo -= 2 * sum(ki[j] * sum(kip[:j]) for j in range(1, len(ki)))
                expo += (dims[i] - 1) * sum(kip[: i + 1])
        m = tuple(sum(arrays[i][j] for i in range(j, n)) for j in range(n))
        entries[m] = entries.get(m, Q_ZERO) + mult * QScalar.q_power(expo)
    out = {}
    for m, coeff in entries.items():
        val = pref * coeff
        if not val.is_zero():
            out[m] = val
    return out


def _closed_form_entries(dims, counts):
    """Independently coded tables for one and two groups."""
    if len(dims) == 1:
        pref = _group_prefactor(dims[0], counts[0])
        return {} if pref.is_zero() else {(counts[0],): pref}
    (d1, _d2), (l1, l2) = dims, counts
    pref = _group_prefactor(dims[0], l1) * _group_prefactor(dims[1], l2)
    if pref.is_zero():
        return {}
    out = {}
    for t in range(l2 + 1):
        coeff = pref * qbinom(l2, t) * QScalar.q_power(t * (t - l2 + d1 - 1))
        if not coeff.is_zero():
            out[(l1 + t, l2 - t)] = coeff
    return out


@lru_cache(maxsize=None)
def _table_entries(dims, counts):
    entries = _general_entries(dims, counts)
    if len(dims) <= 2 and entries != _closed_form_entries(dims, counts):
        raise ArithmeticError(
            f"reduction table for dims={dims}, l={counts} fails the"
            " closed-form cross-check"
        )
    return entries


def _dims_counts(dims, l, n=None):
    dims = tuple(int(d) for d in dims)
    counts = l.counts if isinstance(l, ScreeningConfig) else tuple(int(c) for c in l)
    if any(d < 1 for d in dims):
        raise ValueError("dimensions must be positive integers")
    if any(c < 0 for c in counts):
        raise ValueError("screening counts must be nonnegative")
    if len(counts) != len(dims):
        raise ValueError(
            f"{len(counts)} screening counts for {len(dims)} dimensions"
        )
    if n is not None and len(dims) != n:
        raise ValueError(f"expected {n} dimensions, got {len(dims)}")
    return dims, counts


def reduction_coeffs(dims, l) -> ReductionTable:
    """Exact table taking one basis function to the real integrals.

    One- and two-group tables are rebuilt from independent closed forms on
    every call and must match exactly; a mismatch means the triangular
    array itself is wrong and raises instead of returning bad data.
    """
    dims, counts = _dims_counts(dims, l)
    entries = dict(_table_entries(dims, counts))
    return ReductionTable(dims, ScreeningConfig(counts), entries)


# -- numeric evaluation ----------------------------------------------------


@lru_cache(maxsize=4096)
def _rho_tilde(c, dims, m, kappa, quad):
    return tilde_rho(c, dims, m, kappa, quad)


def phi(c: ChamberPoint, dims, l, kappa, quad: QuadratureSpec | None = None) -> complex:
    """Basis function at one chamber point, through the reduction table.

    Exactly zero whenever some count reaches its group dimension, without
    touching the quadrature.
    """
    dims, counts = _dims_counts(dims, l, c.n)
    quad = quad if quad is not None else QuadratureSpec()
    kp = KappaParams(kappa)
    total = 0j
    for m, coeff in _table_entries(dims, counts).items():
        total += eval_q(coeff, kp) * _rho_tilde(c, dims, m, kappa, quad)
    return total


def _vector_weights(v):
    """Exact per-assignment weights of the linear extension."""
    dims = v.space.dims
    weights = {}
    for idx, cv in v.coeffs.items():
        for m, ck in _table_entries(dims, idx).items():
            prev = weights.get(m)
            weights[m] = ck * cv if prev is None else prev + ck * cv
    return {m: w for m, w in weights.items() if not w.is_zero()}


def F_anchor(v: TensorVector, c: ChamberPoint, kappa,
             quad: QuadratureSpec | None = None) -> complex:
    """Linear extension of the basis functions to a tensor vector.

    Coefficients of all basis components are combined exactly before any
    integral is evaluated, so the linearity holds at the coefficient level
    and exact cancellations never reach the quadrature.
    """
    dims = v.space.dims
    if len(dims) != c.n:
        raise ValueError(
            f"vector lives on {len(dims)} points but the chamber has {c.n}"
        )
    quad = quad if quad is not None else QuadratureSpec()
    kp = KappaParams(kappa)
    total = 0j
    for m, w in _vector_weights(v).items():
        total += eval_q(w, kp) * _rho_tilde(c, dims, m, kappa, quad)
    return total


def F_hwv(v: TensorVector, x, kappa, quad: QuadratureSpec | None = None,
          x0=None, check_anchor: bool = False, anchor_rtol: float = 1e-8) -> complex:
    """Function of a highest weight vector on the chamber itself.

    The default anchor sits one chamber span left of the first point.
    With check_anchor=True the value is recomputed at a second anchor and
    the two must agree within anchor_rtol, which bounds the quadrature
    error on the closed integration surface.
    """
    if not act("E", v).is_zero():
        raise ValueError("not a highest weight vector (E.v != 0)")
    xs = tuple(float(xi) for xi in x)
    for a, b in zip(xs, xs[1:]):
        if not a < b:
            raise ValueError("coordinates must increase strictly")
    span = xs[-1] - xs[0]
    if span == 0.0:
        span = 1.0
    anchor = float(x0) if x0 is not None else xs[0] - span
    val = F_anchor(v, ChamberPoint(anchor, xs), kappa, quad)
    if check_anchor:
        second = xs[0] - 2.0 * span - 1.0
        if second == anchor:
            second -= 1.0
        other = F_anchor(v, ChamberPoint(second, xs), kappa, quad)
        scale = max(abs(val), abs(other))
        if scale > 0.0 and abs(val - other) > anchor_rtol * scale:
            raise ArithmeticError(
                f"anchor dependence {abs(val - other) / scale:.2e} exceeds"
                f" {anchor_rtol:g}: {val} at x0={anchor:g},"
                f" {other} at x0={second:g}"
            )
    return val


# -- mixed functions and asymptotics ---------------------------------------


def _check_pair_summand(d1, d2, d):
    two_m = d1 + d2 - 1 - d
    if two_m < 0 or two_m % 2 or two_m // 2 > min(d1, d2) - 1:
        raise ValueError(f"d={d} not in decomposition of the pair ({d1}, {d2})")
    return two_m // 2


def _embed_pair(hat, j, d1, d2):
    """Replace tensorand j of hat by the matching vector of the pair
    summand with dimensions (d1, d2)."""
    dims_hat = hat.space.dims
    d = dims_hat[j - 1]
    m = _check_pair_summand(d1, d2, d)
    space = TensorSpace(dims_hat[: j - 1] + (d1, d2) + dims_hat[j:])
    cols = {l: submodule_vector(d1, d2, m, l).coeffs for l in range(d)}
    coeffs = {}
    for idx, cv in hat.coeffs.items():
        for pair_idx, base in cols[idx[j - 1]].items():
            full = idx[: j - 1] + pair_idx + idx[j:]
            prev = coeffs.get(full)
            coeffs[full] = cv * base if prev is None else prev + cv * base
    return TensorVector(space, coeffs)


def alpha_mixed(c: ChamberPoint, dims, j, d, l, outer, kappa,
                quad: QuadratureSpec | None = None) -> complex:
    """Mixed function: the pair (j, j+1) carries the l-th vector of its
    d-dimensional summand, every other point a plain basis vector.

    outer lists the basis indices of the points outside the pair, in
    coordinate order.
    """
    dims = tuple(int(d_) for d_ in dims)
    n = len(dims)
    if n != c.n:
        raise ValueError(f"expected {c.n} dimensions, got {n}")
    if any(d_ < 1 for d_ in dims):
        raise ValueError("dimensions must be positive integers")
    if not 1 <= j <= n - 1:
        raise ValueError(f"pair position {j} out of range for n={n}")
    d1, d2 = dims[j - 1], dims[j]
    _check_pair_summand(d1, d2, d)
    if not 0 <= l < d:
        raise ValueError(f"l={l} outside the d={d} summand")
    outer = tuple(int(o) for o in outer)
    if len(outer) != n - 2:
        raise ValueError(f"expected {n - 2} outer indices, got {len(outer)}")
    hat_space = TensorSpace(dims[: j - 1] + (d,) + dims[j + 1:])
    hat_idx = outer[: j - 1] + (l,) + outer[j - 1:]
    if not hat_space.contains_index(hat_idx):
        raise ValueError(f"outer indices {outer} out of range")
    hat = TensorVector.basis(hat_space, hat_idx)
    return F_anchor(_embed_pair(hat, j, d1, d2), c, kappa, quad)


def _power_fit(seps, values):
    """Pairwise log-log slopes and their geometric extrapolation."""
    mags = [abs(z) for z in values]
    if min(mags) == 0.0:
        nan = float("nan")
        return (nan,) * (len(seps) - 1), nan
    slopes = tuple(
        math.log(mags[i + 1] / mags[i]) / math.log(seps[i + 1] / seps[i])
        for i in range(len(seps) - 1)
    )
    if len(slopes) == 1:
        return slopes, slopes[0]
    # the leading correction to each slope shrinks by the separation ratio
    r = seps[-1] / seps[-2]
    return slopes, slopes[-1] + (slopes[-1] - slopes[-2]) * r / (1.0 - r)


def asymptotics_check(v: TensorVector, j, d, kappa,
                      quad: QuadratureSpec | None = None,
                      separations=_SEPARATIONS) -> dict:
    """Collapse the neighbor pair (j, j+1) and compare with the predicted
    power law and constant.

    Returns a report with the values at each separation, the ratios after
    dividing out the predicted power, the fitted exponent, and the
    reference constant built from the reduced vector.
    """
    dims = v.space.dims
    n = len(dims)
    pi_image, hat = project(v, j, d)
    if pi_image != v:
        raise ValueError(
            f"vector is not in the d={d} summand of the pair ({j}, {j + 1})"
        )
    quad = quad if quad is not None else QuadratureSpec()
    separations = tuple(float(s) for s in separations)
    xi = j + 0.5
    base = [float(i) for i in range(1, n + 1)]
    exponent_ref = delta_fusion(d, dims[j - 1], dims[j], kappa)
    values = []
    ratios = []
    for sep in separations:
        pts = list(base)
        pts[j - 1] = xi - sep / 2.0
        pts[j] = xi + sep / 2.0
        val = F_anchor(v, ChamberPoint(0.0, tuple(pts)), kappa, quad)
        values.append(val)
        ratios.append(val / sep ** exponent_ref)
    collapsed = tuple(base[: j - 1] + [xi] + base[j + 1:])
    reference = b_const(d, dims[j - 1], dims[j], kappa, quad) * F_anchor(
        hat, ChamberPoint(0.0, collapsed), kappa, quad
    )
    slopes, fit = _power_fit(separations, values)
    return {
        "separations": separations,
        "values": tuple(values),
        "ratios": tuple(ratios),
        "slopes": slopes,
        "exponent": fit,
        "exponent_ref": exponent_ref,
        "constant": ratios[-1],
        "reference": reference,
    }


def infinity_limit(v: TensorVector, side, kappa,
                   quad: QuadratureSpec | None = None,
                   s_values=_S_VALUES) -> dict:
    """Send the outermost point to infinity and compare the rescaled trend
    against the function with one variable less.

    side selects which end escapes: "plus" sends the last point to
    +infinity, "minus" the first point to -infinity.  Requires a vector of
    the trivial subrepresentation, so both sides are anchor free.
    """
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    if not is_hwv(v, 1):
        raise ValueError("vector is not in the trivial subrepresentation")
    dims = v.space.dims
    n = len(dims)
    if n < 2:
        raise ValueError("need at least two tensorands")
    quad = quad if quad is not None else QuadratureSpec()
    kp = KappaParams(kappa)
    finite = tuple(float(i) for i in range(1, n))
    if side == "plus":
        d_edge = dims[-1]
        reduced = r_plus(v)
        edge_scalar = Q_COMM ** (d_edge - 1) * qfact(d_edge - 1) ** 2
    else:
        d_edge = dims[0]
        reduced = r_minus(v)
        drop = QScalar.from_poly(LaurentPoly({-2: 1, 0: -1}))
        edge_scalar = drop ** (d_edge - 1) * qfact(d_edge - 1) ** 2
    constant = eval_q(edge_scalar, kp) * b_const(1, d_edge, d_edge, kappa, quad)
    exponent = 2.0 * h_weight(d_edge, kappa)
    s_values = tuple(float(s) for s in s_values)
    scaled = []
    for s in s_values:
        pts = finite + (s,) if side == "plus" else (-s,) + finite
        scaled.append(s ** exponent * F_hwv(v, pts, kappa, quad))
    reference = constant * F_hwv(reduced, finite, kappa, quad)
    denom = abs(reference)
    if denom > 0.0:
        errors = tuple(abs(z - reference) / denom for z in scaled)
    else:
        errors = tuple(abs(z) for z in scaled)
    return {
        "side": side,
        "s_values": s_values,
        "scaled": tuple(scaled),
        "constant": constant,
        "reference": reference,
        "relative_errors": errors,
    }


def _block_decompose(v, j, k):
    """Split v into a single outer basis configuration and the vector it
    carries on the block of positions j..k."""
    if v.is_zero():
        raise ValueError("zero vector has no block decomposition")
    dims = v.space.dims
    outer_set = {idx[: j - 1] + idx[k:] for idx in v.coeffs}
    if len(outer_set) != 1:
        raise ValueError(
            "vector is not a basis tensor outside the collapsing block"
        )
    outer = next(iter(outer_set))
    block_space = TensorSpace(dims[j - 1: k])
    block = TensorVector(
        block_space, {idx[j - 1: k]: cv for idx, cv in v.coeffs.items()}
    )
    return outer, block


def _ladder_root(u, d):
    """Write u as F^l applied to a highest weight vector of weight d.

    Returns (l, tau0); raises if u does not lie in one irreducible ladder.
    """
    chain = [u]
    w = u
    while not act("E", w).is_zero():
        w = act("E", w)
        chain.append(w)
    l = len(chain) - 1
    top = chain[-1]
    if not is_hwv(top, d):
        raise ValueError(
            f"block vector is not generated from a d={d} highest weight vector"
        )
    ladder = Q_ONE
    for t in range(1, l + 1):
        ladder = ladder * qint(t) * qint(d - t)
    tau0 = top.scale(ladder.inverse())
    check = tau0
    for _ in range(l):
        check = act("F", check)
    if check != u:
        raise ValueError(
            "block vector is not a ladder descendant of a highest weight vector"
        )
    return l, tau0


def general_asymptotics_check(v: TensorVector, j, k, d, eta, kappa,
                              quad: QuadratureSpec | None = None,
                              separations=_SEPARATIONS) -> dict:
    """Collapse the points x_j..x_k at fixed ratios and compare with the
    product of the block function and the reduced function.

    The vector must carry plain basis indices outside the block and a
    ladder descendant of a d-dimensional highest weight vector on it.
    """
    dims = v.space.dims
    n = len(dims)
    if not 1 <= j < k <= n:
        raise ValueError(f"block ({j}, {k}) out of range for n={n}")
    outer, block = _block_decompose(v, j, k)
    l, tau0 = _ladder_root(block, d)
    eta = tuple(float(e) for e in eta)
    if len(eta) != k - j + 1:
        raise ValueError(f"expected {k - j + 1} ratios, got {len(eta)}")
    if eta[0] != 0.0 or eta[-1] != 1.0:
        raise ValueError("ratios must start at 0 and end at 1")
    if any(not a < b for a, b in zip(eta, eta[1:])):
        raise ValueError("ratios must increase strictly")
    quad = quad if quad is not None else QuadratureSpec()
    separations = tuple(float(s) for s in separations)
    exponent_ref = h_weight(d, kappa) - sum(
        h_weight(dims[i], kappa) for i in range(j - 1, k)
    )
    xi = (j + k) / 2.0
    base = [float(i) for i in range(1, n + 1)]
    values = []
    ratios = []
    for sep in separations:
        pts = list(base)
        for off, e in enumerate(eta):
            pts[j - 1 + off] = xi - sep / 2.0 + e * sep
        val = F_anchor(v, ChamberPoint(0.0, tuple(pts)), kappa, quad)
        values.append(val)
        ratios.append(val / sep ** exponent_ref)
    block_value = F_hwv(tau0, eta, kappa, quad)
    hat_space = TensorSpace(dims[: j - 1] + (d,) + dims[k:])
    hat = TensorVector.basis(hat_space, outer[: j - 1] + (l,) + outer[j - 1:])
    collapsed = tuple(base[: j - 1] + [xi] + base[k:])
    reference = block_value * F_anchor(
        hat, ChamberPoint(0.0, collapsed), kappa, quad
    )
    slopes, fit = _power_fit(separations, values)
    return {
        "separations": separations,
        "eta": eta,
        "values": tuple(values),
        "ratios": tuple(ratios),
        "slopes": slopes,
        "exponent": fit,
        "exponent_ref": exponent_ref,
        "constant": ratios[-1],
        "reference": reference,
        "block_value": block_value,
    }
