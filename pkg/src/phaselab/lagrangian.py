"""Builders for sum-of-squares ("geometric") Lagrangians.

Every builder returns a :class:`GeometricLagrangian`: a nonnegative
expression field whose zeros are exactly the solutions of the encoded
system, together with its domain box and per-variable role tags.  The
rationality gadget used throughout is

    sin^2(pi/m) + sin^2(pi/n) + (a*m - n)^2 ,   m, n in (0, 1],

which vanishes iff 1/m and 1/n are integers with a = n/m, i.e. iff the
encoded quantity a is a positive rational.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (ArityMismatch, DimensionOverflow, DomainViolation,
                     FlatDerivative)
from .fields import (Add, Box, Const, Div, ExpressionField, Mul, Pow, Sin,
                     Sub, Var, add_all, is_sum_of_squares, remap_variables,
                     square)

ARITY_CAP = 24

ROLE_GEOMETRY = "geometry"
ROLE_TARGET = "target"
ROLE_DENOM_M = "denominator-m"
ROLE_DENOM_N = "denominator-n"
ROLE_COEFF = "coefficient"

BUILDER_NAMES = ("norm", "irrational", "rational-points", "algebraic",
                 "integer-points", "coupled")


@dataclass(frozen=True)
class GeometricLagrangian:
    """Sum-of-squares field with domain box and variable roles.

    ``split`` optionally carries the (L1, L2, L3) decomposition of the
    coupled family, with ``coupling`` the beta weight on L3.  ``seed_hint``
    are analytically known stationary points attached by the builder so
    the finder does not rely on a blind grid for the fast 1/m oscillation.
    """

    field: ExpressionField
    box: Box
    roles: dict
    split: tuple | None = None
    coupling: float | None = None
    seed_hint: np.ndarray | None = None

    def __post_init__(self):
        if not is_sum_of_squares(self.field.root):
            raise ValueError("Lagrangian field is not structurally a sum of squares")
        if self.field.arity != self.box.dim:
            raise ArityMismatch("field arity and box dimension differ")

    @property
    def names(self):
        return self.field.names

    @property
    def arity(self):
        return self.field.arity

    def evaluate(self, points, order=0, check=False):
        return self.field.evaluate(points, order=order, check=check)

    def split_values(self, points):
        """(L1, L2, L3) values; requires the split to be populated."""
        if self.split is None:
            raise ValueError("this Lagrangian carries no split")
        return tuple(f.evaluate(points, order=0)[0] for f in self.split)


# ---------------------------------------------------------------------------
# gadget pieces
# ---------------------------------------------------------------------------

def _sin_sq_pi_over(var_index, guard):
    # sin(pi/v)^2 with a guarded reciprocal
    return square(Sin(Div(Const(math.pi), Var(var_index), guard=guard)))


def _guard_for(cut):
    # exclusion radius well inside the domain cut away from zero
    return min(1e-6, 0.01 * cut)


def _near_rational(x, max_den=64, tol=1e-9):
    fr = Fraction(x).limit_denominator(max_den)
    if fr > 0 and abs(float(fr) - x) <= tol:
        return fr
    return None


def _rationality_seeds(x0, alpha0, m_lo, n_lo):
    """Stationary points of the (m, n) gadget for a (near-)rational target.

    For alpha0 = p/q the gadget's stationary points are m = 2/(p*t),
    n = 2/(q*t): even t gives the exact-zero family, odd t the
    cos-type points with positive level.  Returns an empty list when
    alpha0 is not recognisably rational (no such points exist then).
    """
    fr = _near_rational(alpha0)
    if fr is None:
        return []
    p, q = fr.numerator, fr.denominator
    seeds = []
    t = 1
    while True:
        m = 2.0 / (p * t)
        n = 2.0 / (q * t)
        if m < m_lo and n < n_lo:
            break
        if m <= 1.0 and n <= 1.0 and m >= m_lo and n >= n_lo:
            seeds.append((x0, float(fr), m, n))
        t += 1
        if t > 10_000:
            break
    return seeds


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_norm_lagrangian(system, box):
    """L = sum_i F_i^2 over the common box of an equation system."""
    fields = list(system)
    if not fields:
        raise ArityMismatch("empty system")
    arity = fields[0].arity
    for f in fields:
        if f.arity != arity:
            raise ArityMismatch("system fields have differing arity")
    if box.dim != arity:
        raise ArityMismatch("box dimension differs from system arity")
    root = add_all([square(f.root) for f in fields])
    names = fields[0].names
    field = ExpressionField(root, names, box)
    roles = {n: ROLE_GEOMETRY for n in names}
    return GeometricLagrangian(field=field, box=box, roles=roles)


def _alpha_envelope(f, x_lo, x_hi, samples=1024, widen=0.01):
    xs = np.linspace(x_lo, x_hi, samples)
    vals = f.evaluate(xs[:, None], order=0)[0]
    lo, hi = float(np.min(vals)), float(np.max(vals))
    pad = widen * max(hi - lo, 1e-12)
    return lo - pad, hi + pad


def _check_fprime(f, x0):
    _, grad, _ = f.evaluate(np.array([x0]), order=1)
    fp = float(grad[0])
    if abs(fp) < 1e-8:
        raise FlatDerivative(f"|F'(x0)| = {abs(fp):.3e} below 1e-8 at x0={x0}")
    return fp


def _warn_if_offaxis_stationary(lagr, x0, delta):
    """Coarse-grid heuristic for stationary points with x away from x0.

    The construction assumes delta small enough that every stationary
    point sits at x = x0 (up to the O(delta) drift of the coupled
    near-miss points); a suspiciously small gradient far from x0 on a
    7^4 grid suggests delta was chosen too large.
    """
    pts = lagr.box.grid(7)
    _, grad, _ = lagr.evaluate(pts, order=1)
    norms = np.linalg.norm(grad, axis=1)
    far = np.abs(pts[:, 0] - x0) > 0.5 * delta
    if np.any(far):
        scale = max(1.0, float(np.max(norms)))
        if float(np.min(norms[far])) < 1e-6 * scale:
            warnings.warn(
                "near-stationary gradient found with x far from x0; "
                "delta may be too large for this F", stacklevel=3)


def _irrationality_pieces(f, x0, delta, M, N):
    """Common construction for the 4-variable (x, alpha, m, n) family.

    Returns (names, box, L1, L2, L3 nodes, alpha0, fprime).
    """
    if f.arity != 1:
        raise ArityMismatch("F must be a single-variable field")
    if not (delta > 0):
        raise DomainViolation("delta must be positive")
    for name, v in (("M", M), ("N", N)):
        if not (0.0 < v < 1.0):
            raise DomainViolation(f"{name} must lie in (0, 1), got {v}")
    fp = _check_fprime(f, x0)
    alpha0 = float(f.evaluate(np.array([x0]), order=0)[0])
    a_lo, a_hi = _alpha_envelope(f, x0 - delta, x0 + delta)

    names = ("x", "alpha", "m", "n")
    box = Box(lows=(x0 - delta, a_lo, M, N),
              highs=(x0 + delta, a_hi, 1.0, 1.0),
              exclude_zero=(False, False, True, True))
    f_of_x = remap_variables(f.root, {0: 0})
    x, alpha, m, n = Var(0), Var(1), Var(2), Var(3)
    l1 = Add(square(Sub(f_of_x, alpha)), square(Sub(x, Const(x0))))
    l2 = Add(_sin_sq_pi_over(2, _guard_for(M)), _sin_sq_pi_over(3, _guard_for(N)))
    l3 = square(Sub(Mul(alpha, m), n))
    return names, box, l1, l2, l3, alpha0, fp


def build_irrationality_lagrangian(f, x0, delta, M, N):
    """L = (F(x)-alpha)^2 + (x-x0)^2 + sin^2(pi/m) + sin^2(pi/n) + (alpha*m-n)^2

    over [x0-delta, x0+delta] x F-envelope x [M,1] x [N,1].  Zeros exist
    iff F(x0) is a positive rational reachable inside the m, n cuts.
    """
    names, box, l1, l2, l3, alpha0, _ = _irrationality_pieces(f, x0, delta, M, N)
    root = Add(l1, l2, l3)
    field = ExpressionField(root, names, box)
    roles = {"x": ROLE_GEOMETRY, "alpha": ROLE_TARGET,
             "m": ROLE_DENOM_M, "n": ROLE_DENOM_N}
    seeds = _rationality_seeds(x0, alpha0, M, N)
    lagr = GeometricLagrangian(
        field=field, box=box, roles=roles,
        seed_hint=np.array(seeds) if seeds else None)
    _warn_if_offaxis_stationary(lagr, x0, delta)
    return lagr


def build_coupled_lagrangian(f, x0, delta, M, N, beta):
    """Coupling family L_beta = L1(x,alpha) + L2(m,n) + beta*(alpha*m-n)^2.

    beta = 1 reproduces the plain irrationality Lagrangian pointwise;
    beta = 0 decouples the function part from the rationality part.
    """
    if beta < 0:
        raise DomainViolation("beta must be >= 0")
    names, box, l1, l2, l3, alpha0, _ = _irrationality_pieces(f, x0, delta, M, N)
    root = Add(l1, l2, Mul(Const(float(beta)), l3))
    field = ExpressionField(root, names, box)
    roles = {"x": ROLE_GEOMETRY, "alpha": ROLE_TARGET,
             "m": ROLE_DENOM_M, "n": ROLE_DENOM_N}
    split = (ExpressionField(l1, names, box),
             ExpressionField(l2, names, box),
             ExpressionField(l3, names, box))
    return GeometricLagrangian(field=field, box=box, roles=roles,
                               split=split, coupling=float(beta))


def _vector_cuts(cuts, p, label):
    arr = np.broadcast_to(np.asarray(cuts, dtype=float), (p,)).copy()
    for v in arr:
        if not (0.0 < v < 1.0):
            raise DomainViolation(f"{label} cuts must lie in (0, 1)")
    return arr


def build_rational_points_lagrangian(f, box, m_cuts, n_cuts):
    """L = F(x)^2 + sum_i [sin^2(pi/m_i) + sin^2(pi/n_i) + (x_i m_i - n_i)^2].

    Zeros force every coordinate x_i to be a positive rational solving
    F(x) = 0 inside the box.
    """
    p = f.arity
    if box.dim != p:
        raise ArityMismatch("box dimension differs from F arity")
    m_cuts = _vector_cuts(m_cuts, p, "M")
    n_cuts = _vector_cuts(n_cuts, p, "N")
    if p + 2 * p > ARITY_CAP:
        raise DimensionOverflow(f"3p = {3 * p} variables exceed cap {ARITY_CAP}")
    names = tuple(f.names) + tuple(f"m{i + 1}" for i in range(p)) \
        + tuple(f"n{i + 1}" for i in range(p))
    f_root = remap_variables(f.root, {i: i for i in range(p)})
    terms = [square(f_root)]
    for i in range(p):
        mi, ni = p + i, 2 * p + i
        terms.append(_sin_sq_pi_over(mi, _guard_for(m_cuts[i])))
        terms.append(_sin_sq_pi_over(ni, _guard_for(n_cuts[i])))
        terms.append(square(Sub(Mul(Var(i), Var(mi)), Var(ni))))
    full_box = Box(
        lows=tuple(box.lows) + tuple(m_cuts) + tuple(n_cuts),
        highs=tuple(box.highs) + (1.0,) * (2 * p),
        exclude_zero=(False,) * p + (True,) * (2 * p))
    field = ExpressionField(add_all(terms), names, full_box)
    roles = {n: ROLE_GEOMETRY for n in f.names}
    roles.update({f"m{i + 1}": ROLE_DENOM_M for i in range(p)})
    roles.update({f"n{i + 1}": ROLE_DENOM_N for i in range(p)})
    return GeometricLagrangian(field=field, box=full_box, roles=roles)


def build_integer_points_lagrangian(f, box, m_cuts):
    """L = F(x)^2 + sum_i [sin^2(pi/m_i) + (x_i m_i - 1)^2].

    Zeros force x_i = 1/m_i with 1/m_i integer, i.e. integer points of
    F(x) = 0 with positive coordinates.
    """
    p = f.arity
    if box.dim != p:
        raise ArityMismatch("box dimension differs from F arity")
    m_cuts = _vector_cuts(m_cuts, p, "M")
    if 2 * p > ARITY_CAP:
        raise DimensionOverflow(f"2p = {2 * p} variables exceed cap {ARITY_CAP}")
    names = tuple(f.names) + tuple(f"m{i + 1}" for i in range(p))
    f_root = remap_variables(f.root, {i: i for i in range(p)})
    terms = [square(f_root)]
    for i in range(p):
        mi = p + i
        terms.append(_sin_sq_pi_over(mi, _guard_for(m_cuts[i])))
        terms.append(square(Sub(Mul(Var(i), Var(mi)), Const(1.0))))
    full_box = Box(
        lows=tuple(box.lows) + tuple(m_cuts),
        highs=tuple(box.highs) + (1.0,) * p,
        exclude_zero=(False,) * p + (True,) * p)
    field = ExpressionField(add_all(terms), names, full_box)
    roles = {n: ROLE_GEOMETRY for n in f.names}
    roles.update({f"m{i + 1}": ROLE_DENOM_M for i in range(p)})
    return GeometricLagrangian(field=field, box=full_box, roles=roles)


def build_algebraic_lagrangian(f, degree, box, m_cuts, n_cuts):
    """Degree-K algebraicity probe.

    Attaches to each coordinate x_i a polynomial constraint

        g_i(x_i) = sum_{j=1..K} a_ij x_i^j - 1

    whose coefficients a_ij are forced positive-rational by one (m_ij,
    n_ij) gadget pair each.  Zero coefficients (hence signed ones) are
    reachable only in the M, N -> 0 limit; the gadget encodes a > 0.
    Variables: p (x) + pK (a) + 2pK (m, n).
    """
    if degree < 1:
        raise DomainViolation("degree must be >= 1")
    p = f.arity
    if box.dim != p:
        raise ArityMismatch("box dimension differs from F arity")
    total = p + 3 * p * degree
    if total > ARITY_CAP:
        raise DimensionOverflow(
            f"{total} variables (p={p}, K={degree}) exceed cap {ARITY_CAP}")
    m_cuts = _vector_cuts(m_cuts, p * degree, "M")
    n_cuts = _vector_cuts(n_cuts, p * degree, "N")

    x_names = tuple(f.names)
    a_names = tuple(f"a{i + 1}_{j + 1}" for i in range(p) for j in range(degree))
    m_names = tuple(f"m{i + 1}_{j + 1}" for i in range(p) for j in range(degree))
    n_names = tuple(f"n{i + 1}_{j + 1}" for i in range(p) for j in range(degree))
    names = x_names + a_names + m_names + n_names

    def a_idx(i, j):
        return p + i * degree + j

    def m_idx(i, j):
        return p + p * degree + i * degree + j

    def n_idx(i, j):
        return p + 2 * p * degree + i * degree + j

    f_root = remap_variables(f.root, {i: i for i in range(p)})
    terms = [square(f_root)]
    a_lo, a_hi = 1e-3, 1.0 / min(float(np.min(m_cuts)), 1.0)
    for i in range(p):
        g = Sub(add_all([Mul(Var(a_idx(i, j)), Pow(Var(i), j + 1))
                         for j in range(degree)]),
                Const(1.0))
        terms.append(square(g))
        for j in range(degree):
            k = i * degree + j
            terms.append(_sin_sq_pi_over(m_idx(i, j), _guard_for(m_cuts[k])))
            terms.append(_sin_sq_pi_over(n_idx(i, j), _guard_for(n_cuts[k])))
            terms.append(square(Sub(Mul(Var(a_idx(i, j)), Var(m_idx(i, j))),
                                    Var(n_idx(i, j)))))
    full_box = Box(
        lows=tuple(box.lows) + (a_lo,) * (p * degree)
        + tuple(m_cuts) + tuple(n_cuts),
        highs=tuple(box.highs) + (a_hi,) * (p * degree) + (1.0,) * (2 * p * degree),
        exclude_zero=(False,) * p + (False,) * (p * degree) + (True,) * (2 * p * degree))
    field = ExpressionField(add_all(terms), names, full_box)
    roles = {n: ROLE_GEOMETRY for n in x_names}
    roles.update({n: ROLE_COEFF for n in a_names})
    roles.update({n: ROLE_DENOM_M for n in m_names})
    roles.update({n: ROLE_DENOM_N for n in n_names})
    return GeometricLagrangian(field=field, box=full_box, roles=roles)
