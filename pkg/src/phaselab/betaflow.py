"""Perturbative expansion of the coupled phase integral in powers of beta.

With the split L_beta = L1 + L2 + beta*L3 the integrand factorises as
exp(i*h*(L1+L2)*y^2) * exp(i*h*beta*L3*y^2); expanding the second factor
gives the series

    sum_j (i*h*beta)^j / j! * int int L3^j y^(2j) exp(i*h*(L1+L2)*y^2)

whose terms are computed here on one shared Gauss-Legendre tensor grid
(beta and h enter only through the weights, so reweighting is free).
Desk scale means two omega-variables; the expansion is trusted only in
the regime h*beta*max(L3)*max(y^2) <= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RegimeViolation
from .fields import Box, ExpressionField, Var
from .lagrangian import GeometricLagrangian
from .quadrature import gauss_legendre_nodes, oscillation_resolution

__all__ = ["ExpansionTerm", "SeriesComparison", "expansion_term",
           "series_vs_direct", "build_surrogate"]


@dataclass(frozen=True)
class ExpansionTerm:
    j: int
    value: complex          # int int L3^j y^2j exp(i h (L1+L2) y^2)
    weight: complex         # (i h beta)^j / j!
    error_estimate: float = 0.0


@dataclass(frozen=True)
class SeriesComparison:
    h: float
    beta: float
    direct: complex
    direct_error: float
    terms: tuple
    partials: np.ndarray
    residuals: np.ndarray
    regime_product: float

    def rows(self):
        """CSV rows: j, term re/im, weight re/im, partial re/im, residual."""
        out = []
        for t, s, r in zip(self.terms, self.partials, self.residuals):
            out.append((t.j, t.value.real, t.value.imag, t.weight.real,
                        t.weight.imag, s.real, s.imag, float(r)))
        return out


def build_surrogate(x_target=0.3, n_cut=0.45, coupling_offset=0.25):
    """Two-variable test problem with a populated (L1, L2, L3) split.

    L1 = (u - x_target)^2, L2 = sin^2(pi/v) on v in [n_cut, 0.95],
    L3 = (u*v - coupling_offset)^2.  Small enough that the direct coupled
    integral is fully resolvable.
    """
    from .fields import Add, Const, Div, Mul, Pow, Sin, Sub

    names = ("u", "v")
    box = Box(lows=(0.0, n_cut), highs=(0.6, 0.95),
              exclude_zero=(False, True))
    u, v = Var(0), Var(1)
    l1 = Pow(Sub(u, Const(x_target)), 2)
    l2 = Pow(Sin(Div(Const(math.pi), v, guard=1e-6)), 2)
    l3 = Pow(Sub(Mul(u, v), Const(coupling_offset)), 2)
    split = tuple(ExpressionField(node, names, box) for node in (l1, l2, l3))
    field = ExpressionField(Add(l1, l2), names, box)
    return GeometricLagrangian(field=field, box=box,
                               roles={"u": "geometry", "v": "denominator-m"},
                               split=split, coupling=0.0)


def _require_split(problem):
    if problem.split is None:
        raise RegimeViolation("expansion needs a populated (L1, L2, L3) split")
    if problem.arity > 2:
        raise RegimeViolation(
            "direct-expansion comparison supports at most two omega-variables")
    return problem.split


def _tensor(problem, a_interval, h, panels_scale=1.0):
    """Shared grid: omega-nodes/weights, y-nodes/weights, L1+L2 and L3 values."""
    l1f, l2f, l3f = problem.split
    a, b = float(a_interval[0]), float(a_interval[1])
    box = problem.box
    sample = box.grid(48)
    l12_max = float(np.max(l1f.evaluate(sample, order=0)[0]
                           + l2f.evaluate(sample, order=0)[0]))
    span = h * 1.2 * l12_max * max(a * a, b * b)
    panels, order = oscillation_resolution(span)
    panels = max(2, int(round(panels * panels_scale)))

    axes = [gauss_legendre_nodes(lo, hi, panels, order)
            for lo, hi in zip(box.lows, box.highs)]
    if problem.arity == 1:
        pts = axes[0][0][:, None]
        w_omega = axes[0][1]
    else:
        (x1, w1), (x2, w2) = axes
        pts = np.stack([np.repeat(x1, x2.size), np.tile(x2, x1.size)], axis=1)
        w_omega = (w1[:, None] * w2[None, :]).ravel()
    l12 = (l1f.evaluate(pts, order=0)[0] + l2f.evaluate(pts, order=0)[0])
    l3 = l3f.evaluate(pts, order=0)[0]
    y, wy = gauss_legendre_nodes(a, b, panels, order)
    return w_omega, l12, l3, y, wy


def _integrals(w_omega, l12, l3, y, wy, h, j_values, beta_for_direct=None):
    """Either the direct coupled integral (beta given) or the j-term list.

    Accumulates over omega-blocks to keep the (omega, y) phase table small.
    """
    y2 = y * y
    block = max(1, int(4e6 // max(y2.size, 1)))
    direct = 0.0 + 0.0j
    totals = [0.0 + 0.0j for _ in j_values]
    for s in range(0, l12.size, block):
        sl = slice(s, s + block)
        phase = np.exp(1j * h * np.outer(l12[sl], y2))
        if beta_for_direct is not None:
            integrand = np.exp(
                1j * h * beta_for_direct * np.outer(l3[sl], y2)) * phase
            direct += w_omega[sl] @ integrand @ wy
        else:
            for t, j in enumerate(j_values):
                integrand = np.outer(l3[sl] ** j, y2 ** j) * phase
                totals[t] += w_omega[sl] @ integrand @ wy
    if beta_for_direct is not None:
        return complex(direct)
    return [complex(v) for v in totals]


def expansion_term(problem, j, h, a_interval=(1.0, 2.0), j_max=8, beta=0.0):
    """The j-th expansion integral with its (i*h*beta)^j/j! weight.

    The integral itself is beta-free; the weight carries all beta and h
    reweighting.  Error estimate from one panel doubling.
    """
    _require_split(problem)
    if j < 0 or j > j_max:
        raise RegimeViolation(f"term index {j} outside 0..{j_max}")
    grid = _tensor(problem, a_interval, h)
    check_grid = _tensor(problem, a_interval, h, panels_scale=0.5)
    value = _integrals(*grid, h, [j])[0]
    check = _integrals(*check_grid, h, [j])[0]
    weight = (1j * h * beta) ** j / math.factorial(j)
    return ExpansionTerm(j=int(j), value=value, weight=weight,
                         error_estimate=abs(value - check))


def series_vs_direct(problem, j_top, h, beta, a_interval=(1.0, 2.0)):
    """Partial sums of the expansion against the directly coupled integral.

    Requires h*beta*max(L3)*max(y^2) <= 1; outside that regime the series
    is not trustworthy and the call refuses to compute.
    """
    split = _require_split(problem)
    a, b = float(a_interval[0]), float(a_interval[1])
    l3_max = float(np.max(split[2].evaluate(problem.box.grid(96), order=0)[0]))
    regime = h * beta * l3_max * max(a * a, b * b)
    if regime > 1.0 + 1e-12:
        raise RegimeViolation(
            f"h*beta*maxL3*maxy^2 = {regime:.3g} > 1; expansion regime violated")

    grid = _tensor(problem, a_interval, h)
    check_grid = _tensor(problem, a_interval, h, panels_scale=0.5)
    js = list(range(j_top + 1))

    direct = _integrals(*grid, h, [], beta_for_direct=beta)
    direct_chk = _integrals(*check_grid, h, [], beta_for_direct=beta)
    direct_err = abs(direct - direct_chk)

    vals = _integrals(*grid, h, js)
    vals_chk = _integrals(*check_grid, h, js)
    terms = []
    for j, v, vc in zip(js, vals, vals_chk):
        weight = (1j * h * beta) ** j / math.factorial(j)
        terms.append(ExpansionTerm(j=j, value=v, weight=weight,
                                   error_estimate=abs(v - vc)))
    partials = np.cumsum([t.weight * t.value for t in terms])
    residuals = np.abs(partials - direct)
    return SeriesComparison(h=float(h), beta=float(beta), direct=direct,
                            direct_error=direct_err, terms=tuple(terms),
                            partials=partials, residuals=residuals,
                            regime_product=regime)
