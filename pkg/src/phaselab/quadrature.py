"""Brute-force oracle for I(h) = int_A int_B exp(i*h*L(x)*y^2) dx dy.

Two backends:

* grid (p <= 2): composite Gauss-Legendre tensor over the x-box.  The
  y-factor G(lam) = int_A exp(i*lam*y^2) dy is evaluated in closed form
  through Fresnel integrals, which removes one oscillatory dimension and
  keeps the oracle trustworthy right up to the h cap.  Panel counts per
  dimension follow ceil(c*sqrt(h*maxL*max y^2)); the panel order adapts
  to the worst-case cycles per panel so the fastest corner of the box
  stays resolved.  The error estimate comes from one panel doubling.

* qmc (p + 1 in {4, 5}): scrambled Sobol points over the full
  (x, y)-box, several independent scrambles; the error bar is the
  standard error over scrambles.

The oracle never looks at critical points or Hessians, so it is an
independent check on the stationary-phase model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import fresnel
from scipy.stats import qmc

from .errors import DomainViolation, ResolutionExceeded

__all__ = ["QuadratureResult", "QuadratureSettings", "oscillatory_integral",
           "fresnel_phase_factor", "gauss_legendre_nodes",
           "oscillation_resolution"]


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    node_count: int
    h: float

    def to_dict(self):
        return {
            "re": float(self.value.real),
            "im": float(self.value.imag),
            "abs": float(abs(self.value)),
            "phase": float(np.angle(self.value)),
            "err": float(self.error_estimate),
            "node_count": int(self.node_count),
            "h": float(self.h),
        }


@dataclass(frozen=True)
class QuadratureSettings:
    panel_factor: float = 2.0        # c in ceil(c*sqrt(h*maxL*max y^2))
    cycles_per_panel_cap: float = 18.0
    min_order: int = 10
    max_order: int = 64
    max_total_nodes: float = 4e7
    sample_density: int = 65         # maxL estimation grid per dimension
    qmc_log2_points: int = 20
    qmc_shifts: int = 8
    seed: int = 0
    threads: int = 1


def gauss_legendre_nodes(a, b, panels, order):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(int(order))
    edges = np.linspace(a, b, int(panels) + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def oscillation_resolution(span_phase, panel_factor=2.0,
                           cycles_per_panel_cap=18.0, min_order=10,
                           max_order=64):
    """(panels, order) resolving a total phase span of `span_phase` radians."""
    cycles = span_phase / (2.0 * math.pi)
    panels = max(1,
                 math.ceil(panel_factor * math.sqrt(max(span_phase, 0.0))),
                 math.ceil(cycles / cycles_per_panel_cap))
    q = cycles / panels
    order = int(min(max(min_order, math.ceil(1.9 * q) + 6), max_order))
    return panels, order


def fresnel_phase_factor(lam, a, b):
    """G(lam) = int_a^b exp(i*lam*y^2) dy for lam >= 0, vectorised.

    Negative lam is handled by conjugation.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.empty(lam.shape, dtype=complex)
    neg = lam < 0.0
    l_abs = np.abs(lam)
    small = l_abs < 1e-12
    if np.any(small):
        ls = l_abs[small]
        out[small] = (b - a) + 1j * ls * (b ** 3 - a ** 3) / 3.0
    big = ~small
    if np.any(big):
        lb = l_abs[big]
        scale = np.sqrt(2.0 * lb / np.pi)
        sb, cb = fresnel(b * scale)
        sa, ca = fresnel(a * scale)
        out[big] = np.sqrt(np.pi / (2.0 * lb)) * ((cb - ca) + 1j * (sb - sa))
    out[neg] = np.conj(out[neg])
    return out


def _require_zero_free(a_interval):
    a, b = float(a_interval[0]), float(a_interval[1])
    if not a < b:
        raise DomainViolation(f"empty interval [{a}, {b}]")
    if a <= 0.0 <= b:
        raise DomainViolation("the y-interval must not contain 0")
    return a, b


def _max_l_estimate(lagr, density):
    pts = lagr.box.grid(min(density, max(3, int(round(4e4 ** (1 / lagr.arity))))))
    vals = lagr.evaluate(pts, order=0)[0]
    return 1.02 * float(np.max(vals))


def _grid_value(lagr, a, b, h, sign, panels, order):
    """Tensor GL over the x-box with the Fresnel y-factor."""
    dims = lagr.arity
    axes = [gauss_legendre_nodes(lo, hi, panels, order)
            for lo, hi in zip(lagr.box.lows, lagr.box.highs)]
    if dims == 1:
        x, w = axes[0]
        lam = h * lagr.evaluate(x[:, None], order=0)[0]
        g = fresnel_phase_factor(sign * lam, a, b)
        return complex(np.sum(w * g)), x.size
    # dims == 2: stream blocks along the first axis
    x1, w1 = axes[0]
    x2, w2 = axes[1]
    block = max(1, int(2e6 // x2.size))
    total = 0.0 + 0.0j
    for start in range(0, x1.size, block):
        xs = x1[start:start + block]
        ws = w1[start:start + block]
        pts = np.stack([np.repeat(xs, x2.size), np.tile(x2, xs.size)], axis=1)
        lam = h * lagr.evaluate(pts, order=0)[0]
        g = fresnel_phase_factor(sign * lam, a, b)
        total += np.sum((ws[:, None] * w2[None, :]).ravel() * g)
    return complex(total), x1.size * x2.size


def _qmc_value(lagr, a, b, h, sign, settings):
    dims = lagr.arity + 1
    lows = np.concatenate([lagr.box.lows_array, [a]])
    highs = np.concatenate([lagr.box.highs_array, [b]])
    volume = float(np.prod(highs - lows))
    npts = 2 ** settings.qmc_log2_points
    estimates = []
    for shift in range(settings.qmc_shifts):
        sob = qmc.Sobol(d=dims, scramble=True,
                        seed=settings.seed * 1009 + shift)
        u = sob.random(npts)
        pts = lows + u * (highs - lows)
        lam = h * lagr.evaluate(pts[:, :-1], order=0)[0]
        y = pts[:, -1]
        f = np.exp(1j * sign * lam * y * y)
        estimates.append(volume * complex(np.mean(f)))
    estimates = np.asarray(estimates)
    value = complex(np.mean(estimates))
    err = float(np.std(estimates, ddof=1) / math.sqrt(len(estimates)))
    return value, err, npts * settings.qmc_shifts


def oscillatory_integral(lagr, a_interval, h, settings=None, sign=1):
    """I(h) over the Lagrangian's box times the y-interval.

    sign=-1 integrates exp(-i*h*L*y^2) (the complex conjugate).
    """
    s = settings or QuadratureSettings()
    if h <= 0:
        raise DomainViolation("h must be positive")
    a, b = _require_zero_free(a_interval)
    p = lagr.arity
    if p + 1 > 5:
        raise DomainViolation(f"dimension p+1 = {p + 1} exceeds 5")

    if p <= 2:
        max_l = _max_l_estimate(lagr, s.sample_density)
        span = h * max_l * max(a * a, b * b)
        panels, order = oscillation_resolution(
            span, s.panel_factor, s.cycles_per_panel_cap, s.min_order,
            s.max_order)
        # refinement pass: double the panels, re-adapt the order to the
        # halved cycles-per-panel
        cycles = span / (2.0 * math.pi)
        q_fine = cycles / (2 * panels)
        order_fine = int(min(max(s.min_order, math.ceil(1.9 * q_fine) + 6),
                             s.max_order))
        need = (panels * order) ** p + (2 * panels * order_fine) ** p
        if need > s.max_total_nodes:
            raise ResolutionExceeded(
                f"h={h:g} needs ~{need:.2e} tensor nodes "
                f"(budget {s.max_total_nodes:.2e}); raise the budget or "
                "lower h")
        coarse, n1 = _grid_value(lagr, a, b, h, sign, panels, order)
        fine, n2 = _grid_value(lagr, a, b, h, sign, 2 * panels, order_fine)
        err = abs(fine - coarse) + 1e-16 * (1.0 + abs(fine))
        return QuadratureResult(value=fine, error_estimate=err,
                                node_count=n1 + n2, h=float(h))

    value, err, count = _qmc_value(lagr, a, b, h, sign, s)
    return QuadratureResult(value=value, error_estimate=err,
                            node_count=count, h=float(h))
