"""Stationary-phase model of I(h) and the phase-limit verdict.

Each non-degenerate critical point contributes one term.  Zero-level
points (L = 0) give the h^(-p/2) part whose phase is frozen at
exp(i*pi*sigma/4); nonzero-level points keep an oscillating factor
exp(i*h*L*y^2) inside their y-integral and decay one full power of h
faster, so only zero-level points can pin the limiting phase.

Convention: the Hessian weight is |det H|^(-1/2) with the signature
factor exp(i*pi*sigma/4) carrying all sign information (the usual
Morse-lemma normal form); indefinite Hessians therefore never produce
complex amplitudes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DegenerateHessian, DomainViolation
from .quadrature import gauss_legendre_nodes, oscillation_resolution

__all__ = ["AsymptoticTerm", "PhasePrediction", "boundary_constant",
           "terms_from_points", "asymptotic_value", "nonzero_level_y_integral",
           "predict_phase"]

VERDICT_CONVERGES = "converges"
VERDICT_DIVERGES = "diverges"
VERDICT_INCONCLUSIVE = "inconclusive"


def _require_zero_free(a_interval):
    a, b = float(a_interval[0]), float(a_interval[1])
    if not a < b:
        raise DomainViolation(f"empty interval [{a}, {b}]")
    if a <= 0.0 <= b:
        raise DomainViolation("the y-interval must not contain 0")
    return a, b


def boundary_constant(a_interval, p):
    """S = integral over A of y^-p dy, in closed form."""
    a, b = _require_zero_free(a_interval)
    p = int(p)
    if p == 1:
        return math.log(abs(b)) - math.log(abs(a))
    return (b ** (1 - p) - a ** (1 - p)) / (1 - p)


@dataclass(frozen=True)
class AsymptoticTerm:
    """One critical point's contribution to the large-h model."""

    source: object
    kind: str                 # "zero" | "nonzero"
    amplitude: float          # |det H|^(-1/2)
    phase_constant: float     # pi*sigma/4
    oscillation: float        # L at the point (0 for zero-level terms)
    order: float              # h-power: -p/2 or -p/2 - 1


def terms_from_points(points, p):
    """Build terms from classified critical points; refuses degenerate ones."""
    terms = []
    for cp in points:
        if cp.degenerate or cp.det == 0.0:
            raise DegenerateHessian(
                f"critical point at {cp.location.tolist()} has |det H| ~ 0; "
                "higher-order expansion is out of scope")
        zero = cp.zero_level
        terms.append(AsymptoticTerm(
            source=cp,
            kind="zero" if zero else "nonzero",
            amplitude=1.0 / math.sqrt(abs(cp.det)),
            phase_constant=math.pi * cp.signature / 4.0,
            oscillation=0.0 if zero else float(cp.l_value),
            order=-p / 2.0 if zero else -p / 2.0 - 1.0,
        ))
    return terms


def nonzero_level_y_integral(a_interval, p, lam):
    """J(lam) = integral over A of y^-p exp(i*lam*y^2) dy.

    Composite Gauss-Legendre with oscillation-scaled resolution plus one
    refinement doubling; the returned value is the refined one.
    """
    a, b = _require_zero_free(a_interval)
    lam = float(lam)
    span_phase = abs(lam) * abs(b * b - a * a)

    def _eval(panels, order):
        y, w = gauss_legendre_nodes(a, b, panels, order)
        return np.sum(w * y ** (-p) * np.exp(1j * lam * y * y))

    panels, order = oscillation_resolution(span_phase)
    coarse = _eval(panels, order)
    fine = _eval(2 * panels, max(10, order))
    return fine, abs(fine - coarse)


def asymptotic_value(terms, a_interval, p, h):
    """I1(h) + I2(h) from the term list.

    Zero-level: (2*pi/h)^(p/2) * S * sum |det|^-1/2 e^{i pi sigma/4}.
    Nonzero-level: same prefactor with S replaced by the numerically
    integrated y-factor J(h*L); each J is checked to keep decaying like
    1/(h*L) across a doubling of h.
    """
    if h <= 0:
        raise DomainViolation("h must be positive")
    for t in terms:
        if not math.isfinite(t.amplitude):
            raise DegenerateHessian("non-finite amplitude in term list")
    s_const = boundary_constant(a_interval, p)
    pref = (2.0 * math.pi / h) ** (p / 2.0)

    total = 0.0 + 0.0j
    zero_sum = 0.0 + 0.0j
    for t in terms:
        if t.kind == "zero":
            zero_sum += t.amplitude * np.exp(1j * t.phase_constant)
    total += pref * s_const * zero_sum

    for t in terms:
        if t.kind != "nonzero":
            continue
        j_h, _ = nonzero_level_y_integral(a_interval, p, h * t.oscillation)
        j_2h, _ = nonzero_level_y_integral(a_interval, p, 2.0 * h * t.oscillation)
        # O(1/(h L)) decay audit: 2*lam*|J(2*lam)| must stay within a
        # bounded factor of lam*|J(lam)|
        if 2.0 * abs(j_2h) > 3.0 * abs(j_h) + 1e-12:
            warnings.warn(
                f"nonzero-level y-integral not decaying like 1/(h*L) at "
                f"h={h:g}, L={t.oscillation:g}", stacklevel=2)
        total += pref * t.amplitude * np.exp(1j * t.phase_constant) * j_h
    return complex(total)


@dataclass(frozen=True)
class PhasePrediction:
    verdict: str
    phase: float | None
    term_count: int
    dominant_order: float | None
    diagnostics: dict = dc_field(default_factory=dict)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "phase": self.phase,
            "term_count": self.term_count,
            "dominant_order": self.dominant_order,
            "diagnostics": dict(self.diagnostics),
        }


def predict_phase(points, a_interval, p):
    """Phase-limit verdict from classified critical points.

    Non-degenerate zero-level points pin the limit; only nonzero-level
    points (or none at all) mean the phase keeps rotating; degenerate
    points alone leave the question open.
    """
    zero_nd = [cp for cp in points if cp.zero_level and not cp.degenerate]
    zero_dg = [cp for cp in points if cp.zero_level and cp.degenerate]
    nonzero_nd = [cp for cp in points if not cp.zero_level and not cp.degenerate]
    nonzero_dg = [cp for cp in points if not cp.zero_level and cp.degenerate]
    nonzero_l = [cp.l_value for cp in points if not cp.zero_level]
    diagnostics = {
        "min_nonzero_l": float(min(nonzero_l)) if nonzero_l else None,
        "degenerate_count": len(zero_dg) + len(nonzero_dg),
        "zero_level_count": len(zero_nd) + len(zero_dg),
        "point_count": len(points),
    }

    if zero_nd:
        s_const = boundary_constant(a_interval, p)
        acc = sum(np.exp(1j * math.pi * cp.signature / 4.0)
                  / math.sqrt(abs(cp.det)) for cp in zero_nd)
        phase = float(np.angle(math.copysign(1.0, s_const) * acc))
        return PhasePrediction(
            verdict=VERDICT_CONVERGES, phase=phase,
            term_count=len(zero_nd), dominant_order=-p / 2.0,
            diagnostics=diagnostics)
    if zero_dg:
        return PhasePrediction(
            verdict=VERDICT_INCONCLUSIVE, phase=None,
            term_count=0, dominant_order=None,
            diagnostics={**diagnostics,
                         "reason": "only degenerate zero-level points"})
    if not points:
        return PhasePrediction(
            verdict=VERDICT_DIVERGES, phase=None, term_count=0,
            dominant_order=None,
            diagnostics={**diagnostics,
                         "reason": "no critical points: boundary-dominated"})
    if nonzero_nd:
        return PhasePrediction(
            verdict=VERDICT_DIVERGES, phase=None,
            term_count=len(nonzero_nd), dominant_order=-p / 2.0 - 1.0,
            diagnostics={**diagnostics,
                         "reason": "only nonzero-level points keep rotating"})
    return PhasePrediction(
        verdict=VERDICT_INCONCLUSIVE, phase=None, term_count=0,
        dominant_order=None,
        diagnostics={**diagnostics,
                     "reason": "only degenerate nonzero-level points"})
