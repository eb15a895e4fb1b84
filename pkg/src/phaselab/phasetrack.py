"""Sample, unwrap and judge the phase of I(h) along an h-schedule.

The verdict is a window-spread criterion on the unwrapped track: the
last W samples must agree to eps radians (Converged), disagree by at
least 10*eps (NotConverged), or the call is Inconclusive.  Samples whose
modulus sits below 10x their error estimate also force Inconclusive,
since the phase of noise means nothing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import EvaluatorFailure
from .quadrature import QuadratureResult

__all__ = ["PhaseSample", "PhaseSequence", "track_phase",
           "geometric_schedule"]

VERDICT_CONVERGED = "converged"
VERDICT_NOT_CONVERGED = "not-converged"
VERDICT_INCONCLUSIVE = "inconclusive"


def geometric_schedule(start=100.0, ratio=2.0 ** 0.5, count=16):
    """Default ladder h_k = start * ratio^k."""
    return [start * ratio ** k for k in range(count)]


@dataclass(frozen=True)
class PhaseSample:
    h: float
    value: complex
    error: float
    phase_raw: float


@dataclass(frozen=True)
class PhaseSequence:
    samples: tuple
    unwrapped: np.ndarray
    verdict: str
    limit: float | None
    spread: float
    reason: str | None = None

    def to_rows(self):
        """CSV rows: h, re, im, abs, phase_raw, phase_unwrapped."""
        rows = []
        for s, u in zip(self.samples, self.unwrapped):
            rows.append((s.h, s.value.real, s.value.imag, abs(s.value),
                         s.phase_raw, float(u)))
        return rows

    def verdict_dict(self):
        return {"verdict": self.verdict, "limit": self.limit,
                "spread": self.spread, "reason": self.reason}


def _normalise(result):
    if isinstance(result, QuadratureResult):
        return complex(result.value), float(result.error_estimate)
    if isinstance(result, tuple) and len(result) == 2:
        return complex(result[0]), float(result[1])
    return complex(result), 0.0


def track_phase(evaluator, schedule, eps=0.05, window=5, noise_factor=10.0):
    """Evaluate I(h) along the schedule and decide phase convergence.

    `evaluator` maps h to a complex value, a (value, error) pair, or a
    QuadratureResult.  The schedule must be increasing with at least 8
    points; unwrapping assumes inter-sample phase steps below pi, which
    the default 2-samples-per-octave geometric ladder satisfies for the
    Lagrangians treated here.
    """
    schedule = [float(h) for h in schedule]
    if len(schedule) < 8:
        raise ValueError("schedule needs at least 8 points")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    ratios = np.diff(np.log(schedule))
    if np.max(ratios) > 1.25 * np.min(ratios) + 1e-12:
        warnings.warn("schedule is far from geometric; unwrapping may alias",
                      stacklevel=2)

    samples = []
    for h in schedule:
        try:
            value, err = _normalise(evaluator(h))
        except Exception as exc:  # noqa: BLE001 - reraised with context
            raise EvaluatorFailure(h, str(exc)) from exc
        samples.append(PhaseSample(h=h, value=value, error=err,
                                   phase_raw=float(np.angle(value))))

    raw = np.array([s.phase_raw for s in samples])
    unwrapped = np.unwrap(raw)

    tail = samples[-window:]
    tail_unwrapped = unwrapped[-window:]
    spread = float(np.max(tail_unwrapped) - np.min(tail_unwrapped))

    noisy = [s for s in tail if abs(s.value) < noise_factor * s.error]
    if noisy:
        verdict, limit, reason = VERDICT_INCONCLUSIVE, None, \
            f"{len(noisy)} tail sample(s) below the noise floor"
    elif spread <= eps:
        mean = float(np.mean(tail_unwrapped))
        limit = float(np.angle(np.exp(1j * mean)))
        verdict, reason = VERDICT_CONVERGED, None
    elif spread >= 10.0 * eps:
        verdict, limit, reason = VERDICT_NOT_CONVERGED, None, None
    else:
        verdict, limit, reason = VERDICT_INCONCLUSIVE, None, \
            f"tail spread {spread:.3g} between eps and 10*eps"
    return PhaseSequence(samples=tuple(samples), unwrapped=unwrapped,
                         verdict=verdict, limit=limit, spread=spread,
                         reason=reason)
