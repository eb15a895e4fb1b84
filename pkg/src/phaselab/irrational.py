"""Exact-family machinery for the rationality test and its combined report.

For a positive rational target alpha0 = p/q (lowest terms) the zero set
of the 4-variable Lagrangian is the family

    omega_i = (x0, alpha0, m0/i, n0/i),   m0 = 1/p,  n0 = 1/q,  i = 1, 2, ...

enumerated here in exact rational arithmetic.  The Hessian at a family
point has the closed form assembled in :func:`family_hessian`; its
determinant grows like C * i^8 / m0^8.  Note the constant: expanding the
closed form gives C = 16*pi^4 / alpha0^4 (equivalently 16*pi^4 /
(m0^4*n0^4) after normalising), and the determinant ratio tests pin that
value.  The resulting theta series converges absolutely by comparison
with sum 1/i^4, with tail bound (1+margin) * m0^2*n0^2 * zeta(4, I+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np
from scipy.special import zeta

from .critpoints import FinderSettings, find_critical_points
from .errors import FlatDerivative, NoFamily, SlowOnset
from .lagrangian import build_irrationality_lagrangian
from .quadrature import QuadratureSettings, oscillatory_integral
from .stationary import VERDICT_CONVERGES, VERDICT_DIVERGES, predict_phase

__all__ = [
    "IrrationalityProblem", "CriticalFamily", "make_problem",
    "exact_zero_family", "family_hessian", "family_det",
    "theta_partial", "theta_limit", "theta_tail_bound", "window_schedule",
    "family_signature",
    "irrationality_report", "ThetaPartial", "ThetaLimit", "Report",
]

VERDICT_RATIONAL = "rational-consistent"
VERDICT_IRRATIONAL = "irrational-consistent"
VERDICT_INCONCLUSIVE = "inconclusive"

_DEGENERATE_DET = 1e-9


@dataclass(frozen=True)
class IrrationalityProblem:
    """A 'is F(x0) rational?' instance.

    ``f`` is the working test function (already negated when sign_flipped
    is set, so alpha0 = f(x0) > 0 whenever a flip was applied);
    ``exact_target`` is the exact rational value of f(x0) when known, for
    known-answer runs.
    """

    f: object
    x0: float
    delta: float
    alpha0: float
    fprime_x0: float
    a_interval: tuple
    exact_target: Fraction | None = None
    sign_flipped: bool = False

    def lagrangian(self, M, N):
        return build_irrationality_lagrangian(self.f, self.x0, self.delta,
                                              float(M), float(N))


def make_problem(f, x0, delta=0.05, a_interval=(1.0, 2.0), exact_target=None,
                 sign_flip="auto"):
    """Validate and package a problem; optionally flip the sign of F.

    The rationality gadget reaches only positive targets; with
    sign_flip="auto" a negative f(x0) is replaced by -f (testing the
    rationality of -alpha0, which is the same question).  The flip is
    recorded and later grades the combined verdict down to inconclusive,
    since it is a convenience extension of the construction.
    """
    from .fields import Neg  # local to avoid import noise at module top
    from .fields import ExpressionField

    val0 = float(f.evaluate(np.array([x0]), order=0)[0])
    flipped = False
    if val0 < 0 and sign_flip == "auto":
        f = ExpressionField(Neg(f.root), f.names, f.box)
        flipped = True
    elif val0 < 0 and sign_flip:
        f = ExpressionField(Neg(f.root), f.names, f.box)
        flipped = True

    alpha0 = float(f.evaluate(np.array([x0]), order=0)[0])
    _, grad, _ = f.evaluate(np.array([x0]), order=1)
    fp = float(grad[0])
    if abs(fp) < 1e-8:
        raise FlatDerivative(f"|F'(x0)| = {abs(fp):.3e} below 1e-8")
    target = None
    if exact_target is not None:
        target = Fraction(exact_target)
        if abs(float(target) - alpha0) > 1e-9:
            raise ValueError(
                f"exact_target {target} disagrees with F(x0) = {alpha0!r}")
    return IrrationalityProblem(
        f=f, x0=float(x0), delta=float(delta), alpha0=alpha0,
        fprime_x0=fp, a_interval=(float(a_interval[0]), float(a_interval[1])),
        exact_target=target, sign_flipped=flipped)


# ---------------------------------------------------------------------------
# exact family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalFamily:
    alpha0: Fraction
    m0: Fraction
    n0: Fraction

    def member(self, i):
        """(m_i, n_i) as exact rationals."""
        return self.m0 / i, self.n0 / i

    def omega(self, i, x0):
        m_i, n_i = self.member(i)
        return np.array([x0, float(self.alpha0), float(m_i), float(n_i)])

    def members_in_window(self, M, N):
        """Indices i with m_i >= M and n_i >= N (exact comparisons)."""
        M, N = Fraction(M), Fraction(N)
        if M <= 0 or N <= 0:
            raise ValueError("window cuts must be positive")
        i_m = math.floor(self.m0 / M)
        i_n = math.floor(self.n0 / N)
        return list(range(1, min(i_m, i_n) + 1))


def exact_zero_family(alpha0):
    """Largest (m0, n0) with sin-constraints satisfied and alpha0*m0 = n0.

    alpha0 must be an exact positive rational (Fraction or int); for
    alpha0 = p/q in lowest terms the answer is m0 = 1/p, n0 = 1/q.
    """
    if isinstance(alpha0, float):
        raise NoFamily("exact rational required; floats carry no exactness")
    a = Fraction(alpha0)
    if a <= 0:
        raise NoFamily(f"no zero family for alpha0 = {a} <= 0; the "
                       "(m, n) gadget encodes positive targets only")
    m0 = Fraction(1, a.numerator)
    n0 = Fraction(1, a.denominator)
    assert a * m0 == n0
    return CriticalFamily(alpha0=a, m0=m0, n0=n0)


def _require_family(problem):
    if problem.exact_target is None:
        raise NoFamily("problem has no exact rational target")
    return exact_zero_family(problem.exact_target)


def family_hessian(problem, i):
    """Closed-form 4x4 Hessian of the Lagrangian at the i-th family point."""
    fam = _require_family(problem)
    if i < 1:
        raise ValueError("family index starts at 1")
    m_i, n_i = fam.member(i)
    mi, ni = float(m_i), float(n_i)
    a0 = float(fam.alpha0)
    fp = problem.fprime_x0
    pi2 = math.pi * math.pi
    return np.array([
        [2.0 * fp * fp + 2.0, -2.0 * fp, 0.0, 0.0],
        [-2.0 * fp, 2.0 + 2.0 * mi * mi, 2.0 * a0 * mi, -2.0 * mi],
        [0.0, 2.0 * a0 * mi, 2.0 * pi2 / mi ** 4 + 2.0 * a0 * a0, -2.0 * a0],
        [0.0, -2.0 * mi, -2.0 * a0, 2.0 * pi2 / ni ** 4 + 2.0],
    ])


def _family_hessians(problem, indices):
    fam = _require_family(problem)
    idx = np.asarray(indices, dtype=float)
    mi = float(fam.m0) / idx
    ni = float(fam.n0) / idx
    a0 = float(fam.alpha0)
    fp = problem.fprime_x0
    pi2 = math.pi * math.pi
    k = idx.size
    h = np.zeros((k, 4, 4))
    h[:, 0, 0] = 2.0 * fp * fp + 2.0
    h[:, 0, 1] = h[:, 1, 0] = -2.0 * fp
    h[:, 1, 1] = 2.0 + 2.0 * mi * mi
    h[:, 1, 2] = h[:, 2, 1] = 2.0 * a0 * mi
    h[:, 1, 3] = h[:, 3, 1] = -2.0 * mi
    h[:, 2, 2] = 2.0 * pi2 / mi ** 4 + 2.0 * a0 * a0
    h[:, 2, 3] = h[:, 3, 2] = -2.0 * a0
    h[:, 3, 3] = 2.0 * pi2 / ni ** 4 + 2.0
    return h


def _leading_det(fam, i):
    # C * i^8 / m0^8 with C = 16*pi^4/alpha0^4 == 16*pi^4/(m0^4 n0^4 / m0^8)
    frac = Fraction(i) ** 8 / (fam.m0 ** 4 * fam.n0 ** 4)
    return 16.0 * math.pi ** 4 * float(frac)


def family_det(problem, i):
    """(exact, leading, ratio) for the i-th family Hessian determinant.

    exact: LU determinant of the closed-form matrix; leading: the i^8
    growth law; ratio -> 1 as i grows.
    """
    fam = _require_family(problem)
    exact = float(np.linalg.det(family_hessian(problem, i)))
    leading = _leading_det(fam, i)
    return exact, leading, exact / leading


# ---------------------------------------------------------------------------
# theta series
# ---------------------------------------------------------------------------

def _signatures(h):
    """Signatures of a stack of symmetric matrices, scale-robust.

    The deep family members mix O(1) and O(i^8) eigenvalues, which defeats
    both a relative zero-threshold and raw eigvalsh accuracy.  Signature
    is congruence-invariant (Sylvester), so equilibrate with
    D = diag(|H_ii|)^(-1/2) first; the balanced matrix has O(1) spread
    and its eigenvalue signs are trustworthy.
    """
    d = np.sqrt(np.abs(np.einsum("kii->ki", h)))
    d = np.where(d > 0, d, 1.0)
    scale = 1.0 / d
    balanced = h * scale[:, :, None] * scale[:, None, :]
    eigs = np.linalg.eigvalsh(balanced)
    rho = np.max(np.abs(eigs), axis=1)
    thr = 1e-8 * np.where(rho > 0, rho, 1.0)
    return (np.sum(eigs > thr[:, None], axis=1)
            - np.sum(eigs < -thr[:, None], axis=1)).astype(int)


def family_signature(problem, i):
    """Hessian signature at the i-th family point."""
    return int(_signatures(_family_hessians(problem, [i]))[0])


def _theta_terms(problem, indices):
    """(terms, dets, sigmas, skipped) for the given family indices."""
    if len(indices) == 0:
        return np.empty(0, dtype=complex), np.empty(0), np.empty(0, dtype=int), 0
    h = _family_hessians(problem, indices)
    dets = np.linalg.det(h)
    sig = _signatures(h)
    keep = np.abs(dets) > _DEGENERATE_DET
    skipped = int(np.sum(~keep))
    terms = np.zeros(len(indices), dtype=complex)
    terms[keep] = ((2.0 * math.pi) ** 2 / np.sqrt(np.abs(dets[keep]))
                   * np.exp(1j * math.pi * sig[keep] / 4.0))
    return terms, dets, sig, skipped


@dataclass(frozen=True)
class ThetaPartial:
    value: complex
    member_indices: tuple
    skipped_degenerate: int
    empty: bool

    def to_dict(self):
        return {"re": self.value.real, "im": self.value.imag,
                "phase": float(np.angle(self.value)) if not self.empty else None,
                "members": list(self.member_indices),
                "skipped_degenerate": self.skipped_degenerate,
                "empty": self.empty}


def theta_partial(problem, M, N):
    """Windowed sum (2pi)^2 |det H|^-1/2 e^{i pi sigma/4} over family members.

    Members with |det| below threshold are skipped and counted.  An empty
    window returns value 0 with the `empty` flag set.
    """
    fam = _require_family(problem)
    for v in (M, N):
        if not (0 < float(v) < 1):
            raise ValueError("window cuts must lie in (0, 1)")
    idx = fam.members_in_window(M, N)
    terms, _, _, skipped = _theta_terms(problem, idx)
    if not idx:
        return ThetaPartial(value=0.0 + 0.0j, member_indices=(),
                            skipped_degenerate=0, empty=True)
    return ThetaPartial(value=complex(np.sum(terms)),
                        member_indices=tuple(idx),
                        skipped_degenerate=skipped, empty=False)


@dataclass(frozen=True)
class ThetaLimit:
    value: complex
    tail_bound: float
    terms_used: int
    margin: float
    i_stable: int          # first index from which det stays positive
    skipped_degenerate: int

    @property
    def phase(self):
        return float(np.angle(self.value))

    def to_dict(self):
        return {"re": self.value.real, "im": self.value.imag,
                "phase": self.phase, "tail_bound": self.tail_bound,
                "terms_used": self.terms_used, "margin": self.margin,
                "i_stable": self.i_stable,
                "skipped_degenerate": self.skipped_degenerate}


def _tail_bound(fam, margin, i_from):
    """Bound on sum_{i > i_from} |term_i| via the i^8 determinant law.

    |term_i| ~ (2pi)^2 / sqrt(C i^8/m0^8) = m0^2 n0^2 / i^4, inflated by
    the worst observed determinant-ratio deviation.
    """
    coeff = float(fam.m0 ** 2 * fam.n0 ** 2)
    return (1.0 + margin) * coeff * float(zeta(4, i_from + 1))


def theta_tail_bound(problem, i_from, margin=0.0):
    """Analytic bound on the theta tail beyond the first `i_from` members."""
    return _tail_bound(_require_family(problem), margin, i_from)


def theta_limit(problem, tol=1e-12, scan_start=1024, scan_max=131072):
    """Sum the theta series until the analytic tail bound drops below tol."""
    fam = _require_family(problem)
    coeff = float(fam.m0 ** 2 * fam.n0 ** 2)

    scan = scan_start
    while True:
        idx = np.arange(1, scan + 1)
        terms, dets, _, _ = _theta_terms(problem, idx)
        leading = 16.0 * math.pi ** 4 \
            * float(1 / (fam.m0 ** 4 * fam.n0 ** 4)) * idx.astype(float) ** 8
        ratios = dets / leading
        if abs(ratios[-1] - 1.0) > 0.25:
            if scan >= scan_max:
                raise SlowOnset(
                    f"det ratio still {ratios[-1]:.3f} at i={scan}; "
                    "the i^8 law has not set in within the scan budget")
            scan *= 2
            continue
        # margin(k): worst |det|^{-1/2} excess over the leading law for
        # i > k (suffix maximum), padded for the unscanned tail
        excess = 1.0 / np.sqrt(np.abs(ratios)) - 1.0
        suffix = np.maximum.accumulate(excess[::-1])[::-1]
        pad = 2.0 * abs(excess[-1])
        margins = np.maximum(np.concatenate([suffix[1:], [0.0]]), pad)
        margins = np.maximum(margins, 0.0)
        bounds = (1.0 + margins) * coeff * zeta(4, idx + 1)
        ok = np.nonzero(bounds < tol)[0]
        if ok.size:
            cut = int(idx[ok[0]])
            margin = float(margins[ok[0]])
            tail = float(bounds[ok[0]])
            break
        if scan >= scan_max:
            raise SlowOnset(
                f"tail bound still above tol={tol:g} at i={scan}; "
                "increase the scan budget or loosen tol")
        scan *= 2

    pos = dets > 0
    i_stable = 1
    for i in range(len(idx), 0, -1):
        if not pos[i - 1]:
            i_stable = i + 1
            break

    value = complex(np.sum(terms[:cut]))
    return ThetaLimit(value=value, tail_bound=tail,
                      terms_used=cut, margin=margin, i_stable=i_stable,
                      skipped_degenerate=int(np.sum(~(np.abs(dets[:cut])
                                                      > _DEGENERATE_DET))))


# ---------------------------------------------------------------------------
# window schedules
# ---------------------------------------------------------------------------

def _collides(fam, M):
    return (fam.m0 / M).denominator == 1 or (fam.n0 / M).denominator == 1


def window_schedule(problem, count, growth="quadratic"):
    """Window cuts M_k = N_k, shrinking so window k holds J_k family members.

    With a family present, J_k = k^2 + 1 (or k + 1 for growth="linear")
    and each cut is placed strictly between consecutive member
    coordinates, nudged off any exact m_i or n_i so no member lands on a
    window face.  Starting at two members guarantees each window holds an
    interior zero (member 1 sits on the m = 1 face whenever m0 = 1).
    Without a family the cuts are a plain shrinking ladder.
    """
    if problem.exact_target is None or problem.exact_target <= 0:
        return [(Fraction(2, 2 * k + 5), Fraction(2, 2 * k + 5))
                for k in range(1, count + 1)]
    fam = exact_zero_family(problem.exact_target)
    s = min(fam.m0, fam.n0)
    windows = []
    for k in range(1, count + 1):
        j = k * k + 1 if growth == "quadratic" else k + 1
        lo, hi = s / (j + 1), s / j
        M = (lo + hi) / 2
        for _ in range(64):
            if not _collides(fam, M):
                break
            M = (M + lo) / 2
        if M >= 1:
            M = Fraction(99, 100)
        windows.append((M, M))
    return windows


# ---------------------------------------------------------------------------
# combined report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowResult:
    M: float
    N: float
    family_members: tuple
    prediction: object
    zero_level_found: int
    point_count: int
    oracle_phases: tuple = ()

    def to_dict(self):
        return {
            "M": self.M, "N": self.N,
            "family_members": list(self.family_members),
            "prediction": self.prediction.to_dict(),
            "zero_level_found": self.zero_level_found,
            "point_count": self.point_count,
            "oracle_phases": [list(t) for t in self.oracle_phases],
        }


@dataclass(frozen=True)
class Report:
    verdict: str
    phase: float | None
    analytic: dict
    windows: tuple
    problem_summary: dict
    reason: str | None = None

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "phase": self.phase,
            "reason": self.reason,
            "analytic": self.analytic,
            "windows": [w.to_dict() for w in self.windows],
            "problem": self.problem_summary,
        }


def _problem_summary(problem):
    return {
        "x0": problem.x0,
        "delta": problem.delta,
        "alpha0": problem.alpha0,
        "fprime_x0": problem.fprime_x0,
        "A": list(problem.a_interval),
        "exact_target": str(problem.exact_target)
        if problem.exact_target is not None else None,
        "sign_flipped": problem.sign_flipped,
    }


def irrationality_report(problem, window_count=4, finder=None,
                         include_qmc=False, qmc_settings=None,
                         qmc_h_values=(200.0, 400.0)):
    """Run the analytic branch and the per-window numerical branch.

    Verdict grading: rational-consistent needs the exact family plus a
    Converges prediction with zero-level points in every window;
    irrational-consistent needs no family, no zero-level point anywhere
    and Diverges predictions throughout.  Anything mixed, and any
    sign-flipped problem, stays inconclusive.  The verdict reports
    consistency of finite-scale evidence, never a proof.
    """
    finder = finder or FinderSettings(grid_density=8)
    analytic = {}
    family = None
    theta = None
    if problem.exact_target is not None:
        try:
            family = exact_zero_family(problem.exact_target)
            theta = theta_limit(problem)
            analytic = {
                "family": {"m0": str(family.m0), "n0": str(family.n0)},
                "theta": theta.to_dict(),
            }
        except NoFamily as exc:
            analytic = {"note": str(exc)}
    else:
        analytic = {"note": "no exact family known: target rationality "
                            "is exactly what is being probed"}

    windows = []
    for M, N in window_schedule(problem, window_count):
        lagr = problem.lagrangian(M, N)
        points = find_critical_points(lagr, settings=finder)
        pred = predict_phase(points, problem.a_interval, p=4)
        members = family.members_in_window(M, N) if family else []
        oracle_phases = []
        if include_qmc:
            qs = qmc_settings or QuadratureSettings(qmc_log2_points=16,
                                                    qmc_shifts=4)
            for h in qmc_h_values:
                res = oscillatory_integral(lagr, problem.a_interval, h, qs)
                oracle_phases.append((h, float(np.angle(res.value)),
                                      res.error_estimate))
        windows.append(WindowResult(
            M=float(M), N=float(N), family_members=tuple(members),
            prediction=pred,
            zero_level_found=sum(1 for cp in points if cp.zero_level),
            point_count=len(points),
            oracle_phases=tuple(oracle_phases)))

    all_converge = all(w.prediction.verdict == VERDICT_CONVERGES
                       and w.zero_level_found > 0 for w in windows)
    all_diverge = all(w.prediction.verdict == VERDICT_DIVERGES
                      and w.zero_level_found == 0 for w in windows)

    if family is not None and theta is not None and all_converge:
        verdict, phase, reason = VERDICT_RATIONAL, theta.phase, None
    elif problem.exact_target is None and all_diverge \
            and not problem.sign_flipped:
        verdict, phase, reason = VERDICT_IRRATIONAL, None, \
            "no zero-level critical points in any window"
    elif problem.sign_flipped and problem.exact_target is None:
        verdict, phase = VERDICT_INCONCLUSIVE, None
        reason = ("problem was sign-flipped (convenience extension); "
                  "evidence graded inconclusive at this scale")
    else:
        verdict, phase = VERDICT_INCONCLUSIVE, None
        reason = "analytic and numerical branches do not line up cleanly"

    return Report(verdict=verdict, phase=phase, analytic=analytic,
                  windows=tuple(windows), problem_summary=_problem_summary(problem),
                  reason=reason)
