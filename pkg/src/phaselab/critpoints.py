"""Locate and classify isolated interior critical points of a Lagrangian.

Multistart damped Newton on grad L = 0: seeds come from a cell-centre
tensor grid plus any analytic seeds the builder attached (the 1/m
oscillation makes blind grids miss stationary points near the lower m
cut).  Iterates that leave a slightly inflated box are discarded rather
than clamped; converged points are deduplicated, filtered to the open
box interior, classified through one Hessian evaluation, and returned
in lexicographic order for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import BudgetExceeded, NotCritical

__all__ = ["CriticalPoint", "FinderSettings", "find_critical_points",
           "classify_critical_point"]


@dataclass(frozen=True)
class CriticalPoint:
    location: np.ndarray
    l_value: float
    grad_norm: float
    hessian: np.ndarray
    det: float
    signature: int
    zero_level: bool
    degenerate: bool

    def to_dict(self):
        return {
            "location": [float(v) for v in self.location],
            "l_value": self.l_value,
            "grad_norm": self.grad_norm,
            "hessian": [[float(v) for v in row] for row in self.hessian],
            "det": self.det,
            "signature": self.signature,
            "zero_level": self.zero_level,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class FinderSettings:
    grid_density: int = 16
    newton_max_iter: int = 60
    dedup_radius_factor: float = 1e-7
    tol_grad_factor: float = 1e-9
    tol_zero_factor: float = 1e-12
    eigen_zero_factor: float = 1e-8
    max_backtracks: int = 8
    box_inflation: float = 0.05
    # wide enough that a true face-sitting stationary point is not kept
    # just because Newton stopped a hair inside the face
    boundary_margin_factor: float = 1e-6


def _classify(lagr, location, l_value, grad_norm, hessian, tol_zero,
              eigen_zero_factor):
    eigs = np.linalg.eigvalsh(hessian)
    rho = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    thresh = eigen_zero_factor * rho
    pos = int(np.sum(eigs > thresh))
    neg = int(np.sum(eigs < -thresh))
    degenerate = bool(rho == 0.0 or np.any(np.abs(eigs) <= thresh))
    det = float(np.linalg.det(hessian))
    return CriticalPoint(
        location=np.array(location, dtype=float),
        l_value=float(l_value),
        grad_norm=float(grad_norm),
        hessian=np.array(hessian, dtype=float),
        det=det,
        signature=pos - neg,
        zero_level=bool(l_value <= tol_zero),
        degenerate=degenerate,
    )


def classify_critical_point(lagr, location, settings=None, tol_grad=None,
                            tol_zero=None):
    """Classify a single point; raises NotCritical if the gradient is not small."""
    s = settings or FinderSettings()
    loc = np.asarray(location, dtype=float)
    val, grad, hess = lagr.evaluate(loc, order=2)
    gn = float(np.linalg.norm(grad))
    if tol_grad is None:
        tol_grad = 1e-6
    if gn > tol_grad:
        raise NotCritical(f"|grad L| = {gn:.3e} exceeds tolerance {tol_grad:.3e}")
    if tol_zero is None:
        tol_zero = s.tol_zero_factor * max(1.0, abs(float(val)))
    return _classify(lagr, loc, val, gn, hess, tol_zero, s.eigen_zero_factor)


def _newton_batch(lagr, seeds, settings, tol_grad, lo, hi):
    """Damped Newton from all seeds at once.

    Returns (converged points (K, n), number of seeds that stayed inside
    the box without converging).
    """
    pts = np.array(seeds, dtype=float)
    results = []
    stalled = 0
    for _ in range(settings.newton_max_iter):
        if pts.shape[0] == 0:
            break
        _, grad, hess = lagr.evaluate(pts, order=2)
        gn = np.linalg.norm(grad, axis=1)
        finite = np.isfinite(gn)
        done = finite & (gn <= tol_grad)
        if np.any(done):
            results.append(pts[done])
        active = finite & ~done
        pts, grad, hess, gn = pts[active], grad[active], hess[active], gn[active]
        if pts.shape[0] == 0:
            break
        step = _solve_steps(hess, grad)
        pts_new, gn_new = _backtrack(lagr, pts, step, gn, settings)
        inside = np.all((pts_new >= lo) & (pts_new <= hi), axis=1) \
            & np.all(np.isfinite(pts_new), axis=1)
        moved = np.linalg.norm(pts_new - pts, axis=1) > 0
        keep = inside & (moved | (gn_new < gn))
        pts = pts_new[keep]
    else:
        stalled = pts.shape[0]
    if results:
        return np.concatenate(results, axis=0), stalled
    return np.empty((0, len(lo))), stalled


def _solve_steps(hess, grad):
    """Newton steps -H^-1 g with escalating Tikhonov jitter on singular batches."""
    n = hess.shape[1]
    scale = np.maximum(np.abs(hess).max(axis=(1, 2)), 1.0)
    mu = 0.0
    for attempt in range(6):
        try:
            h = hess if mu == 0.0 else hess + (mu * scale)[:, None, None] * np.eye(n)
            step = np.linalg.solve(h, grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            mu = 1e-12 if mu == 0.0 else mu * 1e3
            continue
        bad = ~np.all(np.isfinite(step), axis=1)
        if not np.any(bad):
            return -step
        mu = 1e-12 if mu == 0.0 else mu * 1e3
    step = np.where(np.isfinite(step), step, 0.0)
    return -step


def _backtrack(lagr, pts, step, gn, settings):
    """Halve steps per point until the gradient norm does not increase."""
    t = np.ones(pts.shape[0])
    cand = pts + step
    gn_new = _grad_norms(lagr, cand)
    for _ in range(settings.max_backtracks):
        worse = np.isfinite(gn_new) & (gn_new > gn) | ~np.isfinite(gn_new)
        if not np.any(worse):
            break
        t[worse] *= 0.5
        cand[worse] = pts[worse] + t[worse, None] * step[worse]
        gn_new[worse] = _grad_norms(lagr, cand[worse])
    return cand, gn_new


def _grad_norms(lagr, pts):
    if pts.shape[0] == 0:
        return np.empty(0)
    with np.errstate(all="ignore"):
        _, grad, _ = lagr.evaluate(pts, order=1)
    return np.linalg.norm(grad, axis=1)


def find_critical_points(lagr, settings=None, extra_seeds=None):
    """All isolated interior critical points of `lagr`, classified and sorted.

    Raises BudgetExceeded when more than half of the seeds neither converge
    nor leave the box within the iteration budget (a non-isolated critical
    set looks exactly like that).
    """
    s = settings or FinderSettings()
    box = lagr.box
    n = box.dim

    seeds = [box.grid(s.grid_density)]
    if lagr.seed_hint is not None and len(lagr.seed_hint):
        seeds.append(np.atleast_2d(np.asarray(lagr.seed_hint, dtype=float)))
    if extra_seeds is not None and len(extra_seeds):
        seeds.append(np.atleast_2d(np.asarray(extra_seeds, dtype=float)))
    seeds = np.concatenate(seeds, axis=0)
    total_seeds = seeds.shape[0]

    # scales for the gradient / level tolerances, from the seed sample
    with np.errstate(all="ignore"):
        val0, grad0, _ = lagr.evaluate(seeds, order=1)
    grad_scale = max(1.0, float(np.nanmax(np.linalg.norm(grad0, axis=1))))
    l_scale = max(1.0, float(np.nanmax(np.abs(val0))))
    tol_grad = s.tol_grad_factor * grad_scale
    tol_zero = s.tol_zero_factor * l_scale

    widths = box.widths()
    lo = box.lows_array - s.box_inflation * widths
    hi = box.highs_array + s.box_inflation * widths
    # keep wanderers clear of guarded singularities on zero-excluded axes
    for i, flagged in enumerate(box.exclude_zero):
        if flagged:
            if box.lows[i] > 0:
                lo[i] = max(lo[i], 0.5 * box.lows[i])
            else:
                hi[i] = min(hi[i], 0.5 * box.highs[i])

    converged, stalled = _newton_batch(lagr, seeds, s, tol_grad, lo, hi)
    if stalled > 0.5 * total_seeds:
        raise BudgetExceeded(
            f"{stalled}/{total_seeds} seeds unresolved after "
            f"{s.newton_max_iter} iterations; critical set may not be isolated")

    # interior filter: strict inside with a tiny margin off every face
    margin = s.boundary_margin_factor * widths
    inside = np.all((converged > box.lows_array + margin)
                    & (converged < box.highs_array - margin), axis=1)
    converged = converged[inside]
    if converged.shape[0] == 0:
        return []

    # dedup: greedy clustering by gradient quality
    gn = _grad_norms(lagr, converged)
    order = np.argsort(gn, kind="stable")
    radius = s.dedup_radius_factor * box.diameter()
    kept = []
    for idx in order:
        p = converged[idx]
        if all(np.linalg.norm(p - q) > radius for q in kept):
            kept.append(p)

    points = []
    for p in kept:
        val, grad, hess = lagr.evaluate(p, order=2)
        points.append(_classify(lagr, p, val, float(np.linalg.norm(grad)),
                                hess, tol_zero, s.eigen_zero_factor))
    points.sort(key=lambda cp: tuple(cp.location))
    return points
