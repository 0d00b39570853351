"""Uniform ratio statistics over halfspaces, exact shatter counts, VC bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NumericError, ScaleError, SpecError
from .maxsliced import OptimizerOpts, _normalize_rows, grid_directions
from .measures import Gaussian, RngStream, as_samples
from .ot1d import AnalyticCdf1d, gaussian_law, project

_BRANCH_TRUTH = "truth_minus_empirical"      # (F - F_n) / sqrt(F)
_BRANCH_EMPIRICAL = "empirical_minus_truth"  # (F_n - F) / sqrt(F_n)

# perturbation for central-difference direction derivatives in ratio_sup
_FD_STEP = 1e-4
_RATIO_SEED_GRID = {2: 128, 3: 512}


@dataclass(frozen=True)
class RatioStatResult:
    """Value and argmax of the self-normalized cdf deviation statistic.

    side records whether the sup is attained at the jump point itself ("at",
    empirical cdf value i/n) or in the left limit ("left", value (i-1)/n).
    """

    value: float
    arg_theta: np.ndarray
    arg_t: float
    branch: str
    side: str = "at"


def _candidate_ratios(f: np.ndarray, fn: np.ndarray) -> np.ndarray:
    denom = np.sqrt(np.maximum(f, fn))
    out = np.zeros_like(f)
    pos = denom > 0.0
    out[pos] = np.abs(f[pos] - fn[pos]) / denom[pos]
    return out


def ratio_fixed_direction(xs, theta, law: AnalyticCdf1d) -> RatioStatResult:
    """sup_t |F(t) - F_n(t)| / sqrt(F(t) v F_n(t)) along one direction.

    The sup over t is attained on the closure of the jump set of the
    empirical cdf, so it is computed exactly by checking both one-sided
    limits at every sorted projection value: the monotone pieces between
    jumps take their extremes at those endpoints. Left limits pair the law's
    left-limit cdf with F_n(t_i-) = (i-1)/n, which matters for laws with
    atoms at the sample points.
    """
    t = project(xs, theta)
    n = t.size
    f_at = np.asarray(law.cdf(t), dtype=np.float64)
    f_left = f_at if law.cdf_left is None else np.asarray(law.cdf_left(t), dtype=np.float64)
    if not (np.all(np.isfinite(f_at)) and np.all(np.isfinite(f_left))):
        bad = t[int(np.argmin(np.isfinite(f_at) & np.isfinite(f_left)))]
        raise NumericError(f"cdf evaluation failed at t={bad!r}")
    fn_at = np.arange(1, n + 1) / n
    fn_left = np.arange(0, n) / n
    cand = np.stack([_candidate_ratios(f_at, fn_at), _candidate_ratios(f_left, fn_left)])
    flat = int(np.argmax(cand))
    side_idx, i = divmod(flat, n)
    f_star = (f_at, f_left)[side_idx][i]
    fn_star = (fn_at, fn_left)[side_idx][i]
    return RatioStatResult(
        value=float(cand[side_idx, i]),
        arg_theta=np.asarray(theta, dtype=np.float64),
        arg_t=float(t[i]),
        branch=_BRANCH_TRUTH if f_star >= fn_star else _BRANCH_EMPIRICAL,
        side="at" if side_idx == 0 else "left",
    )


def ratio_at_threshold(xs, theta, law: AnalyticCdf1d, t: float) -> float:
    """The statistic at one (theta, t), maximized over both one-sided limits."""
    proj = project(xs, theta)
    n = proj.size
    f_at = float(law.cdf(np.asarray([t]))[0])
    f_left = f_at if law.cdf_left is None else float(law.cdf_left(np.asarray([t]))[0])
    fn_at = float(np.searchsorted(proj, t, side="right")) / n
    fn_left = float(np.searchsorted(proj, t, side="left")) / n
    vals = _candidate_ratios(
        np.array([f_at, f_left]), np.array([fn_at, fn_left])
    )
    return float(np.max(vals))


def _projected_law(spec: Gaussian, theta: np.ndarray) -> AnalyticCdf1d:
    var = float(theta @ spec.cov @ theta)
    return gaussian_law(float(theta @ spec.mean), max(var, 1e-300))


def ratio_sup(xs, spec: Gaussian, opts: OptimizerOpts | None = None,
              rng: RngStream | None = None) -> RatioStatResult:
    """Heuristic maximization of the ratio statistic over directions.

    Same restart-plus-local-search scaffold as the max-sliced optimizer, with
    central-difference direction derivatives since the objective is not
    differentiable in closed form. The result is a certified lower bound on
    the sup over (theta, t).
    """
    if not isinstance(spec, Gaussian):
        raise SpecError("ratio_sup requires a Gaussian spec (closed-form projections)")
    x = as_samples(xs)
    if x.shape[1] != spec.dim:
        raise DomainError(f"dimension mismatch: samples {x.shape[1]}, spec {spec.dim}")
    opts = opts or OptimizerOpts()
    rng = rng or RngStream(0)
    d = x.shape[1]

    def value(theta: np.ndarray) -> float:
        return ratio_fixed_direction(x, theta, _projected_law(spec, theta)).value

    if d == 1:
        plus, minus = np.array([1.0]), np.array([-1.0])
        best = plus if value(plus) >= value(minus) else minus
        return ratio_fixed_direction(x, best, _projected_law(spec, best))

    starts = [rng.child(r).generator().standard_normal(d) for r in range(opts.restarts)]
    if opts.include_seeded_starts:
        centered = x - x.mean(axis=0)
        if x.shape[0] > 1:
            _, vecs = np.linalg.eigh(centered.T @ centered)
            starts.extend(vecs[:, -1 - k] for k in range(min(3, d)))
        diff = x.mean(axis=0) - spec.mean
        if np.linalg.norm(diff) > 1e-12:
            starts.append(diff)
        if d in _RATIO_SEED_GRID:
            dirs = grid_directions(d, _RATIO_SEED_GRID[d])
            starts.append(dirs[int(np.argmax([value(u) for u in dirs]))])
    starts = _normalize_rows(np.asarray(starts))

    best_val, best_theta = -np.inf, starts[0]
    eye = np.eye(d)
    for theta in starts:
        val = value(theta)
        if val > best_val:
            best_val, best_theta = val, theta
        for k in range(opts.max_iters):
            grad = np.empty(d)
            for axis in range(d):
                up = _normalize_rows((theta + _FD_STEP * eye[axis])[None, :])[0]
                dn = _normalize_rows((theta - _FD_STEP * eye[axis])[None, :])[0]
                grad[axis] = (value(up) - value(dn)) / (2.0 * _FD_STEP)
            step = (
                opts.step0 / math.sqrt(k + 1.0)
                if opts.step_decay == 1.0
                else opts.step0 * opts.step_decay**k
            )
            theta_new = _normalize_rows((theta + step * grad)[None, :], fallback=theta[None, :])[0]
            val_new = value(theta_new)
            if val_new > best_val:
                best_val, best_theta = val_new, theta_new
            done = abs(val_new - val) < opts.tol
            theta, val = theta_new, val_new
            if done:
                break
    return ratio_fixed_direction(x, best_theta, _projected_law(spec, best_theta))


def shatter_count(points) -> int:
    """Exact number of halfspace labelings {<x, theta> <= t} of a point set.

    Toy scale only (d <= 2, n <= 10): enumerates every direction at which the
    projection order can change (normals of pairwise difference vectors) plus
    a midpoint inside each arc between them, then collects all threshold
    labelings along each direction. Tie groups at critical directions enter
    together through the non-strict thresholds, so collinear configurations
    are handled exactly.
    """
    x = as_samples(points)
    n, d = x.shape
    if d > 2:
        raise ScaleError(f"shatter_count supports d <= 2, got d={d}")
    if n > 10:
        raise ScaleError(f"shatter_count supports n <= 10, got n={n}")

    if d == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        angles = set()
        for i in range(n):
            for j in range(i + 1, n):
                diff = x[i] - x[j]
                if np.linalg.norm(diff) == 0.0:
                    continue
                base = math.atan2(diff[1], diff[0])
                for off in (0.5 * math.pi, -0.5 * math.pi):
                    angles.add((base + off) % (2.0 * math.pi))
        if not angles:
            angles = {0.0, 0.5 * math.pi}
        ordered = sorted(angles)
        mids = []
        for k, angle in enumerate(ordered):
            nxt = ordered[(k + 1) % len(ordered)]
            if k + 1 == len(ordered):
                nxt += 2.0 * math.pi  # wraparound arc
            mids.append(0.5 * (angle + nxt) % (2.0 * math.pi))
        dirs = [np.array([math.cos(a), math.sin(a)]) for a in ordered + mids]

    labelings = {(False,) * n}
    for u in dirs:
        v = x @ u
        for val in np.unique(v):
            labelings.add(tuple(v <= val))
    return len(labelings)


def vc_bound(n: int, d: int, two_sided: bool = False) -> int:
    """Polynomial shatter bound (n+1)^(d+1) for halfspaces in dimension d.

    two_sided doubles the exponent, covering halfspaces together with their
    complements. Exact integer arithmetic, so no overflow at any scale.
    """
    if n < 1 or d < 1:
        raise DomainError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    exponent = (2 if two_sided else 1) * (d + 1)
    return (n + 1) ** exponent


class BoundValue(NamedTuple):
    """A theoretical bound before and after clipping to the probability range."""

    raw: float
    clipped: float


def ratio_tail_bound(n: int, d: int, eps: float) -> BoundValue:
    """Tail bound 8 exp((d+1) log(2n+1) - n eps^2 / 4) on the ratio statistic."""
    if n < 1 or d < 1:
        raise DomainError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if eps < 0.0:
        raise DomainError(f"threshold must be nonnegative, got {eps}")
    exponent = (d + 1) * math.log(2.0 * n + 1.0) - n * eps * eps / 4.0
    try:
        raw = 8.0 * math.exp(exponent)
    except OverflowError:
        raw = math.inf
    return BoundValue(raw=raw, clipped=min(1.0, raw))
