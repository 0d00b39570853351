"""Exact one-dimensional Wasserstein distances through quantile couplings."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError, NumericError
from .measures import as_samples

# unbounded quantile functions diverge at {0, 1}; integration endpoints are
# clipped here, where the omitted mass is far below every stated tolerance
_U_CLIP = 1e-12


def as_sorted_sample(values) -> np.ndarray:
    """Validate a nonempty, finite, nondecreasing 1-d array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DomainError(f"sorted sample must be a nonempty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("sorted sample contains non-finite entries")
    if np.any(np.diff(arr) < 0.0):
        raise DomainError("sample values are not sorted nondecreasingly")
    return arr


def project(samples, theta) -> np.ndarray:
    """Sorted inner products <x_i, theta> of the rows with a direction."""
    arr = as_samples(samples)
    th = np.asarray(theta, dtype=np.float64).ravel()
    if th.size != arr.shape[1]:
        raise DomainError(
            f"direction has dimension {th.size}, samples have dimension {arr.shape[1]}"
        )
    return np.sort(arr @ th)


@dataclass(frozen=True)
class AnalyticCdf1d:
    """A one-dimensional law given by its cdf and quantile function.

    quantile_jumps lists interior u-values where the quantile function is
    discontinuous (empirical laws); quadrature against the law refines its
    integration cells there so step laws integrate exactly. cdf_left supplies
    the left limit t -> F(t-) for laws with atoms; None means the cdf is
    continuous and its own left limit.
    """

    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    descriptor: str
    quantile_jumps: np.ndarray | None = None
    cdf_left: Callable[[np.ndarray], np.ndarray] | None = None


def gaussian_law(mean: float, var: float) -> AnalyticCdf1d:
    """N(mean, var) as an AnalyticCdf1d; var may be tiny but must be positive."""
    if not var > 0.0:
        raise DomainError(f"variance must be positive, got {var}")
    sd = float(np.sqrt(var))
    return AnalyticCdf1d(
        cdf=lambda t: ndtr((np.asarray(t, dtype=np.float64) - mean) / sd),
        quantile=lambda u: mean + sd * ndtri(np.asarray(u, dtype=np.float64)),
        descriptor=f"Gaussian(mean={mean:g}, var={var:g})",
    )


def empirical_law(values) -> AnalyticCdf1d:
    """The empirical distribution of a 1-d sample as a tabulated AnalyticCdf1d."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size < 1 or not np.all(np.isfinite(v)):
        raise DomainError("empirical law needs a nonempty finite sample")
    m = v.size

    def cdf(t):
        return np.searchsorted(v, np.asarray(t, dtype=np.float64), side="right") / m

    def cdf_left(t):
        return np.searchsorted(v, np.asarray(t, dtype=np.float64), side="left") / m

    def quantile(u):
        k = np.ceil(np.asarray(u, dtype=np.float64) * m).astype(np.intp)
        return v[np.clip(k - 1, 0, m - 1)]

    return AnalyticCdf1d(
        cdf=cdf,
        quantile=quantile,
        descriptor=f"Empirical(m={m})",
        quantile_jumps=np.arange(1, m) / m,
        cdf_left=cdf_left,
    )


@lru_cache(maxsize=512)
def quantile_blocks(n: int, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Blocks of the merged quantile grid {i/n} union {j/m}.

    Returns (widths, xi, yj): on block k both empirical quantile functions are
    constant, equal to the xi[k]-th and yj[k]-th order statistics. Breakpoints
    are compared exactly via cross-multiplication, so no block is ever split
    or merged by floating-point noise. Arrays are cached; treat as read-only.
    """
    widths, xi, yj = [], [], []
    i = j = 0
    u = 0.0
    while i < n and j < m:
        lhs, rhs = (i + 1) * m, (j + 1) * n
        u_next = (i + 1) / n if lhs <= rhs else (j + 1) / m
        widths.append(u_next - u)
        xi.append(i)
        yj.append(j)
        u = u_next
        if lhs <= rhs:
            i += 1
        if rhs <= lhs:
            j += 1
    return (
        np.asarray(widths),
        np.asarray(xi, dtype=np.intp),
        np.asarray(yj, dtype=np.intp),
    )


def w1d_empirical(xs, ys, p: float) -> float:
    """Order-p Wasserstein distance between two empirical measures on R.

    Computed exactly as the L^p norm of the quantile difference over the
    merged breakpoint grid. For equal sample sizes this reduces to the sorted
    matching ((1/n) sum |x_(i) - y_(i)|^p)^(1/p); sizes may differ.
    """
    if not p >= 1.0:
        raise DomainError(f"order p must be >= 1, got {p}")
    x = as_sorted_sample(xs)
    y = as_sorted_sample(ys)
    if x.size == y.size:
        return float(np.mean(np.abs(x - y) ** p) ** (1.0 / p))
    w, xi, yj = quantile_blocks(x.size, y.size)
    return float(np.sum(w * np.abs(x[xi] - y[yj]) ** p) ** (1.0 / p))


@lru_cache(maxsize=64)
def _leggauss(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def _integration_cells(n: int, jumps: np.ndarray | None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Clipped block edges refined at quantile jumps; returns (lo, hi, block index)."""
    edges = np.clip(np.arange(n + 1) / n, _U_CLIP, 1.0 - _U_CLIP)
    if jumps is not None and len(jumps) > 0:
        interior = jumps[(jumps > _U_CLIP) & (jumps < 1.0 - _U_CLIP)]
        edges = np.union1d(edges, interior)
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    inner = np.arange(1, n) / n
    idx = np.searchsorted(inner, 0.5 * (lo + hi), side="left")
    return lo, hi, idx


def w1d_vs_cdf(xs, law: AnalyticCdf1d, p: float, nodes_per_block: int = 32) -> float:
    """Order-p Wasserstein distance between an empirical measure and a law.

    Integrates |x_(i) - Q(u)|^p over each quantile block ((i-1)/n, i/n] by
    fixed-order Gauss-Legendre quadrature with nodes_per_block nodes, the
    endpoints clipped away from {0, 1} where Q may diverge.
    """
    if not p >= 1.0:
        raise DomainError(f"order p must be >= 1, got {p}")
    if nodes_per_block < 1:
        raise DomainError(f"nodes_per_block must be >= 1, got {nodes_per_block}")
    x = as_sorted_sample(xs)
    n = x.size
    lo, hi, idx = _integration_cells(n, law.quantile_jumps)
    t, v = _leggauss(nodes_per_block)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    u = mid[:, None] + half[:, None] * t[None, :]
    w = half[:, None] * v[None, :]
    q = np.asarray(law.quantile(u.ravel()), dtype=np.float64)
    if not np.all(np.isfinite(q)):
        bad = u.ravel()[int(np.argmin(np.isfinite(q)))]
        raise NumericError(f"quantile evaluation failed at u={bad!r}")
    diff = np.abs(x[idx][:, None] - q.reshape(u.shape))
    return float(np.sum(w * diff**p) ** (1.0 / p))
