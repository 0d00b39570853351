"""Evaluators for the theoretical rate and concentration bounds.

Absolute constants that the theory leaves unspecified enter as the user
parameters c_user and C_user (default 1), so curves produced with the
defaults are shape-only overlays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .ratio import BoundValue, ratio_tail_bound

CONCENTRATION_KINDS = ("finite", "exp_decay", "poly_decay", "ratio_finite", "ratio_exp", "ratio_poly")


@dataclass(frozen=True)
class BoundParams:
    """Shared parameters of the bound formulas.

    d is required by the finite-dimensional bounds, gamma by the decay-based
    ones; m_s carries the moment constant for callers composing Markov terms.
    """

    p: float
    s: float
    d: int | None = None
    gamma: float | None = None
    c_user: float = 1.0
    C_user: float = 1.0
    m_s: float | None = None

    def __post_init__(self):
        if not self.p >= 1.0:
            raise DomainError(f"order p must be >= 1, got {self.p}")
        if not self.s > 2.0 * self.p:
            raise DomainError(f"moment order s must exceed 2p = {2 * self.p}, got {self.s}")
        if self.d is not None and self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")
        if self.gamma is not None and not self.gamma > 0.0:
            raise DomainError(f"decay exponent must be positive, got {self.gamma}")
        if not (self.c_user > 0.0 and self.C_user > 0.0):
            raise DomainError("constants c_user and C_user must be positive")

    def _need_d(self) -> int:
        if self.d is None:
            raise DomainError("this bound requires the dimension d")
        return self.d

    def _need_gamma(self) -> float:
        if self.gamma is None:
            raise DomainError("this bound requires the decay exponent gamma")
        return self.gamma


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _log2n1(n: int) -> float:
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    return math.log(2.0 * n + 1.0)


def expectation_bound_finite(params: BoundParams, n: int) -> float:
    """C log(2n+1)^(p/s + 1/2) sqrt(d/n), the finite-dimensional rate."""
    d = params._need_d()
    ln = _log2n1(n)
    return params.C_user * ln ** (params.p / params.s + 0.5) * math.sqrt(d / n)


def expectation_bound_exp_decay(params: BoundParams, n: int) -> float:
    """C log(2n+1)^(p/s + 1/2 + 1/gamma) / sqrt(n) under exponential decay."""
    gamma = params._need_gamma()
    ln = _log2n1(n)
    return params.C_user * ln ** (params.p / params.s + 0.5 + 1.0 / gamma) / math.sqrt(n)


def expectation_bound_poly_decay(params: BoundParams, n: int) -> float:
    """C log(2n+1)^(p/s) / n^(1/2 - 1/(2 p gamma)) under polynomial decay."""
    gamma = params._need_gamma()
    if not params.p * gamma > 1.0:
        raise DomainError(
            f"polynomial-decay rate needs p*gamma > 1, got {params.p * gamma}"
        )
    ln = _log2n1(n)
    return params.C_user * ln ** (params.p / params.s) / n ** (0.5 - 1.0 / (2.0 * params.p * gamma))


def concentration_bound(kind: str, params: BoundParams, n: int, eps: float) -> BoundValue:
    """Right-hand side of the selected concentration inequality at (n, eps).

    Returns the raw value alongside a copy clipped to <= 1 for probability
    reporting. kind is one of CONCENTRATION_KINDS.
    """
    if not eps > 0.0:
        raise DomainError(f"threshold must be positive, got {eps}")
    ln = _log2n1(n)
    c, big_c = params.c_user, params.C_user
    if kind == "finite":
        d = params._need_d()
        raw = _exp(-n * eps * eps / 2.0) + 8.0 * _exp(ln * (2.0 * (d + 1) - n * eps * eps / 64.0))
    elif kind == "exp_decay":
        gamma = params._need_gamma()
        raw = big_c * _exp(c * ln ** (1.0 + 1.0 / gamma) - n * eps * eps / 64.0)
        raw += big_c / (n * eps * eps) ** (params.s / (2.0 * params.p))
    elif kind == "poly_decay":
        gamma = params._need_gamma()
        raw = big_c * _exp(
            4.0 * n ** (1.0 / (1.0 + params.p * gamma)) * ln - n * eps * eps / 64.0
        )
        raw += big_c * eps ** (-params.s / params.p) * n ** (
            -params.s * gamma / (2.0 * (1.0 + params.p * gamma))
        )
    elif kind == "ratio_finite":
        return ratio_tail_bound(n, params._need_d(), eps)
    elif kind == "ratio_exp":
        gamma = params._need_gamma()
        raw = big_c * _exp(big_c * ln ** (1.0 + 1.0 / gamma) - c * n * eps * eps)
    elif kind == "ratio_poly":
        gamma = params._need_gamma()
        raw = _exp(big_c * ln * n ** (1.0 / gamma) - c * n * eps * eps / 64.0)
    else:
        raise DomainError(f"unknown bound kind {kind!r}; expected one of {CONCENTRATION_KINDS}")
    return BoundValue(raw=raw, clipped=min(1.0, raw))
