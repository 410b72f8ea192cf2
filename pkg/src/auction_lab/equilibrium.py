"""Equilibrium strategies for the two-period common-value auction.

Bob moves last and sees v; Alice (and any other period-1 bidders) randomize
by drawing a synthetic value v' and bidding Bob's bid function at v'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import ValueDistribution
from .errors import ConvergenceError, DomainError
from .rng import RandomStream

MAX_ITER = 200
THRESHOLD_RTOL = 1e-10


@dataclass(frozen=True)
class AuctionSpec:
    dist: ValueDistribution
    limit_L: float = 0.0
    alpha: float = 0.0
    n_period1: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.limit_L) and self.limit_L >= 0):
            raise DomainError(f"limit_L must be >= 0, got {self.limit_L}")
        if not 0 <= self.alpha < 1:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.alpha > 0 and self.limit_L != 0:
            raise DomainError("uncertain timing (alpha > 0) requires limit_L = 0")
        if int(self.n_period1) != self.n_period1 or self.n_period1 < 1:
            raise DomainError(f"n_period1 must be an integer >= 1, got {self.n_period1}")


@dataclass(frozen=True)
class ThresholdResult:
    v_bar: float
    residual: float
    interior: bool


def _bisect_increasing(fn, target, lo, hi):
    """Smallest-bracket bisection for an increasing ``fn`` with fn(lo) < target <= fn(hi).

    Runs until the bracket cannot be split further in floating point.
    """
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo, hi
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    if hi - lo > 1e-12 * max(1.0, abs(hi)):
        raise ConvergenceError(f"bisection did not converge: bracket [{lo}, {hi}]")
    return lo, hi


def _solve_increasing(d: ValueDistribution, fn, target: float) -> ThresholdResult:
    lo = float(d.quantile(1e-12))
    if fn(lo) >= target:
        return ThresholdResult(d.support_inf, 0.0, True)
    hi = float(d.quantile(1 - 1e-12))
    sup = d.support[1]
    while fn(hi) < target:
        if hi >= sup:
            return ThresholdResult(math.inf, math.inf, False)
        hi = min(2.0 * hi, sup)
        if not math.isfinite(hi):
            return ThresholdResult(math.inf, math.inf, False)
    lo, hi = _bisect_increasing(fn, target, lo, hi)
    r_lo, r_hi = abs(fn(lo) - target), abs(fn(hi) - target)
    v_bar, residual = (lo, r_lo) if r_lo < r_hi else (hi, r_hi)
    if residual > THRESHOLD_RTOL * max(1.0, v_bar):
        raise ConvergenceError(f"threshold residual {residual} above tolerance at v_bar={v_bar}")
    return ThresholdResult(v_bar, residual, True)


def solve_threshold(d: ValueDistribution, L: float) -> ThresholdResult:
    """Solve ``E[v | v < v_bar] = L`` for the reserve threshold v_bar.

    ``L >= mean`` has no solution and returns ``interior=False``.
    """
    if not L >= 0:
        raise DomainError(f"L must be >= 0, got {L}")
    if L == 0:
        return ThresholdResult(d.support_inf, 0.0, True)
    if L >= d.mean():
        return ThresholdResult(math.inf, math.inf, False)
    return _solve_increasing(d, lambda x: float(d._truncated_mean_limit(x)), L)


def solve_threshold_alpha(d: ValueDistribution, alpha: float) -> ThresholdResult:
    """Solve ``E[v 1{v < v_bar}] = alpha E[v]`` for the uncertain-timing cutoff."""
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    if alpha == 0:
        return ThresholdResult(d.support_inf, 0.0, True)
    return _solve_increasing(d, lambda x: float(d.partial_expectation(x)), alpha * d.mean())


def solve(spec: AuctionSpec) -> ThresholdResult:
    """Threshold matching the auction's variant (reserve or uncertain timing)."""
    if spec.alpha > 0:
        return solve_threshold_alpha(spec.dist, spec.alpha)
    return solve_threshold(spec.dist, spec.limit_L)


def _as_out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def bob_bid(spec: AuctionSpec, th: ThresholdResult, v):
    """Last mover's bid at observed value ``v`` (vectorized).

    ``E[v~ | v~ < v]`` above the threshold, the reserve L on (L, v_bar) and 0
    at or below L.  With no interior threshold Bob bids L whenever v > L.
    """
    if spec.alpha != 0:
        raise DomainError("bob_bid is the alpha = 0 strategy; use bob_bid_alpha")
    va = np.asarray(v, dtype=float)
    if np.any(va < 0):
        raise DomainError("values must be >= 0")
    L = spec.limit_L
    if not th.interior:
        return _as_out(np.where(va > L, L, 0.0), v)
    upper = spec.dist._truncated_mean_limit(va)
    bid = np.where(va >= th.v_bar, upper, np.where(va > L, L, 0.0))
    if L > 0:
        bid = np.where(va <= L, 0.0, bid)
    return _as_out(bid, v)


def bob_bid_alpha(d: ValueDistribution, alpha: float, th: ThresholdResult, v):
    """Last mover's bid when he is absent with probability ``alpha``.

    ``E[v~ | v~ < v] - alpha E[v] / P(v~ < v)`` above the cutoff, else 0.
    """
    va = np.asarray(v, dtype=float)
    F = np.asarray(d.cdf(va), dtype=float)
    pe = np.asarray(d.partial_expectation(va), dtype=float)
    target = alpha * d.mean()
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = (pe - target) / np.where(F > 0, F, 1.0)
    if alpha == 0:
        raw = np.asarray(d._truncated_mean_limit(va))
    bid = np.where(va > th.v_bar, np.maximum(raw, 0.0), 0.0)
    return _as_out(bid, v)


def bid_function(spec: AuctionSpec, th: ThresholdResult):
    """Vectorized equilibrium bid map for the auction's variant."""
    if spec.alpha > 0:
        return lambda v: bob_bid_alpha(spec.dist, spec.alpha, th, v)
    return lambda v: bob_bid(spec, th, v)


def alice_bid_sample(spec: AuctionSpec, th: ThresholdResult, s: RandomStream) -> float:
    """One draw of Alice's mixed strategy: bid the equilibrium bid at a synthetic v'."""
    v_prime = spec.dist.sample(s)
    return float(bid_function(spec, th)(v_prime))


def period1_values_from_uniforms(spec: AuctionSpec, u):
    """Synthetic values with CDF ``F^(1/n_period1)``.

    The maximum of ``n_period1`` independent draws then has law F, so the
    highest period-1 bid has exactly Alice's single-bidder bid law.
    """
    return spec.dist.quantile(np.asarray(u, dtype=float) ** spec.n_period1)


def period1_bid_sample_multi(spec: AuctionSpec, th: ThresholdResult, s: RandomStream) -> float:
    """One period-1 bidder's draw under the symmetric split of Alice's bid law."""
    v_prime = float(period1_values_from_uniforms(spec, s.uniform()))
    return float(bid_function(spec, th)(v_prime))


def bid_pseudo_inverse(spec: AuctionSpec, th: ThresholdResult, b: float) -> float:
    """``inf {v : bob_bid(v) >= b}``, by bisection on the bid function itself."""
    d = spec.dist
    if not b >= 0:
        raise DomainError(f"bid must be >= 0, got {b}")
    mean = d.mean()
    if b > mean:
        raise DomainError(f"bid {b} exceeds E[v] = {mean}; no value attains it")
    if b == 0:
        return d.support_inf
    if b == mean:
        return d.support[1]
    beta = bid_function(spec, th)
    lo = d.support_inf
    if float(beta(lo)) >= b:
        return lo
    hi = float(d.quantile(0.5))
    sup = d.support[1]
    while float(beta(hi)) < b:
        if hi >= sup:
            return sup
        hi = min(2.0 * hi + 1.0, sup)
    lo, hi = _bisect_increasing(lambda x: float(beta(x)), b, lo, hi)
    return hi
