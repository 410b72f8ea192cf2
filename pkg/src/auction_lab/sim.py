"""Monte Carlo auction engine.

Path ``i`` uses only the counter-based stream ``(seed, i)``:

    draw 0  -> the common value v
    draw 1  -> Bob's presence (present iff u >= alpha)
    draw 2+j -> period-1 bidder j's synthetic value

so results do not depend on chunking or on the number of worker threads.
Chunks have a fixed size and their partial sums are combined in chunk order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dist import ValueDistribution
from .equilibrium import (
    AuctionSpec,
    ThresholdResult,
    bid_function,
    period1_values_from_uniforms,
    solve,
)
from .errors import DomainError
from .rng import RandomStream, counter_uniforms, stream_keys

CHUNK = 1 << 16
DRAW_VALUE, DRAW_PRESENCE, DRAW_PERIOD1 = 0, 1, 2


def thread_count() -> int:
    """Worker threads from AUCTION_LAB_THREADS (0 or unset means all cores)."""
    raw = os.environ.get("AUCTION_LAB_THREADS", "").strip()
    n = int(raw) if raw else 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class AuctionOutcome:
    v: float
    alice_bid: float
    bob_bid: float
    bob_present: bool
    winner: str  # "alice", "bob" or "unsold"
    price_paid: float
    alice_payoff: float
    bob_payoff: float
    revenue: float


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float


@dataclass
class SimReport:
    n_paths: int
    seed: int
    alice_payoff: Estimate
    bob_payoff: Estimate
    revenue: Estimate
    total_surplus: Estimate
    win_freq: dict
    period1_payoffs: list = field(default_factory=list)

    FIELDS = (
        "n_paths", "seed",
        "alice_payoff_mean", "alice_payoff_se",
        "bob_payoff_mean", "bob_payoff_se",
        "revenue_mean", "revenue_se",
        "total_surplus_mean", "total_surplus_se",
        "win_freq_alice", "win_freq_bob", "win_freq_unsold",
    )

    def row(self) -> dict:
        """Flat record in the fixed field order."""
        return {
            "n_paths": self.n_paths,
            "seed": self.seed,
            "alice_payoff_mean": self.alice_payoff.mean,
            "alice_payoff_se": self.alice_payoff.se,
            "bob_payoff_mean": self.bob_payoff.mean,
            "bob_payoff_se": self.bob_payoff.se,
            "revenue_mean": self.revenue.mean,
            "revenue_se": self.revenue.se,
            "total_surplus_mean": self.total_surplus.mean,
            "total_surplus_se": self.total_surplus.se,
            "win_freq_alice": self.win_freq["alice"],
            "win_freq_bob": self.win_freq["bob"],
            "win_freq_unsold": self.win_freq["unsold"],
        }

    def as_dict(self) -> dict:
        out = self.row()
        out["period1_payoffs"] = [asdict(e) for e in self.period1_payoffs]
        return out


# ---------------------------------------------------------------------------
# Auction mechanics
# ---------------------------------------------------------------------------

def resolve(v, period1_bids, bob_bid, bob_present, L: float, alice_at_reserve_wins: bool = False):
    """Apply the allocation and tie rules to arrays of bids.

    ``period1_bids`` has shape ``(n, m)``.  Bob wins ties with any period-1
    bidder and wins when his bid equals L.  A period-1 bid equal to L does not
    sell, except in the uncertain-timing game when Bob is absent
    (``alice_at_reserve_wins``): there the reserve bid is what guarantees
    Alice her payoff of alpha E[v].
    Returns (winner_code, winning_p1_index, price) with codes 0 unsold,
    1 period-1 bidder, 2 Bob.
    """
    period1_bids = np.atleast_2d(period1_bids)
    best_idx = np.argmax(period1_bids, axis=1)
    best = np.take_along_axis(period1_bids, best_idx[:, None], axis=1)[:, 0]
    bob_wins = bob_present & (bob_bid >= L) & (bob_bid >= best)
    p1_ok = best > L
    if alice_at_reserve_wins:
        p1_ok = p1_ok | ((best >= L) & ~bob_present)
    p1_wins = ~bob_wins & p1_ok
    code = np.where(bob_wins, 2, np.where(p1_wins, 1, 0))
    price = np.where(bob_wins, bob_bid, np.where(p1_wins, best, 0.0))
    return code, best_idx, price


def _draw_paths(spec: AuctionSpec, th: ThresholdResult, keys: np.ndarray):
    d = spec.dist
    beta = bid_function(spec, th)
    v = d.quantile(counter_uniforms(keys, DRAW_VALUE))
    present = counter_uniforms(keys, DRAW_PRESENCE) >= spec.alpha
    m = spec.n_period1
    u1 = np.stack([counter_uniforms(keys, DRAW_PERIOD1 + j) for j in range(m)], axis=1)
    p1_bids = np.asarray(beta(period1_values_from_uniforms(spec, u1)), dtype=float)
    bob = np.asarray(beta(v), dtype=float)
    return v, present, p1_bids, bob


def run_auction(spec: AuctionSpec, th: ThresholdResult, s: RandomStream, *, v=None, v_alice=None,
                bob_present=None) -> AuctionOutcome:
    """One auction between Alice (first period-1 bidder) and Bob.

    Draws come from ``s`` in the same order as path ``s.stream_index`` of
    :func:`estimate`; ``v``, ``v_alice`` and ``bob_present`` override the
    corresponding draws.
    """
    u = s.uniforms(DRAW_PERIOD1 + spec.n_period1)
    d = spec.dist
    beta = bid_function(spec, th)
    v = float(d.quantile(u[DRAW_VALUE])) if v is None else float(v)
    present = bool(u[DRAW_PRESENCE] >= spec.alpha) if bob_present is None else bool(bob_present)
    vp = np.asarray(period1_values_from_uniforms(spec, u[DRAW_PERIOD1:]), dtype=float)
    if v_alice is not None:
        vp[0] = float(v_alice)
    p1 = np.asarray(beta(vp), dtype=float)
    b_bob = float(beta(v))
    code, idx, price = resolve(
        np.array([v]), p1[None, :], np.array([b_bob]), np.array([present]), spec.limit_L, spec.alpha > 0
    )
    code, idx, price = int(code[0]), int(idx[0]), float(price[0])
    winner = {0: "unsold", 1: "alice", 2: "bob"}[code]
    alice_pay = v - price if code == 1 and idx == 0 else 0.0
    return AuctionOutcome(
        v=v,
        alice_bid=float(p1[0]),
        bob_bid=b_bob,
        bob_present=present,
        winner=winner,
        price_paid=price,
        alice_payoff=alice_pay,
        bob_payoff=v - price if code == 2 else 0.0,
        revenue=price,
    )


# ---------------------------------------------------------------------------
# Deterministic chunked reduction
# ---------------------------------------------------------------------------

def _chunks(n_paths: int):
    return [(lo, min(lo + CHUNK, n_paths)) for lo in range(0, n_paths, CHUNK)]


def _map_chunks(fn, n_paths: int):
    """Evaluate ``fn(lo, hi)`` per chunk; results come back in chunk order."""
    chunks = _chunks(n_paths)
    workers = min(thread_count(), len(chunks))
    if workers <= 1:
        return [fn(lo, hi) for lo, hi in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def _moments(x: np.ndarray) -> np.ndarray:
    return np.array([x.sum(), (x * x).sum()])


def _estimate(sums, n: int) -> Estimate:
    s1 = math.fsum(float(c[0]) for c in sums)
    s2 = math.fsum(float(c[1]) for c in sums)
    mean = s1 / n
    var = max(s2 - n * mean * mean, 0.0) / (n - 1) if n > 1 else 0.0
    return Estimate(mean, math.sqrt(var / n))


def estimate(spec: AuctionSpec, n_paths: int, seed: int, th: ThresholdResult | None = None) -> SimReport:
    """Average ``n_paths`` independent auctions in equilibrium."""
    if n_paths < 1000:
        raise DomainError(f"n_paths must be >= 1000, got {n_paths}")
    th = solve(spec) if th is None else th
    m = spec.n_period1

    def work(lo, hi):
        keys = stream_keys(seed, np.arange(lo, hi, dtype=np.uint64))
        v, present, p1, bob = _draw_paths(spec, th, keys)
        code, idx, price = resolve(v, p1, bob, present, spec.limit_L, spec.alpha > 0)
        p1_win = code == 1
        bob_pay = np.where(code == 2, v - price, 0.0)
        alice_pay = np.where(p1_win & (idx == 0), v - price, 0.0)
        total = np.where(code > 0, v, 0.0)
        per_bidder = [_moments(np.where(p1_win & (idx == j), v - price, 0.0)) for j in range(m)]
        counts = np.array([(code == 1).sum(), (code == 2).sum(), (code == 0).sum()])
        return {
            "alice": _moments(alice_pay),
            "bob": _moments(bob_pay),
            "revenue": _moments(price),
            "total": _moments(total),
            "p1": per_bidder,
            "counts": counts,
        }

    parts = _map_chunks(work, n_paths)
    counts = np.sum([p["counts"] for p in parts], axis=0)
    return SimReport(
        n_paths=n_paths,
        seed=seed,
        alice_payoff=_estimate([p["alice"] for p in parts], n_paths),
        bob_payoff=_estimate([p["bob"] for p in parts], n_paths),
        revenue=_estimate([p["revenue"] for p in parts], n_paths),
        total_surplus=_estimate([p["total"] for p in parts], n_paths),
        win_freq={
            "alice": int(counts[0]) / n_paths,
            "bob": int(counts[1]) / n_paths,
            "unsold": int(counts[2]) / n_paths,
        },
        period1_payoffs=[_estimate([p["p1"][j] for p in parts], n_paths) for j in range(m)],
    )


# ---------------------------------------------------------------------------
# Equilibrium audits
# ---------------------------------------------------------------------------

def audit_alice(spec: AuctionSpec, th: ThresholdResult, bid_grid, n_paths: int, seed: int):
    """Alice's payoff from each fixed deviation bid against equilibrium opponents.

    Common random numbers: every grid point sees the same paths.
    Returns rows ``(bid, mean payoff, SE)``.
    """
    bid_grid = [float(b) for b in bid_grid]
    if not bid_grid:
        raise DomainError("bid grid is empty")
    L = spec.limit_L

    def work(lo, hi):
        keys = stream_keys(seed, np.arange(lo, hi, dtype=np.uint64))
        v, present, p1, bob = _draw_paths(spec, th, keys)
        others = p1[:, 1:].max(axis=1) if spec.n_period1 > 1 else np.full(v.shape, -np.inf)
        out = []
        for b in bid_grid:
            bob_wins = present & (bob >= L) & (bob >= b)
            ok = b > L
            ok = ok | ((b >= L) & ~present) if spec.alpha > 0 else np.full(v.shape, ok)
            wins = ~bob_wins & ok & (b >= others)
            out.append(_moments(np.where(wins, v - b, 0.0)))
        return out

    parts = _map_chunks(work, n_paths)
    rows = []
    for k, b in enumerate(bid_grid):
        e = _estimate([p[k] for p in parts], n_paths)
        rows.append((b, e.mean, e.se))
    return rows


def audit_bob(spec: AuctionSpec, th: ThresholdResult, shift_grid, n_paths: int, seed: int):
    """Bob's payoff from bidding ``beta(v) + shift`` (floored at 0) against equilibrium Alice.

    Common random numbers across shifts.  Returns rows ``(shift, mean, SE,
    SE of the difference from the shift-0 row)``.
    """
    shift_grid = [float(x) for x in shift_grid]
    if 0.0 not in shift_grid:
        raise DomainError("shift grid must include 0")
    L = spec.limit_L
    ref = shift_grid.index(0.0)

    def work(lo, hi):
        keys = stream_keys(seed, np.arange(lo, hi, dtype=np.uint64))
        v, present, p1, bob = _draw_paths(spec, th, keys)
        best = p1.max(axis=1)
        pays = []
        for sh in shift_grid:
            b = np.maximum(bob + sh, 0.0)
            wins = present & (b >= L) & (b >= best)
            pays.append(np.where(wins, v - b, 0.0))
        return [(_moments(p), _moments(p - pays[ref])) for p in pays]

    parts = _map_chunks(work, n_paths)
    rows = []
    for k, sh in enumerate(shift_grid):
        e = _estimate([p[k][0] for p in parts], n_paths)
        diff = _estimate([p[k][1] for p in parts], n_paths)
        rows.append((sh, e.mean, e.se, diff.se))
    return rows


def empirical_win_curve(spec: AuctionSpec, th: ThresholdResult, n_bins: int, n_paths: int, seed: int):
    """Bob's empirical win frequency given v, in equal-probability bins.

    Returns rows ``(bin centre v, P(Bob wins | v in bin), F(centre), count)``
    with the centre at the bin's probability midpoint, where F equals the
    bin-average of F exactly.
    """
    if spec.limit_L != 0 or spec.alpha != 0:
        raise DomainError("win curve identity holds for L = 0 and alpha = 0")
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    d = spec.dist

    def work(lo, hi):
        keys = stream_keys(seed, np.arange(lo, hi, dtype=np.uint64))
        v, present, p1, bob = _draw_paths(spec, th, keys)
        code, _, _ = resolve(v, p1, bob, present, spec.limit_L)
        k = np.minimum((np.asarray(d.cdf(v)) * n_bins).astype(int), n_bins - 1)
        wins = np.bincount(k, weights=(code == 2).astype(float), minlength=n_bins)
        counts = np.bincount(k, minlength=n_bins)
        return wins, counts

    parts = _map_chunks(work, n_paths)
    wins = np.sum([p[0] for p in parts], axis=0)
    counts = np.sum([p[1] for p in parts], axis=0)
    rows = []
    for k in range(n_bins):
        p_mid = (k + 0.5) / n_bins
        centre = float(d.quantile(p_mid))
        freq = wins[k] / counts[k] if counts[k] else math.nan
        rows.append((centre, float(freq), float(d.cdf(centre)), int(counts[k])))
    return rows


def mc_exchange_value(d: ValueDistribution, n_pairs: int, seed: int) -> Estimate:
    """Monte Carlo ``E[max(v1 - v2, 0)]`` over i.i.d. pairs."""

    def work(lo, hi):
        keys = stream_keys(seed, np.arange(lo, hi, dtype=np.uint64))
        v1 = d.quantile(counter_uniforms(keys, 0))
        v2 = d.quantile(counter_uniforms(keys, 1))
        return _moments(np.maximum(v1 - v2, 0.0))

    return _estimate(_map_chunks(work, n_pairs), n_pairs)


def sample_period1_max_bids(spec: AuctionSpec, th: ThresholdResult, n: int, seed: int) -> np.ndarray:
    """Highest period-1 bid on each of ``n`` paths."""
    keys = stream_keys(seed, np.arange(n, dtype=np.uint64))
    beta = bid_function(spec, th)
    u = np.stack([counter_uniforms(keys, DRAW_PERIOD1 + j) for j in range(spec.n_period1)], axis=1)
    return np.asarray(beta(period1_values_from_uniforms(spec, u)), dtype=float).max(axis=1)
