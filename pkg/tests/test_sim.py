import math
import os

import numpy as np
import pytest
from scipy import integrate

from auction_lab.dist import Exponential, Lognormal, Uniform
from auction_lab.equilibrium import AuctionSpec, solve
from auction_lab.errors import DomainError
from auction_lab.pricing import profit_last_mover_generic, revenue_sold_only
from auction_lab.rng import RandomStream
from auction_lab.sim import (
    audit_alice,
    audit_bob,
    empirical_win_curve,
    estimate,
    mc_exchange_value,
    resolve,
    run_auction,
)

MARGRABE_111 = 0.520499877813047
U = Uniform(0.0, 1.0)
N = 1_000_000

ALPHA_REASON = (
    "the uncertain-timing bid law does not hold Alice at alpha E[v]: against it her "
    "payoff is 0.18 - 0.2 b on the uniform case (see decisions ledger)"
)


def within(est, target, k=3.0):
    return abs(est.mean - target) <= k * est.se


def setup(d=U, L=0.0, alpha=0.0, n=1):
    spec = AuctionSpec(d, L, alpha, n)
    return spec, solve(spec)


class TestResolve:
    def test_tie_rules(self):
        v = np.zeros(6)
        p1 = np.array([[0.2], [0.3], [0.25], [0.25], [0.1], [0.25]])
        bob = np.array([0.4, 0.3, 0.25, 0.0, 0.1, 0.0])
        present = np.array([True, True, True, True, True, False])
        code, _, price = resolve(v, p1, bob, present, 0.25)
        # Bob higher; Bob ties Alice; Bob ties reserve and Alice; Alice alone at L;
        # both below L; Alice at L with Bob absent
        assert code.tolist() == [2, 2, 2, 0, 0, 0]
        assert price.tolist() == [0.4, 0.3, 0.25, 0.0, 0.0, 0.0]

    def test_alpha_game_reserve(self):
        code, _, _ = resolve(np.zeros(2), np.array([[0.0], [0.0]]), np.zeros(2), np.array([False, True]), 0.0, True)
        assert code.tolist() == [1, 2]

    def test_multi_bidder_pick(self):
        code, idx, price = resolve(np.zeros(1), np.array([[0.1, 0.3, 0.2]]), np.array([0.05]), np.array([True]), 0.0)
        assert code[0] == 1 and idx[0] == 1 and price[0] == 0.3


class TestRunAuction:
    def test_forced_example(self):
        spec, th = setup()
        out = run_auction(spec, th, RandomStream(1, 0), v=0.8, v_alice=0.4, bob_present=True)
        assert out.bob_bid == pytest.approx(0.4) and out.alice_bid == pytest.approx(0.2)
        assert out.winner == "bob" and out.revenue == pytest.approx(0.4) and out.bob_payoff == pytest.approx(0.4)

    def test_equal_draws_bob_wins(self):
        spec, th = setup()
        out = run_auction(spec, th, RandomStream(1, 0), v=0.6, v_alice=0.6, bob_present=True)
        assert out.alice_bid == out.bob_bid and out.winner == "bob"

    def test_alice_alone_at_reserve_unsold(self):
        spec, th = setup(L=0.25)
        out = run_auction(spec, th, RandomStream(1, 0), v=0.2, v_alice=0.3, bob_present=True)
        assert out.bob_bid == 0.0 and out.alice_bid == 0.25
        assert out.winner == "unsold" and out.revenue == 0 and out.alice_payoff == 0 and out.bob_payoff == 0

    @pytest.mark.parametrize("L,alpha", [(0.0, 0.0), (0.25, 0.0), (0.0, 0.3)])
    def test_accounting_identity(self, L, alpha):
        spec, th = setup(L=L, alpha=alpha)
        for i in range(2000):
            o = run_auction(spec, th, RandomStream(4, i))
            sold = o.winner != "unsold"
            assert abs(o.revenue + o.alice_payoff + o.bob_payoff - o.v * sold) <= 1e-12
            if o.winner == "bob":
                assert o.revenue == o.bob_bid >= L
            if o.winner == "alice":
                assert o.revenue == o.alice_bid
            if not sold:
                assert o.price_paid == 0

    def test_matches_vectorized_paths(self):
        # single-path draws agree with the bulk engine path for path
        spec, th = setup(L=0.25)
        rep = estimate(spec, 1000, 99, th)
        outs = [run_auction(spec, th, RandomStream(99, i)) for i in range(1000)]
        assert math.fsum(o.bob_payoff for o in outs) / 1000 == pytest.approx(rep.bob_payoff.mean, abs=1e-12)
        assert math.fsum(o.revenue for o in outs) / 1000 == pytest.approx(rep.revenue.mean, abs=1e-12)


class TestEstimate:
    def test_uniform_baseline(self):
        spec, th = setup()
        r = estimate(spec, N, 7, th)
        assert within(r.bob_payoff, 1 / 6)
        assert within(r.alice_payoff, 0.0)
        se_freq = math.sqrt(0.25 / N)
        assert abs(r.win_freq["alice"] - 0.5) <= 3 * se_freq
        assert abs(r.win_freq["bob"] - 0.5) <= 3 * se_freq

    def test_lognormal_baseline(self, logn):
        spec, th = setup(logn)
        r = estimate(spec, N, 7, th)
        assert within(r.bob_payoff, MARGRABE_111)
        assert within(r.revenue, 1 - MARGRABE_111)

    @pytest.mark.parametrize("d,L", [(Uniform(0, 1), 0.25), (Lognormal(1, 1, 1), 0.5), (Exponential(1.0), 0.3)])
    def test_reserve_matrix(self, d, L):
        spec, th = setup(d, L)
        r = estimate(spec, N, 13, th)
        assert within(r.bob_payoff, profit_last_mover_generic(d, L).total)
        assert within(r.revenue, revenue_sold_only(d, L))
        assert within(r.alice_payoff, 0.0)

    def test_report_invariants(self):
        spec, th = setup(L=0.25)
        r = estimate(spec, 20_000, 3, th)
        assert abs(sum(r.win_freq.values()) - 1) <= 1e-12
        tot = r.alice_payoff.mean + r.bob_payoff.mean + r.revenue.mean
        assert abs(r.total_surplus.mean - tot) <= 1e-12

    def test_determinism_across_threads(self, monkeypatch):
        spec, th = setup(Lognormal(1, 1, 1), 0.5)
        out = []
        for threads in ("1", "3", "0"):
            monkeypatch.setenv("AUCTION_LAB_THREADS", threads)
            out.append(estimate(spec, 300_000, 21, th).as_dict())
        assert out[0] == out[1] == out[2]

    def test_min_paths(self):
        spec, th = setup()
        with pytest.raises(DomainError):
            estimate(spec, 999, 1, th)

    def test_multi_bidder(self):
        spec1, th = setup()
        spec3, _ = setup(n=3)
        r1 = estimate(spec1, N, 5, th)
        r3 = estimate(spec3, N, 6, th)
        diff_se = math.hypot(r1.bob_payoff.se, r3.bob_payoff.se)
        assert abs(r1.bob_payoff.mean - r3.bob_payoff.mean) <= 3 * diff_se
        assert len(r3.period1_payoffs) == 3
        # three zero-mean payoffs; allow the usual band with a little room for the multiple comparisons
        assert all(abs(e.mean) <= 3.5 * e.se for e in r3.period1_payoffs)

    @pytest.mark.xfail(strict=True, reason=ALPHA_REASON)
    def test_uniform_alpha_alice(self):
        spec, th = setup(alpha=0.2)
        assert within(estimate(spec, N, 7, th).alice_payoff, 0.1)

    def test_uniform_alpha_alice_matches_analysis(self):
        # A bid b > 0 earns 0.2 (1/2 - b) + 0.8 * 0.1 = 0.18 - 0.2 b; a bid of 0 loses the
        # tie to a present Bob and earns 0.1.  Average over b = max(0, v'/2 - 0.1/v').
        spec, th = setup(alpha=0.2)
        r = estimate(spec, N, 7, th)
        cut = math.sqrt(0.2)
        tail = integrate.quad(lambda v: 0.18 - 0.2 * (v / 2 - 0.1 / v), cut, 1.0)[0]
        analytic = cut * 0.1 + tail
        assert within(r.alice_payoff, analytic)
        assert not within(r.alice_payoff, 0.1)


class TestAudits:
    def test_alice_indifference(self):
        spec, th = setup()
        rows = audit_alice(spec, th, np.linspace(0.05, 0.45, 9), 400_000, 3)
        assert all(abs(m) <= 3 * se for _, m, se in rows)

    def test_alice_overbid_and_zero(self):
        spec, th = setup()
        (b0, m0, se0), (b9, m9, _) = audit_alice(spec, th, [0.0, 0.9], 100_000, 3)
        assert m0 == 0.0 and se0 == 0.0
        assert m9 <= -0.3

    @pytest.mark.xfail(strict=True, reason=ALPHA_REASON)
    def test_alice_alpha_grid(self):
        spec, th = setup(alpha=0.2)
        rows = audit_alice(spec, th, np.linspace(0.05, 0.4, 8), 400_000, 3)
        assert all(abs(m - 0.1) <= 3 * se for _, m, se in rows)

    def test_bob_optimal(self):
        spec, th = setup()
        rows = audit_bob(spec, th, [-0.1, -0.05, 0.0, 0.05, 0.1], 400_000, 3)
        ref = rows[2][1]
        assert all(m <= ref + 3 * dse for _, m, _, dse in rows)

    def test_bob_overbid(self):
        spec, th = setup()
        rows = audit_bob(spec, th, [0.0, 10.0], 50_000, 3)
        assert rows[1][1] < -9

    def test_bob_requires_zero(self):
        spec, th = setup()
        with pytest.raises(DomainError):
            audit_bob(spec, th, [0.1], 1000, 3)

    def test_empty_alice_grid(self):
        spec, th = setup()
        with pytest.raises(DomainError):
            audit_alice(spec, th, [], 1000, 3)


class TestWinCurve:
    @pytest.mark.parametrize("d", [Uniform(0, 1), Lognormal(1, 1, 1)], ids=["uniform", "lognormal"])
    def test_identity(self, d):
        spec, th = setup(d)
        rows = empirical_win_curve(spec, th, 20, N, 17)
        assert max(abs(freq - F) for _, freq, F, _ in rows) <= 0.02
        assert rows[0][1] < 0.05
        assert rows[9][2] <= 0.5 <= rows[10][2]

    def test_rejects_reserve(self):
        spec, th = setup(L=0.25)
        with pytest.raises(DomainError):
            empirical_win_curve(spec, th, 20, 1000, 1)


def test_mc_exchange(logn):
    e = mc_exchange_value(logn, N, 1)
    assert within(e, MARGRABE_111)
