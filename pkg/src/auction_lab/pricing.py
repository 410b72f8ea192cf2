"""Option-style valuation of the last mover's profit and the seller's revenue.

Two families of routines live here:

* closed forms and GBM-specific expressions, with prices normalized so the
  time-0 price p0 scales out (every value is homogeneous of degree one in
  ``(p0, L)``);
* generic-distribution routines that integrate the equilibrium payoff
  decomposition against any :class:`ValueDistribution`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .dist import Lognormal, ValueDistribution, norm_cdf, norm_pdf
from .equilibrium import solve_threshold
from .errors import ConvergenceError, DegenerateRegime, DomainError

QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
Z_CUTOFF = 40.0  # standard-normal density below 1e-300 beyond this


@dataclass(frozen=True)
class GbmParams:
    p0: float = 1.0
    sigma: float = 1.0
    horizon_T: float = 1.0

    def __post_init__(self):
        for name in ("p0", "sigma", "horizon_T"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be > 0, got {val}")

    @property
    def s(self) -> float:
        return self.sigma * math.sqrt(self.horizon_T)

    def distribution(self) -> Lognormal:
        return Lognormal(self.p0, self.sigma, self.horizon_T)

    def with_T(self, T: float) -> "GbmParams":
        return GbmParams(self.p0, self.sigma, T)


@dataclass(frozen=True)
class ProfitBreakdown:
    exchange_term: float
    range_term: float
    binary_term: float
    total: float
    v_bar: float


def _quad(fn, a, b, points=None):
    kw = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500)
    if points is not None and math.isfinite(a) and math.isfinite(b):
        pts = [p for p in points if a < p < b]
        if pts:
            kw["points"] = pts
    val, err = integrate.quad(fn, a, b, **kw)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise ConvergenceError(f"quadrature on [{a}, {b}] failed: value={val}, error={err}")
    return val


# ---------------------------------------------------------------------------
# GBM closed forms
# ---------------------------------------------------------------------------

def margrabe_exchange(g: GbmParams) -> float:
    """Exchange option on two i.i.d. lognormal values: ``p0 (2 Phi(s / sqrt 2) - 1)``."""
    # 2 Phi(x) - 1 = erf(x / sqrt 2)
    return g.p0 * math.erf(g.s / 2.0)


def theta_L0(g: GbmParams) -> float:
    """d/dT of :func:`margrabe_exchange`."""
    return g.p0 * g.sigma / math.sqrt(2.0 * g.horizon_T) * norm_pdf(g.s / math.sqrt(2.0))


def bs_call(g: GbmParams, strike: float) -> float:
    """Zero-rate Black-Scholes call on v with E[v] = p0."""
    if not strike >= 0:
        raise DomainError(f"strike must be >= 0, got {strike}")
    if strike == 0:
        return g.p0
    s = g.s
    d1 = math.log(g.p0 / strike) / s + 0.5 * s
    return g.p0 * norm_cdf(d1) - strike * norm_cdf(d1 - s)


def monopolist_theta(g: GbmParams, strike: float) -> float:
    """Theta of the monopolist's call: ``p0 sigma / (2 sqrt T) phi(d1)``."""
    if not strike >= 0:
        raise DomainError(f"strike must be >= 0, got {strike}")
    if strike == 0:
        return 0.0
    k = strike / g.p0
    d1 = math.log(1.0 / k) / g.s + 0.5 * g.s
    return g.p0 * g.sigma / (2.0 * math.sqrt(g.horizon_T)) * norm_pdf(d1)


def _gbm_threshold(g: GbmParams, L: float) -> float:
    """v_bar for normalized prices (p0 = 1)."""
    th = solve_threshold(Lognormal(1.0, g.sigma, g.horizon_T), L)
    if not th.interior:
        raise DegenerateRegime(f"degenerate regime: L={L} >= E[v]=1 (normalized)")
    return th.v_bar


def _log_or_neg_inf(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _tail_integral(a: float, s: float, power: int = 0) -> float:
    """``int_a^inf phi(w/s + s/2) Phi(w/s - s/2) w^power dw``, integrated in z = w/s."""
    lo = max(a / s, -Z_CUTOFF) if math.isfinite(a) else -Z_CUTOFF
    hi = Z_CUTOFF
    if lo >= hi:
        return 0.0

    def f(z):
        return norm_pdf(z + 0.5 * s) * norm_cdf(z - 0.5 * s) * (s * z) ** power

    return s * _quad(f, lo, hi, points=[-0.5 * s, 0.0])


def profit_last_mover_gbm(g: GbmParams, L: float) -> float:
    """Last mover's expected profit under GBM, four-term closed form plus one integral.

    Prices are normalized by p0 internally.  ``L >= p0`` raises DegenerateRegime.
    """
    if not L >= 0:
        raise DomainError(f"L must be >= 0, got {L}")
    k = L / g.p0
    if k >= 1.0:
        raise DegenerateRegime(f"degenerate regime: L={L} >= p0={g.p0}")
    s = g.s
    v_bar = _gbm_threshold(g, k) if k > 0 else 0.0
    a, l = _log_or_neg_inf(v_bar), _log_or_neg_inf(k)
    Pa_minus, Pa_plus = norm_cdf(a / s - 0.5 * s), norm_cdf(a / s + 0.5 * s)
    Pl_minus, Pl_plus = norm_cdf(l / s - 0.5 * s), norm_cdf(l / s + 0.5 * s)
    total = (
        1.0
        - Pa_minus * Pa_plus
        - 2.0 / s * _tail_integral(a, s)
        + Pa_minus * Pl_plus
        - Pa_plus * Pl_minus
    )
    return g.p0 * total


def gbm_threshold(g: GbmParams, L: float) -> float:
    """v_bar in price units for reserve L under GBM (0 when L = 0)."""
    k = L / g.p0
    if k == 0:
        return 0.0
    if k >= 1.0:
        raise DegenerateRegime(f"degenerate regime: L={L} >= p0={g.p0}")
    return g.p0 * _gbm_threshold(g, k)


def theta_last_mover_fd(g: GbmParams, L: float) -> float:
    """dPi_B/dT by central differences with one Richardson step.

    Step ``h = max(1e-4 T, 1e-7)``; combines D(h) and D(h/2) to O(h^4).
    """
    T = g.horizon_T
    h = max(1e-4 * T, 1e-7)

    def central(step):
        up = profit_last_mover_gbm(g.with_T(T + step), L)
        dn = profit_last_mover_gbm(g.with_T(T - step), L)
        return (up - dn) / (2.0 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def _x_phi(x: float, z: float) -> float:
    """``x * phi(z)`` with the convention 0 when phi(z) vanishes (handles infinite x)."""
    p = norm_pdf(z)
    return 0.0 if p == 0.0 else x * p


def theta_last_mover_closed(g: GbmParams, L: float) -> float:
    """Printed six-term expression for dPi_B/dT, evaluated literally.

    Diagnostic only; compare against :func:`theta_last_mover_fd`.
    """
    if not L >= 0:
        raise DomainError(f"L must be >= 0, got {L}")
    k = L / g.p0
    if k >= 1.0:
        raise DegenerateRegime(f"degenerate regime: L={L} >= p0={g.p0}")
    sig, T = g.sigma, g.horizon_T
    s, rT = g.s, math.sqrt(T)
    v_bar = _gbm_threshold(g, k) if k > 0 else 0.0
    a, l = _log_or_neg_inf(v_bar), _log_or_neg_inf(k)
    za_m, za_p = a / s - 0.5 * s, a / s + 0.5 * s
    zl_m, zl_p = l / s - 0.5 * s, l / s + 0.5 * s

    t1 = norm_cdf(za_m) * sig / rT * (0.5 * norm_pdf(zl_p) + _x_phi(za_m, za_p) / s)
    t2 = (
        sig * v_bar * norm_pdf(za_p) / (2.0 * rT * (v_bar - k)) * (k * norm_cdf(zl_p) - norm_cdf(zl_m))
        if v_bar > k
        else 0.0
    )
    z_half = a / (s / math.sqrt(2.0))
    t3 = (
        1.0 / (2.0 * math.sqrt(2.0))
        * sig * math.exp(-sig**2 * T / 4.0) / (math.sqrt(2.0 * math.pi) * rT)
        * (math.sqrt(2.0) / s * norm_pdf(z_half) + 1.0 - norm_cdf(z_half))
    )
    t4 = sig / rT * (1.0 / s**2 + 0.25) * _tail_integral(a, s)
    t5 = -sig / rT / s**4 * _tail_integral(a, s, power=2)
    return g.p0 * (t1 + t2 + t3 + t4 + t5)


# ---------------------------------------------------------------------------
# Generic-distribution routines
# ---------------------------------------------------------------------------

def _integrate_density(d: ValueDistribution, fn, lo: float, hi: float) -> float:
    """``int_lo^hi fn(x) dx`` split at quantile breakpoints of ``d``."""
    if not hi > lo:
        return 0.0
    probs = (0.001, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1 - 1e-6, 1 - 1e-10)
    cuts = sorted({float(d.quantile(p)) for p in probs} | {lo})
    cuts = [c for c in cuts if lo <= c < hi] + [hi]
    total = 0.0
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        if x1 > x0:
            total += _quad(fn, x0, x1)
    return total


def _x_f(d: ValueDistribution):
    return lambda x: x * float(d.pdf(x))


def exchange_value(d: ValueDistribution, v_bar: float = 0.0) -> float:
    """``E[max(v1 1{v1>=v_bar} - v2 1{v2>=v_bar}, 0)]`` for i.i.d. draws from d.

    Reduced to ``int_{v_bar}^inf x (2F(x) - 1) f(x) dx``.
    """
    lo = max(v_bar, d.support_inf)
    return _integrate_density(d, lambda x: x * (2.0 * float(d.cdf(x)) - 1.0) * float(d.pdf(x)), lo, d.support[1])


def profit_last_mover_generic(d: ValueDistribution, L: float) -> ProfitBreakdown:
    """Last mover's expected profit for any value law, as an option portfolio.

    exchange_term: exchange option on asset-or-nothing claims struck at v_bar;
    range_term: ``F(v_bar) E[(v - L) 1{L < v < v_bar}]``;
    binary_term: ``L F(v_bar) (1 - F(v_bar))``.
    """
    # The theorem's displayed statement disagrees with itself on the last
    # two terms; this is the form its derivation ends with, and it matches a
    # direct integration of the equilibrium payoff.
    if not L >= 0:
        raise DomainError(f"L must be >= 0, got {L}")
    th = solve_threshold(d, L)
    if not th.interior:
        raise DegenerateRegime(f"degenerate regime: L={L} >= E[v]={d.mean()}")
    v_bar = th.v_bar
    exchange = exchange_value(d, v_bar)
    if L == 0:
        return ProfitBreakdown(exchange, 0.0, 0.0, exchange, v_bar)
    F_bar = float(d.cdf(v_bar))
    band = _integrate_density(d, lambda x: (x - L) * float(d.pdf(x)), max(L, d.support_inf), v_bar)
    range_term = F_bar * band
    binary_term = L * F_bar * (1.0 - F_bar)
    return ProfitBreakdown(exchange, range_term, binary_term, exchange + range_term - binary_term, v_bar)


def profit_degenerate(d: ValueDistribution, L: float) -> float:
    """Profit when L >= E[v]: Bob bids L whenever v > L and earns ``E[(v - L)+]``."""
    return call_value(d, L)


def call_value(d: ValueDistribution, strike: float) -> float:
    """``E[max(v - strike, 0)]`` by quadrature."""
    return _integrate_density(d, lambda x: (x - strike) * float(d.pdf(x)), max(strike, d.support_inf), d.support[1])


def put_value(d: ValueDistribution, strike: float) -> float:
    """``E[max(strike - v, 0)]`` by quadrature."""
    return _integrate_density(d, lambda x: (strike - x) * float(d.pdf(x)), d.support_inf, min(strike, d.support[1]))


def exchange_dominance_check(d: ValueDistribution) -> tuple[float, float, float]:
    """(exchange option, at-the-money call, at-the-money put), all struck at E[v]."""
    m = d.mean()
    return exchange_value(d), call_value(d, m), put_value(d, m)


def revenue_expected(d: ValueDistribution, L: float) -> float:
    """Seller revenue ``E[max(beta_L(v1), beta_L(v2))]``.

    Counts a sale when Alice bids exactly L and Bob bids 0; see
    :func:`revenue_sold_only` for the figure that honours the rule that an
    unmatched bid at the reserve leaves the good unsold.
    In the degenerate regime Alice bids 0 and the revenue is ``L P(v > L)``.
    """
    if not L >= 0:
        raise DomainError(f"L must be >= 0, got {L}")
    th = solve_threshold(d, L)
    if not th.interior:
        return L * (1.0 - float(d.cdf(L)))
    v_bar = th.v_bar
    # max(beta(v1), beta(v2)) = beta(max(v1, v2)) and beta(x) F(x) = PE(x) above v_bar
    upper = _integrate_density(
        d, lambda x: 2.0 * float(d.partial_expectation(x)) * float(d.pdf(x)), max(v_bar, d.support_inf), d.support[1]
    )
    if L == 0:
        return upper
    F_bar, F_L = float(d.cdf(v_bar)), float(d.cdf(L))
    return upper + L * (F_bar**2 - F_L**2)


def revenue_tie_gap(d: ValueDistribution, L: float) -> float:
    """Revenue the formula books on the event {Alice bids L, Bob bids 0}: ``L F(L) (F(v_bar) - F(L))``."""
    th = solve_threshold(d, L)
    if L == 0 or not th.interior:
        return 0.0
    F_L = float(d.cdf(L))
    return L * F_L * (float(d.cdf(th.v_bar)) - F_L)


def revenue_sold_only(d: ValueDistribution, L: float) -> float:
    """Expected revenue when an unmatched bid at the reserve does not sell."""
    return revenue_expected(d, L) - revenue_tie_gap(d, L)


def alice_profit_uncertain(d: ValueDistribution, alpha: float) -> float:
    """Payoff Alice can guarantee when Bob is absent with probability alpha."""
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    return alpha * d.mean()


def theta_table(Ls, Ts, sigma: float = 1.0, p0: float = 1.0):
    """Rows of (L, T, closed, fd, rel_diff) comparing the printed theta with finite differences."""
    rows = []
    for L in Ls:
        for T in Ts:
            g = GbmParams(p0, sigma, T)
            fd = theta_last_mover_fd(g, L)
            closed = theta_last_mover_closed(g, L)
            rel = abs(closed - fd) / max(abs(fd), 1e-300)
            rows.append((L, T, closed, fd, rel))
    return rows


__all__ = [
    "GbmParams",
    "ProfitBreakdown",
    "alice_profit_uncertain",
    "bs_call",
    "call_value",
    "exchange_dominance_check",
    "exchange_value",
    "gbm_threshold",
    "margrabe_exchange",
    "monopolist_theta",
    "profit_degenerate",
    "profit_last_mover_generic",
    "profit_last_mover_gbm",
    "put_value",
    "revenue_expected",
    "revenue_sold_only",
    "revenue_tie_gap",
    "theta_L0",
    "theta_last_mover_closed",
    "theta_last_mover_fd",
    "theta_table",
]
