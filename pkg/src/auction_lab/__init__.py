"""Equilibrium bidding, last-mover profits and timing pressure in common-value auctions with a latency advantage."""
from .dist import Exponential, Lognormal, Uniform, ValueDistribution, make_distribution
from .equilibrium import (
    AuctionSpec,
    ThresholdResult,
    alice_bid_sample,
    bid_pseudo_inverse,
    bob_bid,
    bob_bid_alpha,
    period1_bid_sample_multi,
    solve_threshold,
    solve_threshold_alpha,
)
from .errors import ConvergenceError, DegenerateRegime, DomainError, ParseError
from .pricing import GbmParams, ProfitBreakdown
from .rng import RandomStream

__version__ = "0.1.0"
