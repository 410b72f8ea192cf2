"""Exception types shared across the package."""


class AuctionLabError(Exception):
    """Base class for all package errors."""


class ParseError(AuctionLabError, ValueError):
    """Malformed distribution or config text."""


class DomainError(AuctionLabError, ValueError):
    """A parameter or argument outside its valid domain."""


class ConvergenceError(AuctionLabError, RuntimeError):
    """A root finder or quadrature failed to reach tolerance."""


class DegenerateRegime(AuctionLabError):
    """The reserve is at or above the mean value, so no interior threshold exists."""
