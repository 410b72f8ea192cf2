"""Common-value distributions.

Each distribution supplies the primitives the equilibrium and pricing code
needs: cdf, pdf, quantile, mean, the partial expectation
``E[v 1{v < x}]`` and the truncated mean ``E[v | v < x]``.  All methods
accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from .errors import DomainError, ParseError
from .rng import RandomStream

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(x):
    """Standard normal CDF via the complementary error function."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / SQRT2)
    return 0.5 * erfc(-np.asarray(x, dtype=float) / SQRT2)


def norm_pdf(x):
    if np.ndim(x) == 0:
        x = float(x)
        return INV_SQRT_2PI * math.exp(-0.5 * x * x) if math.isfinite(x) else 0.0
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def norm_ppf(u):
    return ndtri(u) if np.ndim(u) else float(ndtri(u))


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


class ValueDistribution:
    """Law of the common value v on the nonnegative reals.

    Subclasses are frozen dataclasses and safe to share between threads.
    """

    kind = ""

    # -- interface implemented by subclasses --
    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def partial_expectation(self, x):
        """``E[v 1{v < x}]``."""
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    # -- shared --
    @property
    def support_inf(self) -> float:
        return self.support[0]

    def truncated_mean(self, x):
        """``E[v | v < x]``; raises DomainError where ``cdf(x) == 0``."""
        xa = np.asarray(x, dtype=float)
        if np.any(np.isnan(xa)) or np.any(xa < 0):
            raise DomainError("truncated_mean needs x >= 0")
        F = np.asarray(self.cdf(xa), dtype=float)
        if np.any(F <= 0):
            raise DomainError("truncated_mean conditions on a null event (cdf(x) = 0)")
        return _out(np.asarray(self.partial_expectation(xa)) / F, x)

    def _truncated_mean_limit(self, x):
        """Truncated mean extended by continuity to ``support_inf`` where cdf is 0."""
        xa = np.asarray(x, dtype=float)
        F = np.asarray(self.cdf(xa), dtype=float)
        pe = np.asarray(self.partial_expectation(xa), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            tm = np.where(F > 0, pe / np.where(F > 0, F, 1.0), self.support_inf)
        # guard against pe/F rounding past x in the far left tail
        tm = np.minimum(tm, np.maximum(xa, self.support_inf))
        return _out(tm, x)

    def sample(self, stream: RandomStream, n: int | None = None):
        """Inverse-CDF draws from ``stream``; a float when ``n`` is None."""
        if n is None:
            return float(self.quantile(stream.uniform()))
        return self.quantile(stream.uniforms(n))


@dataclass(frozen=True)
class Lognormal(ValueDistribution):
    """v = p0 exp(-s^2/2 + s Z) with s = sigma sqrt(T), so E[v] = p0."""

    p0: float
    sigma: float
    horizon_T: float
    kind = "lognormal"

    def __post_init__(self):
        for name in ("p0", "sigma", "horizon_T"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"lognormal {name} must be > 0, got {val}")

    @property
    def s(self) -> float:
        return self.sigma * math.sqrt(self.horizon_T)

    @property
    def support(self):
        return (0.0, math.inf)

    def _z(self, x):
        xa = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(xa / self.p0) / self.s

    def cdf(self, x):
        return _out(norm_cdf(self._z(x) + 0.5 * self.s), x)

    def pdf(self, x):
        xa = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(xa > 0, norm_pdf(self._z(xa) + 0.5 * self.s) / (self.s * np.where(xa > 0, xa, 1.0)), 0.0)
        return _out(d, x)

    def quantile(self, u):
        z = ndtri(np.asarray(u, dtype=float))
        return _out(self.p0 * np.exp(self.s * z - 0.5 * self.s**2), u)

    def mean(self):
        return self.p0

    def partial_expectation(self, x):
        return _out(self.p0 * norm_cdf(self._z(x) - 0.5 * self.s), x)

    def spec(self):
        return f"lognormal:p0={self.p0!r},sigma={self.sigma!r},T={self.horizon_T!r}"


@dataclass(frozen=True)
class Uniform(ValueDistribution):
    a: float
    b: float
    kind = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("uniform bounds must be finite")
        if self.a < 0:
            raise DomainError(f"uniform a must be >= 0, got {self.a}")
        if not self.b > self.a:
            raise DomainError(f"uniform needs b > a, got a={self.a}, b={self.b}")

    @property
    def support(self):
        return (self.a, self.b)

    def cdf(self, x):
        return _out(np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0), x)

    def pdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _out(np.where((xa >= self.a) & (xa <= self.b), 1.0 / (self.b - self.a), 0.0), x)

    def quantile(self, u):
        return _out(self.a + np.asarray(u, dtype=float) * (self.b - self.a), u)

    def mean(self):
        return 0.5 * (self.a + self.b)

    def partial_expectation(self, x):
        m = np.clip(np.asarray(x, dtype=float), self.a, self.b)
        return _out((m - self.a) * (m + self.a) / (2.0 * (self.b - self.a)), x)

    def spec(self):
        return f"uniform:a={self.a!r},b={self.b!r}"


@dataclass(frozen=True)
class Exponential(ValueDistribution):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise DomainError(f"exponential rate must be > 0, got {self.rate}")

    @property
    def support(self):
        return (0.0, math.inf)

    def cdf(self, x):
        y = self.rate * np.maximum(np.asarray(x, dtype=float), 0.0)
        return _out(-np.expm1(-y), x)

    def pdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _out(np.where(xa >= 0, self.rate * np.exp(-self.rate * np.maximum(xa, 0.0)), 0.0), x)

    def quantile(self, u):
        return _out(-np.log1p(-np.asarray(u, dtype=float)) / self.rate, u)

    def mean(self):
        return 1.0 / self.rate

    def partial_expectation(self, x):
        # (1 - (1 + y) e^-y) / rate, arranged to avoid cancellation for small y
        y = self.rate * np.maximum(np.asarray(x, dtype=float), 0.0)
        with np.errstate(invalid="ignore"):
            pe = np.where(np.isinf(y), 1.0, -np.expm1(-y) - y * np.exp(-y))
        return _out(pe / self.rate, x)

    def spec(self):
        return f"exponential:rate={self.rate!r}"


_KINDS = {
    "lognormal": (Lognormal, ("p0", "sigma", "T")),
    "uniform": (Uniform, ("a", "b")),
    "exponential": (Exponential, ("rate",)),
}
_FLOAT = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def make_distribution(spec: str) -> ValueDistribution:
    """Parse ``kind:key=value,...`` into a validated distribution.

    >>> make_distribution("uniform:a=0,b=1")
    Uniform(a=0.0, b=1.0)
    """
    if not isinstance(spec, str) or any(c.isspace() for c in spec):
        raise ParseError(f"distribution spec must be a string without whitespace: {spec!r}")
    kind, sep, rest = spec.partition(":")
    if not sep or kind not in _KINDS:
        raise ParseError(f"unknown distribution kind in {spec!r}; expected one of {sorted(_KINDS)}")
    cls, keys = _KINDS[kind]
    params = {}
    for item in rest.split(",") if rest else []:
        key, eq, val = item.partition("=")
        if not eq or not _FLOAT.match(val):
            raise ParseError(f"bad key=value item {item!r} in {spec!r}")
        if key not in keys:
            raise ParseError(f"unknown key {key!r} for {kind}; expected {keys}")
        if key in params:
            raise ParseError(f"duplicate key {key!r} in {spec!r}")
        params[key] = float(val)
    missing = [k for k in keys if k not in params]
    if missing:
        raise ParseError(f"missing keys {missing} for {kind}")
    if kind == "lognormal":
        return Lognormal(params["p0"], params["sigma"], params["T"])
    return cls(**params)
