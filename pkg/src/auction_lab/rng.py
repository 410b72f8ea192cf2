"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream_index, counter)``:

    key  = mix64(mix64(seed) + (stream_index + 1) * STREAM_GAMMA)
    x_k  = mix64(key + (k + 1) * GOLDEN_GAMMA)

``mix64`` is the SplitMix64 finalizer (Steele, Lea & Flood 2014), so for a
fixed key the draws are exactly a SplitMix64 sequence started at ``key``.
Streams can therefore be evaluated in any order, on any thread, or for a
whole block of stream indices at once with identical results.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
STREAM_GAMMA = 0xD1B54A32D192ED03

_U = np.uint64
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=_U)
    with np.errstate(over="ignore"):
        return _mix64(z)


def _mix64(z):
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    return z ^ (z >> _U(31))


def stream_keys(seed: int, stream_index) -> np.ndarray:
    """Per-stream 64-bit keys for one seed and an array of stream indices."""
    idx = np.atleast_1d(np.asarray(stream_index, dtype=_U))
    base = mix64(np.array([seed & MASK64], dtype=_U))
    with np.errstate(over="ignore"):
        return mix64(base + (idx + _U(1)) * _U(STREAM_GAMMA))


def counter_uniforms(keys, counter) -> np.ndarray:
    """Uniform draws in the open interval (0, 1) at position ``counter`` of each stream.

    ``keys`` and ``counter`` broadcast against each other.
    """
    with np.errstate(over="ignore"):
        ctr = np.asarray(counter, dtype=_U) + _U(1)
        x = mix64(np.asarray(keys, dtype=_U) + ctr * _U(GOLDEN_GAMMA))
    return ((x >> _U(11)).astype(np.float64) + 0.5) * _INV_2_53


class RandomStream:
    """A single-owner stream identified by ``(seed, stream_index)``.

    Draws advance an internal counter; two streams with the same pair
    always produce the same sequence.
    """

    def __init__(self, seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise ValueError("stream_index must be nonnegative")
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        self.counter = 0
        self._key = stream_keys(self.seed, self.stream_index)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_index={self.stream_index}, counter={self.counter})"

    def uniforms(self, n: int) -> np.ndarray:
        out = counter_uniforms(self._key[0], np.arange(self.counter, self.counter + n, dtype=_U))
        self.counter += n
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, n: int) -> np.ndarray:
        return ndtri(self.uniforms(n))
