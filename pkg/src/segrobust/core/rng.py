"""Deterministic randomness: SplitMix64 scalar stream plus vectorized bulk draws.

Every stochastic operation in the toolkit draws, directly or indirectly, from
this generator so that equal seeds reproduce equal outputs across runs,
platforms, and language ports. The scalar recurrence is SplitMix64
(Steele/Lea/Vigna); the float and gaussian mappings are fixed here and in
docs/protocol.md so other implementations can match them bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class DeterministicRng:
    """SplitMix64 stream over a 64-bit state.

    next_u64 advances the state by the golden-ratio increment and returns the
    mixed output; identical seeds yield identical streams everywhere.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Uniform-ish integer in [0, n) via modular reduction (contract-fixed)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def next_gaussian_pair(self) -> tuple[float, float]:
        """Box-Muller pair; u1 in (0,1], u2 in [0,1), consuming two u64 draws."""
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
        u2 = (self.next_u64() >> 11) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        return float(r * np.cos(2.0 * np.pi * u2)), float(r * np.sin(2.0 * np.pi * u2))

    def spawn(self) -> "DeterministicRng":
        """Derive an independent substream seeded by the next draw."""
        return DeterministicRng(self.next_u64())


def splitmix64_array(seed: int, n: int, offset: int = 0) -> np.ndarray:
    """Draws offset+1 .. offset+n of DeterministicRng(seed), vectorized.

    Element i equals the (offset+i+1)-th next_u64 of the scalar stream: the
    SplitMix64 state after k steps is seed + k*GOLDEN mod 2^64, so outputs at
    arbitrary positions are computable without iterating.
    """
    idx = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    z = np.uint64(seed) + idx * np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class BulkRng:
    """Sequential bulk sampler over one SplitMix64 stream.

    Successive calls consume consecutive positions of the underlying stream,
    so a fixed call sequence is exactly reproducible from the seed alone.
    """

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._pos = 0

    def _raw(self, n: int) -> np.ndarray:
        out = splitmix64_array(self.seed, n, offset=self._pos)
        self._pos += n
        return out

    def uniforms(self, shape) -> np.ndarray:
        """Uniform [0,1) float64 array, row-major draw order."""
        n = int(np.prod(shape, dtype=np.int64)) if np.ndim(shape) else int(shape)
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape)

    def gaussians(self, shape) -> np.ndarray:
        """Standard-normal float64 array via Box-Muller on consecutive draw pairs."""
        n = int(np.prod(shape, dtype=np.int64)) if np.ndim(shape) else int(shape)
        pairs = (n + 1) // 2
        raw = self._raw(2 * pairs)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = r * np.cos(2.0 * np.pi * u2)
        z[1::2] = r * np.sin(2.0 * np.pi * u2)
        return z[:n].reshape(shape)

    def integers(self, low: int, high: int, shape) -> np.ndarray:
        """Integers in [low, high] inclusive, by modular reduction."""
        if high < low:
            raise ValueError("high < low")
        span = np.uint64(high - low + 1)
        n = int(np.prod(shape, dtype=np.int64)) if np.ndim(shape) else int(shape)
        vals = (self._raw(n) % span).astype(np.int64) + low
        return vals.reshape(shape)

    def poissons(self, lam: np.ndarray) -> np.ndarray:
        """Poisson draws by inverse-CDF search, one uniform per element.

        Exact for moderate rates (the corruption kernels use lambda <= ~60);
        iteration count is bounded by the largest quantile reached.
        """
        lam = np.asarray(lam, dtype=np.float64)
        u = self.uniforms(lam.shape)
        k = np.zeros(lam.shape, dtype=np.int64)
        p = np.exp(-lam)
        cdf = p.copy()
        active = u > cdf
        # Each pass extends the CDF by one term; stops when every u is covered.
        step = 0
        max_steps = int(np.ceil(lam.max() + 12.0 * np.sqrt(lam.max() + 1.0))) + 20
        while active.any() and step < max_steps:
            step += 1
            p = p * lam / step
            cdf = cdf + p
            k[active] = step
            active = u > cdf
        return k
