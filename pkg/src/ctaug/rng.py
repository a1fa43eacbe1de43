"""Deterministic random streams for augmentation sampling and phantom noise.

The generator is SplitMix64 in counter form: output ``i`` (1-based) for seed
``s`` is ``mix64(s + i * 0x9E3779B97F4A7C15)`` with the standard finalizer

    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    z ^= z >> 31

(all in 64-bit wrapping arithmetic).  Uniform doubles in [0, 1) take the top
53 bits: ``(u64 >> 11) * 2**-53``.  Gaussians use the paired-uniform
Box-Muller transform on consecutive stream values (u1, u2):

    r = sqrt(-2 ln(1 - u1));  z0 = r cos(2 pi u2);  z1 = r sin(2 pi u2)

Substreams are derived from a parent seed and a text stream id as
``mix64(mix64(seed) ^ fnv1a64(stream_id))`` so per-case streams never depend
on batch order.  Every formula here is fixed; other implementations must
reproduce the streams bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash, used to key substreams by stream id."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def derive_stream_seed(seed: int, stream_id: str) -> int:
    """Seed of the substream identified by ``stream_id`` under ``seed``."""
    return mix64(mix64(seed) ^ fnv1a64(stream_id.encode("utf-8")))


class SplitMix64:
    """Counter-based SplitMix64 stream.

    The scalar and vectorized methods consume the same underlying u64
    sequence, so mixing them never changes downstream draws.
    """

    __slots__ = ("seed", "index")

    def __init__(self, seed: int, index: int = 0):
        self.seed = seed & _MASK64
        self.index = index

    def substream(self, stream_id: str) -> "SplitMix64":
        return SplitMix64(derive_stream_seed(self.seed, stream_id))

    def next_u64(self) -> int:
        self.index += 1
        return mix64((self.seed + self.index * _GAMMA) & _MASK64)

    def uniform(self) -> float:
        """One double in [0, 1) from the top 53 bits of the next output."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform_in(self, lo: float, hi: float) -> float:
        """Uniform draw in [lo, hi); returns lo exactly when lo == hi."""
        return lo + self.uniform() * (hi - lo)

    def u64_array(self, n: int) -> np.ndarray:
        """Next ``n`` raw outputs, vectorized; identical to n next_u64 calls."""
        idx = np.arange(self.index + 1, self.index + n + 1, dtype=np.uint64)
        self.index += n
        z = (np.uint64(self.seed) + idx * np.uint64(_GAMMA)) & np.uint64(_MASK64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, n: int) -> np.ndarray:
        return (self.u64_array(n) >> np.uint64(11)) * _INV_2_53

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard Gaussians via Box-Muller; consumes 2*ceil(n/2) draws."""
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = (2.0 * math.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]
