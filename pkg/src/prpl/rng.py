"""Deterministic random number generation used by every component.

The generator is xoshiro256** with splitmix64 state expansion. The algorithm
is fixed (rather than deferring to the host language's default generator) so
that ports of this package to other runtimes can reproduce sampling
sequences bit for bit from the same seed.

Conventions shared by all consumers:

* doubles in [0, 1) come from the top 53 bits: ``(next_u64() >> 11) * 2**-53``
* stream ``k`` of a run is seeded with ``derive_seed(seed, k)``, the
  ``(k+1)``-th output of a splitmix64 sequence started at ``seed`` (this is
  also the worker-seed mixing rule for parallel verification)
* normals use Box-Muller on two uniforms, cosine branch first
"""

import math

MASK64 = (1 << 64) - 1

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
_SPLITMIX_MUL2 = 0x94D049BB133111EB

_TWO_POW_MINUS_53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


def splitmix64(state):
    """One splitmix64 step. Returns ``(next_state, output)``."""
    state = (state + _SPLITMIX_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _SPLITMIX_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _SPLITMIX_MUL2) & MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed, index):
    """Seed for sub-stream / worker ``index`` of a run seeded with ``seed``."""
    if index < 0:
        raise ValueError("stream index must be >= 0")
    state = seed & MASK64
    out = 0
    for _ in range(index + 1):
        state, out = splitmix64(state)
    return out


class Xoshiro256StarStar:
    """xoshiro256** generator; state filled from the seed via splitmix64."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3", "_spare_normal")

    def __init__(self, seed=0):
        state = seed & MASK64
        state, self._s0 = splitmix64(state)
        state, self._s1 = splitmix64(state)
        state, self._s2 = splitmix64(state)
        state, self._s3 = splitmix64(state)
        self._spare_normal = None

    def next_u64(self):
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        r = (s1 * 5) & MASK64
        result = (((r << 7) | (r >> 57)) & MASK64) * 9 & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self._s0, self._s1, self._s2 = s0, s1, s2
        self._s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        return result

    def uniform(self):
        """Double in [0, 1)."""
        # next_u64 inlined: this is the hot call of buffer sampling
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        r = (s1 * 5) & MASK64
        result = (((r << 7) | (r >> 57)) & MASK64) * 9 & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self._s0, self._s1, self._s2 = s0, s1, s2
        self._s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        return (result >> 11) * _TWO_POW_MINUS_53

    def randrange(self, n):
        """Integer in [0, n). Uses one uniform; n must be positive."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        return int(self.uniform() * n)

    def normal(self):
        """Standard normal via Box-Muller (caches the sine branch)."""
        spare = self._spare_normal
        if spare is not None:
            self._spare_normal = None
            return spare
        # 1 - u is in (0, 1], keeping the log finite.
        r = math.sqrt(-2.0 * math.log(1.0 - self.uniform()))
        a = _TWO_PI * self.uniform()
        self._spare_normal = r * math.sin(a)
        return r * math.cos(a)
