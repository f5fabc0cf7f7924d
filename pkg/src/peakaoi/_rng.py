"""Platform-stable random streams: xoshiro256** seeded through SplitMix64.

Constants follow Blackman & Vigna's reference implementations. Streams are
plain ``uint64[4]`` arrays so the numba kernels can advance them in place.
"""

import math

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U5 = np.uint64(5)
_U7 = np.uint64(7)
_U9 = np.uint64(9)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U45 = np.uint64(45)
_U64 = np.uint64(64)
_TWO_M53 = 1.0 / 9007199254740992.0


def splitmix64_mix(z: int) -> int:
    """SplitMix64 output finalizer on a Python int (taken mod 2**64)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Seed of sub-stream ``index``: ``mix(seed ^ mix((index + 1) * GAMMA))``."""
    return splitmix64_mix((seed & MASK64) ^ splitmix64_mix((index + 1) * GOLDEN_GAMMA))


def make_state(seed: int) -> np.ndarray:
    """xoshiro256** state filled by four SplitMix64 steps from ``seed``."""
    x = seed & MASK64
    words = []
    for _ in range(4):
        x = (x + GOLDEN_GAMMA) & MASK64
        words.append(splitmix64_mix(x))
    if not any(words):
        words[0] = 1
    return np.array(words, dtype=np.uint64)


@njit(inline="always", cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (_U64 - k))


@njit(inline="always", cache=True)
def next_u64(s):
    result = _rotl(s[1] * _U5, _U7) * _U9
    t = s[1] << _U17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], _U45)
    return result


@njit(inline="always", cache=True)
def uniform(s):
    """53-bit uniform on [0, 1)."""
    return float(next_u64(s) >> _U11) * _TWO_M53


@njit(inline="always", cache=True)
def exponential(s, rate):
    """Inverse-CDF exponential draw ``-ln(1 - U) / rate``."""
    return -math.log1p(-uniform(s)) / rate


@njit(cache=True)
def fill_uniform(s, out):
    for i in range(out.shape[0]):
        out[i] = uniform(s)
    return out
