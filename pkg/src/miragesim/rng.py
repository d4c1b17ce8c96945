"""Seedable PRNG plumbing shared by the simulation kernels.

Trial-level reproducibility uses a splitmix64 mixer to derive independent
64-bit seeds, and xoshiro256** as the in-kernel generator.  Both are
implemented here in numba-compatible form so the hot loops never touch
Python-level RNG state.
"""

import numpy as np
from numba import njit, uint64

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 step; maps any 64-bit value to a well-mixed one."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *indices: int) -> int:
    """Derive an independent stream seed from a base seed and trial indices."""
    s = base_seed & MASK64
    for idx in indices:
        s = splitmix64((s + idx) & MASK64)
    return s


def xoshiro_init(seed: int) -> np.ndarray:
    """Build a xoshiro256** state vector from a 64-bit seed via splitmix64."""
    state = np.empty(4, dtype=np.uint64)
    s = seed & MASK64
    for i in range(4):
        s = splitmix64(s)
        state[i] = s
    return state


@njit(uint64(uint64[:]), cache=True, nogil=True, inline="always")
def xoshiro_next(s):
    x = s[1] * uint64(5)
    result = ((x << uint64(7)) | (x >> uint64(57))) * uint64(9)
    t = s[1] << uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << uint64(45)) | (s[3] >> uint64(19))
    return result


@njit(uint64(uint64[:], uint64), cache=True, nogil=True, inline="always")
def xoshiro_below(s, n):
    # Modulo reduction: bias is O(n / 2**64), far below any tolerance used here.
    return xoshiro_next(s) % n
