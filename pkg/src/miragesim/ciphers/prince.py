"""PRINCE block cipher (64-bit block, 128-bit key, FX construction).

Original key schedule: k0 whitens the input, k0' = (k0 >>> 1) ^ (k0 >> 63)
whitens the output, and k1 enters every core round.  The 12-round core is
the standard alpha-reflective structure: 5 forward rounds, the involutive
middle layer S o M' o S^-1, and 5 inverse rounds.

Conformance target is the published test-vector table; bit/nibble ordering
below matches those vectors.
"""

import numpy as np
from numba import njit, uint64

MASK64 = (1 << 64) - 1

SBOX = (0xB, 0xF, 0x3, 0x2, 0xA, 0xC, 0x9, 0x1,
        0x6, 0x7, 0x8, 0x0, 0xE, 0x5, 0xD, 0x4)
SBOX_INV = (0xB, 0x7, 0x3, 0x2, 0xF, 0xD, 0x8, 0x9,
            0xA, 0x6, 0x4, 0x0, 0x5, 0xE, 0xC, 0x1)

# Output nibble i of ShiftRows is input nibble SR[i] (nibble 0 = bits 3..0).
SHIFT_ROWS = (0x4, 0x9, 0xE, 0x3, 0x8, 0xD, 0x2, 0x7,
              0xC, 0x1, 0x6, 0xB, 0x0, 0x5, 0xA, 0xF)
SHIFT_ROWS_INV = (0xC, 0x9, 0x6, 0x3, 0x0, 0xD, 0xA, 0x7,
                  0x4, 0x1, 0xE, 0xB, 0x8, 0x5, 0x2, 0xF)

ROUND_CONSTS = (
    0x0000000000000000, 0x13198A2E03707344, 0xA4093822299F31D0,
    0x082EFA98EC4E6C89, 0x452821E638D01377, 0xBE5466CF34E90C6C,
    0x7EF84F78FD955CB1, 0x85840851F1AC43AA, 0xC882D32F25323C54,
    0x64A51195E0E3610D, 0xD3B5A399CA0C2399, 0xC0AC29B7C97C50DD,
)

# 16-bit masks selecting the three-of-four nibble bits combined by M'.
_M_PRIME_MASKS = (0x7BDE, 0xBDE7, 0xDE7B, 0xE7BD)


def _mprime_ref(x: int) -> int:
    """Reference M' (involutive 64x64 linear layer), nibble-serial form."""
    out = 0
    for blk in range(4):
        hw = (x >> (16 * blk)) & 0xFFFF
        start = 0 if blk in (0, 3) else 1
        for nib in range(4):
            masked = hw & _M_PRIME_MASKS[(start + 3 - nib) % 4]
            folded = (masked ^ (masked >> 4) ^ (masked >> 8) ^ (masked >> 12)) & 0xF
            out |= folded << (16 * blk + 4 * nib)
    return out


def _linear_tables(perm_after: tuple | None, perm_before: tuple | None) -> np.ndarray:
    """Nibble tables for a linear layer, optionally composed with ShiftRows.

    table[pos][nibble] is the layer's output contribution of input nibble
    `nibble` at position `pos`; the full layer is the XOR over positions.
    """
    tables = np.zeros((16, 16), dtype=np.uint64)
    for pos in range(16):
        for nib in range(16):
            v = nib << (4 * pos)
            if perm_before is not None:
                v2 = 0
                for i in range(16):
                    v2 |= ((v >> (4 * perm_before[i])) & 0xF) << (4 * i)
                v = v2
            v = _mprime_ref(v)
            if perm_after is not None:
                v2 = 0
                for i in range(16):
                    v2 |= ((v >> (4 * perm_after[i])) & 0xF) << (4 * i)
                v = v2
            tables[pos, nib] = v
    return tables


# M = SR o M'  (forward rounds);  M^-1 = M' o SR^-1 (inverse rounds).
_M_TABLES = _linear_tables(perm_after=SHIFT_ROWS, perm_before=None)
_M_INV_TABLES = _linear_tables(perm_after=None, perm_before=SHIFT_ROWS_INV)
_M_PRIME_TABLES = _linear_tables(perm_after=None, perm_before=None)

_SBOX_ARR = np.array(SBOX, dtype=np.uint64)
_SBOX_INV_ARR = np.array(SBOX_INV, dtype=np.uint64)
_RC_ARR = np.array(ROUND_CONSTS, dtype=np.uint64)


@njit(uint64(uint64, uint64[:]), cache=True, nogil=True, inline="always")
def _sub(s, box):
    t = uint64(0)
    for i in range(16):
        t |= box[(s >> uint64(4 * i)) & uint64(0xF)] << uint64(4 * i)
    return t


@njit(uint64(uint64, uint64[:, :]), cache=True, nogil=True, inline="always")
def _lin(s, tables):
    t = uint64(0)
    for i in range(16):
        t ^= tables[i, (s >> uint64(4 * i)) & uint64(0xF)]
    return t


@njit(uint64(uint64, uint64, uint64, uint64), cache=True, nogil=True)
def _core(pt, k0, k0p, k1):
    s = pt ^ k0
    s ^= k1 ^ _RC_ARR[0]
    for r in range(1, 6):
        s = _sub(s, _SBOX_ARR)
        s = _lin(s, _M_TABLES)
        s ^= _RC_ARR[r] ^ k1
    s = _sub(s, _SBOX_ARR)
    s = _lin(s, _M_PRIME_TABLES)
    s = _sub(s, _SBOX_INV_ARR)
    for r in range(6, 11):
        s ^= _RC_ARR[r] ^ k1
        s = _lin(s, _M_INV_TABLES)
        s = _sub(s, _SBOX_INV_ARR)
    s ^= _RC_ARR[11] ^ k1
    return s ^ k0p


@njit(cache=True, nogil=True)
def _encrypt_batch(pts, out, k0, k0p, k1):
    for i in range(pts.shape[0]):
        out[i] = _core(pts[i], k0, k0p, k1)


class Prince64:
    """PRINCE with a 128-bit key, operating on 64-bit integer blocks."""

    block_bits = 64
    key_bytes = 16

    def __init__(self, key: bytes):
        if len(key) != self.key_bytes:
            raise ValueError(f"PRINCE key must be {self.key_bytes} bytes")
        k = int.from_bytes(key, "big")
        k0 = k >> 64
        self._k0 = np.uint64(k0)
        self._k0p = np.uint64((((k0 & 1) << 63) | (k0 >> 1)) ^ (k0 >> 63))
        self._k1 = np.uint64(k & MASK64)

    def encrypt(self, plaintext: int) -> int:
        if not 0 <= plaintext <= MASK64:
            raise ValueError("plaintext must fit in 64 bits")
        return int(_core(np.uint64(plaintext), self._k0, self._k0p, self._k1))

    def decrypt(self, ciphertext: int) -> int:
        # Alpha-reflection: decryption is encryption under (k0', k0, k1 ^ alpha).
        if not 0 <= ciphertext <= MASK64:
            raise ValueError("ciphertext must fit in 64 bits")
        alpha = np.uint64(ROUND_CONSTS[11])
        return int(_core(np.uint64(ciphertext), self._k0p, self._k0,
                         self._k1 ^ alpha))

    def encrypt_batch(self, plaintexts: np.ndarray) -> np.ndarray:
        out = np.empty_like(plaintexts)
        _encrypt_batch(plaintexts, out, self._k0, self._k0p, self._k1)
        return out
