"""PRESENT-80 block cipher, plus the reproduced buggy variant.

The correct implementation follows the published cipher: 31 rounds of
addRoundKey / sBoxLayer / pLayer with a final whitening key, 80-bit key
schedule with a 61-bit left rotation, S-box on the top nibble, and the
round counter XORed into bits 19..15.

The buggy variant reproduces the defect found in a public cache-simulator
codebase: the 64-bit block is rendered as a binary digit string and then
re-parsed as base 16, so bit i of the plaintext lands in hex digit i of
the value actually encrypted.  Only the low 16 bits of the block survive
the conversion, which is what makes the derived set indices badly skewed.
The cipher core downstream of the mangling is correct, so the variant
still returns a deterministic 64-bit block.
"""

import numpy as np
from numba import njit, uint64

MASK64 = (1 << 64) - 1
MASK80 = (1 << 80) - 1

SBOX = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD,
        0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)

# Bit i of the state moves to bit P(i); P(i) = 16*i mod 63 for i < 63.
PBOX = tuple((16 * i) % 63 if i < 63 else 63 for i in range(64))


def _sp_tables() -> np.ndarray:
    """Combined sBoxLayer+pLayer lookup: table[pos][nibble] -> spread bits."""
    tables = np.zeros((16, 16), dtype=np.uint64)
    for pos in range(16):
        for nib in range(16):
            spread = 0
            v = SBOX[nib] << (4 * pos)
            for i in range(4 * pos, 4 * pos + 4):
                spread |= ((v >> i) & 1) << PBOX[i]
            tables[pos, nib] = spread
    return tables


_SP_TABLES = _sp_tables()


def key_schedule(key: int) -> np.ndarray:
    """Expand an 80-bit key into the 32 round keys (K1..K32)."""
    if not 0 <= key <= MASK80:
        raise ValueError("PRESENT-80 key must fit in 80 bits")
    ks = np.empty(32, dtype=np.uint64)
    k = key
    for r in range(1, 33):
        ks[r - 1] = k >> 16
        k = ((k << 61) & MASK80) | (k >> 19)
        k = (SBOX[k >> 76] << 76) | (k & ((1 << 76) - 1))
        k ^= r << 15
    return ks


@njit(uint64(uint64, uint64[:], uint64[:, :]), cache=True, nogil=True)
def _encrypt_core(pt, round_keys, sp):
    s = pt
    for r in range(31):
        s ^= round_keys[r]
        t = uint64(0)
        for pos in range(16):
            t |= sp[pos, (s >> uint64(4 * pos)) & uint64(0xF)]
        s = t
    return s ^ round_keys[31]


@njit(cache=True, nogil=True)
def _encrypt_batch(pts, out, round_keys, sp):
    for i in range(pts.shape[0]):
        s = pts[i]
        for r in range(31):
            s ^= round_keys[r]
            t = uint64(0)
            for pos in range(16):
                t |= sp[pos, (s >> uint64(4 * pos)) & uint64(0xF)]
            s = t
        out[i] = s ^ round_keys[31]


@njit(uint64(uint64), cache=True, nogil=True, inline="always")
def _mangle_bits_as_hex(pt):
    # bin(pt) re-parsed with int(..., 16): bit i becomes hex digit i, and
    # digits 16..63 overflow out of the 64-bit block.
    m = uint64(0)
    for i in range(16):
        m |= ((pt >> uint64(i)) & uint64(1)) << uint64(4 * i)
    return m


@njit(cache=True, nogil=True)
def _buggy_encrypt_batch(pts, out, round_keys, sp):
    for i in range(pts.shape[0]):
        s = _mangle_bits_as_hex(pts[i])
        for r in range(31):
            s ^= round_keys[r]
            t = uint64(0)
            for pos in range(16):
                t |= sp[pos, (s >> uint64(4 * pos)) & uint64(0xF)]
            s = t
        out[i] = s ^ round_keys[31]


class Present80:
    """PRESENT with an 80-bit key, operating on 64-bit integer blocks."""

    block_bits = 64
    key_bytes = 10

    def __init__(self, key: bytes):
        if len(key) != self.key_bytes:
            raise ValueError(f"PRESENT-80 key must be {self.key_bytes} bytes")
        self._round_keys = key_schedule(int.from_bytes(key, "big"))

    def encrypt(self, plaintext: int) -> int:
        if not 0 <= plaintext <= MASK64:
            raise ValueError("plaintext must fit in 64 bits")
        return int(_encrypt_core(np.uint64(plaintext), self._round_keys,
                                 _SP_TABLES))

    def encrypt_batch(self, plaintexts: np.ndarray) -> np.ndarray:
        out = np.empty_like(plaintexts)
        _encrypt_batch(plaintexts, out, self._round_keys, _SP_TABLES)
        return out


class BuggyPresent80(Present80):
    """PRESENT-80 with the reproduced block-conversion defect.

    Fails the published known-answer vectors by construction: the all-ones
    plaintext is mangled to 0x1111111111111111 before the (correct) cipher
    core runs.
    """

    def encrypt(self, plaintext: int) -> int:
        if not 0 <= plaintext <= MASK64:
            raise ValueError("plaintext must fit in 64 bits")
        mangled = _mangle_bits_as_hex(np.uint64(plaintext))
        return int(_encrypt_core(mangled, self._round_keys, _SP_TABLES))

    def encrypt_batch(self, plaintexts: np.ndarray) -> np.ndarray:
        out = np.empty_like(plaintexts)
        _buggy_encrypt_batch(plaintexts, out, self._round_keys, _SP_TABLES)
        return out
