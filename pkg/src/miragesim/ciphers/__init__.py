"""Keyed block ciphers and the set-index derivation built on them."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .aes import Aes128
from .present import BuggyPresent80, Present80
from .prince import Prince64
from ..rng import derive_seed

__all__ = [
    "BlockCipherKind", "CipherKey", "IndexDerivation",
    "Present80", "BuggyPresent80", "Prince64", "Aes128",
    "make_cipher", "derive_set_index", "derive_set_indices",
    "random_cipher_key",
]


class BlockCipherKind(enum.Enum):
    PRESENT80 = "present80"
    PRINCE64 = "prince64"
    AES128 = "aes128"
    BUGGY_PRESENT80 = "buggy-present80"

    @property
    def key_bytes(self) -> int:
        return 10 if self in (BlockCipherKind.PRESENT80,
                              BlockCipherKind.BUGGY_PRESENT80) else 16

    @property
    def block_bits(self) -> int:
        return 128 if self is BlockCipherKind.AES128 else 64

    @property
    def is_bug_compat(self) -> bool:
        return self is BlockCipherKind.BUGGY_PRESENT80


_BACKENDS = {
    BlockCipherKind.PRESENT80: Present80,
    BlockCipherKind.PRINCE64: Prince64,
    BlockCipherKind.AES128: Aes128,
    BlockCipherKind.BUGGY_PRESENT80: BuggyPresent80,
}


@dataclass(frozen=True)
class CipherKey:
    kind: BlockCipherKind
    key_bytes: bytes

    def __post_init__(self):
        if len(self.key_bytes) != self.kind.key_bytes:
            raise ValueError(
                f"{self.kind.value} needs a {self.kind.key_bytes}-byte key, "
                f"got {len(self.key_bytes)}")


def make_cipher(key: CipherKey, *, allow_buggy: bool = False):
    """Construct a cipher backend; the buggy variant is opt-in only."""
    if key.kind.is_bug_compat and not allow_buggy:
        raise ValueError("BuggyPresent80 requires the bug-compat flag")
    return _BACKENDS[key.kind](key.key_bytes)


def random_cipher_key(kind: BlockCipherKind, seed: int, skew: int) -> CipherKey:
    """Deterministically derive a per-skew key from a 64-bit seed."""
    words = []
    n_words = (kind.key_bytes + 7) // 8
    for w in range(n_words):
        words.append(derive_seed(seed, skew * 97 + w + 1).to_bytes(8, "big"))
    return CipherKey(kind, b"".join(words)[:kind.key_bytes])


@dataclass(frozen=True)
class IndexDerivation:
    """Per-skew keyed index derivation into `num_sets` sets."""

    keys: tuple[CipherKey, CipherKey]
    num_sets: int
    allow_buggy: bool = False
    _ciphers: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_sets < 1 or self.num_sets & (self.num_sets - 1):
            raise ValueError("num_sets must be a power of two")
        k0, k1 = self.keys
        if k0.kind is not k1.kind:
            raise ValueError("both skews must use the same cipher kind")
        if self.num_sets.bit_length() - 1 > k0.kind.block_bits:
            raise ValueError("log2(num_sets) exceeds the cipher block size")
        if k0.key_bytes == k1.key_bytes:
            raise ValueError("the two skew keys must be distinct")
        object.__setattr__(self, "_ciphers", tuple(
            make_cipher(k, allow_buggy=self.allow_buggy) for k in self.keys))

    @classmethod
    def from_seed(cls, kind: BlockCipherKind, num_sets: int, seed: int,
                  *, allow_buggy: bool = False) -> "IndexDerivation":
        return cls(keys=(random_cipher_key(kind, seed, 0),
                         random_cipher_key(kind, seed, 1)),
                   num_sets=num_sets, allow_buggy=allow_buggy)

    def cipher(self, skew: int):
        if skew not in (0, 1):
            raise ValueError("skew must be 0 or 1")
        return self._ciphers[skew]


def derive_set_index(d: IndexDerivation, skew: int, line_address: int) -> int:
    """Set index for one address: low log2(num_sets) bits of the ciphertext."""
    if not 0 <= line_address < (1 << 64):
        raise ValueError("line address must fit in 64 bits")
    ct = d.cipher(skew).encrypt(line_address)
    return ct & (d.num_sets - 1)


def derive_set_indices(d: IndexDerivation, skew: int,
                       addresses: np.ndarray) -> np.ndarray:
    """Vectorized `derive_set_index` over a uint64 address array."""
    cts = d.cipher(skew).encrypt_batch(np.ascontiguousarray(addresses,
                                                            dtype=np.uint64))
    return (cts & np.uint64(d.num_sets - 1)).astype(np.int64)
