"""AES-128 wrapper over the `cryptography` package (FIPS-197 conformant).

A vetted implementation is wrapped rather than rewritten; the FIPS-197
known-answer vector still runs in this repo's test suite.  Batch mode
encrypts many 64-bit line addresses in one ECB pass (each address zero-
padded into the low 64 bits of its own 128-bit block).
"""

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

MASK128 = (1 << 128) - 1


class Aes128:
    """AES-128 on 128-bit integer blocks."""

    block_bits = 128
    key_bytes = 16

    def __init__(self, key: bytes):
        if len(key) != self.key_bytes:
            raise ValueError(f"AES-128 key must be {self.key_bytes} bytes")
        self._cipher = Cipher(algorithms.AES(key), modes.ECB())

    def encrypt(self, plaintext: int) -> int:
        if not 0 <= plaintext <= MASK128:
            raise ValueError("plaintext must fit in 128 bits")
        enc = self._cipher.encryptor()
        ct = enc.update(plaintext.to_bytes(16, "big")) + enc.finalize()
        return int.from_bytes(ct, "big")

    def decrypt(self, ciphertext: int) -> int:
        if not 0 <= ciphertext <= MASK128:
            raise ValueError("ciphertext must fit in 128 bits")
        dec = self._cipher.decryptor()
        pt = dec.update(ciphertext.to_bytes(16, "big")) + dec.finalize()
        return int.from_bytes(pt, "big")

    def encrypt_batch(self, plaintexts: np.ndarray) -> np.ndarray:
        """Encrypt an array of 64-bit addresses; returns the low 64 bits of
        each 128-bit ciphertext (sufficient for set-index derivation)."""
        n = plaintexts.shape[0]
        blocks = np.zeros((n, 2), dtype=">u8")
        blocks[:, 1] = plaintexts  # low 64 bits of the big-endian block
        enc = self._cipher.encryptor()
        ct = enc.update(blocks.tobytes()) + enc.finalize()
        out = np.frombuffer(ct, dtype=">u8").reshape(n, 2)
        return out[:, 1].astype(np.uint64)
