"""Known-answer tests for all ciphers, driven by the plain-text fixture
``kat_vectors.txt`` (hex key, hex plaintext, hex ciphertext per line)."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from . import BlockCipherKind, CipherKey, make_cipher


@dataclass(frozen=True)
class KatVector:
    cipher: BlockCipherKind
    key: bytes
    plaintext: int
    ciphertext: int


@dataclass(frozen=True)
class KatResult:
    vector: KatVector
    got: int

    @property
    def passed(self) -> bool:
        return self.got == self.vector.ciphertext


def load_vectors() -> list[KatVector]:
    text = (resources.files("miragesim.ciphers") / "kat_vectors.txt"
            ).read_text()
    vectors = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, key_hex, pt_hex, ct_hex = line.split()
        vectors.append(KatVector(cipher=BlockCipherKind(name),
                                 key=bytes.fromhex(key_hex),
                                 plaintext=int(pt_hex, 16),
                                 ciphertext=int(ct_hex, 16)))
    return vectors


def run_known_answer_tests() -> list[KatResult]:
    results = []
    for v in load_vectors():
        cipher = make_cipher(CipherKey(v.cipher, v.key), allow_buggy=True)
        results.append(KatResult(vector=v, got=cipher.encrypt(v.plaintext)))
    return results


def buggy_diverges() -> bool:
    """The buggy cipher must NOT reproduce the correct PRESENT ciphertext
    for any shared (key, plaintext) vector."""
    correct = {(v.key, v.plaintext): v.ciphertext for v in load_vectors()
               if v.cipher is BlockCipherKind.PRESENT80}
    for v in load_vectors():
        if v.cipher is not BlockCipherKind.BUGGY_PRESENT80:
            continue
        expected_correct = correct.get((v.key, v.plaintext))
        if expected_correct is not None and v.ciphertext == expected_correct:
            return False
    return True
