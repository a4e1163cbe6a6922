"""Vigenere encryption and labeled key generation for dataset construction."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import clean_text

logger = logging.getLogger(__name__)

ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
MIN_KEY_LEN = 3
MAX_KEY_LEN = 25

_A = ord("A")


@dataclass(frozen=True)
class Key:
    letters: str

    def __post_init__(self) -> None:
        if not (MIN_KEY_LEN <= len(self.letters) <= MAX_KEY_LEN):
            raise ValueError(f"key length must be in [{MIN_KEY_LEN}, {MAX_KEY_LEN}]")
        if any(c not in ALPHABET for c in self.letters):
            raise ValueError("key must consist of uppercase A-Z letters")
        if effective_period(self.letters) != len(self.letters):
            raise ValueError(f"key {self.letters!r} repeats a shorter block")

    @property
    def length(self) -> int:
        return len(self.letters)


@dataclass
class CipherSample:
    ciphertext: str
    true_key_length: int

    @property
    def text_length(self) -> int:
        return len(self.ciphertext)


def effective_period(letters: str) -> int:
    """Smallest divisor d of len(letters) such that the key is a repeated d-block.

    A key like "ABAB" encrypts identically to "AB", so its effective period
    (2) differs from its nominal length (4).
    """
    k = len(letters)
    for d in range(1, k):
        if k % d == 0 and letters == letters[:d] * (k // d):
            return d
    return k


def _key_shifts(key: Key | str) -> list[int]:
    """Accept a dataset Key or any raw letter string (e.g. "AAA", "BBB").

    Encryption itself is defined for every letter sequence; the stricter Key
    invariants only matter for dataset labels.
    """
    letters = key.letters if isinstance(key, Key) else key
    if not letters or any(c not in ALPHABET for c in letters):
        raise ValueError("key must be a nonempty string of uppercase A-Z letters")
    return [ord(c) - _A for c in letters]


def encrypt(plain: str, key: Key | str) -> str:
    """Shift plain[i] by key[i mod k], with A=0..Z=25."""
    shifts = _key_shifts(key)
    k = len(shifts)
    return "".join(
        chr((ord(c) - _A + shifts[i % k]) % 26 + _A) for i, c in enumerate(plain)
    )


def decrypt(cipher: str, key: Key | str) -> str:
    shifts = _key_shifts(key)
    k = len(shifts)
    return "".join(
        chr((ord(c) - _A - shifts[i % k]) % 26 + _A) for i, c in enumerate(cipher)
    )


def load_wordlist(path: str | Path) -> list[str]:
    """One word per line; non-letters stripped, empties dropped."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = clean_text(line)
            if word:
                words.append(word)
    return words


def generate_key(
    rng: random.Random,
    length: int,
    mode: str = "random",
    wordlist: list[str] | None = None,
    max_attempts: int = 1000,
) -> Key:
    """Generate a key of exactly `length` letters whose effective period is `length`.

    mode "random" draws uniform letters; mode "wordlist" concatenates random
    wordlist entries and truncates to the target length.  Candidates that
    repeat a shorter block are rejected and regenerated so the labeled key
    length is always the true period.  An unusable wordlist falls back to
    random mode with a warning.
    """
    if not (MIN_KEY_LEN <= length <= MAX_KEY_LEN):
        raise ValueError(f"key length must be in [{MIN_KEY_LEN}, {MAX_KEY_LEN}]")
    if mode not in ("random", "wordlist"):
        raise ValueError(f"unknown key mode: {mode!r}")
    if mode == "wordlist" and not wordlist:
        logger.warning("wordlist mode requested with empty lexicon; using random keys")
        mode = "random"

    for _ in range(max_attempts):
        if mode == "random":
            candidate = "".join(rng.choice(ALPHABET) for _ in range(length))
        else:
            assert wordlist is not None
            parts: list[str] = []
            total = 0
            while total < length:
                word = rng.choice(wordlist)
                parts.append(word)
                total += len(word)
            candidate = "".join(parts)[:length]
        if effective_period(candidate) == length:
            return Key(candidate)
    raise RuntimeError(f"could not generate an aperiodic key of length {length}")


def write_cipher_samples(samples: list[CipherSample], path: str | Path) -> None:
    """Serialize as `ciphertext,true_key_length` CSV rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ciphertext,true_key_length\n")
        for s in samples:
            fh.write(f"{s.ciphertext},{s.true_key_length}\n")


def read_cipher_samples(path: str | Path) -> list[CipherSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "ciphertext,true_key_length":
            raise ValueError(f"unexpected header in {path}: {header!r}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            ciphertext, k = line.split(",")
            samples.append(CipherSample(ciphertext=ciphertext, true_key_length=int(k)))
    return samples
