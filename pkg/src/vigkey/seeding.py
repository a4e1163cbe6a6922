"""Deterministic RNG derivation for parallel-safe, reproducible runs."""

from __future__ import annotations

import hashlib
import random


def derive_seed(master_seed: int, *tokens: object) -> int:
    """Derive a child seed from a master seed and a label path.

    Uses SHA-256 so the result is stable across processes, platforms and
    Python versions (unlike the salted built-in hash()).
    """
    material = ":".join([str(master_seed), *map(str, tokens)])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(master_seed: int, *tokens: object) -> random.Random:
    """A stdlib Random stream keyed by (master_seed, *tokens)."""
    return random.Random(derive_seed(master_seed, *tokens))
