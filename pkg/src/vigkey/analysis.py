"""Key-length statistics and feature-vector assembly.

All functions operate on cleaned text (uppercase A-Z only).  The twist-family
indices follow the coset/sample-signature construction: relative letter
frequencies sorted ascending, twist = top-13 sum minus bottom-13 sum, and
T(M, m) = (100/m) * sum of the m per-coset twists.

Per-coset twists are computed from integer count sums with a single division
so that a coset with at most 13 distinct letters yields exactly 1.0; this
makes the saturation plateau T(M, m) = 100 for m > floor(N/12) exact in
floating point rather than approximate.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"

# Index of coincidence of English text; entered as a constant feature.
ENGLISH_IC = 0.066

SCHEMA_ALL = "ALL114"
SCHEMA_FINAL = "FINAL77"

_A = ord("A")


class InsufficientTextError(ValueError):
    """Raised when a statistic's minimum text-length precondition fails."""


class EstimateUndefinedError(ValueError):
    """Raised when the IC key-length formula has a non-positive denominator."""


# ---------------------------
# Letter-level statistics
# ---------------------------


def encode_letters(text: str) -> np.ndarray:
    """Map A..Z to 0..25 as an int array; rejects anything else."""
    arr = np.frombuffer(text.encode("ascii"), dtype=np.uint8).astype(np.int64) - _A
    if arr.size and (arr.min() < 0 or arr.max() > 25):
        raise ValueError("text must contain only uppercase A-Z letters")
    return arr


def frequencies(text: str) -> np.ndarray:
    """Letter counts, shape (26,)."""
    return np.bincount(encode_letters(text), minlength=26)


def index_of_coincidence(text: str) -> float:
    """Probability that two distinct positions hold the same letter."""
    n = len(text)
    if n < 2:
        raise InsufficientTextError("index of coincidence needs at least 2 letters")
    counts = frequencies(text)
    matching = int((counts * (counts - 1)).sum())
    return matching / (n * (n - 1))


def ic_key_estimate(text: str) -> float:
    """Key-length estimate 0.028*N / (IC*(N-1) - 0.038*N + 0.066).

    The denominator crosses zero near the random-text IC; at or below zero
    the estimate is undefined and EstimateUndefinedError is raised.
    """
    n = len(text)
    ic = index_of_coincidence(text)
    denom = ic * (n - 1) - 0.038 * n + 0.066
    if denom <= 0.0:
        raise EstimateUndefinedError(f"non-positive denominator {denom}")
    return 0.028 * n / denom


def h7(text: str) -> float:
    """Sum of the percentage frequencies of the 7 most common letters."""
    return _h7_delta7(frequencies(text), len(text))[0]


def delta7(text: str) -> float:
    """h7 minus the summed percentage frequencies of the 7 least common letters."""
    return _h7_delta7(frequencies(text), len(text))[1]


def _h7_delta7(counts: np.ndarray, n: int) -> tuple[float, float]:
    if n < 1:
        raise InsufficientTextError("h7/delta7 need a nonempty text")
    by_most = sorted(range(26), key=lambda i: (-counts[i], i))
    by_least = sorted(range(26), key=lambda i: (counts[i], i))
    top = int(sum(counts[i] for i in by_most[:7]))
    bottom = int(sum(counts[i] for i in by_least[:7]))
    h = 100.0 * top / n
    return h, h - 100.0 * bottom / n


def entropy1(text: str) -> float:
    """First-order entropy in bits, with the 0*log(0) = 0 convention."""
    n = len(text)
    if n < 1:
        raise InsufficientTextError("entropy needs a nonempty text")
    counts = frequencies(text)
    p = counts[counts > 0] / n
    return float(-(p * np.log2(p)).sum())


@dataclass(frozen=True)
class QuotientBound:
    """N = 12*q + r; cosets saturate the twist index for m > q."""

    q: int
    r: int


def quotient_bound(text: str) -> QuotientBound:
    n = len(text)
    return QuotientBound(q=n // 12, r=n % 12)


# ---------------------------
# Cosets and the twist family
# ---------------------------


def cosets(text: str, m: int) -> list[str]:
    """Split text into m cosets by position mod m (coset j: positions j, j+m, ...)."""
    if not (1 <= m <= len(text)):
        raise InsufficientTextError(f"need 1 <= m <= N, got m={m}, N={len(text)}")
    return [text[j::m] for j in range(m)]


def _coset_counts(arr: np.ndarray, m: int) -> np.ndarray:
    """Letter counts per coset, shape (m, 26)."""
    idx = np.arange(arr.size, dtype=np.int64) % m
    return np.bincount(idx * 26 + arr, minlength=m * 26).reshape(m, 26)


def _coset_twists(counts: np.ndarray) -> np.ndarray:
    """Per-coset twist from a (m, 26) count matrix.

    Empty cosets (possible only when m exceeds the text length) take the
    saturated value 1.0, matching the short-coset plateau.
    """
    ordered = np.sort(counts, axis=1)
    top = ordered[:, 13:].sum(axis=1)
    bottom = ordered[:, :13].sum(axis=1)
    sizes = counts.sum(axis=1)
    out = np.ones(counts.shape[0])
    nonempty = sizes > 0
    out[nonempty] = (top[nonempty] - bottom[nonempty]) / sizes[nonempty]
    return out


def signature(text: str) -> np.ndarray:
    """Relative letter frequencies sorted ascending (26 entries summing to 1)."""
    n = len(text)
    if n < 1:
        raise InsufficientTextError("signature needs a nonempty text")
    return np.sort(frequencies(text)) / n


def twist(sig: np.ndarray) -> float:
    """Top-13 minus bottom-13 sum of an ascending signature; in [0, 1].

    Exact summation plus clamping keeps the value inside the documented
    range even when the 26 rounded relative frequencies do not sum to
    exactly 1.  Coset-level twist indices bypass this path and use integer
    count arithmetic instead.
    """
    sig = np.asarray(sig, dtype=float)
    if sig.shape != (26,):
        raise ValueError("signature must have 26 entries")
    value = math.fsum(sig[13:]) - math.fsum(sig[:13])
    return min(1.0, max(0.0, value))


def _twist_index_from_counts(counts: np.ndarray) -> float:
    m = counts.shape[0]
    return 100.0 * float(_coset_twists(counts).sum()) / m


def twist_index(text: str, m: int) -> float:
    """T(M, m): 100/m times the summed twists of the m cosets."""
    if not (1 <= m <= len(text)):
        raise InsufficientTextError(f"need 1 <= m <= N, got m={m}, N={len(text)}")
    return _twist_index_from_counts(_coset_counts(encode_letters(text), m))


def twist_profile(text: str, m_max: int) -> np.ndarray:
    """T(M, m) for m = 1..m_max as an array of length m_max.

    For m beyond the text length every coset is short, so the index is the
    saturated 100.0; this keeps feature assembly total on short inputs.
    """
    arr = encode_letters(text)
    return np.array(
        [_twist_index_from_counts(_coset_counts(arr, m)) for m in range(1, m_max + 1)]
    )


def twist_plus_from_profile(profile: np.ndarray, m: int) -> float:
    return float(profile[m - 1] - profile[: m - 1].sum() / (m - 1))


def twist_plus_plus_from_profile(profile: np.ndarray, m: int) -> float:
    return float(profile[m - 1] - 0.5 * (profile[m - 2] + profile[m]))


def twist_plus_index(text: str, m: int) -> float:
    """T+(M, m) = T(M, m) - mean of T(M, 1..m-1)."""
    if m < 2:
        raise InsufficientTextError("twist-plus index needs m >= 2")
    return twist_plus_from_profile(twist_profile(text, m), m)


def twist_plus_plus_index(text: str, m: int) -> float:
    """T++(M, m) = T(M, m) - (T(M, m-1) + T(M, m+1)) / 2."""
    if m < 2 or m + 1 > len(text):
        raise InsufficientTextError("twist-plus-plus index needs 2 <= m <= N-1")
    return twist_plus_plus_from_profile(twist_profile(text, m + 1), m)


def _avg_coset_ic_from_counts(counts: np.ndarray) -> float:
    """Mean coset IC; cosets with fewer than 2 letters contribute 0."""
    sizes = counts.sum(axis=1)
    matching = (counts * (counts - 1)).sum(axis=1)
    ics = np.zeros(counts.shape[0])
    ok = sizes >= 2
    ics[ok] = matching[ok] / (sizes[ok] * (sizes[ok] - 1))
    return float(ics.sum()) / counts.shape[0]


def avg_coset_ic(text: str, m: int, strict: bool = True) -> float:
    """Arithmetic mean of the 26-letter IC over the m cosets.

    With strict=True a coset shorter than 2 letters raises; feature assembly
    uses strict=False, where such cosets contribute 0.
    """
    if not (1 <= m <= len(text)):
        raise InsufficientTextError(f"need 1 <= m <= N, got m={m}, N={len(text)}")
    counts = _coset_counts(encode_letters(text), m)
    if strict and (counts.sum(axis=1) < 2).any():
        raise InsufficientTextError(f"some coset has < 2 letters for m={m}, N={len(text)}")
    return _avg_coset_ic_from_counts(counts)


# ---------------------------
# Repeated n-gram (Kasiski) summary
# ---------------------------

KASISKI_NGRAM_SIZES = (3, 4)
KASISKI_TOP = 5


@dataclass
class KasiskiSummary:
    top_distances: list[int]
    top_counts: list[int]
    has_repeats: bool


def kasiski(text: str) -> KasiskiSummary:
    """Tally pairwise distances between repeated 3-gram/4-gram occurrences.

    All occurrence pairs of each repeated n-gram contribute their start-position
    distance; the 5 most common distances are reported (count descending, ties
    to the smaller distance), zero-padded.  Texts shorter than 3 letters yield
    an empty summary.
    """
    tally: dict[int, int] = defaultdict(int)
    has_repeats = False
    for n in KASISKI_NGRAM_SIZES:
        positions: dict[str, list[int]] = defaultdict(list)
        for i in range(len(text) - n + 1):
            positions[text[i : i + n]].append(i)
        for occ in positions.values():
            if len(occ) < 2:
                continue
            has_repeats = True
            for a, b in itertools.combinations(occ, 2):
                tally[b - a] += 1
    ranked = sorted(tally.items(), key=lambda item: (-item[1], item[0]))[:KASISKI_TOP]
    distances = [d for d, _ in ranked]
    counts = [c for _, c in ranked]
    pad = KASISKI_TOP - len(ranked)
    return KasiskiSummary(
        top_distances=distances + [0] * pad,
        top_counts=counts + [0] * pad,
        has_repeats=has_repeats,
    )


# ---------------------------
# Feature schemas
# ---------------------------

TWIST_M_RANGE = range(1, 26)
TPLUS_M_RANGE = range(2, 26)
TPP_M_RANGE = range(2, 26)
COSET_IC_M_RANGE = range(3, 26)

# Ordered feature groups of the full schema; masks select among these.
FEATURE_GROUPS: dict[str, list[int]] = {}
_ALL_NAMES: list[str] = []


def _register_group(group: str, names: list[str]) -> None:
    start = len(_ALL_NAMES)
    _ALL_NAMES.extend(names)
    FEATURE_GROUPS[group] = list(range(start, start + len(names)))


_register_group("length", ["length"])
_register_group("has_repeats", ["has_repeated_ngrams"])
_register_group("ic", ["ic"])
_register_group("ic_english", ["ic_english"])
_register_group("length_quotient", ["length_quotient"])
_register_group("twist", [f"twist_m{m:02d}" for m in TWIST_M_RANGE])
_register_group("twist_plus", [f"twist_plus_m{m:02d}" for m in TPLUS_M_RANGE])
_register_group("twist_plus_plus", [f"twist_plus_plus_m{m:02d}" for m in TPP_M_RANGE])
_register_group("avg_coset_ic", [f"avg_coset_ic_m{m:02d}" for m in COSET_IC_M_RANGE])
_register_group("kasiski_distances", [f"kasiski_distance_{i}" for i in range(1, 6)])
_register_group("kasiski_counts", [f"kasiski_count_{i}" for i in range(1, 6)])
_register_group("h7", ["h7"])
_register_group("delta7", ["delta7"])
_register_group("entropy", ["entropy"])

ALL_FEATURE_COUNT = len(_ALL_NAMES)

_FINAL_GROUPS = (
    "length",
    "has_repeats",
    "ic",
    "ic_english",
    "twist_plus",
    "twist_plus_plus",
    "avg_coset_ic",
    "h7",
    "delta7",
)
FINAL_INDICES: list[int] = sorted(
    i for g in _FINAL_GROUPS for i in FEATURE_GROUPS[g]
)


def feature_names(schema_id: str) -> list[str]:
    if schema_id == SCHEMA_ALL:
        return list(_ALL_NAMES)
    if schema_id == SCHEMA_FINAL:
        return [_ALL_NAMES[i] for i in FINAL_INDICES]
    raise ValueError(f"unknown feature schema: {schema_id!r}")


def schema_length(schema_id: str) -> int:
    return len(feature_names(schema_id))


@dataclass
class FeatureVector:
    schema_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        expected = schema_length(self.schema_id)
        if self.values.shape != (expected,):
            raise ValueError(
                f"schema {self.schema_id} expects {expected} values, "
                f"got shape {self.values.shape}"
            )


def feature_vector(text: str, schema_id: str = SCHEMA_ALL) -> FeatureVector:
    """Assemble the schema-ordered feature vector for a ciphertext.

    Components whose preconditions fail on extreme inputs are substituted
    with defined sentinels (saturated twists, zero coset ICs) so assembly
    never raises for any text with at least 2 letters.
    """
    values = FeatureVector(SCHEMA_ALL, _all_features(text))
    if schema_id == SCHEMA_ALL:
        return values
    if schema_id == SCHEMA_FINAL:
        return FeatureVector(SCHEMA_FINAL, values.values[FINAL_INDICES])
    raise ValueError(f"unknown feature schema: {schema_id!r}")


def _all_features(text: str) -> np.ndarray:
    n = len(text)
    if n < 2:
        raise InsufficientTextError("feature extraction needs at least 2 letters")
    arr = encode_letters(text)
    counts_by_m = {m: _coset_counts(arr, m) for m in range(1, 27)}
    profile = np.array(
        [_twist_index_from_counts(counts_by_m[m]) for m in range(1, 27)]
    )
    kas = kasiski(text)
    counts = np.bincount(arr, minlength=26)
    h, delta = _h7_delta7(counts, n)
    out = [
        float(n),
        1.0 if kas.has_repeats else 0.0,
        index_of_coincidence(text),
        ENGLISH_IC,
        float(n // 12),
    ]
    out.extend(profile[m - 1] for m in TWIST_M_RANGE)
    out.extend(twist_plus_from_profile(profile, m) for m in TPLUS_M_RANGE)
    out.extend(twist_plus_plus_from_profile(profile, m) for m in TPP_M_RANGE)
    out.extend(_avg_coset_ic_from_counts(counts_by_m[m]) for m in COSET_IC_M_RANGE)
    out.extend(float(d) for d in kas.top_distances)
    out.extend(float(c) for c in kas.top_counts)
    out.append(h)
    out.append(delta)
    out.append(entropy1(text))
    return np.array(out)


def write_schema_descriptor(schema_id: str, path: str | Path) -> None:
    """Emit a JSON column map so dataset consumers can verify feature order."""
    names = feature_names(schema_id)
    doc = {
        "schema_id": schema_id,
        "feature_count": len(names),
        "columns": [{"index": i, "name": name} for i, name in enumerate(names)],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
