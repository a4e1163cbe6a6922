"""Plaintext ingestion: cleaning, segmentation and corpus loading.

Documents are reduced to the 26 uppercase letters A-Z and carved into
non-overlapping samples of 200-500 letters, the raw material for cipher
dataset generation.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

logger = logging.getLogger(__name__)

_NON_LETTER = re.compile(r"[^A-Za-z]+")

MIN_SAMPLE_LEN = 200
MAX_SAMPLE_LEN = 500


@dataclass
class RawDocument:
    doc_id: str
    body: str


@dataclass
class CorpusError:
    """Per-file failure record emitted by load_corpus."""

    path: str
    message: str


@dataclass
class SegmentationPlan:
    """Per-length sample quotas for carving documents.

    quota_per_length is the target number of samples for each individual
    length value in [min_len, max_len].
    """

    quota_per_length: int
    min_len: int = MIN_SAMPLE_LEN
    max_len: int = MAX_SAMPLE_LEN
    seed: int = 0

    def __post_init__(self) -> None:
        if self.quota_per_length < 0:
            raise ValueError("quota_per_length must be >= 0")
        if not (0 < self.min_len <= self.max_len):
            raise ValueError("need 0 < min_len <= max_len")

    def fresh_quotas(self) -> dict[int, int]:
        return {n: self.quota_per_length for n in range(self.min_len, self.max_len + 1)}


@dataclass
class PlainSample:
    doc_id: str
    start: int
    letters: str

    @property
    def length(self) -> int:
        return len(self.letters)


def clean_text(text: str) -> str:
    """Strip everything but ASCII letters and uppercase the rest.

    Accented and non-Latin letters are dropped, not transliterated; the
    downstream statistics assume a plain 26-letter alphabet.
    """
    return _NON_LETTER.sub("", text).upper()


def segment(
    doc: str,
    plan: SegmentationPlan,
    rng: random.Random,
    remaining: dict[int, int] | None = None,
    doc_id: str = "",
) -> list[PlainSample]:
    """Carve a cleaned document into contiguous, non-overlapping samples.

    Sample lengths are drawn uniformly (via rng) from the lengths that still
    have unmet quota and fit in the unconsumed tail.  When `remaining` is
    given it is shared, mutable state so quotas can be balanced across many
    documents; otherwise a fresh quota table is derived from the plan.
    Leftover tails shorter than min_len (or shorter than every quota-eligible
    length) are discarded.
    """
    if remaining is None:
        remaining = plan.fresh_quotas()
    samples: list[PlainSample] = []
    pos = 0
    n = len(doc)
    while n - pos >= plan.min_len:
        tail = n - pos
        eligible = [
            length
            for length, left in sorted(remaining.items())
            if left > 0 and plan.min_len <= length <= min(plan.max_len, tail)
        ]
        if not eligible:
            break
        length = rng.choice(eligible)
        samples.append(PlainSample(doc_id=doc_id, start=pos, letters=doc[pos : pos + length]))
        remaining[length] -= 1
        pos += length
    return samples


def load_corpus(
    directory: str | Path,
    errors: list[CorpusError] | None = None,
) -> Iterator[RawDocument]:
    """Yield one RawDocument per regular file, in lexicographic name order.

    Unreadable files produce a CorpusError record (appended to `errors` if
    provided, always logged) and iteration continues.  A missing directory
    is fatal.
    """
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    for path in sorted(root.iterdir(), key=lambda p: p.name):
        if not path.is_file():
            continue
        try:
            body = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            record = CorpusError(path=str(path), message=str(exc))
            logger.warning("skipping unreadable corpus file %s: %s", path, exc)
            if errors is not None:
                errors.append(record)
            continue
        yield RawDocument(doc_id=path.name, body=body)


def write_samples(samples: list[PlainSample], path: str | Path) -> None:
    """Serialize samples as `doc_id,start_offset,length,letters` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(f"{s.doc_id},{s.start},{s.length},{s.letters}\n")


def read_samples(path: str | Path) -> list[PlainSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            doc_id, start, length, letters = line.split(",")
            if len(letters) != int(length):
                raise ValueError(f"corrupt sample record in {path}: length mismatch")
            samples.append(PlainSample(doc_id=doc_id, start=int(start), letters=letters))
    return samples
