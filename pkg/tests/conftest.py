"""Shared fixtures: a small generated corpus and a tiny end-to-end dataset.

Both are session scoped because dataset building runs feature extraction,
which is the slow part; unit tests must treat the artifacts as read-only.
"""

from __future__ import annotations

import pytest

from english_corpus import write_corpus
from vigkey.pipeline import DatasetConfig, build_dataset

SMALL_CORPUS_SEED = 101
TINY_DATASET_SEED = 4242


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("corpus_small")
    write_corpus(directory, n_docs=8, letters_per_doc=9000, seed=SMALL_CORPUS_SEED)
    return directory


@pytest.fixture(scope="session")
def tiny_dataset(small_corpus_dir, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("dataset_tiny")
    config = DatasetConfig(quota_per_length=4, seed=TINY_DATASET_SEED)
    manifest = build_dataset(small_corpus_dir, out_dir, config)
    return out_dir, manifest
