"""End-to-end experiments: dataset generation, feature masking, evaluation.

Dataset construction walks a plaintext corpus, splits whole documents into
train and test pools (no document contributes samples to both), segments them
under global per-length quotas, encrypts each segment with a fresh key of
uniformly drawn length 3..25, and writes feature rows in the full 114-column
schema.  Every random choice is derived from the master seed, so identical
configuration reproduces identical bytes.

The named feature masks select column subsets of the full schema for the
ablation models and the 77-feature production model; baselines are always
evaluated from the unmasked rows of the same test file.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, cipher, corpus, estimators, nn, seeding

METHOD_NN = "nn"
BASELINE_METHODS = (
    estimators.METHOD_IC,
    estimators.METHOD_TWIST,
    estimators.METHOD_TWIST_PLUS,
    estimators.METHOD_TWIST_PLUS_PLUS,
)
ALL_METHODS = BASELINE_METHODS + (METHOD_NN,)

LENGTH_BUCKETS = (("200-299", 200, 299), ("300-399", 300, 399), ("400-500", 400, 500))
OVERALL = "overall"

DATASET_HEADER = "label," + ",".join(f"f{i}" for i in range(analysis.ALL_FEATURE_COUNT))

TRAIN_FILE = "train.csv"
TEST_FILE = "test.csv"
MANIFEST_FILE = "manifest.json"
SCHEMA_FILE = "feature_schema.json"


# ---------------------------
# Feature masks
# ---------------------------


@dataclass(frozen=True)
class FeatureMask:
    """A named projection of the full feature schema onto selected columns."""

    name: str
    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("mask name must be nonempty")
        if len(self.indices) == 0:
            raise ValueError("mask must select at least one feature")
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("mask indices must be strictly increasing")
        if self.indices[0] < 0 or self.indices[-1] >= analysis.ALL_FEATURE_COUNT:
            raise ValueError("mask indices out of schema range")

    @property
    def width(self) -> int:
        return len(self.indices)


def _mask_excluding(name: str, excluded_groups: tuple[str, ...]) -> FeatureMask:
    for group in excluded_groups:
        if group not in analysis.FEATURE_GROUPS:
            raise ValueError(f"unknown feature group: {group!r}")
    dropped = {i for g in excluded_groups for i in analysis.FEATURE_GROUPS[g]}
    kept = tuple(i for i in range(analysis.ALL_FEATURE_COUNT) if i not in dropped)
    return FeatureMask(name, kept)


# Ablation ladder: each model drops named feature groups from the full set;
# FINAL is MODEL_9 with the average coset IC group restored.
MASKS: dict[str, FeatureMask] = {
    "MODEL_1": _mask_excluding("MODEL_1", ()),
    "MODEL_2": _mask_excluding("MODEL_2", ("h7", "delta7")),
    "MODEL_3": _mask_excluding("MODEL_3", ("entropy",)),
    "MODEL_4": _mask_excluding("MODEL_4", ("has_repeats", "entropy")),
    "MODEL_5": _mask_excluding("MODEL_5", ("ic", "ic_english", "entropy")),
    "MODEL_6": _mask_excluding("MODEL_6", ("length_quotient", "entropy")),
    "MODEL_7": _mask_excluding(
        "MODEL_7",
        ("length_quotient", "kasiski_distances", "kasiski_counts", "entropy"),
    ),
    "MODEL_8": _mask_excluding(
        "MODEL_8",
        (
            "length_quotient",
            "avg_coset_ic",
            "kasiski_distances",
            "kasiski_counts",
            "entropy",
        ),
    ),
    "MODEL_9": _mask_excluding(
        "MODEL_9",
        (
            "length_quotient",
            "twist",
            "avg_coset_ic",
            "kasiski_distances",
            "kasiski_counts",
            "entropy",
        ),
    ),
    "MODEL_10": _mask_excluding(
        "MODEL_10",
        (
            "length_quotient",
            "twist",
            "twist_plus",
            "avg_coset_ic",
            "kasiski_distances",
            "kasiski_counts",
            "entropy",
        ),
    ),
    "MODEL_11": _mask_excluding(
        "MODEL_11",
        (
            "length_quotient",
            "twist",
            "twist_plus_plus",
            "avg_coset_ic",
            "kasiski_distances",
            "kasiski_counts",
            "entropy",
        ),
    ),
    "FINAL": _mask_excluding(
        "FINAL",
        ("length_quotient", "twist", "kasiski_distances", "kasiski_counts", "entropy"),
    ),
}


def get_mask(name: str) -> FeatureMask:
    if name == analysis.SCHEMA_ALL:
        return FeatureMask(
            analysis.SCHEMA_ALL, tuple(range(analysis.ALL_FEATURE_COUNT))
        )
    try:
        return MASKS[name]
    except KeyError:
        raise ValueError(
            f"unknown mask {name!r}; expected one of {', '.join(sorted(MASKS))}"
        ) from None


def apply_mask(X: np.ndarray, mask: FeatureMask) -> np.ndarray:
    """Project full-schema feature rows onto the mask's columns."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != analysis.ALL_FEATURE_COUNT:
        raise ValueError(
            f"mask {mask.name} applies to {analysis.ALL_FEATURE_COUNT}-column rows, "
            f"got {X.shape[1]}"
        )
    return X[:, list(mask.indices)]


# ---------------------------
# Worker parallelism
# ---------------------------


def worker_count() -> int:
    """Parallel workers from VIGKEY_THREADS; 0 or unset means all cores."""
    raw = os.environ.get("VIGKEY_THREADS", "0").strip()
    try:
        requested = int(raw)
    except ValueError:
        raise ValueError(f"VIGKEY_THREADS must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError(f"VIGKEY_THREADS must be >= 0, got {requested}")
    cores = os.cpu_count() or 1
    return cores if requested == 0 else min(requested, cores)


def _feature_row(text: str) -> np.ndarray:
    return analysis.feature_vector(text, analysis.SCHEMA_ALL).values


def extract_features(texts: list[str]) -> np.ndarray:
    """Full-schema feature rows for each text, order preserved."""
    workers = worker_count()
    if workers == 1 or len(texts) < 4 * workers:
        rows = [_feature_row(t) for t in texts]
    else:
        chunk = max(1, len(texts) // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_feature_row, texts, chunksize=chunk))
    return np.array(rows) if rows else np.empty((0, analysis.ALL_FEATURE_COUNT))


# ---------------------------
# Dataset construction
# ---------------------------


@dataclass(frozen=True)
class DatasetConfig:
    """Settings for one dataset build; all randomness derives from seed."""

    quota_per_length: int
    seed: int
    test_fraction: float = 0.2
    key_mode_ratio: float = 0.5
    wordlist_path: str | None = None

    def __post_init__(self) -> None:
        if self.quota_per_length < 1:
            raise ValueError("quota_per_length must be positive")
        if not (0.0 < self.test_fraction < 1.0):
            raise ValueError("test_fraction must be in (0, 1)")
        if not (0.0 <= self.key_mode_ratio <= 1.0):
            raise ValueError("key_mode_ratio must be in [0, 1]")


@dataclass
class DatasetManifest:
    schema_id: str
    corpus_dir: str
    seed: int
    quota_per_length: int
    test_fraction: float
    key_mode_ratio: float
    wordlist: str | None
    train_documents: list[str]
    test_documents: list[str]
    train_samples: int
    test_samples: int
    train_length_counts: list[list[int]]
    test_length_counts: list[list[int]]
    train_key_length_counts: list[list[int]]
    test_key_length_counts: list[list[int]]
    warnings: list[str] = field(default_factory=list)

    def save(self, path: str | Path) -> None:
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        Path(path).write_text(text + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def _count_pairs(values: list[int]) -> list[list[int]]:
    uniq, counts = np.unique(np.array(values, dtype=int), return_counts=True)
    return [[int(v), int(c)] for v, c in zip(uniq, counts)]


def _segment_split(
    docs: list[tuple[str, str]], quota: int, seed: int, split: str
) -> list[corpus.PlainSample]:
    plan = corpus.SegmentationPlan(quota_per_length=quota)
    remaining = plan.fresh_quotas()
    samples: list[corpus.PlainSample] = []
    for doc_id, text in docs:
        rng = seeding.derive_rng(seed, "segment", split, doc_id)
        samples.extend(
            corpus.segment(text, plan, rng, remaining=remaining, doc_id=doc_id)
        )
    return samples


def _encrypt_samples(
    samples: list[corpus.PlainSample],
    config: DatasetConfig,
    wordlist: list[str] | None,
) -> tuple[list[str], list[int]]:
    texts, labels = [], []
    for sample in samples:
        rng = seeding.derive_rng(config.seed, "key", sample.doc_id, sample.start)
        k = rng.randrange(cipher.MIN_KEY_LEN, cipher.MAX_KEY_LEN + 1)
        mode = "random"
        if wordlist and rng.random() < config.key_mode_ratio:
            mode = "wordlist"
        key = cipher.generate_key(rng, k, mode=mode, wordlist=wordlist)
        texts.append(cipher.encrypt(sample.letters, key))
        labels.append(k)
    return texts, labels


def write_dataset_csv(
    path: str | Path, labels: list[int], features: np.ndarray
) -> None:
    """Rows as `label,f0..f113`; floats via repr, so files are byte-stable."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DATASET_HEADER + "\n")
        for label, row in zip(labels, features):
            fh.write(str(int(label)))
            for v in row:
                fh.write("," + repr(float(v)))
            fh.write("\n")


def load_dataset(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a dataset CSV back as (features, labels)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != DATASET_HEADER:
            raise ValueError(f"unexpected dataset header in {path}")
        rows = [line.rstrip("\n").split(",") for line in fh]
    if not rows:
        return np.empty((0, analysis.ALL_FEATURE_COUNT)), np.empty(0, dtype=int)
    data = np.array([[float(v) for v in row] for row in rows])
    return data[:, 1:], data[:, 0].astype(int)


def build_dataset(
    corpus_dir: str | Path, out_dir: str | Path, config: DatasetConfig
) -> DatasetManifest:
    """Generate train/test feature files plus a manifest under out_dir.

    Documents are split between train and test before segmentation, so the
    two files never share source material.  If the corpus cannot fill the
    requested quotas the dataset is still written, with a manifest warning.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    warnings: list[str] = []

    errors: list[corpus.CorpusError] = []
    raw_docs = corpus.load_corpus(corpus_dir, errors=errors)
    warnings.extend(f"unreadable file skipped: {e.path}" for e in errors)
    docs = [
        (doc.doc_id, cleaned)
        for doc in raw_docs
        if len(cleaned := corpus.clean_text(doc.body)) >= corpus.MIN_SAMPLE_LEN
    ]
    if not docs:
        raise ValueError(f"corpus {corpus_dir} has no usable documents")

    split_rng = seeding.derive_rng(config.seed, "split")
    ids = [doc_id for doc_id, _ in docs]
    split_rng.shuffle(ids)
    n_test_docs = int(round(config.test_fraction * len(docs)))
    n_test_docs = min(max(n_test_docs, 1), len(docs) - 1) if len(docs) > 1 else 0
    test_ids = set(ids[:n_test_docs])
    if not test_ids:
        warnings.append("corpus has a single document; test split is empty")
    train_docs = [(d, t) for d, t in docs if d not in test_ids]
    test_docs = [(d, t) for d, t in docs if d in test_ids]

    train_quota = int(round(config.quota_per_length * (1.0 - config.test_fraction)))
    train_quota = min(max(train_quota, 1), config.quota_per_length)
    test_quota = config.quota_per_length - train_quota

    wordlist = None
    if config.wordlist_path is not None:
        wordlist = cipher.load_wordlist(config.wordlist_path)
        if not wordlist:
            warnings.append(f"wordlist {config.wordlist_path} is empty; using random keys")
            wordlist = None
    ratio = config.key_mode_ratio if wordlist else 0.0

    splits = {}
    for split, pool, quota in (
        ("train", train_docs, train_quota),
        ("test", test_docs, test_quota),
    ):
        samples = _segment_split(pool, quota, config.seed, split) if quota else []
        target = quota * (corpus.MAX_SAMPLE_LEN - corpus.MIN_SAMPLE_LEN + 1)
        if len(samples) < target:
            warnings.append(
                f"{split} split is short: {len(samples)} of {target} requested samples"
            )
        texts, labels = _encrypt_samples(samples, config, wordlist)
        features = extract_features(texts)
        write_dataset_csv(out / f"{split}.csv", labels, features)
        splits[split] = (samples, labels)

    analysis.write_schema_descriptor(analysis.SCHEMA_ALL, out / SCHEMA_FILE)

    train_samples, train_labels = splits["train"]
    test_samples, test_labels = splits["test"]
    manifest = DatasetManifest(
        schema_id=analysis.SCHEMA_ALL,
        corpus_dir=str(corpus_dir),
        seed=config.seed,
        quota_per_length=config.quota_per_length,
        test_fraction=config.test_fraction,
        key_mode_ratio=ratio,
        wordlist=config.wordlist_path,
        train_documents=sorted(d for d, _ in train_docs),
        test_documents=sorted(d for d, _ in test_docs),
        train_samples=len(train_samples),
        test_samples=len(test_samples),
        train_length_counts=_count_pairs([s.length for s in train_samples]),
        test_length_counts=_count_pairs([s.length for s in test_samples]),
        train_key_length_counts=_count_pairs(train_labels),
        test_key_length_counts=_count_pairs(test_labels),
        warnings=warnings,
    )
    manifest.save(out / MANIFEST_FILE)
    return manifest


# ---------------------------
# Evaluation
# ---------------------------


@dataclass
class EvaluationReport:
    """Accuracy of every method overall, per length bucket, per key length.

    by_key_length maps bucket group (overall plus the three length buckets)
    to method to 23 per-key-length accuracies; entries with no test samples
    of that key length are None.  key_length_counts holds the denominators.
    """

    test_samples: int
    methods: list[str]
    bucket_counts: dict[str, int]
    overall: dict[str, float]
    by_bucket: dict[str, dict[str, float]]
    by_key_length: dict[str, dict[str, list[float | None]]]
    key_length_counts: dict[str, list[int]]

    def save(self, path: str | Path) -> None:
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        Path(path).write_text(text + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EvaluationReport":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def baseline_predictions(X: np.ndarray) -> dict[str, list[int | None]]:
    """Run the four classical estimators on unmasked feature rows."""
    preds: dict[str, list[int | None]] = {m: [] for m in BASELINE_METHODS}
    for row in np.atleast_2d(X):
        preds[estimators.METHOD_IC].append(
            estimators.estimate_ic_from_features(row).predicted_k
        )
        preds[estimators.METHOD_TWIST].append(
            estimators.estimate_twist_from_features(row).predicted_k
        )
        preds[estimators.METHOD_TWIST_PLUS].append(
            estimators.estimate_twist_plus_from_features(row).predicted_k
        )
        preds[estimators.METHOD_TWIST_PLUS_PLUS].append(
            estimators.estimate_twist_plus_plus_from_features(row).predicted_k
        )
    return preds


def _accuracy(pred: np.ndarray, true: np.ndarray) -> float | None:
    if true.size == 0:
        return None
    return float((pred == true).mean())


def evaluate_predictions(
    predictions: dict[str, list[int | None]],
    y_true: np.ndarray,
    lengths: np.ndarray,
) -> EvaluationReport:
    """Score per-method predictions; a None prediction counts as incorrect."""
    y_true = np.asarray(y_true, dtype=int)
    lengths = np.asarray(lengths, dtype=int)
    if y_true.size == 0:
        raise ValueError("cannot evaluate an empty test set")
    methods = [m for m in ALL_METHODS if m in predictions]
    pred_arr = {
        m: np.array([-1 if p is None else int(p) for p in predictions[m]])
        for m in methods
    }
    for m in methods:
        if pred_arr[m].shape != y_true.shape:
            raise ValueError(f"method {m} prediction count mismatch")

    groups: dict[str, np.ndarray] = {OVERALL: np.ones(y_true.size, dtype=bool)}
    for name, lo, hi in LENGTH_BUCKETS:
        groups[name] = (lengths >= lo) & (lengths <= hi)

    ks = list(range(cipher.MIN_KEY_LEN, cipher.MAX_KEY_LEN + 1))
    by_bucket: dict[str, dict[str, float]] = {}
    by_key_length: dict[str, dict[str, list[float | None]]] = {}
    key_length_counts: dict[str, list[int]] = {}
    for gname, gmask in groups.items():
        key_length_counts[gname] = [int(((y_true == k) & gmask).sum()) for k in ks]
        per_method: dict[str, list[float | None]] = {}
        for m in methods:
            per_method[m] = [
                _accuracy(pred_arr[m][gmask & (y_true == k)], y_true[gmask & (y_true == k)])
                for k in ks
            ]
        by_key_length[gname] = per_method
        if gname != OVERALL:
            by_bucket[gname] = {
                m: acc
                for m in methods
                if (acc := _accuracy(pred_arr[m][gmask], y_true[gmask])) is not None
            }

    return EvaluationReport(
        test_samples=int(y_true.size),
        methods=methods,
        bucket_counts={name: int(groups[name].sum()) for name, _, _ in LENGTH_BUCKETS},
        overall={m: _accuracy(pred_arr[m], y_true) for m in methods},
        by_bucket=by_bucket,
        by_key_length=by_key_length,
        key_length_counts=key_length_counts,
    )


def evaluate_model(
    model: nn.NetworkModel, test_file: str | Path
) -> EvaluationReport:
    """Evaluate a trained model plus all four baselines on a test file."""
    X_test, y_test = load_dataset(test_file)
    if X_test.shape[0] == 0:
        raise ValueError(f"test file {test_file} has no rows")
    mask = get_mask(model.schema_id)
    predictions: dict[str, list[int | None]] = dict(baseline_predictions(X_test))
    predictions[METHOD_NN] = [int(k) for k in model.predict_batch(apply_mask(X_test, mask))]
    lengths = X_test[:, analysis.FEATURE_GROUPS["length"][0]].astype(int)
    return evaluate_predictions(predictions, y_test, lengths)


def train_model(
    train_file: str | Path,
    mask: FeatureMask,
    config: nn.TrainConfig,
) -> tuple[nn.NetworkModel, nn.TrainHistory]:
    """Train the classifier on the masked columns of a train file."""
    X_train, y_train = load_dataset(train_file)
    return nn.train(apply_mask(X_train, mask), y_train, config, schema_id=mask.name)


def run_experiment(
    train_file: str | Path,
    test_file: str | Path,
    mask: FeatureMask,
    config: nn.TrainConfig,
) -> tuple[EvaluationReport, nn.NetworkModel]:
    model, _ = train_model(train_file, mask, config)
    return evaluate_model(model, test_file), model


# ---------------------------
# Report rendering
# ---------------------------

_DISPLAY = {
    estimators.METHOD_IC: "IC",
    estimators.METHOD_TWIST: "Twist",
    estimators.METHOD_TWIST_PLUS: "T+",
    estimators.METHOD_TWIST_PLUS_PLUS: "T++",
    METHOD_NN: "NN",
}


def summary_table(report: EvaluationReport) -> str:
    """Human-readable accuracy grid, one row per length bucket, 0.1% steps."""
    methods = report.methods
    header = ["Text-Length/Method"] + [_DISPLAY.get(m, m) for m in methods]
    rows = [[OVERALL] + [f"{100.0 * report.overall[m]:.1f}%" for m in methods]]
    for name, _, _ in LENGTH_BUCKETS:
        accs = report.by_bucket.get(name, {})
        rows.append(
            [name]
            + [
                f"{100.0 * accs[m]:.1f}%" if m in accs else "n/a"
                for m in methods
            ]
        )
    widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]
    lines = []
    for row in [header] + rows:
        cells = [row[0].ljust(widths[0])]
        cells += [row[c].rjust(widths[c]) for c in range(1, len(row))]
        lines.append("  ".join(cells))
    return "\n".join(lines)


def write_summary_csv(report: EvaluationReport, path: str | Path) -> None:
    """Machine-readable version of the summary grid, full precision."""
    lines = ["bucket," + ",".join(report.methods)]
    lines.append(
        OVERALL + "," + ",".join(repr(float(report.overall[m])) for m in report.methods)
    )
    for name, _, _ in LENGTH_BUCKETS:
        accs = report.by_bucket.get(name, {})
        cells = [repr(float(accs[m])) if m in accs else "" for m in report.methods]
        lines.append(name + "," + ",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_curves_csv(report: EvaluationReport, path: str | Path) -> None:
    """Per-key-length accuracy curves: 23 rows per method per bucket group."""
    lines = ["bucket,method,key_length,accuracy,count"]
    ks = list(range(cipher.MIN_KEY_LEN, cipher.MAX_KEY_LEN + 1))
    for gname in [OVERALL] + [name for name, _, _ in LENGTH_BUCKETS]:
        for m in report.methods:
            accs = report.by_key_length[gname][m]
            counts = report.key_length_counts[gname]
            for k, acc, cnt in zip(ks, accs, counts):
                cell = "" if acc is None else repr(float(acc))
                lines.append(f"{gname},{m},{k},{cell},{cnt}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def compare_methods(
    report: EvaluationReport,
    summary_csv: str | Path | None = None,
    curves_csv: str | Path | None = None,
) -> str:
    """Render the accuracy comparison; optionally write both CSV artifacts."""
    if summary_csv is not None:
        write_summary_csv(report, summary_csv)
    if curves_csv is not None:
        write_curves_csv(report, curves_csv)
    return summary_table(report)
