"""Tests for dataset building, feature masks, and evaluation reports."""

from __future__ import annotations

import filecmp
import random

import numpy as np
import pytest

from vigkey import estimators, nn
from vigkey.analysis import ALL_FEATURE_COUNT, FINAL_INDICES, SCHEMA_ALL, feature_vector
from vigkey.pipeline import (
    BASELINE_METHODS,
    DATASET_HEADER,
    LENGTH_BUCKETS,
    MASKS,
    METHOD_NN,
    OVERALL,
    DatasetConfig,
    DatasetManifest,
    EvaluationReport,
    FeatureMask,
    apply_mask,
    baseline_predictions,
    build_dataset,
    compare_methods,
    evaluate_model,
    evaluate_predictions,
    extract_features,
    get_mask,
    load_dataset,
    run_experiment,
    summary_table,
    train_model,
    worker_count,
    write_curves_csv,
    write_dataset_csv,
    write_summary_csv,
)
from vigkey.seeding import derive_rng, derive_seed

EXPECTED_MASK_WIDTHS = {
    "MODEL_1": 114,
    "MODEL_2": 112,
    "MODEL_3": 113,
    "MODEL_4": 112,
    "MODEL_5": 111,
    "MODEL_6": 112,
    "MODEL_7": 102,
    "MODEL_8": 79,
    "MODEL_9": 54,
    "MODEL_10": 30,
    "MODEL_11": 30,
    "FINAL": 77,
}


def tiny_config(**overrides) -> nn.TrainConfig:
    defaults = dict(epochs=2, batch_size=16, hidden_dims=(16,), seed=5)
    defaults.update(overrides)
    return nn.TrainConfig(**defaults)


# ---------------------------
# Seed derivation
# ---------------------------


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(1, "split") == derive_seed(1, "split")
    assert derive_seed(1, "split") != derive_seed(2, "split")
    assert derive_seed(1, "split") != derive_seed(1, "segment")
    assert derive_rng(7, "key", "doc", 0).random() == derive_rng(7, "key", "doc", 0).random()


# ---------------------------
# Feature masks
# ---------------------------


def test_mask_widths_match_model_table():
    assert {name: mask.width for name, mask in MASKS.items()} == EXPECTED_MASK_WIDTHS


def test_model_1_is_identity():
    assert get_mask("MODEL_1").indices == tuple(range(114))
    assert get_mask(SCHEMA_ALL).indices == tuple(range(114))


def test_final_mask_matches_schema_indices():
    assert list(get_mask("FINAL").indices) == FINAL_INDICES


def test_masks_are_valid_column_selections():
    for mask in MASKS.values():
        assert mask.indices == tuple(sorted(set(mask.indices)))
        assert 0 <= mask.indices[0] and mask.indices[-1] < ALL_FEATURE_COUNT


def test_get_mask_unknown_name():
    with pytest.raises(ValueError):
        get_mask("MODEL_99")


def test_feature_mask_validation():
    with pytest.raises(ValueError):
        FeatureMask("empty", ())
    with pytest.raises(ValueError):
        FeatureMask("dup", (3, 3))
    with pytest.raises(ValueError):
        FeatureMask("disorder", (5, 2))
    with pytest.raises(ValueError):
        FeatureMask("range", (0, 114))


def test_apply_mask_projects_columns():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 114))
    assert np.array_equal(apply_mask(X, get_mask("MODEL_1")), X)
    final = apply_mask(X, get_mask("FINAL"))
    assert final.shape == (6, 77)
    assert np.array_equal(final, X[:, FINAL_INDICES])


def test_apply_mask_rejects_wrong_width():
    with pytest.raises(ValueError):
        apply_mask(np.zeros((3, 77)), get_mask("FINAL"))


# ---------------------------
# Feature extraction
# ---------------------------


def test_extract_features_preserves_order():
    rng = random.Random(1)
    texts = [
        "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ") for _ in range(rng.randrange(200, 300)))
        for _ in range(6)
    ]
    X = extract_features(texts)
    assert X.shape == (6, 114)
    for i, text in enumerate(texts):
        assert np.array_equal(X[i], feature_vector(text, SCHEMA_ALL).values)


def test_extract_features_empty_input():
    assert extract_features([]).shape == (0, 114)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("VIGKEY_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("VIGKEY_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("VIGKEY_THREADS", "abc")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.setenv("VIGKEY_THREADS", "-2")
    with pytest.raises(ValueError):
        worker_count()


# ---------------------------
# Dataset building
# ---------------------------


def test_dataset_config_validation():
    with pytest.raises(ValueError):
        DatasetConfig(quota_per_length=0, seed=1)
    with pytest.raises(ValueError):
        DatasetConfig(quota_per_length=1, seed=1, test_fraction=1.0)
    with pytest.raises(ValueError):
        DatasetConfig(quota_per_length=1, seed=1, key_mode_ratio=1.5)


def test_build_dataset_artifacts(tiny_dataset):
    out_dir, manifest = tiny_dataset
    for name in ("train.csv", "test.csv", "manifest.json", "feature_schema.json"):
        assert (out_dir / name).is_file()
    X_train, y_train = load_dataset(out_dir / "train.csv")
    X_test, y_test = load_dataset(out_dir / "test.csv")
    assert X_train.shape == (manifest.train_samples, 114)
    assert X_test.shape == (manifest.test_samples, 114)
    assert set(y_train) <= set(range(3, 26))
    assert set(y_test) <= set(range(3, 26))
    lengths = X_train[:, 0]
    assert ((lengths >= 200) & (lengths <= 500)).all()


def test_build_dataset_document_split_is_disjoint(tiny_dataset):
    _, manifest = tiny_dataset
    assert manifest.train_documents
    assert manifest.test_documents
    assert not set(manifest.train_documents) & set(manifest.test_documents)


def test_build_dataset_manifest_counts(tiny_dataset):
    out_dir, manifest = tiny_dataset
    _, y_train = load_dataset(out_dir / "train.csv")
    assert sum(c for _, c in manifest.train_key_length_counts) == manifest.train_samples
    pairs = {k: c for k, c in manifest.train_key_length_counts}
    values, counts = np.unique(y_train, return_counts=True)
    assert pairs == {int(v): int(c) for v, c in zip(values, counts)}
    reloaded = DatasetManifest.load(out_dir / "manifest.json")
    assert reloaded == manifest


def test_build_dataset_reproducible(tiny_dataset, small_corpus_dir, tmp_path):
    out_dir, _ = tiny_dataset
    again = tmp_path / "again"
    build_dataset(small_corpus_dir, again, DatasetConfig(quota_per_length=4, seed=4242))
    for name in ("train.csv", "test.csv", "manifest.json"):
        assert filecmp.cmp(out_dir / name, again / name, shallow=False), name


def test_build_dataset_different_seed_changes_output(small_corpus_dir, tmp_path):
    other = tmp_path / "other"
    manifest = build_dataset(
        small_corpus_dir, other, DatasetConfig(quota_per_length=4, seed=1)
    )
    baseline = build_dataset(
        small_corpus_dir, tmp_path / "base", DatasetConfig(quota_per_length=4, seed=2)
    )
    assert (
        manifest.train_documents != baseline.train_documents
        or not filecmp.cmp(other / "train.csv", tmp_path / "base" / "train.csv", shallow=False)
    )


def test_build_dataset_rejects_empty_corpus(tmp_path):
    empty = tmp_path / "corpus"
    empty.mkdir()
    with pytest.raises(ValueError):
        build_dataset(empty, tmp_path / "out", DatasetConfig(quota_per_length=1, seed=0))


def test_dataset_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    features = rng.normal(size=(5, 114)) * rng.choice([1e-8, 1.0, 1e6], size=(5, 114))
    labels = [3, 10, 25, 7, 14]
    path = tmp_path / "data.csv"
    write_dataset_csv(path, labels, features)
    X, y = load_dataset(path)
    assert np.array_equal(X, features)
    assert list(y) == labels
    assert path.read_text().splitlines()[0] == DATASET_HEADER


def test_load_dataset_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,f0\n3,1.0\n")
    with pytest.raises(ValueError):
        load_dataset(path)


# ---------------------------
# Evaluation
# ---------------------------


def fabricated_report() -> EvaluationReport:
    y_true = np.array([3, 4, 5, 6, 3, 4, 7, 8])
    lengths = np.array([250, 260, 270, 280, 350, 360, 450, 460])
    predictions = {
        "ic": [3, 4, 5, 7, 3, 5, 7, 8],
        "nn": [3, 4, 5, 6, 3, 4, 7, None],
    }
    return evaluate_predictions(predictions, y_true, lengths)


def test_evaluate_predictions_accuracies():
    report = fabricated_report()
    assert report.test_samples == 8
    assert report.overall["ic"] == 6 / 8
    assert report.overall["nn"] == 7 / 8
    assert report.by_bucket["200-299"]["ic"] == 3 / 4
    assert report.by_bucket["300-399"]["ic"] == 1 / 2
    assert report.by_bucket["400-500"]["nn"] == 1 / 2
    assert report.bucket_counts == {"200-299": 4, "300-399": 2, "400-500": 2}


def test_evaluate_predictions_per_key_length():
    report = fabricated_report()
    ks = list(range(3, 26))
    ic_overall = report.by_key_length[OVERALL]["ic"]
    assert ic_overall[ks.index(3)] == 1.0
    assert ic_overall[ks.index(6)] == 0.0
    assert ic_overall[ks.index(25)] is None
    counts = report.key_length_counts[OVERALL]
    assert counts[ks.index(3)] == 2
    assert counts[ks.index(25)] == 0
    assert sum(counts) == 8


def test_evaluate_predictions_bucket_partition():
    report = fabricated_report()
    assert sum(report.bucket_counts.values()) == report.test_samples


def test_overall_is_weighted_bucket_mean():
    report = fabricated_report()
    for m in report.methods:
        weighted = sum(
            report.by_bucket[name][m] * report.bucket_counts[name]
            for name, _, _ in LENGTH_BUCKETS
        )
        assert report.overall[m] == pytest.approx(
            weighted / report.test_samples, abs=1e-12
        )


def test_evaluate_predictions_rejects_bad_input():
    with pytest.raises(ValueError):
        evaluate_predictions({"ic": []}, np.array([]), np.array([]))
    with pytest.raises(ValueError):
        evaluate_predictions({"ic": [3]}, np.array([3, 4]), np.array([250, 250]))


def test_report_round_trip(tmp_path):
    report = fabricated_report()
    path = tmp_path / "report.json"
    report.save(path)
    assert EvaluationReport.load(path) == report


def test_baseline_predictions_shape(tiny_dataset):
    out_dir, _ = tiny_dataset
    X, _ = load_dataset(out_dir / "test.csv")
    preds = baseline_predictions(X[:10])
    assert set(preds) == set(BASELINE_METHODS)
    for values in preds.values():
        assert len(values) == 10
    row = X[0]
    assert preds["ic"][0] == estimators.estimate_ic_from_features(row).predicted_k
    assert preds["twist"][0] == estimators.estimate_twist_from_features(row).predicted_k


# ---------------------------
# Training plus evaluation round trip
# ---------------------------


def test_run_experiment_report_structure(tiny_dataset):
    out_dir, _ = tiny_dataset
    report, model = run_experiment(
        out_dir / "train.csv", out_dir / "test.csv", get_mask("FINAL"), tiny_config()
    )
    assert model.layer_dims[0] == 77
    assert model.schema_id == "FINAL"
    assert report.methods == list(BASELINE_METHODS) + [METHOD_NN]
    assert sum(report.bucket_counts.values()) == report.test_samples
    for m, acc in report.overall.items():
        assert 0.0 <= acc <= 1.0


def test_run_experiment_deterministic(tiny_dataset):
    out_dir, _ = tiny_dataset
    args = (out_dir / "train.csv", out_dir / "test.csv", get_mask("MODEL_9"))
    report_a, model_a = run_experiment(*args, tiny_config())
    report_b, model_b = run_experiment(*args, tiny_config())
    assert report_a == report_b
    for Wa, Wb in zip(model_a.weights, model_b.weights):
        assert np.array_equal(Wa, Wb)


def test_masked_training_equals_projected_training(tiny_dataset):
    out_dir, _ = tiny_dataset
    mask = get_mask("FINAL")
    config = tiny_config()
    model_a, _ = train_model(out_dir / "train.csv", mask, config)
    X, y = load_dataset(out_dir / "train.csv")
    model_b, _ = nn.train(apply_mask(X, mask), y, config, schema_id=mask.name)
    for Wa, Wb in zip(model_a.weights, model_b.weights):
        assert np.array_equal(Wa, Wb)


def test_evaluate_model_uses_model_mask(tiny_dataset):
    out_dir, _ = tiny_dataset
    mask = get_mask("MODEL_10")
    model, _ = train_model(out_dir / "train.csv", mask, tiny_config())
    report = evaluate_model(model, out_dir / "test.csv")
    assert METHOD_NN in report.overall
    _, y_test = load_dataset(out_dir / "test.csv")
    assert report.test_samples == len(y_test)


# ---------------------------
# Rendering
# ---------------------------


def test_summary_table_layout():
    table = summary_table(fabricated_report())
    lines = table.splitlines()
    assert len(lines) == 5
    assert lines[0].split()[0] == "Text-Length/Method"
    assert lines[0].split()[1:] == ["IC", "NN"]
    assert lines[1].startswith(OVERALL)
    assert [line.split()[0] for line in lines[2:]] == [
        "200-299",
        "300-399",
        "400-500",
    ]
    assert "75.0%" in lines[1] and "87.5%" in lines[1]


def test_summary_csv_full_precision(tmp_path):
    report = fabricated_report()
    path = tmp_path / "summary.csv"
    write_summary_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bucket,ic,nn"
    overall = lines[1].split(",")
    assert overall[0] == OVERALL
    assert float(overall[1]) == report.overall["ic"]
    assert float(overall[2]) == report.overall["nn"]


def test_curves_csv_rows(tmp_path):
    report = fabricated_report()
    path = tmp_path / "curves.csv"
    write_curves_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bucket,method,key_length,accuracy,count"
    assert len(lines) == 1 + 4 * len(report.methods) * 23
    empty_cells = [line for line in lines[1:] if line.split(",")[3] == ""]
    assert empty_cells, "key lengths with no samples must serialize as empty"


def test_compare_methods_writes_artifacts(tmp_path):
    report = fabricated_report()
    table = compare_methods(
        report, summary_csv=tmp_path / "s.csv", curves_csv=tmp_path / "c.csv"
    )
    assert table == summary_table(report)
    assert (tmp_path / "s.csv").is_file()
    assert (tmp_path / "c.csv").is_file()
