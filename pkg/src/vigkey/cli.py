"""Command-line front end: generate, train, evaluate, predict, baselines.

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.  Seeds are
mandatory for the stochastic subcommands; machine-readable artifacts go to
files while stdout carries only human-readable summaries.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, corpus, estimators, nn, pipeline

_METHOD_FLAGS = {
    "ic": estimators.METHOD_IC,
    "twist": estimators.METHOD_TWIST,
    "tplus": estimators.METHOD_TWIST_PLUS,
    "tplusplus": estimators.METHOD_TWIST_PLUS_PLUS,
}


def _methods_arg(raw: str) -> list[str]:
    methods = []
    for name in raw.split(","):
        name = name.strip()
        if name not in _METHOD_FLAGS:
            raise argparse.ArgumentTypeError(
                f"unknown method {name!r}; choose from {', '.join(_METHOD_FLAGS)}"
            )
        methods.append(_METHOD_FLAGS[name])
    return methods


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vigkey",
        description="Vigenere key-length prediction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a train/test feature dataset")
    g.add_argument("corpus_dir", help="directory of plaintext files")
    g.add_argument("out_dir", help="output directory for dataset files")
    g.add_argument("--quota", type=int, required=True,
                   help="combined train+test samples per text length")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--test-fraction", type=float, default=0.2)
    g.add_argument("--wordlist", default=None,
                   help="lexicon file enabling wordlist-derived keys")
    g.add_argument("--key-mode-ratio", type=float, default=0.5,
                   help="fraction of keys built from the wordlist")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train the neural classifier")
    t.add_argument("train_file", help="dataset CSV in the full schema")
    t.add_argument("--mask", choices=sorted(pipeline.MASKS), default="FINAL")
    t.add_argument("--epochs", type=int, default=10)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("-o", "--output", default="model.json")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="score a model and the baselines")
    e.add_argument("model_file")
    e.add_argument("test_file", help="dataset CSV in the full schema")
    e.add_argument("-o", "--output", default="report.json")
    e.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict one ciphertext's key length")
    p.add_argument("model_file")
    p.add_argument("--text", required=True,
                   help="ciphertext literal, or a path to a file holding it")
    p.set_defaults(func=cmd_predict)

    b = sub.add_parser("baselines", help="run classical estimators")
    b.add_argument("input", help="dataset CSV, or a raw ciphertext literal")
    b.add_argument("--methods", type=_methods_arg,
                   default=list(_METHOD_FLAGS.values()),
                   help="comma-separated subset of: " + ", ".join(_METHOD_FLAGS))
    b.add_argument("-o", "--output", required=True, help="predictions CSV path")
    b.set_defaults(func=cmd_baselines)

    return parser


def cmd_generate(args: argparse.Namespace) -> int:
    config = pipeline.DatasetConfig(
        quota_per_length=args.quota,
        seed=args.seed,
        test_fraction=args.test_fraction,
        key_mode_ratio=args.key_mode_ratio,
        wordlist_path=args.wordlist,
    )
    manifest = pipeline.build_dataset(args.corpus_dir, args.out_dir, config)
    print(
        f"train samples: {manifest.train_samples} "
        f"({len(manifest.train_documents)} documents)"
    )
    print(
        f"test samples: {manifest.test_samples} "
        f"({len(manifest.test_documents)} documents)"
    )
    for warning in manifest.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote {pipeline.TRAIN_FILE}, {pipeline.TEST_FILE}, "
          f"{pipeline.MANIFEST_FILE}, {pipeline.SCHEMA_FILE} to {args.out_dir}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    mask = pipeline.get_mask(args.mask)
    config = nn.TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, seed=args.seed
    )
    model, history = pipeline.train_model(args.train_file, mask, config)
    nn.save_model(model, args.output)
    history_path = Path(args.output).with_suffix(".history.json")
    history_path.write_text(
        json.dumps(
            {
                "train_loss": history.train_loss,
                "train_accuracy": history.train_accuracy,
                "val_accuracy": history.val_accuracy,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"mask {mask.name}: {mask.width} input features")
    print(
        f"epoch {config.epochs}: train loss {history.train_loss[-1]:.4f}, "
        f"validation accuracy {history.val_accuracy[-1]:.4f}"
    )
    print(f"wrote {args.output} and {history_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    model = nn.load_model(args.model_file)
    report = pipeline.evaluate_model(model, args.test_file)
    report.save(args.output)
    summary_csv = Path(args.output).with_suffix(".summary.csv")
    curves_csv = Path(args.output).with_suffix(".curves.csv")
    print(pipeline.compare_methods(report, summary_csv, curves_csv))
    print(f"wrote {args.output}, {summary_csv}, {curves_csv}")
    return 0


def _is_existing_file(raw: str) -> bool:
    try:
        return Path(raw).is_file()
    except OSError:
        # A ciphertext literal can exceed the filesystem's name limit, which
        # makes the probe itself fail; treat it as a literal.
        return False


def _read_ciphertext(raw: str) -> str:
    text = Path(raw).read_text(encoding="utf-8") if _is_existing_file(raw) else raw
    cleaned = corpus.clean_text(text)
    dropped = len(text) - len(cleaned)
    if dropped:
        print(f"warning: dropped {dropped} non-letter characters", file=sys.stderr)
    if len(cleaned) < 2:
        raise ValueError("ciphertext needs at least 2 letters")
    return cleaned


def cmd_predict(args: argparse.Namespace) -> int:
    model = nn.load_model(args.model_file)
    cleaned = _read_ciphertext(args.text)
    features = analysis.feature_vector(cleaned).values
    mask = pipeline.get_mask(model.schema_id)
    probs = model.predict_proba(pipeline.apply_mask(features, mask))[0]
    top = np.argsort(-probs, kind="stable")[:3]
    print(f"predicted key length: {nn.class_to_key_length(int(top[0]))}")
    print(
        "top classes: "
        + ", ".join(
            f"k={nn.class_to_key_length(int(i))} p={probs[i]:.4f}" for i in top
        )
    )
    return 0


def _baseline_rows_for_text(text: str, methods: list[str]) -> list[tuple]:
    by_method = {
        estimators.METHOD_IC: lambda: estimators.estimate_ic(text),
        estimators.METHOD_TWIST: lambda: estimators.estimate_twist(text),
        estimators.METHOD_TWIST_PLUS: lambda: estimators.estimate_twist_plus(text),
        estimators.METHOD_TWIST_PLUS_PLUS: lambda: estimators.estimate_twist_plus_plus(
            text
        ),
    }
    return [(0, by_method[m](), None) for m in methods]


def _baseline_rows_for_dataset(
    path: str, methods: list[str]
) -> list[tuple]:
    X, y = pipeline.load_dataset(path)
    by_method = {
        estimators.METHOD_IC: estimators.estimate_ic_from_features,
        estimators.METHOD_TWIST: estimators.estimate_twist_from_features,
        estimators.METHOD_TWIST_PLUS: estimators.estimate_twist_plus_from_features,
        estimators.METHOD_TWIST_PLUS_PLUS: (
            estimators.estimate_twist_plus_plus_from_features
        ),
    }
    rows = []
    for i, row in enumerate(X):
        for m in methods:
            rows.append((i, by_method[m](row), int(y[i])))
    return rows


def cmd_baselines(args: argparse.Namespace) -> int:
    if _is_existing_file(args.input):
        rows = _baseline_rows_for_dataset(args.input, args.methods)
    else:
        rows = _baseline_rows_for_text(_read_ciphertext(args.input), args.methods)
    lines = ["sample_id,method,predicted_k,true_k,score"]
    for sample_id, pred, true_k in rows:
        k_cell = "" if pred.predicted_k is None else str(pred.predicted_k)
        true_cell = "" if true_k is None else str(true_k)
        score_cell = "" if pred.score is None else repr(float(pred.score))
        lines.append(f"{sample_id},{pred.method},{k_cell},{true_cell},{score_cell}")
    Path(args.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} predictions to {args.output}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
