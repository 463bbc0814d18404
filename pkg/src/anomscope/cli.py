"""Command line interface: train, predict, eval, and features subcommands.

Exit codes: 0 on success, 1 for invalid input (bad files, bad flags, bad
config), 2 for internal errors. Output files are written atomically via a
temp file and rename, so failed runs never leave partial outputs.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from pathlib import Path

from .errors import AnomscopeError
from .frames import load_frames, load_sequence, read_label_rows
from .mlp import load_model, model_to_text, predict, train
from .pipeline import (
    PipelineConfig,
    evaluate,
    extract_features,
    load_config,
    read_predictions,
    render_predictions,
    render_report,
    render_report_csv,
)


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, matching our exit codes."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename so readers never see partials."""
    target = Path(path)
    if target.parent and not target.parent.is_dir():
        raise AnomscopeError(f"output directory does not exist: {target.parent}")
    fd, tmp_name = tempfile.mkstemp(
        prefix=target.name + ".", suffix=".tmp", dir=target.parent or "."
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _config_from_args(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return PipelineConfig()


def cmd_train(args) -> int:
    config = _config_from_args(args)
    sequence = load_sequence(args.frames, args.labels)
    features = extract_features(sequence, config)
    dataset = list(zip(features, sequence.labels))
    model, history = train(dataset, config.train)
    print("epoch,mean_cost")
    for epoch, mean_cost in enumerate(history):
        print(f"{epoch},{mean_cost!r}")
    _atomic_write_text(args.out, model_to_text(model))
    return 0


def cmd_predict(args) -> int:
    config = _config_from_args(args)
    model = load_model(args.model)
    frames, _names = load_frames(args.frames)
    features = extract_features(frames, config)
    expected = model.layer_sizes[0]
    if features and features[0].size != expected:
        raise AnomscopeError(
            f"feature length {features[0].size} does not match the model's input "
            f"length {expected}; was the model trained with a different "
            f"scale/grid configuration?"
        )
    results = [
        predict(model, vec, config.decision_threshold, frame_index=i)
        for i, vec in enumerate(features)
    ]
    _atomic_write_text(args.out, render_predictions(results))
    return 0


def cmd_eval(args) -> int:
    preds = args.pred or []
    truths = args.truth or []
    if len(preds) != len(truths):
        raise AnomscopeError(
            f"need one --truth per --pred, got {len(preds)} predictions "
            f"and {len(truths)} truths"
        )
    if not preds:
        raise AnomscopeError("need at least one --pred/--truth pair")
    triples = []
    for i, (pred_path, truth_path) in enumerate(zip(preds, truths), start=1):
        predictions = read_predictions(pred_path)
        truth = read_label_rows(truth_path)
        predicted_labels = {idx: r.label for idx, r in predictions.items()}
        triples.append((f"S{i}", predicted_labels, truth))
    report = evaluate(triples)
    text = render_report(report)
    _atomic_write_text(args.out, text)
    _atomic_write_text(str(args.out) + ".csv", render_report_csv(report))
    print(text, end="")
    return 0


def cmd_features(args) -> int:
    config = _config_from_args(args)
    frames, _names = load_frames(args.frames)
    features = extract_features(frames, config)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    width = features[0].size
    writer.writerow(["frame_index"] + [f"f{j}" for j in range(width)])
    for i, vec in enumerate(features):
        writer.writerow([i] + [repr(float(v)) for v in vec])
    _atomic_write_text(args.out, buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="anomscope",
        description=(
            "Frame-based anomaly detection: multi-scale blob and local texture "
            "features classified by a small neural network."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model on labeled frames")
    p_train.add_argument("--frames", required=True, help="directory of .pgm/.png frames")
    p_train.add_argument("--labels", required=True, help="frame_index,label CSV")
    p_train.add_argument("--config", help="key = value config file (optional)")
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.set_defaults(func=cmd_train)

    p_pred = sub.add_parser("predict", help="score frames with a trained model")
    p_pred.add_argument("--frames", required=True, help="directory of .pgm/.png frames")
    p_pred.add_argument("--model", required=True, help="model file from train")
    p_pred.add_argument("--config", help="config file; must match the one used to train")
    p_pred.add_argument("--out", required=True, help="frame_index,score,label CSV to write")
    p_pred.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("eval", help="compare predictions against truth labels")
    p_eval.add_argument(
        "--pred", action="append", help="predictions CSV (repeat per sequence)"
    )
    p_eval.add_argument(
        "--truth", action="append", help="truth labels CSV (repeat per sequence)"
    )
    p_eval.add_argument("--out", required=True, help="report file to write (CSV twin at <out>.csv)")
    p_eval.set_defaults(func=cmd_eval)

    p_feat = sub.add_parser("features", help="dump fused per-frame feature vectors")
    p_feat.add_argument("--frames", required=True, help="directory of .pgm/.png frames")
    p_feat.add_argument("--config", help="key = value config file (optional)")
    p_feat.add_argument("--out", required=True, help="feature CSV to write")
    p_feat.set_defaults(func=cmd_features)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1
    except AnomscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
