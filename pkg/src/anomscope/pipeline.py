"""End-to-end plumbing: configuration, feature extraction, and evaluation.

Predictions and labels are joined per frame index; precision, recall, and
F-score are computed at frame granularity for each sequence, and the report
averages the per-sequence F-scores.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AnomscopeError
from .frames import LabeledSequence
from .lbp import lbp_descriptor
from .mlp import DetectionResult, TrainConfig, fuse
from .scalespace import (
    DEFAULT_EXTREMUM_THRESHOLD,
    DEFAULT_SCALES,
    _validated_scales,
    log_descriptor,
)

PREDICTIONS_HEADER = ("frame_index", "score", "label")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the feature extractor and classifier need."""

    scales: tuple[float, ...] = DEFAULT_SCALES
    log_grid: tuple[int, int] = (4, 4)
    lbp_grid: tuple[int, int] = (4, 4)
    extremum_threshold: float = DEFAULT_EXTREMUM_THRESHOLD
    decision_threshold: float = 0.5
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        object.__setattr__(self, "scales", _validated_scales(self.scales))
        for name in ("log_grid", "lbp_grid"):
            grid = tuple(int(v) for v in getattr(self, name))
            if len(grid) != 2 or grid[0] < 1 or grid[1] < 1:
                raise AnomscopeError(f"{name} must be two positive integers, got {grid}")
            object.__setattr__(self, name, grid)
        if not (math.isfinite(self.extremum_threshold) and self.extremum_threshold >= 0.0):
            raise AnomscopeError(
                f"extremum_threshold must be >= 0, got {self.extremum_threshold!r}"
            )
        if not (0.0 <= self.decision_threshold <= 1.0):
            raise AnomscopeError(
                f"decision_threshold must be in [0, 1], got {self.decision_threshold!r}"
            )


def extract_features(frames, config: PipelineConfig = PipelineConfig()) -> list[np.ndarray]:
    """Fused blob + texture descriptor for every frame, in order.

    ``frames`` is a LabeledSequence or any iterable of Frame objects.
    """
    if isinstance(frames, LabeledSequence):
        frames = frames.frames
    out = []
    for frame in frames:
        blob = log_descriptor(
            frame, config.scales, config.log_grid, config.extremum_threshold
        )
        texture = lbp_descriptor(frame, config.lbp_grid)
        out.append(fuse(blob, texture))
    return out


def feature_length(config: PipelineConfig) -> int:
    """Descriptor length implied by a config (independent of frame size)."""
    n = len(config.scales)
    log_len = n * config.log_grid[0] * config.log_grid[1] * 4 + n
    lbp_len = config.lbp_grid[0] * config.lbp_grid[1] * 59
    return log_len + lbp_len


def f_score(tp: int, fp: int, fn: int) -> float:
    """F1 from frame counts; precision or recall with a 0 denominator is 0."""
    for name, v in (("tp", tp), ("fp", fp), ("fn", fn)):
        if not (isinstance(v, (int, np.integer)) and v >= 0):
            raise AnomscopeError(f"{name} must be a non-negative integer, got {v!r}")
    if tp + fp + fn == 0:
        raise AnomscopeError("F-score is undefined when tp, fp, and fn are all zero")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class SequenceEval:
    """Frame-level confusion counts and scores for one sequence."""

    name: str
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f_score: float


@dataclass(frozen=True)
class EvalReport:
    sequences: tuple[SequenceEval, ...]
    average_f: float


def evaluate_sequence(name: str, predicted: dict[int, int], truth: dict[int, int]) -> SequenceEval:
    """Join per-frame predictions and truth on frame index and count outcomes."""
    if predicted.keys() != truth.keys():
        only_pred = sorted(predicted.keys() - truth.keys())
        only_truth = sorted(truth.keys() - predicted.keys())
        raise AnomscopeError(
            f"sequence {name}: prediction and truth frame indexes differ "
            f"(only in predictions: {only_pred[:5]}, only in truth: {only_truth[:5]})"
        )
    tp = fp = fn = tn = 0
    for idx, pred in predicted.items():
        actual = truth[idx]
        if pred == 1 and actual == 1:
            tp += 1
        elif pred == 1 and actual == 0:
            fp += 1
        elif pred == 0 and actual == 1:
            fn += 1
        else:
            tn += 1
    if tp + fp + fn + tn != len(predicted):
        raise AnomscopeError(f"sequence {name}: confusion counts do not cover all frames")
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return SequenceEval(
        name=name,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        precision=precision,
        recall=recall,
        f_score=f_score(tp, fp, fn),
    )


def evaluate(named_pairs) -> EvalReport:
    """Evaluate (name, predicted, truth) triples and average the F-scores."""
    triples = list(named_pairs)
    if not triples:
        raise AnomscopeError("nothing to evaluate: no sequences given")
    sequences = tuple(evaluate_sequence(n, p, t) for n, p, t in triples)
    average = float(np.mean([s.f_score for s in sequences]))
    return EvalReport(sequences=sequences, average_f=average)


def render_report(report: EvalReport) -> str:
    """Human-readable per-sequence table plus the average F-score line.

    Metrics are frame-level: each frame counts once toward the confusion
    counts of its sequence. Values are printed at 6 decimals.
    """
    name_w = max(8, *(len(s.name) for s in report.sequences))
    header = (
        f"{'Sequence':<{name_w}}  {'TP':>5} {'FP':>5} {'FN':>5} {'TN':>5}  "
        f"{'Precision':>9}  {'Recall':>9}  {'F-score':>9}"
    )
    lines = [
        "Frame-level anomaly detection report",
        "Positive class: anomalous frames (label 1)",
        "",
        header,
        "-" * len(header),
    ]
    for s in report.sequences:
        lines.append(
            f"{s.name:<{name_w}}  {s.tp:>5} {s.fp:>5} {s.fn:>5} {s.tn:>5}  "
            f"{s.precision:>9.6f}  {s.recall:>9.6f}  {s.f_score:>9.6f}"
        )
    lines.append("-" * len(header))
    lines.append(f"Average F-score: {report.average_f:.6f}")
    return "\n".join(lines) + "\n"


def render_report_csv(report: EvalReport) -> str:
    """Machine-readable counterpart of the report, full float precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sequence", "tp", "fp", "fn", "tn", "precision", "recall", "f_score"])
    for s in report.sequences:
        writer.writerow(
            [s.name, s.tp, s.fp, s.fn, s.tn, repr(s.precision), repr(s.recall), repr(s.f_score)]
        )
    writer.writerow(["average", "", "", "", "", "", "", repr(report.average_f)])
    return buf.getvalue()


def render_predictions(results) -> str:
    """Render per-frame results as frame_index,score,label CSV (score at 6 dp)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PREDICTIONS_HEADER)
    for r in results:
        writer.writerow([r.frame_index, f"{r.score:.6f}", r.label])
    return buf.getvalue()


def read_predictions(path) -> dict[int, DetectionResult]:
    """Parse a frame_index,score,label CSV back into per-frame results."""
    p = Path(path)
    if not p.is_file():
        raise AnomscopeError(f"predictions file not found: {p}")
    with open(p, newline="", encoding="utf-8-sig") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows or tuple(c.strip() for c in rows[0]) != PREDICTIONS_HEADER:
        raise AnomscopeError(
            f"predictions file {p} must start with header 'frame_index,score,label'"
        )
    out: dict[int, DetectionResult] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise AnomscopeError(f"{p}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            idx = int(row[0].strip())
            score = float(row[1].strip())
            label = int(row[2].strip())
        except ValueError:
            raise AnomscopeError(f"{p}:{lineno}: malformed prediction row") from None
        if idx < 0:
            raise AnomscopeError(f"{p}:{lineno}: frame_index must be >= 0, got {idx}")
        if not (math.isfinite(score) and 0.0 <= score <= 1.0):
            raise AnomscopeError(f"{p}:{lineno}: score must be in [0, 1], got {row[1]}")
        if label not in (0, 1):
            raise AnomscopeError(f"{p}:{lineno}: label must be 0 or 1, got {label}")
        if idx in out:
            raise AnomscopeError(f"{p}:{lineno}: duplicate frame_index {idx}")
        out[idx] = DetectionResult(frame_index=idx, score=score, label=label)
    if not out:
        raise AnomscopeError(f"predictions file {p} has no rows")
    return out


# --- configuration files ---------------------------------------------------

_CONFIG_KEYS = (
    "scales",
    "log_grid",
    "lbp_grid",
    "extremum_threshold",
    "decision_threshold",
    "mlp.eta",
    "mlp.epochs",
    "mlp.hidden_sizes",
    "mlp.seed",
    "mlp.shuffle",
)


def _parse_grid(value: str, key: str) -> tuple[int, int]:
    parts = value.lower().split("x")
    try:
        if len(parts) != 2:
            raise ValueError
        return (int(parts[0].strip()), int(parts[1].strip()))
    except ValueError:
        raise AnomscopeError(
            f"config key {key}: expected ROWSxCOLS (e.g. 4x4), got {value!r}"
        ) from None


def _parse_number(value: str, key: str, kind) -> float | int:
    try:
        return kind(value.strip())
    except ValueError:
        raise AnomscopeError(
            f"config key {key}: expected {kind.__name__}, got {value!r}"
        ) from None


def _parse_bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v == "true":
        return True
    if v == "false":
        return False
    raise AnomscopeError(f"config key {key}: expected true or false, got {value!r}")


def parse_config(text: str, source="<string>") -> PipelineConfig:
    """Parse `key = value` lines; '#' comments and blank lines are ignored.

    Unknown and duplicate keys are rejected; missing keys keep their defaults.
    """
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise AnomscopeError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise AnomscopeError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in seen:
            raise AnomscopeError(f"{source}:{lineno}: duplicate config key {key!r}")
        seen[key] = value

    cfg_kwargs = {}
    train_kwargs = {}
    for key, value in seen.items():
        if key == "scales":
            try:
                cfg_kwargs["scales"] = tuple(float(v.strip()) for v in value.split(","))
            except ValueError:
                raise AnomscopeError(
                    f"config key scales: expected comma-separated numbers, got {value!r}"
                ) from None
        elif key == "log_grid":
            cfg_kwargs["log_grid"] = _parse_grid(value, key)
        elif key == "lbp_grid":
            cfg_kwargs["lbp_grid"] = _parse_grid(value, key)
        elif key == "extremum_threshold":
            cfg_kwargs["extremum_threshold"] = _parse_number(value, key, float)
        elif key == "decision_threshold":
            cfg_kwargs["decision_threshold"] = _parse_number(value, key, float)
        elif key == "mlp.eta":
            train_kwargs["eta"] = _parse_number(value, key, float)
        elif key == "mlp.epochs":
            train_kwargs["epochs"] = _parse_number(value, key, int)
        elif key == "mlp.seed":
            train_kwargs["seed"] = _parse_number(value, key, int)
        elif key == "mlp.shuffle":
            train_kwargs["shuffle"] = _parse_bool(value, key)
        elif key == "mlp.hidden_sizes":
            try:
                train_kwargs["hidden_sizes"] = tuple(
                    int(v.strip()) for v in value.split(",")
                )
            except ValueError:
                raise AnomscopeError(
                    f"config key mlp.hidden_sizes: expected comma-separated "
                    f"integers, got {value!r}"
                ) from None
    return PipelineConfig(train=TrainConfig(**train_kwargs), **cfg_kwargs)


def serialize_config(config: PipelineConfig) -> str:
    """Config as `key = value` text; parse_config(serialize_config(c)) == c."""
    lines = [
        f"scales = {', '.join(repr(s) for s in config.scales)}",
        f"log_grid = {config.log_grid[0]}x{config.log_grid[1]}",
        f"lbp_grid = {config.lbp_grid[0]}x{config.lbp_grid[1]}",
        f"extremum_threshold = {config.extremum_threshold!r}",
        f"decision_threshold = {config.decision_threshold!r}",
        f"mlp.eta = {config.train.eta!r}",
        f"mlp.epochs = {config.train.epochs}",
        f"mlp.hidden_sizes = {', '.join(str(h) for h in config.train.hidden_sizes)}",
        f"mlp.seed = {config.train.seed}",
        f"mlp.shuffle = {'true' if config.train.shuffle else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def load_config(path) -> PipelineConfig:
    p = Path(path)
    if not p.is_file():
        raise AnomscopeError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"), source=str(p))
