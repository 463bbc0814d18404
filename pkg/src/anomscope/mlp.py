"""Feature fusion and a small sigmoid MLP trained with backpropagation.

Every unit uses the logistic sigmoid. Training minimizes the squared-error
cost E = 0.5 * sum((d - y)^2) with plain per-sample gradient descent:
each sample's gradients are applied immediately with step -eta. Features
are standardized (per-dimension mean and std) inside ``train``; the
standardization is stored on the model and applied again by ``predict``,
while ``forward`` consumes its input as-is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import AnomscopeError

MODEL_MAGIC = "ANOMSCOPE-MLP v1"
STD_FLOOR = 1e-8
DEFAULT_DECISION_THRESHOLD = 0.5


def fuse(log_vec, lbp_vec) -> np.ndarray:
    """Concatenate the blob descriptor and the texture descriptor."""
    a = np.asarray(log_vec, dtype=np.float64).ravel()
    b = np.asarray(lbp_vec, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise AnomscopeError("cannot fuse an empty feature vector")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise AnomscopeError("feature vectors must be finite")
    return np.concatenate([a, b])


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for ``train``."""

    eta: float = 0.1
    epochs: int = 200
    hidden_sizes: tuple[int, ...] = (64,)
    seed: int = 42
    shuffle: bool = True

    def __post_init__(self):
        if not (isinstance(self.eta, (int, float)) and 0.0 < self.eta <= 10.0):
            raise AnomscopeError(f"learning rate must be in (0, 10], got {self.eta!r}")
        if not (isinstance(self.epochs, int) and self.epochs >= 1):
            raise AnomscopeError(f"epochs must be a positive integer, got {self.epochs!r}")
        if len(self.hidden_sizes) < 1 or any(
            not (isinstance(n, int) and n >= 1) for n in self.hidden_sizes
        ):
            raise AnomscopeError(
                f"hidden_sizes must list at least one positive layer width, "
                f"got {self.hidden_sizes!r}"
            )


@dataclass(eq=False)
class MlpModel:
    """A fully connected sigmoid network with one output unit.

    ``weights[l]`` has shape (layer_sizes[l + 1], layer_sizes[l]) and
    ``biases[l]`` has shape (layer_sizes[l + 1],). ``feature_mean`` and
    ``feature_std`` standardize raw features before the first layer and are
    identity (0 / 1) until ``train`` fills them in.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 3:
            raise AnomscopeError(
                f"network needs at least one hidden layer, got sizes {sizes}"
            )
        if any(s < 1 for s in sizes):
            raise AnomscopeError(f"layer sizes must be >= 1, got {sizes}")
        if sizes[-1] != 1:
            raise AnomscopeError(f"output layer must have exactly 1 unit, got {sizes[-1]}")
        n_layers = len(sizes) - 1
        if not (len(self.weights) == len(self.biases) == n_layers):
            raise AnomscopeError(
                f"expected {n_layers} weight and bias arrays, got "
                f"{len(self.weights)} and {len(self.biases)}"
            )
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[l + 1], sizes[l]):
                raise AnomscopeError(
                    f"weights[{l}] shape {w.shape} does not match sizes "
                    f"({sizes[l + 1]}, {sizes[l]})"
                )
            if b.shape != (sizes[l + 1],):
                raise AnomscopeError(
                    f"biases[{l}] shape {b.shape} does not match size ({sizes[l + 1]},)"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise AnomscopeError("model parameters must be finite")
        if self.feature_mean.shape != (sizes[0],) or self.feature_std.shape != (sizes[0],):
            raise AnomscopeError(
                "feature_mean and feature_std must have one entry per input dimension"
            )
        if not (
            np.all(np.isfinite(self.feature_mean)) and np.all(np.isfinite(self.feature_std))
        ):
            raise AnomscopeError("feature standardization must be finite")
        if np.any(self.feature_std <= 0.0):
            raise AnomscopeError("feature_std entries must be positive")

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            feature_mean=self.feature_mean.copy(),
            feature_std=self.feature_std.copy(),
            seed=self.seed,
        )


@dataclass(frozen=True)
class DetectionResult:
    """Per-frame classifier output: sigmoid score and thresholded label."""

    frame_index: int
    score: float
    label: int


def init_model(n_inputs: int, hidden_sizes=(64,), seed: int = 42) -> MlpModel:
    """Fresh network: W ~ U[-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero."""
    if not (isinstance(n_inputs, (int, np.integer)) and n_inputs >= 1):
        raise AnomscopeError(f"input dimension must be >= 1, got {n_inputs!r}")
    sizes = (int(n_inputs), *[int(h) for h in hidden_sizes], 1)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for l in range(len(sizes) - 1):
        bound = 1.0 / math.sqrt(sizes[l])
        weights.append(rng.uniform(-bound, bound, size=(sizes[l + 1], sizes[l])))
        biases.append(np.zeros(sizes[l + 1], dtype=np.float64))
    return MlpModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        feature_mean=np.zeros(sizes[0], dtype=np.float64),
        feature_std=np.ones(sizes[0], dtype=np.float64),
        seed=int(seed),
    )


def _as_input(x, n: int, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size != n:
        raise AnomscopeError(f"{what} length {arr.size} does not match expected {n}")
    if not np.all(np.isfinite(arr)):
        raise AnomscopeError(f"{what} must be finite")
    return arr


def forward(model: MlpModel, x) -> list[np.ndarray]:
    """All layer activations for one input; the input itself is activation 0."""
    a = _as_input(x, model.layer_sizes[0], "input")
    activations = [a]
    for w, b in zip(model.weights, model.biases):
        a = expit(w @ a + b)
        activations.append(a)
    return activations


def cost(desired, actual) -> float:
    """Squared-error cost 0.5 * sum((desired - actual)^2)."""
    d = np.asarray(desired, dtype=np.float64).ravel()
    y = np.asarray(actual, dtype=np.float64).ravel()
    if d.size != y.size:
        raise AnomscopeError(f"cost length mismatch: desired {d.size}, actual {y.size}")
    if d.size == 0:
        raise AnomscopeError("cost needs at least one output")
    diff = d - y
    return float(0.5 * np.dot(diff, diff))


def backward(
    model: MlpModel, activations: list[np.ndarray], desired
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Cost gradients for every weight and bias via backpropagation.

    ``activations`` must come from ``forward`` on this model. The output
    delta is (y - d) * y * (1 - y); hidden deltas pull back through the
    transposed weights with the sigmoid derivative a * (1 - a).
    """
    n_layers = len(model.weights)
    if len(activations) != n_layers + 1:
        raise AnomscopeError(
            f"expected {n_layers + 1} activations, got {len(activations)}"
        )
    for l, a in enumerate(activations):
        if np.asarray(a).shape != (model.layer_sizes[l],):
            raise AnomscopeError(
                f"activation {l} shape {np.asarray(a).shape} does not match "
                f"layer size {model.layer_sizes[l]}; activations are stale"
            )
    d = _as_input(desired, model.layer_sizes[-1], "desired output")
    grad_w: list[np.ndarray] = [np.empty(0)] * n_layers
    grad_b: list[np.ndarray] = [np.empty(0)] * n_layers
    out = activations[-1]
    delta = (out - d) * out * (1.0 - out)
    for l in range(n_layers - 1, -1, -1):
        grad_w[l] = np.outer(delta, activations[l])
        grad_b[l] = delta
        if l > 0:
            a = activations[l]
            delta = (model.weights[l].T @ delta) * a * (1.0 - a)
    return grad_w, grad_b


def apply_updates(
    model: MlpModel, grad_w: list[np.ndarray], grad_b: list[np.ndarray], eta: float
) -> MlpModel:
    """New model stepped against the gradient: W - eta * gW, b - eta * gb."""
    if not (isinstance(eta, (int, float)) and math.isfinite(eta) and eta > 0):
        raise AnomscopeError(f"learning rate must be positive, got {eta!r}")
    n_layers = len(model.weights)
    if len(grad_w) != n_layers or len(grad_b) != n_layers:
        raise AnomscopeError("gradient list lengths do not match the model")
    new_w = []
    new_b = []
    for l in range(n_layers):
        if grad_w[l].shape != model.weights[l].shape or grad_b[l].shape != model.biases[l].shape:
            raise AnomscopeError(f"gradient shapes at layer {l} do not match the model")
        w = model.weights[l] - eta * grad_w[l]
        b = model.biases[l] - eta * grad_b[l]
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise AnomscopeError("update produced non-finite parameters")
        new_w.append(w)
        new_b.append(b)
    return MlpModel(
        layer_sizes=model.layer_sizes,
        weights=new_w,
        biases=new_b,
        feature_mean=model.feature_mean.copy(),
        feature_std=model.feature_std.copy(),
        seed=model.seed,
    )


def train(dataset, config: TrainConfig = TrainConfig()) -> tuple[MlpModel, list[float]]:
    """Fit a network on (feature_vector, label) pairs with per-sample SGD.

    Features are standardized by their per-dimension mean and std (std
    floored at 1e-8); the standardization is stored on the returned model.
    Returns the model and the per-epoch mean sample cost, where each
    sample's cost is measured just before its update is applied.
    """
    pairs = list(dataset)
    if len(pairs) < 2:
        raise AnomscopeError(f"training needs at least 2 samples, got {len(pairs)}")
    vectors = []
    labels = []
    for vec, lbl in pairs:
        v = np.asarray(vec, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise AnomscopeError("training features must be finite")
        vectors.append(v)
        if lbl not in (0, 1):
            raise AnomscopeError(f"labels must be 0 or 1, got {lbl!r}")
        labels.append(int(lbl))
    dims = {v.size for v in vectors}
    if len(dims) != 1:
        raise AnomscopeError(f"training features have mixed lengths: {sorted(dims)}")
    if 0 in dims:
        raise AnomscopeError("training features must be non-empty")
    if set(labels) != {0, 1}:
        raise AnomscopeError("training data must contain both classes (labels 0 and 1)")
    x = np.stack(vectors)
    y = np.asarray(labels, dtype=np.float64)
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    x_std = (x - mean) / std

    model = init_model(x.shape[1], config.hidden_sizes, config.seed)
    model.feature_mean = mean
    model.feature_std = std
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    n = len(pairs)
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for i in order:
            activations = forward(model, x_std[i])
            total += cost([y[i]], activations[-1])
            grad_w, grad_b = backward(model, activations, [y[i]])
            for l in range(len(model.weights)):
                model.weights[l] -= config.eta * grad_w[l]
                model.biases[l] -= config.eta * grad_b[l]
        mean_cost = total / n
        if not math.isfinite(mean_cost):
            raise AnomscopeError(f"training diverged: non-finite cost at epoch {epoch}")
        history.append(mean_cost)
    return model, history


def predict(
    model: MlpModel,
    features,
    threshold: float = DEFAULT_DECISION_THRESHOLD,
    frame_index: int = 0,
) -> DetectionResult:
    """Score one raw feature vector; label 1 when score >= threshold."""
    if not (isinstance(threshold, (int, float)) and 0.0 <= threshold <= 1.0):
        raise AnomscopeError(f"decision threshold must be in [0, 1], got {threshold!r}")
    raw = _as_input(features, model.layer_sizes[0], "feature vector")
    x = (raw - model.feature_mean) / model.feature_std
    score = float(forward(model, x)[-1][0])
    return DetectionResult(
        frame_index=int(frame_index), score=score, label=1 if score >= threshold else 0
    )


def gradient_check(model: MlpModel, x, desired, epsilon: float = 1e-5) -> float:
    """Max relative error between backprop and central-difference gradients.

    Intended for small networks; every parameter is perturbed twice. The
    relative error per parameter is |g_bp - g_fd| / max(|g_bp|, |g_fd|, 1e-8).
    """
    if not (isinstance(epsilon, float) and epsilon > 0):
        raise AnomscopeError(f"epsilon must be positive, got {epsilon!r}")
    xv = _as_input(x, model.layer_sizes[0], "input")
    d = _as_input(desired, model.layer_sizes[-1], "desired output")
    grad_w, grad_b = backward(model, forward(model, xv), d)

    def cost_at(m: MlpModel) -> float:
        return cost(d, forward(m, xv)[-1])

    worst = 0.0
    probe = model.copy()
    for arrays, grads in ((probe.weights, grad_w), (probe.biases, grad_b)):
        for arr, g in zip(arrays, grads):
            flat = arr.reshape(-1)
            gflat = g.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + epsilon
                c_plus = cost_at(probe)
                flat[j] = orig - epsilon
                c_minus = cost_at(probe)
                flat[j] = orig
                fd = (c_plus - c_minus) / (2.0 * epsilon)
                denom = max(abs(gflat[j]), abs(fd), 1e-8)
                worst = max(worst, abs(gflat[j] - fd) / denom)
    return worst


def _format_floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def model_to_text(model: MlpModel) -> str:
    """Serialize a model to the plain-text format used by model files.

    Line 1 is the magic string, line 2 the layer sizes, lines 3 and 4 the
    feature mean and std, followed per layer by one line per weight row and
    then one bias line. Floats use repr so reloading is exact.
    """
    lines = [
        MODEL_MAGIC,
        " ".join(str(int(s)) for s in model.layer_sizes),
        _format_floats(model.feature_mean),
        _format_floats(model.feature_std),
    ]
    for w, b in zip(model.weights, model.biases):
        for row in w:
            lines.append(_format_floats(row))
        lines.append(_format_floats(b))
    return "\n".join(lines) + "\n"


def save_model(model: MlpModel, path) -> None:
    Path(path).write_text(model_to_text(model), encoding="utf-8")


def _parse_floats(line: str, expected: int, what: str, path) -> np.ndarray:
    parts = line.split()
    if len(parts) != expected:
        raise AnomscopeError(
            f"model file {path}: {what} has {len(parts)} values, expected {expected}"
        )
    try:
        arr = np.asarray([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise AnomscopeError(f"model file {path}: {what} contains a non-numeric value") from None
    if not np.all(np.isfinite(arr)):
        raise AnomscopeError(f"model file {path}: {what} contains a non-finite value")
    return arr


def model_from_text(text: str, path="<string>") -> MlpModel:
    lines = [ln for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise AnomscopeError(f"not a model file (missing '{MODEL_MAGIC}' header): {path}")
    if len(lines) < 4:
        raise AnomscopeError(f"model file {path} is truncated")
    try:
        sizes = tuple(int(p) for p in lines[1].split())
    except ValueError:
        raise AnomscopeError(f"model file {path}: layer sizes must be integers") from None
    if len(sizes) < 3 or any(s < 1 for s in sizes):
        raise AnomscopeError(f"model file {path}: bad layer sizes {sizes}")
    mean = _parse_floats(lines[2], sizes[0], "feature mean", path)
    std = _parse_floats(lines[3], sizes[0], "feature std", path)
    expected_lines = 4 + sum(sizes[l + 1] + 1 for l in range(len(sizes) - 1))
    if len(lines) != expected_lines:
        raise AnomscopeError(
            f"model file {path} has {len(lines)} lines, expected {expected_lines} "
            f"for sizes {sizes}"
        )
    weights = []
    biases = []
    at = 4
    for l in range(len(sizes) - 1):
        rows = [
            _parse_floats(lines[at + r], sizes[l], f"weight row {r} of layer {l}", path)
            for r in range(sizes[l + 1])
        ]
        at += sizes[l + 1]
        weights.append(np.stack(rows))
        biases.append(_parse_floats(lines[at], sizes[l + 1], f"bias of layer {l}", path))
        at += 1
    return MlpModel(
        layer_sizes=sizes, weights=weights, biases=biases, feature_mean=mean, feature_std=std
    )


def load_model(path) -> MlpModel:
    p = Path(path)
    if not p.is_file():
        raise AnomscopeError(f"model file not found: {p}")
    return model_from_text(p.read_text(encoding="utf-8"), path=p)
