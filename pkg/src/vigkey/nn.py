"""Feed-forward key-length classifier trained from scratch on numpy.

The network maps a normalized feature vector through ReLU hidden layers to a
softmax over the 23 key-length classes (3..25).  Training uses mini-batch
Adam by default; a plain SGD mode exists so the descent behaviour can be
checked without Adam's moment state.

Weights, biases, and the fitted normalizer serialize to JSON with Python's
shortest round-trip float representation, so a saved model reloads
bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import SCHEMA_ALL
from .cipher import MAX_KEY_LEN, MIN_KEY_LEN

N_CLASSES = MAX_KEY_LEN - MIN_KEY_LEN + 1


def key_length_to_class(k: int) -> int:
    """Key length 3..25 -> class index 0..22."""
    if not (MIN_KEY_LEN <= k <= MAX_KEY_LEN):
        raise ValueError(f"key length must be in {MIN_KEY_LEN}..{MAX_KEY_LEN}, got {k}")
    return k - MIN_KEY_LEN


def class_to_key_length(i: int) -> int:
    """Class index 0..22 -> key length 3..25."""
    if not (0 <= i < N_CLASSES):
        raise ValueError(f"class index must be in 0..{N_CLASSES - 1}, got {i}")
    return i + MIN_KEY_LEN

# Probabilities are clipped here before the log so degenerate inputs yield a
# large finite loss instead of an infinity.
LOSS_FLOOR = 1e-12

MODEL_FORMAT_VERSION = 1

_ZERO_VARIANCE_EPS = 1e-12


# ---------------------------
# Normalization
# ---------------------------


@dataclass
class Normalizer:
    """Per-column z-score transform fitted on training rows.

    Columns whose standard deviation is below 1e-12 carry no information and
    are mapped to exactly 0.0 rather than divided by a tiny number.
    """

    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Normalizer":
        X = np.asarray(X, dtype=float)
        return cls(means=X.mean(axis=0), stds=X.std(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        degenerate = self.stds < _ZERO_VARIANCE_EPS
        scale = np.where(degenerate, 1.0, self.stds)
        Z = (X - self.means) / scale
        Z[:, degenerate] = 0.0
        return Z


# ---------------------------
# Forward pass, loss, gradients
# ---------------------------


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row maximum.

    After the shift every entry is <= 0, so the only overflow possible is a
    huge spread collapsing to -inf, which exp correctly maps to 0.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    with np.errstate(over="ignore"):
        shifted = z - z.max(axis=1, keepdims=True)
        e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(
    weights: list[np.ndarray], biases: list[np.ndarray], X: np.ndarray
) -> np.ndarray:
    """Class probabilities for normalized inputs, shape (n, N_CLASSES)."""
    return _forward_cached(weights, biases, X)[-1]


def _forward_cached(
    weights: list[np.ndarray], biases: list[np.ndarray], X: np.ndarray
) -> list[np.ndarray]:
    """Activations [a0=X, a1, ..., probs]; hidden layers are ReLU."""
    a = np.atleast_2d(np.asarray(X, dtype=float))
    cache = [a]
    for W, b in zip(weights[:-1], biases[:-1]):
        a = np.maximum(a @ W + b, 0.0)
        cache.append(a)
    cache.append(softmax(a @ weights[-1] + biases[-1]))
    return cache


def sample_loss(probs: np.ndarray, class_index: int) -> float:
    """Negative log-probability of one sample's true class, in nats."""
    return float(-np.log(max(float(probs[class_index]), LOSS_FLOOR)))


def cross_entropy(probs: np.ndarray, class_idx: np.ndarray) -> float:
    """Mean negative log-probability of the true class, in nats."""
    picked = probs[np.arange(len(class_idx)), class_idx]
    return float(-np.log(np.maximum(picked, LOSS_FLOOR)).mean())


def loss(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    X: np.ndarray,
    class_idx: np.ndarray,
) -> float:
    return cross_entropy(forward(weights, biases, X), class_idx)


def gradients(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    X: np.ndarray,
    class_idx: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Backprop gradients of the mean cross-entropy for one batch.

    The softmax and loss fuse into dZ = (probs - onehot) / batch_size at the
    output layer; ReLU layers gate the upstream signal on positive
    pre-activation, equivalently on positive activation.
    """
    cache = _forward_cached(weights, biases, X)
    n = cache[0].shape[0]
    dZ = cache[-1].copy()
    dZ[np.arange(n), class_idx] -= 1.0
    dZ /= n
    dWs: list[np.ndarray] = [None] * len(weights)  # type: ignore[list-item]
    dbs: list[np.ndarray] = [None] * len(biases)  # type: ignore[list-item]
    for layer in range(len(weights) - 1, -1, -1):
        dWs[layer] = cache[layer].T @ dZ
        dbs[layer] = dZ.sum(axis=0)
        if layer > 0:
            dZ = (dZ @ weights[layer].T) * (cache[layer] > 0.0)
    return dWs, dbs


def init_params(
    layer_dims: list[int], rng: np.random.Generator
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


# ---------------------------
# Optimizers
# ---------------------------


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(
        cls, weights: list[np.ndarray], biases: list[np.ndarray]
    ) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(W) for W in weights],
            v_w=[np.zeros_like(W) for W in weights],
            m_b=[np.zeros_like(b) for b in biases],
            v_b=[np.zeros_like(b) for b in biases],
        )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    m: list[np.ndarray],
    v: list[np.ndarray],
    t: int,
    config: "TrainConfig",
) -> None:
    """One bias-corrected Adam update, in place."""
    b1, b2 = config.beta1, config.beta2
    for p, g, mi, vi in zip(params, grads, m, v):
        mi *= b1
        mi += (1.0 - b1) * g
        vi *= b2
        vi += (1.0 - b2) * g * g
        m_hat = mi / (1.0 - b1**t)
        v_hat = vi / (1.0 - b2**t)
        p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)


# ---------------------------
# Training
# ---------------------------


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    hidden_dims: tuple[int, ...] = (128, 128)
    optimizer: str = "adam"
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer: {self.optimizer!r}")
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)


@dataclass
class NetworkModel:
    schema_id: str
    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    normalizer: Normalizer
    seed: int
    format_version: int = MODEL_FORMAT_VERSION

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.layer_dims[0]:
            raise ValueError(
                f"model {self.schema_id} expects {self.layer_dims[0]} features, "
                f"got {X.shape[1]}"
            )
        return forward(self.weights, self.biases, self.normalizer.transform(X))

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Predicted key lengths (values in 3..25), shape (n,)."""
        return self.predict_proba(X).argmax(axis=1) + MIN_KEY_LEN

    def predict(self, row: np.ndarray) -> int:
        return int(self.predict_batch(np.atleast_2d(row))[0])


def _class_indices(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    idx = labels.astype(np.int64) - MIN_KEY_LEN
    if (labels != idx + MIN_KEY_LEN).any() or idx.min() < 0 or idx.max() >= N_CLASSES:
        raise ValueError(f"labels must be integers in {MIN_KEY_LEN}..{MAX_KEY_LEN}")
    return idx


def train(
    X: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig = TrainConfig(),
    schema_id: str = SCHEMA_ALL,
) -> tuple[NetworkModel, TrainHistory]:
    """Train a classifier on feature rows X and key-length labels.

    A seeded fraction of the rows is held out for per-epoch validation
    metrics; the normalizer is fitted on the remaining training rows only.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"expected a nonempty (n, d) feature matrix, got {X.shape}")
    y = _class_indices(labels)
    if len(y) != X.shape[0]:
        raise ValueError("features and labels disagree in length")
    if np.unique(y).size < 2:
        raise ValueError("training needs at least 2 distinct classes")

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(X.shape[0])
    n_val = max(1, int(round(config.validation_fraction * X.shape[0])))
    val_idx, fit_idx = order[:n_val], order[n_val:]
    if fit_idx.size == 0:
        raise ValueError("validation holdout leaves no training rows")

    normalizer = Normalizer.fit(X[fit_idx])
    Z_fit, y_fit = normalizer.transform(X[fit_idx]), y[fit_idx]
    Z_val, y_val = normalizer.transform(X[val_idx]), y[val_idx]

    layer_dims = [X.shape[1], *config.hidden_dims, N_CLASSES]
    weights, biases = init_params(layer_dims, rng)
    state = AdamState.zeros_like(weights, biases)

    history = TrainHistory()
    for _ in range(config.epochs):
        epoch_order = rng.permutation(fit_idx.size)
        for start in range(0, fit_idx.size, config.batch_size):
            batch = epoch_order[start : start + config.batch_size]
            dWs, dbs = gradients(weights, biases, Z_fit[batch], y_fit[batch])
            if config.optimizer == "adam":
                state.t += 1
                adam_step(weights, dWs, state.m_w, state.v_w, state.t, config)
                adam_step(biases, dbs, state.m_b, state.v_b, state.t, config)
            else:
                for p, g in zip(weights + biases, dWs + dbs):
                    p -= config.learning_rate * g
        fit_probs = forward(weights, biases, Z_fit)
        history.train_loss.append(cross_entropy(fit_probs, y_fit))
        history.train_accuracy.append(
            float((fit_probs.argmax(axis=1) == y_fit).mean())
        )
        val_probs = forward(weights, biases, Z_val)
        history.val_accuracy.append(
            float((val_probs.argmax(axis=1) == y_val).mean())
        )

    model = NetworkModel(
        schema_id=schema_id,
        layer_dims=layer_dims,
        weights=weights,
        biases=biases,
        normalizer=normalizer,
        seed=config.seed,
    )
    return model, history


# ---------------------------
# Serialization
# ---------------------------


def save_model(model: NetworkModel, path: str | Path) -> None:
    """Write the model as JSON; floats use repr, so loading is exact."""
    doc = {
        "format_version": model.format_version,
        "schema_id": model.schema_id,
        "layer_dims": list(model.layer_dims),
        "seed": model.seed,
        "weights": [W.tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "normalizer": {
            "means": model.normalizer.means.tolist(),
            "stds": model.normalizer.stds.tolist(),
        },
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> NetworkModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format: {doc.get('format_version')!r}")
    model = NetworkModel(
        schema_id=doc["schema_id"],
        layer_dims=list(doc["layer_dims"]),
        weights=[np.array(W, dtype=float) for W in doc["weights"]],
        biases=[np.array(b, dtype=float) for b in doc["biases"]],
        normalizer=Normalizer(
            means=np.array(doc["normalizer"]["means"], dtype=float),
            stds=np.array(doc["normalizer"]["stds"], dtype=float),
        ),
        seed=doc["seed"],
    )
    dims = model.layer_dims
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        if W.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
            raise ValueError(f"layer {i} shapes disagree with layer_dims")
    return model
