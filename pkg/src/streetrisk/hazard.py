"""Trainable hazard scorer: logistic model over occupancy features.

The score H = sigmoid(w.x + b) is the probability a scene is classified
dangerous, one model per accident kind.  Training is deterministic
full-batch gradient descent from zero initialization on mean binary
cross-entropy with an L2 penalty on the weights; the learning rate is
halved (and the epoch retried) whenever a step would increase the loss.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from streetrisk.ingest import AccidentKind

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 500
DEFAULT_L2 = 1e-4
MAX_HALVINGS = 30
THRESHOLD = 0.5


@dataclass
class HazardModel:
    """Logistic scorer for one accident kind."""

    kind: AccidentKind
    weights: np.ndarray
    bias: float
    feature_names: list[str]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not (np.all(np.isfinite(self.weights)) and math.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")
        if len(self.feature_names) != self.weights.size:
            raise ValueError("feature_names length must match weights")


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict(model: HazardModel, features: np.ndarray) -> float:
    """Hazard score in [0, 1] for one occupancy vector.

    Shares the batched code path so scalar and batch scoring agree bitwise.
    """
    features = np.asarray(features, dtype=float)
    if features.shape != model.weights.shape:
        raise ValueError(
            f"feature dimension {features.shape} does not match model {model.weights.shape}"
        )
    return float(predict_many(model, features[None, :])[0])


def predict_many(model: HazardModel, features: np.ndarray) -> np.ndarray:
    """Hazard scores for a (n_samples, n_features) matrix.

    The dot product is a per-row reduction, not a BLAS matvec, so a row's
    score does not depend on how many other rows are scored with it.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != model.weights.size:
        raise ValueError(f"expected (n, {model.weights.size}) matrix, got {features.shape}")
    return _sigmoid(np.add.reduce(features * model.weights, axis=1) + model.bias)


def _loss_and_grad(X, y, w, b, l2):
    z = X @ w + b
    p = _sigmoid(z)
    # Stable BCE: y*log(1+e^-z) + (1-y)*log(1+e^z)
    bce = float(np.mean(y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)))
    loss = bce + 0.5 * l2 * float(w @ w)
    resid = p - y
    grad_w = X.T @ resid / len(y) + l2 * w
    grad_b = float(np.mean(resid))
    return loss, grad_w, grad_b


def train(
    X: np.ndarray,
    y: np.ndarray,
    kind: AccidentKind,
    feature_names: list[str] | None = None,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    l2: float = DEFAULT_L2,
) -> HazardModel:
    """Fit the logistic scorer by full-batch gradient descent.

    Requires at least one sample of each class.  Loss is non-increasing
    across epochs: a step that would raise it is retried with a halved
    learning rate (up to MAX_HALVINGS per epoch); if no acceptable step
    exists the remaining epochs are skipped.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"X {X.shape} and y {y.shape} do not align")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite features")
    classes = np.unique(y)
    if not np.array_equal(classes, np.array([0.0, 1.0])):
        raise ValueError(f"need both classes 0 and 1 in y, got {classes.tolist()}")
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(X.shape[1])]

    w = np.zeros(X.shape[1], dtype=float)
    b = 0.0
    lr = learning_rate
    loss, grad_w, grad_b = _loss_and_grad(X, y, w, b, l2)
    history = [loss]
    epochs_run = 0
    for _ in range(epochs):
        stepped = False
        for _attempt in range(MAX_HALVINGS + 1):
            w_new = w - lr * grad_w
            b_new = b - lr * grad_b
            new_loss, new_gw, new_gb = _loss_and_grad(X, y, w_new, b_new, l2)
            if not math.isfinite(new_loss):
                raise ValueError("training diverged to a non-finite loss")
            if new_loss <= loss:
                w, b = w_new, b_new
                loss, grad_w, grad_b = new_loss, new_gw, new_gb
                stepped = True
                break
            lr /= 2.0
        if not stepped:
            break
        history.append(loss)
        epochs_run += 1

    return HazardModel(
        kind=kind,
        weights=w,
        bias=b,
        feature_names=list(feature_names),
        metadata={
            "epochs": epochs_run,
            "learning_rate": lr,
            "l2": l2,
            "final_loss": loss,
            "loss_history": history,
        },
    )


@dataclass(frozen=True)
class Evaluation:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / (self.tp + self.fp + self.tn + self.fn)


def evaluate(model: HazardModel, X: np.ndarray, y: np.ndarray) -> Evaluation:
    """Confusion counts under the dangerous-iff-H>=0.5 threshold rule."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("empty evaluation set")
    scores = predict_many(model, X)
    pred = scores >= THRESHOLD
    actual = y >= 0.5
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    tn = int(np.sum(~pred & ~actual))
    fn = int(np.sum(~pred & actual))
    return Evaluation(tp=tp, fp=fp, tn=tn, fn=fn)


def restrict_pairs(pairs, models: dict[AccidentKind, HazardModel]):
    """Pairs whose model prediction matches the empirical label in both periods.

    ``pairs`` are change.LocationPair records; empirical label per period is
    dangerous iff that period's accident count is >= 1, and the prediction
    uses the model for the pair's kind on that period's features.
    """
    kept = []
    for pair in pairs:
        model = models[pair.kind]
        ok = True
        for features, count in ((pair.features1, pair.n1), (pair.features2, pair.n2)):
            pred_dangerous = predict(model, features) >= THRESHOLD
            if pred_dangerous != (count >= 1):
                ok = False
                break
        if ok:
            kept.append(pair)
    return kept


def save_model(model: HazardModel, path):
    doc = {
        "kind": model.kind.value,
        "weights": [float(v) for v in model.weights],
        "bias": float(model.bias),
        "feature_names": list(model.feature_names),
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> HazardModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return HazardModel(
        kind=AccidentKind(doc["kind"]),
        weights=np.asarray(doc["weights"], dtype=float),
        bias=float(doc["bias"]),
        feature_names=list(doc["feature_names"]),
        metadata=dict(doc.get("metadata", {})),
    )


def scores_for(model: HazardModel, feature_names: list[str], X: np.ndarray) -> np.ndarray:
    """predict_many with a feature-column check against the trained order."""
    if list(feature_names) != list(model.feature_names):
        raise ValueError(
            f"feature columns {feature_names} do not match model {model.feature_names}"
        )
    return predict_many(model, X)
