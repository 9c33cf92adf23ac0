"""Multinomial logistic regression over node embeddings.

The downstream classifier for the node-classification protocol: features are
standardized on the training split, then a single softmax layer (with bias)
is fit by full-batch gradient descent on mean cross-entropy plus an L2
penalty on the weights (bias excluded).  With the penalty the objective is
strictly convex up to the constant softmax shift of the bias row, so the
optimal loss is unique even though the bias itself is only unique up to
that shift.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingleClassInput


@dataclass
class LogRegConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    standardize: bool = True
    seed: int = 0


@dataclass
class LogRegModel:
    weights: np.ndarray  # (D + 1) x C, last row is the bias
    num_classes: int
    mean: np.ndarray  # standardization applied to any future input
    scale: np.ndarray
    config: LogRegConfig


def _design(features, mean, scale):
    X = (np.asarray(features, dtype=np.float64) - mean) / scale
    return np.hstack([X, np.ones((X.shape[0], 1))])


def train_logreg(features, labels, cfg: LogRegConfig = None) -> LogRegModel:
    """Fit by gradient descent; deterministic under cfg.seed."""
    cfg = cfg or LogRegConfig()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch("features and labels disagree")
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClassInput("training data contains a single class")
    num_classes = int(classes.max()) + 1

    if cfg.standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0.0, scale, 1.0)
    else:
        mean = np.zeros(X.shape[1])
        scale = np.ones(X.shape[1])
    Xb = _design(X, mean, scale)

    # Small random init: the l2 term makes the objective strictly convex, so
    # the seed only picks the starting point, not the optimum.
    rng = np.random.default_rng(cfg.seed)
    W = rng.normal(0.0, 0.01, size=(Xb.shape[1], num_classes))
    onehot = np.eye(num_classes)[y]
    inv_n = 1.0 / Xb.shape[0]
    for _ in range(cfg.epochs):
        logits = Xb @ W
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        grad = Xb.T @ (probs - onehot) * inv_n
        grad[:-1] += cfg.l2 * W[:-1]
        W -= cfg.learning_rate * grad
    return LogRegModel(weights=W, num_classes=num_classes,
                       mean=mean, scale=scale, config=cfg)


def logreg_loss(model: LogRegModel, features, labels) -> float:
    """Mean cross-entropy + (l2/2)||W||^2 at the model's parameters."""
    Xb = _design(features, model.mean, model.scale)
    y = np.asarray(labels, dtype=np.int64)
    logits = Xb @ model.weights
    logits -= logits.max(axis=1, keepdims=True)
    logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    ce = -float(logp[np.arange(y.size), y].mean())
    reg = 0.5 * model.config.l2 * float((model.weights[:-1] ** 2).sum())
    return ce + reg


def predict_logreg(model: LogRegModel, features) -> np.ndarray:
    """Argmax class per row; ties go to the smallest class index."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.weights.shape[0] - 1:
        raise DimensionMismatch(
            f"expected {model.weights.shape[0] - 1} features, "
            f"got {features.shape[1] if features.ndim == 2 else 'non-matrix'}"
        )
    logits = _design(features, model.mean, model.scale) @ model.weights
    return np.argmax(logits, axis=1).astype(np.int64)
