"""Evaluation metrics: Precision@k, Micro/Macro-F1, Accuracy, Silhouette.

All are written directly from their definitions over confusion counts or
pairwise distances; the test suite checks them against independent
brute-force references.
"""

import numpy as np

from .errors import (
    EmptyInput,
    KTooLarge,
    LengthMismatch,
    SingleCluster,
)


def precision_at_k(ranked, relevant, k: int) -> float:
    """Fraction of the first k ranked pairs that are in the relevant set.

    ``ranked`` is a RankedPairList — (i, j, score) triples sorted by the
    ranking — and ``relevant`` a set (or sequence) of (i, j) edges.
    """
    if k < 1:
        raise KTooLarge("k must be >= 1")
    if k > len(ranked):
        raise KTooLarge(f"k={k} exceeds ranked list length {len(ranked)}")
    if not isinstance(relevant, (set, frozenset)):
        relevant = set(relevant)
    hits = sum(1 for i, j, _ in ranked[:k] if (i, j) in relevant)
    return hits / k


def _check_labels(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise LengthMismatch(
            f"label vectors disagree: {y_true.shape} vs {y_pred.shape}"
        )
    return y_true, y_pred


def _confusion_counts(y_true, y_pred, num_classes):
    """(tp, fp, fn) per class from one pass over the pair counts."""
    joint = np.bincount(
        y_true * num_classes + y_pred, minlength=num_classes * num_classes
    ).reshape(num_classes, num_classes)
    tp = np.diag(joint).astype(np.float64)
    fp = joint.sum(axis=0) - tp
    fn = joint.sum(axis=1) - tp
    return tp, fp, fn


def macro_f1(y_true, y_pred, num_classes: int) -> float:
    """Unweighted mean of per-class F1; an empty class contributes 0."""
    y_true, y_pred = _check_labels(y_true, y_pred)
    if y_true.size == 0:
        raise EmptyInput("no samples")
    tp, fp, fn = _confusion_counts(y_true, y_pred, num_classes)
    denom = 2.0 * tp + fp + fn
    f1 = np.where(denom > 0.0, 2.0 * tp / np.where(denom > 0.0, denom, 1.0), 0.0)
    return float(f1.mean())


def micro_f1(y_true, y_pred, num_classes: int) -> float:
    """F1 of the summed TP/FP/FN across classes."""
    y_true, y_pred = _check_labels(y_true, y_pred)
    if y_true.size == 0:
        raise EmptyInput("no samples")
    tp, fp, fn = _confusion_counts(y_true, y_pred, num_classes)
    denom = 2.0 * tp.sum() + fp.sum() + fn.sum()
    return float(2.0 * tp.sum() / denom) if denom > 0.0 else 0.0


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = _check_labels(y_true, y_pred)
    if y_true.size == 0:
        raise EmptyInput("no samples")
    return float((y_true == y_pred).mean())


def silhouette(points, labels) -> float:
    """Mean silhouette over points with Euclidean distances.

    For each point: a = mean distance to its own cluster's other members,
    b = smallest mean distance to any other cluster; the point scores
    (b - a) / max(a, b).  Points in singleton clusters score 0.
    """
    X = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise LengthMismatch("points and labels disagree")
    n = X.shape[0]
    if n == 0:
        raise EmptyInput("no points")
    classes, y_dense = np.unique(y, return_inverse=True)
    if classes.size < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    sizes = np.bincount(y_dense)

    # mean distance from every point to each cluster, one row block at a time
    sq = (X * X).sum(axis=1)
    mean_to = np.empty((n, classes.size))
    block = max(1, min(n, (1 << 22) // n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        scale = sq[start:stop, None] + sq[None, :]
        d2 = scale - 2.0 * (X[start:stop] @ X.T)
        np.maximum(d2, 0.0, out=d2)
        # the expansion cancels for near-coincident points, leaving an
        # O(eps * scale) error; recompute those few entries by differencing
        ii, jj = np.nonzero(d2 <= 1e-4 * scale)
        for base in range(0, ii.size, 1 << 16):
            ib, jb = ii[base:base + (1 << 16)], jj[base:base + (1 << 16)]
            diff = X[start + ib] - X[jb]
            d2[ib, jb] = (diff * diff).sum(axis=1)
        dist = np.sqrt(d2)
        for c in range(classes.size):
            mean_to[start:stop, c] = dist[:, y_dense == c].sum(axis=1)
    mean_to /= sizes[None, :]

    own = y_dense
    scores = np.zeros(n)
    multi = sizes[own] > 1
    # a excludes the point itself: rescale the own-cluster mean
    a = mean_to[np.arange(n), own] * sizes[own] / np.maximum(sizes[own] - 1, 1)
    other = mean_to.copy()
    other[np.arange(n), own] = np.inf
    b = other.min(axis=1)
    denom = np.maximum(a, b)
    valid = multi & (denom > 0.0)
    scores[valid] = (b[valid] - a[valid]) / denom[valid]
    return float(scores.mean())
