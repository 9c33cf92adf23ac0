import numpy as np
import pytest

from asymgcn.graph_core import build_graph


def random_graph(n, p, seed, num_classes=2, num_features=5, labeled_frac=1.0):
    """Erdos-Renyi-ish directed test graph with random attributes/labels."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    X = rng.normal(size=(n, num_features))
    labels = rng.integers(0, num_classes, size=n)
    labels[:num_classes] = np.arange(num_classes)  # every class appears
    if labeled_frac < 1.0:
        drop = rng.random(n) > labeled_frac
        drop[:num_classes] = False
        labels = np.where(drop, -1, labels)
    return build_graph(np.stack([src, dst], axis=1), X, labels)


def separable_graph(n=20, seed=0):
    """Two-class graph whose attributes alone separate the classes.

    Class means are +/-3 in every dimension with unit noise, and edges are
    drawn mostly within a class, so any sane training run should reach
    perfect training accuracy quickly.
    """
    rng = np.random.default_rng(seed)
    half = n // 2
    labels = np.array([0] * half + [1] * (n - half))
    X = rng.normal(0.0, 1.0, size=(n, 4)) + np.where(labels[:, None] == 0, 3.0, -3.0)
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, 0.3, 0.02)
    mask = rng.random((n, n)) < prob
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    return build_graph(np.stack([src, dst], axis=1), X, labels)


@pytest.fixture
def separable20():
    return separable_graph(20, seed=0)
