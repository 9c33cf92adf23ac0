"""Directed attributed graphs and the structural primitives the model needs.

A graph couples a directed edge set with a dense node-attribute matrix and
an optional label vector.  Storage is O(|E| + n*F) throughout: adjacency
lives in CSR form and nothing here ever allocates an n-by-n dense array.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidEdge, InvalidNode
from .linalg import SparseMatrix

UNLABELED = -1


@dataclass
class DirectedAttributedGraph:
    """n nodes (0-based), directed edges, n x F attributes, labels (-1 = unlabeled).

    Treat instances as immutable after construction; build them via
    :func:`build_graph`, which validates every invariant.
    """

    n: int
    src: np.ndarray  # int64, lexicographically sorted with dst
    dst: np.ndarray
    attributes: np.ndarray  # (n, F) float64
    labels: np.ndarray  # (n,) int64, UNLABELED where missing
    num_classes: int
    # CSR of the raw adjacency (no self-loop augmentation), built once
    adj: SparseMatrix = field(repr=False, default=None)

    @property
    def m(self) -> int:
        """Number of directed edges."""
        return int(self.src.shape[0])

    @property
    def num_features(self) -> int:
        return int(self.attributes.shape[1])

    def edge_keys(self) -> np.ndarray:
        """Sorted int64 keys src * n + dst — fast membership tests at scale."""
        return self.src * np.int64(self.n) + self.dst

    def edge_set(self) -> set:
        """Edges as a set of (i, j) tuples (small graphs / tests)."""
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n).astype(np.int64)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n).astype(np.int64)


@dataclass
class AugmentedAdjacency:
    """Sparse adjacency with unit self-connections on the full diagonal."""

    matrix: SparseMatrix
    is_transposed: bool = False

    @property
    def n(self) -> int:
        return self.matrix.rows


def build_graph(edges, attributes, labels, num_classes=None, dedup=False):
    """Validate and assemble a :class:`DirectedAttributedGraph`.

    Parameters
    ----------
    edges : sequence of (i, j) pairs or (m, 2) integer array
    attributes : (n, F) array; n is taken from its row count
    labels : length-n sequence; None or -1 marks an unlabeled node
    num_classes : optional; must equal 1 + max observed label when given
    dedup : drop duplicate directed edges instead of rejecting them
    """
    attributes = np.asarray(attributes, dtype=np.float64)
    if attributes.ndim != 2:
        raise DimensionMismatch("attributes must be a 2-D matrix")
    n = attributes.shape[0]

    labels = np.asarray(
        [UNLABELED if v is None else int(v) for v in labels], dtype=np.int64
    )
    if labels.shape[0] != n:
        raise DimensionMismatch(
            f"labels length {labels.shape[0]} != attribute rows {n}"
        )
    if np.any(labels < UNLABELED):
        raise DimensionMismatch("labels must be >= 0 (or -1/None for unlabeled)")

    edges = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                       dtype=np.int64)
    if edges.size == 0:
        edges = edges.reshape(0, 2)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise DimensionMismatch("edges must be (m, 2) ordered pairs")
    src, dst = edges[:, 0], edges[:, 1]
    if src.size and (
        src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n
    ):
        bad = np.where((src < 0) | (dst < 0) | (src >= n) | (dst >= n))[0][0]
        raise InvalidEdge(f"edge ({src[bad]}, {dst[bad]}) out of range for n={n}")

    keys = src * np.int64(n) + dst
    order = np.argsort(keys, kind="stable")
    src, dst, keys = src[order], dst[order], keys[order]
    if keys.size > 1 and np.any(np.diff(keys) == 0):
        if dedup:
            keep = np.concatenate([[True], np.diff(keys) != 0])
            src, dst = src[keep], dst[keep]
        else:
            at = np.where(np.diff(keys) == 0)[0][0]
            raise InvalidEdge(f"duplicate directed edge ({src[at]}, {dst[at]})")

    observed = labels[labels != UNLABELED]
    inferred = int(observed.max()) + 1 if observed.size else 0
    if num_classes is None:
        num_classes = inferred
    elif observed.size and num_classes != inferred:
        raise DimensionMismatch(
            f"num_classes={num_classes} but 1 + max observed label = {inferred}"
        )

    adj = SparseMatrix.from_coo(n, n, src, dst, np.ones(src.shape[0]))
    return DirectedAttributedGraph(
        n=n, src=src, dst=dst, attributes=attributes, labels=labels,
        num_classes=int(num_classes), adj=adj,
    )


def _check_node(g, i):
    i = int(i)
    if not 0 <= i < g.n:
        raise InvalidNode(f"node {i} out of range for n={g.n}")
    return i


def out_neighbors(g: DirectedAttributedGraph, i) -> set:
    """{ j : (i, j) in E } via the CSR row of i."""
    i = _check_node(g, i)
    lo, hi = g.adj.indptr[i], g.adj.indptr[i + 1]
    return set(g.adj.indices[lo:hi].tolist())


def in_neighbors(g: DirectedAttributedGraph, i) -> set:
    """{ j : (j, i) in E } via a binary search over sorted destination keys."""
    i = _check_node(g, i)
    return set(g.src[g.dst == i].tolist())


def augment_with_self_loops(g: DirectedAttributedGraph) -> AugmentedAdjacency:
    """Adjacency plus unit diagonal; pre-existing self-loops stay at 1.0."""
    has_loop = np.zeros(g.n, dtype=bool)
    loops = g.src == g.dst
    has_loop[g.src[loops]] = True
    diag = np.where(~has_loop)[0].astype(np.int64)
    ii = np.concatenate([g.src, diag])
    jj = np.concatenate([g.dst, diag])
    mat = SparseMatrix.from_coo(g.n, g.n, ii, jj, np.ones(ii.shape[0]))
    return AugmentedAdjacency(matrix=mat, is_transposed=False)


def transpose(adj: AugmentedAdjacency) -> AugmentedAdjacency:
    """Flip edge directions; the diagonal is invariant."""
    return AugmentedAdjacency(
        matrix=adj.matrix.transpose(), is_transposed=not adj.is_transposed
    )
