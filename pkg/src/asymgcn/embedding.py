"""Embedding extraction and asymmetric pair ranking.

A node's representation is the pair (z_i^S, z_i^T): the last hidden layer of
the source branch and of the target branch.  Directed affinity of an ordered
pair is the inner product S_ij = <z_i^S, z_j^T>, which is asymmetric by
construction — S_ij and S_ji use different halves of the embedding.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyCandidates, InvalidNode
from .graph_core import augment_with_self_loops, transpose
from .linalg import concat_cols, note_allocation
from .model import forward_branch

_CHUNK = 1 << 18  # streamed candidates per scoring batch


@dataclass
class EmbeddingMatrix:
    """n x 2d matrix; columns [0, d) are Z^S, columns [d, 2d) are Z^T."""

    n: int
    d: int
    data: np.ndarray

    @property
    def source(self) -> np.ndarray:
        return self.data[:, : self.d]

    @property
    def target(self) -> np.ndarray:
        return self.data[:, self.d:]


def extract_embeddings(params, g, normalize_adjacency=False) -> EmbeddingMatrix:
    """Z = concat(Z^S, Z^T) from a trained parameter set.

    Z^S is the source branch's last hidden layer over the augmented
    adjacency; Z^T is the target branch's over its transpose.  The softmax
    output layers play no part.  ``normalize_adjacency`` must match the
    setting the parameters were trained with.
    """
    if params.source_weights[0].shape[0] != g.num_features:
        raise DimensionMismatch(
            f"params expect F={params.source_weights[0].shape[0]}, "
            f"graph has F={g.num_features}"
        )
    adj = augment_with_self_loops(g)
    adj_t = transpose(adj)
    mat_s, mat_t = adj.matrix, adj_t.matrix
    if normalize_adjacency:
        mat_s, mat_t = mat_s.row_normalize(), mat_t.row_normalize()
    z_s = forward_branch(mat_s, g.attributes, params.source_weights).hiddens[-1]
    z_t = forward_branch(mat_t, g.attributes, params.target_weights).hiddens[-1]
    return EmbeddingMatrix(n=g.n, d=z_s.shape[1], data=concat_cols(z_s, z_t))


def asym_similarity(Z: EmbeddingMatrix, i, j) -> float:
    """S_ij = <z_i^S, z_j^T>; in general S_ij != S_ji."""
    i, j = int(i), int(j)
    for node in (i, j):
        if not 0 <= node < Z.n:
            raise InvalidNode(f"node {node} out of range for n={Z.n}")
    return float(np.dot(Z.source[i], Z.target[j]))


def _top_k_merge(ii, jj, scores, k):
    """Exact top-k under the total order (score desc, i asc, j asc)."""
    order = np.lexsort((jj, ii, -scores))[:k]
    return ii[order], jj[order], scores[order]


def rank_pairs(Z: EmbeddingMatrix, candidates, k: int):
    """Top-k among explicit candidate pairs, streamed in bounded memory.

    ``candidates`` is any iterable of (i, j) pairs with i != j; it is
    consumed in chunks so the full score list is never materialized.
    Returns a list of (i, j, score) sorted by (score desc, i asc, j asc).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    best = None
    chunk = []
    it = iter(candidates)
    done = False
    while not done:
        chunk.clear()
        for pair in it:
            chunk.append(pair)
            if len(chunk) >= _CHUNK:
                break
        else:
            done = True
        if not chunk:
            break
        arr = np.asarray(chunk, dtype=np.int64)
        ii, jj = arr[:, 0], arr[:, 1]
        if np.any(ii == jj):
            raise ValueError("self-pair in candidates")
        if np.any((ii < 0) | (ii >= Z.n) | (jj < 0) | (jj >= Z.n)):
            raise InvalidNode("candidate endpoint out of range")
        scores = np.einsum("ij,ij->i", Z.source[ii], Z.target[jj])
        if best is not None:
            ii = np.concatenate([best[0], ii])
            jj = np.concatenate([best[1], jj])
            scores = np.concatenate([best[2], scores])
        best = _top_k_merge(ii, jj, scores, k)
    if best is None:
        raise EmptyCandidates("no candidate pairs supplied")
    return list(zip(best[0].tolist(), best[1].tolist(), best[2].tolist()))


def rank_all_pairs(Z: EmbeddingMatrix, k: int, exclude_keys=None, block_rows=None):
    """Top-k over every ordered pair i != j, minus excluded pairs.

    The scalable ranking used by the evaluation protocols: scores are formed
    one row-block at a time with a dense product against Z^T (peak memory
    O(block_rows * n), never n^2), and ``exclude_keys`` holds sorted
    ``i * n + j`` keys (e.g. training edges in link prediction).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = Z.n
    if n < 2:
        raise EmptyCandidates("need at least two nodes to form ordered pairs")
    if block_rows is None:
        block_rows = max(1, min(n, (1 << 22) // max(n, 1)))
    if exclude_keys is not None:
        exclude_keys = np.asarray(exclude_keys, dtype=np.int64)

    target_t = np.ascontiguousarray(Z.target.T)
    parts = []
    cols = np.arange(n, dtype=np.int64)
    for start in range(0, n, block_rows):
        rows = np.arange(start, min(start + block_rows, n), dtype=np.int64)
        note_allocation((rows.size, n))
        block = Z.source[rows] @ target_t
        block[rows - start, rows] = -np.inf  # self-pairs never rank
        if exclude_keys is not None and exclude_keys.size:
            keys = rows[:, None] * n + cols[None, :]
            drop = np.isin(keys.ravel(), exclude_keys, assume_unique=False)
            block.ravel()[drop] = -np.inf
        flat = block.ravel()
        take = min(k, flat.size)
        part = np.argpartition(-flat, take - 1)[:take]
        # keep every score tied with the k-th so the global tie order is exact
        kth = flat[part].min()
        sel = np.where(flat >= kth)[0]
        parts.append((rows[sel // n], cols[sel % n], flat[sel]))
    ii = np.concatenate([p[0] for p in parts])
    jj = np.concatenate([p[1] for p in parts])
    scores = np.concatenate([p[2] for p in parts])
    finite = scores > -np.inf
    ii, jj, scores = ii[finite], jj[finite], scores[finite]
    if ii.size == 0:
        raise EmptyCandidates("every ordered pair was excluded")
    top = _top_k_merge(ii, jj, scores, k)
    return list(zip(top[0].tolist(), top[1].tolist(), top[2].tolist()))
