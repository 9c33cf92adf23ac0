import numpy as np
import pytest

import asymgcn.embedding as embedding
from asymgcn.embedding import (
    EmbeddingMatrix,
    asym_similarity,
    extract_embeddings,
    rank_all_pairs,
    rank_pairs,
)
from asymgcn.errors import DimensionMismatch, EmptyCandidates, InvalidNode
from asymgcn.graph_core import augment_with_self_loops, build_graph, transpose
from asymgcn.model import ModelConfig, init_params, train

from conftest import random_graph, separable_graph


def integer_embedding(n, d, seed):
    """Small-integer embeddings: scores are exact in float64, so the
    deterministic tie order can be compared against oracles exactly."""
    rng = np.random.default_rng(seed)
    data = rng.integers(-4, 5, size=(n, 2 * d)).astype(np.float64)
    return EmbeddingMatrix(n=n, d=d, data=data)


def oracle_rank(Z, candidates, k):
    scored = [
        (i, j, float(np.dot(Z.source[i], Z.target[j]))) for i, j in candidates
    ]
    scored.sort(key=lambda t: (-t[2], t[0], t[1]))
    return scored[:k]


# --- extraction ------------------------------------------------------------


def test_extract_shapes_and_halves():
    g = random_graph(9, 0.2, seed=1, num_features=4)
    cfg = ModelConfig(num_conv_layers=2, hidden_dim=3, num_classes=2,
                      epochs=3, seed=2)
    params, _ = train(g, cfg)
    Z = extract_embeddings(params, g)
    assert Z.data.shape == (9, 6)
    assert Z.d == 3 != g.num_classes  # hidden width, not the softmax width
    assert np.array_equal(Z.source, Z.data[:, :3])
    assert np.array_equal(Z.target, Z.data[:, 3:])


def test_extract_matches_dense_recomputation():
    g = random_graph(10, 0.25, seed=3, num_features=4)
    cfg = ModelConfig(num_conv_layers=2, hidden_dim=3, num_classes=2,
                      epochs=5, seed=4)
    params, _ = train(g, cfg)
    Z = extract_embeddings(params, g)
    adj = augment_with_self_loops(g)
    for half, weights, mat in (
        (Z.source, params.source_weights, adj.matrix.to_dense()),
        (Z.target, params.target_weights, transpose(adj).matrix.to_dense()),
    ):
        H = g.attributes
        for W in weights[:-1]:
            H = np.maximum(mat @ H @ W, 0.0)
        assert np.allclose(half, H, rtol=1e-12, atol=1e-12)


def test_extract_edgeless_identical_weights_gives_equal_halves():
    g = build_graph([], np.random.default_rng(5).normal(size=(6, 3)),
                    [0, 1, 0, 1, 0, 1])
    cfg = ModelConfig(num_conv_layers=1, hidden_dim=4, num_classes=2, seed=6)
    params = init_params(cfg, 3)
    params.target_weights = [w.copy() for w in params.source_weights]
    Z = extract_embeddings(params, g)
    assert np.array_equal(Z.source, Z.target)


def test_extract_rejects_feature_mismatch():
    g = random_graph(6, 0.2, seed=7, num_features=4)
    params = init_params(
        ModelConfig(num_conv_layers=1, hidden_dim=2, num_classes=2, seed=0), 9)
    with pytest.raises(DimensionMismatch):
        extract_embeddings(params, g)


# --- similarity ------------------------------------------------------------


def test_similarity_zero_source_row():
    Z = integer_embedding(5, 3, seed=8)
    Z.data[2, :3] = 0.0
    assert all(asym_similarity(Z, 2, j) == 0.0 for j in range(5))


def test_similarity_unit_basis():
    Z = EmbeddingMatrix(n=2, d=3, data=np.zeros((2, 6)))
    Z.data[0, 0] = 1.0  # z_0^S = e1
    Z.data[1, 3] = 1.0  # z_1^T = e1
    assert asym_similarity(Z, 0, 1) == 1.0


def test_similarity_matches_scalar_loop():
    Z = EmbeddingMatrix(
        n=7, d=4, data=np.random.default_rng(9).normal(size=(7, 8)))
    for i in range(7):
        for j in range(7):
            expect = sum(Z.source[i, m] * Z.target[j, m] for m in range(4))
            assert abs(asym_similarity(Z, i, j) - expect) < 1e-12


def test_similarity_asymmetry_witness():
    Z = EmbeddingMatrix(n=2, d=2, data=np.zeros((2, 4)))
    Z.data[0, 0] = 1.0  # z_a^S = e1, z_a^T = 0
    Z.data[1, 2] = 1.0  # z_b^S = 0,  z_b^T = e1
    assert asym_similarity(Z, 0, 1) == 1.0
    assert asym_similarity(Z, 1, 0) == 0.0


def test_similarity_is_bilinear_in_source():
    Z = EmbeddingMatrix(
        n=4, d=3, data=np.random.default_rng(10).normal(size=(4, 6)))
    base = [asym_similarity(Z, 1, j) for j in range(4)]
    Z.data[1, :3] *= 2.5
    assert np.allclose([asym_similarity(Z, 1, j) for j in range(4)],
                       np.asarray(base) * 2.5, rtol=1e-12)


def test_similarity_rejects_bad_nodes():
    Z = integer_embedding(3, 2, seed=11)
    with pytest.raises(InvalidNode):
        asym_similarity(Z, 0, 3)
    with pytest.raises(InvalidNode):
        asym_similarity(Z, -1, 0)


# --- rank_pairs -------------------------------------------------------------


def test_rank_two_nodes_picks_larger_direction():
    Z = EmbeddingMatrix(n=2, d=2, data=np.zeros((2, 4)))
    Z.data[0, :2] = [3.0, 0.0]
    Z.data[1, 2:] = [2.0, 0.0]  # S(0,1) = 6
    Z.data[1, :2] = [1.0, 0.0]
    Z.data[0, 2:] = [1.0, 0.0]  # S(1,0) = 1
    top = rank_pairs(Z, [(0, 1), (1, 0)], k=1)
    assert top == [(0, 1, 6.0)]


def test_rank_all_equal_scores_breaks_ties_by_index():
    Z = EmbeddingMatrix(n=4, d=2, data=np.zeros((4, 4)))  # every score 0
    cands = [(2, 1), (0, 3), (1, 0), (0, 1)]
    got = rank_pairs(Z, cands, k=4)
    assert [(i, j) for i, j, _ in got] == [(0, 1), (0, 3), (1, 0), (2, 1)]


def test_rank_matches_full_sort_oracle():
    Z = integer_embedding(50, 4, seed=12)
    rng = np.random.default_rng(13)
    cands = [(int(i), int(j))
             for i, j in rng.integers(0, 50, size=(400, 2)) if i != j]
    assert rank_pairs(Z, cands, k=100) == oracle_rank(Z, cands, 100)


def test_rank_is_candidate_order_invariant():
    Z = integer_embedding(20, 3, seed=14)
    cands = [(i, j) for i in range(20) for j in range(20) if i != j]
    shuffled = list(cands)
    np.random.default_rng(15).shuffle(shuffled)
    assert rank_pairs(Z, cands, k=30) == rank_pairs(Z, shuffled, k=30)


def test_rank_streams_in_small_chunks(monkeypatch):
    Z = integer_embedding(25, 3, seed=16)
    cands = [(i, j) for i in range(25) for j in range(25) if i != j]
    monkeypatch.setattr(embedding, "_CHUNK", 7)
    assert rank_pairs(Z, cands, k=40) == oracle_rank(Z, cands, 40)


def test_rank_input_validation():
    Z = integer_embedding(5, 2, seed=17)
    with pytest.raises(EmptyCandidates):
        rank_pairs(Z, [], k=3)
    with pytest.raises(ValueError):
        rank_pairs(Z, [(1, 1)], k=1)  # self-pair
    with pytest.raises(InvalidNode):
        rank_pairs(Z, [(0, 9)], k=1)
    with pytest.raises(ValueError):
        rank_pairs(Z, [(0, 1)], k=0)


# --- rank_all_pairs ----------------------------------------------------------


def all_ordered_pairs(n):
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def test_rank_all_pairs_matches_rank_pairs():
    Z = integer_embedding(30, 4, seed=18)
    assert rank_all_pairs(Z, 50) == rank_pairs(Z, all_ordered_pairs(30), 50)


def test_rank_all_pairs_small_blocks_identical():
    Z = integer_embedding(23, 3, seed=19)
    assert rank_all_pairs(Z, 40, block_rows=3) == rank_all_pairs(Z, 40)


def test_rank_all_pairs_exclusion():
    Z = integer_embedding(15, 3, seed=20)
    full = rank_all_pairs(Z, 10)
    banned = np.asarray([i * 15 + j for i, j, _ in full[:4]], dtype=np.int64)
    got = rank_all_pairs(Z, 10, exclude_keys=banned)
    assert all((i * 15 + j) not in set(banned.tolist()) for i, j, _ in got)
    allowed = [(i, j) for i, j in all_ordered_pairs(15)
               if i * 15 + j not in set(banned.tolist())]
    assert got == oracle_rank(Z, allowed, 10)


def test_rank_all_pairs_everything_excluded():
    Z = integer_embedding(3, 2, seed=21)
    keys = np.asarray([i * 3 + j for i, j in all_ordered_pairs(3)])
    with pytest.raises(EmptyCandidates):
        rank_all_pairs(Z, 2, exclude_keys=keys)
    with pytest.raises(EmptyCandidates):
        rank_all_pairs(EmbeddingMatrix(n=1, d=2, data=np.zeros((1, 4))), 1)


def test_ranking_trained_embeddings_prefers_true_edges():
    # sanity on real (non-integer) embeddings: reconstruction beats chance
    g = separable_graph(30, seed=22)
    cfg = ModelConfig(num_conv_layers=2, hidden_dim=6, num_classes=2,
                      epochs=100, seed=23)
    params, _ = train(g, cfg)
    Z = extract_embeddings(params, g)
    top = rank_all_pairs(Z, g.m)
    hits = sum(1 for i, j, _ in top if (i, j) in g.edge_set())
    density = g.m / (g.n * (g.n - 1))
    assert hits / g.m > 2 * density
