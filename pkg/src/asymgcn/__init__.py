"""Asymmetric attributed network embedding.

Two weight-independent graph-convolution branches — one over the self-loop
augmented adjacency, one over its transpose — are trained as semi-supervised
classifiers; their last hidden layers become per-node source and target
embeddings whose inner product scores directed affinity.
"""

from ._kernels import backend_name
from .classifier import LogRegConfig, LogRegModel, predict_logreg, train_logreg
from .data_io import (
    DatasetManifest,
    SyntheticSpec,
    default_fixture_spec,
    generate_synthetic,
    load_dataset,
    load_embeddings,
    read_manifest,
    save_embeddings,
)
from .embedding import (
    EmbeddingMatrix,
    asym_similarity,
    extract_embeddings,
    rank_all_pairs,
    rank_pairs,
)
from .evaluation import (
    EdgeSplit,
    EvalReport,
    depth_sweep,
    run_classification,
    run_link_prediction,
    run_reconstruction,
    split_edges,
    training_graph,
)
from .graph_core import (
    AugmentedAdjacency,
    DirectedAttributedGraph,
    augment_with_self_loops,
    build_graph,
    in_neighbors,
    out_neighbors,
    transpose,
)
from .linalg import SparseMatrix, track_allocations
from .metrics import accuracy, macro_f1, micro_f1, precision_at_k, silhouette
from .model import (
    ModelConfig,
    ModelParams,
    check_gradients,
    forward_branch,
    init_params,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
