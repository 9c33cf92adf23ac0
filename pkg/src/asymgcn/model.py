"""Dual-branch graph convolutional model.

Two structurally identical, weight-independent branches are trained side by
side: the source branch propagates over the self-loop-augmented adjacency,
the target branch over its transpose.  Each branch is a semi-supervised
softmax classifier; its last hidden layer is that branch's embedding.

Forward, cross-entropy, backpropagation and Adam are written out explicitly
against the primitives in :mod:`asymgcn.linalg` — gradients are exact (see
:func:`check_gradients`), not autodiff.
"""

import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyMask, NonFiniteLoss
from .graph_core import AugmentedAdjacency, augment_with_self_loops, transpose
from .linalg import SparseMatrix, matmul, relu, softmax_rows, spmm

LOG_CLAMP = 1e-12


@dataclass
class ModelConfig:
    """Hyperparameters: l conv layers of width d, then a softmax layer."""

    num_conv_layers: int = 2
    hidden_dim: int = 100
    num_classes: int = 2
    learning_rate: float = 0.01
    epochs: int = 200
    seed: int = 0
    normalize_adjacency: bool = False
    loss_reduction: str = "mean"  # "mean" (default) or "sum"

    def validate(self):
        if self.num_conv_layers < 1:
            raise ValueError("num_conv_layers must be >= 1")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.loss_reduction not in ("mean", "sum"):
            raise ValueError("loss_reduction must be 'mean' or 'sum'")
        return self


@dataclass
class ModelParams:
    """Per-branch weight stacks plus Adam moment state."""

    source_weights: list
    target_weights: list
    m_source: list = field(repr=False, default=None)
    v_source: list = field(repr=False, default=None)
    m_target: list = field(repr=False, default=None)
    v_target: list = field(repr=False, default=None)
    step: int = 0


@dataclass
class BranchActivations:
    """Everything the backward pass needs from one branch's forward pass."""

    hiddens: list  # [H_0 = X, H_1, ..., H_l] (ReLU outputs)
    preacts: list  # pre-ReLU inputs of the l hidden layers
    props: list  # propagated inputs A_hat @ H_k, one per weight matrix
    probs: np.ndarray  # softmax output, n x |C|


def weight_shapes(cfg: ModelConfig, num_features: int):
    """[F x d, (d x d) * (l-1), d x |C|] — one matrix per layer."""
    l, d = cfg.num_conv_layers, cfg.hidden_dim
    return [(num_features, d)] + [(d, d)] * (l - 1) + [(d, cfg.num_classes)]


def init_params(cfg: ModelConfig, num_features: int) -> ModelParams:
    """Glorot-uniform weights, independent per branch; zeroed Adam moments."""
    rng = np.random.default_rng(cfg.seed)

    def glorot(shape):
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        return rng.uniform(-limit, limit, size=shape)

    shapes = weight_shapes(cfg, num_features)
    source = [glorot(s) for s in shapes]
    target = [glorot(s) for s in shapes]
    return ModelParams(
        source_weights=source,
        target_weights=target,
        m_source=[np.zeros(s) for s in shapes],
        v_source=[np.zeros(s) for s in shapes],
        m_target=[np.zeros(s) for s in shapes],
        v_target=[np.zeros(s) for s in shapes],
        step=0,
    )


def _propagation_matrix(adj) -> SparseMatrix:
    return adj.matrix if isinstance(adj, AugmentedAdjacency) else adj


def forward_branch(adj, X, weights) -> BranchActivations:
    """One branch's forward pass over the given (augmented) adjacency.

    Hidden layers compute ReLU(A_hat @ H @ W); the final layer applies a row
    softmax instead of ReLU.  Pass the augmented adjacency for the source
    branch and its transpose for the target branch.
    """
    mat = _propagation_matrix(adj)
    X = np.asarray(X, dtype=np.float64)
    if mat.cols != X.shape[0]:
        raise DimensionMismatch(
            f"adjacency is {mat.rows}x{mat.cols} but X has {X.shape[0]} rows"
        )
    hiddens, preacts, props = [X], [], []
    H = X
    for W in weights[:-1]:
        P = spmm(mat, H)
        props.append(P)
        pre = matmul(P, W)
        preacts.append(pre)
        H = relu(pre)
        hiddens.append(H)
    P = spmm(mat, H)
    props.append(P)
    probs = softmax_rows(matmul(P, weights[-1]))
    return BranchActivations(hiddens=hiddens, preacts=preacts, props=props, probs=probs)


def _masked_index(labels, mask):
    mask = np.asarray(mask, dtype=bool)
    idx = np.where(mask)[0]
    if idx.size == 0:
        raise EmptyMask("training mask selects no nodes")
    if np.any(labels[idx] < 0):
        raise ValueError("training mask covers unlabeled nodes")
    return idx


def masked_cross_entropy(probs, labels, mask, reduction="mean") -> float:
    """-sum log p(true class) over masked nodes, averaged unless reduction='sum'."""
    labels = np.asarray(labels, dtype=np.int64)
    idx = _masked_index(labels, mask)
    picked = np.clip(probs[idx, labels[idx]], LOG_CLAMP, None)
    total = -float(np.log(picked).sum())
    return total / idx.size if reduction == "mean" else total


def backward(adj, X, weights, acts: BranchActivations, labels, mask,
             reduction="mean", adjoint=None):
    """Exact gradients of the masked cross-entropy w.r.t. each weight matrix.

    The adjoint of propagation by M is propagation by M^T; pass it in when
    already materialized (the training loop does), otherwise it is built here.
    """
    mat = _propagation_matrix(adj)
    if adjoint is None:
        adjoint = mat.transpose()
    labels = np.asarray(labels, dtype=np.int64)
    idx = _masked_index(labels, mask)

    dlogits = np.zeros_like(acts.probs)
    dlogits[idx] = acts.probs[idx]
    dlogits[idx, labels[idx]] -= 1.0
    if reduction == "mean":
        dlogits[idx] /= idx.size

    grads = [None] * len(weights)
    grads[-1] = matmul(acts.props[-1].T, dlogits)
    dH = spmm(adjoint, matmul(dlogits, weights[-1].T))
    for k in range(len(weights) - 2, -1, -1):
        dpre = dH * (acts.preacts[k] > 0.0)
        grads[k] = matmul(acts.props[k].T, dpre)
        if k > 0:
            dH = spmm(adjoint, matmul(dpre, weights[k].T))
    return grads


def adam_step(params: ModelParams, grads_source, grads_target, cfg: ModelConfig,
              beta1=0.9, beta2=0.999, eps=1e-8) -> ModelParams:
    """Standard bias-corrected Adam; the branches update independently."""
    params.step += 1
    t = params.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    stacks = (
        (params.source_weights, grads_source, params.m_source, params.v_source),
        (params.target_weights, grads_target, params.m_target, params.v_target),
    )
    for weights, grads, ms, vs in stacks:
        for W, g, m, v in zip(weights, grads, ms, vs):
            m *= beta1
            m += (1.0 - beta1) * g
            v *= beta2
            v += (1.0 - beta2) * (g * g)
            W -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params


def default_train_mask(g) -> np.ndarray:
    """All labeled nodes (the default supervision set)."""
    return g.labels != -1


def _validated_mask(g, cfg, mask):
    mask = default_train_mask(g) if mask is None else np.asarray(mask, dtype=bool)
    idx = _masked_index(g.labels, mask)
    present = np.unique(g.labels[idx])
    missing = sorted(set(range(cfg.num_classes)) - set(present.tolist()))
    if missing:
        warnings.warn(f"training mask has no examples of classes {missing}")
    return mask


def _branch_matrices(g, cfg):
    """(source propagation, its adjoint), (target propagation, its adjoint)."""
    adj = augment_with_self_loops(g)
    adj_t = transpose(adj)
    mat_s, mat_t = adj.matrix, adj_t.matrix
    if cfg.normalize_adjacency:
        mat_s = mat_s.row_normalize()
        mat_t = mat_t.row_normalize()
    return (mat_s, mat_s.transpose()), (mat_t, mat_t.transpose())


def train(g, cfg: ModelConfig, mask=None):
    """Full-batch training of both branches; returns (params, loss history).

    Each epoch runs both forward passes, evaluates the two cross-entropy
    losses (which never mix), backpropagates each branch against its own
    loss, and applies one Adam step.  History holds (L_S, L_T) per epoch,
    evaluated at the pre-update parameters.
    """
    cfg.validate()
    if g.num_classes != cfg.num_classes:
        raise DimensionMismatch(
            f"graph has {g.num_classes} classes, config says {cfg.num_classes}"
        )
    mask = _validated_mask(g, cfg, mask)
    (mat_s, adj_s), (mat_t, adj_t) = _branch_matrices(g, cfg)
    X = g.attributes
    params = init_params(cfg, g.num_features)

    history = []
    for epoch in range(cfg.epochs):
        acts_s = forward_branch(mat_s, X, params.source_weights)
        acts_t = forward_branch(mat_t, X, params.target_weights)
        loss_s = masked_cross_entropy(acts_s.probs, g.labels, mask, cfg.loss_reduction)
        loss_t = masked_cross_entropy(acts_t.probs, g.labels, mask, cfg.loss_reduction)
        if not np.isfinite(loss_s):
            raise NonFiniteLoss(epoch, "source", loss_s)
        if not np.isfinite(loss_t):
            raise NonFiniteLoss(epoch, "target", loss_t)
        grads_s = backward(mat_s, X, params.source_weights, acts_s, g.labels, mask,
                           cfg.loss_reduction, adjoint=adj_s)
        grads_t = backward(mat_t, X, params.target_weights, acts_t, g.labels, mask,
                           cfg.loss_reduction, adjoint=adj_t)
        adam_step(params, grads_s, grads_t, cfg)
        history.append((loss_s, loss_t))
    return params, history


@dataclass
class GradCheckReport:
    """Finite-difference audit of the analytic gradients."""

    max_rel_error: float
    tolerance: float
    per_matrix: list  # (branch, layer index, max relative error)
    passed: bool


def check_gradients(g, cfg: ModelConfig, tolerance=1e-4, mask=None,
                    step=1e-5) -> GradCheckReport:
    """Central finite differences over every parameter entry of both branches.

    Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    Intended for small graphs (the cost is two forward passes per entry).

    Meaningful only while every masked probability stays above LOG_CLAMP: the
    clamp zeroes the true gradient of saturated entries, whereas the analytic
    pass intentionally computes the unclamped gradient, so a saturated fixture
    reports large errors that are not backward-pass bugs.  Deep stacks over
    the raw adjacency saturate easily; keep attribute scales modest (or row-
    normalize) when auditing l >= 3.
    """
    cfg.validate()
    mask = _validated_mask(g, cfg, mask)
    (mat_s, adj_s), (mat_t, adj_t) = _branch_matrices(g, cfg)
    X = g.attributes
    params = init_params(cfg, g.num_features)

    per_matrix = []
    worst = 0.0
    for branch, mat, adjoint, weights in (
        ("source", mat_s, adj_s, params.source_weights),
        ("target", mat_t, adj_t, params.target_weights),
    ):
        acts = forward_branch(mat, X, weights)
        grads = backward(mat, X, weights, acts, g.labels, mask,
                         cfg.loss_reduction, adjoint=adjoint)

        def loss_at():
            probs = forward_branch(mat, X, weights).probs
            return masked_cross_entropy(probs, g.labels, mask, cfg.loss_reduction)

        for li, (W, G) in enumerate(zip(weights, grads)):
            err = 0.0
            flat_w, flat_g = W.ravel(), G.ravel()
            for p in range(flat_w.size):
                keep = flat_w[p]
                flat_w[p] = keep + step
                up = loss_at()
                flat_w[p] = keep - step
                down = loss_at()
                flat_w[p] = keep
                numeric = (up - down) / (2.0 * step)
                analytic = flat_g[p]
                denom = max(abs(analytic), abs(numeric), 1e-8)
                err = max(err, abs(analytic - numeric) / denom)
            per_matrix.append((branch, li, err))
            worst = max(worst, err)
    return GradCheckReport(
        max_rel_error=worst,
        tolerance=tolerance,
        per_matrix=per_matrix,
        passed=worst < tolerance,
    )


CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: ModelParams, cfg: ModelConfig):
    """Versioned npz snapshot of config, weights and Adam state (bit-exact)."""
    arrays = {"step": np.int64(params.step)}
    for tag, stack in (
        ("sw", params.source_weights), ("tw", params.target_weights),
        ("sm", params.m_source), ("sv", params.v_source),
        ("tm", params.m_target), ("tv", params.v_target),
    ):
        for i, arr in enumerate(stack):
            arrays[f"{tag}{i}"] = arr
    arrays["version"] = np.int64(CHECKPOINT_VERSION)
    arrays["config"] = np.frombuffer(
        json.dumps(asdict(cfg)).encode("utf-8"), dtype=np.uint8
    )
    np.savez(path, **arrays)


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns (params, config)."""
    with np.load(path) as blob:
        version = int(blob["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        cfg = ModelConfig(**json.loads(bytes(blob["config"]).decode("utf-8")))
        count = len(weight_shapes(cfg, 1))  # layer count is shape-independent
        stacks = {
            tag: [blob[f"{tag}{i}"].copy() for i in range(count)]
            for tag in ("sw", "tw", "sm", "sv", "tm", "tv")
        }
        params = ModelParams(
            source_weights=stacks["sw"], target_weights=stacks["tw"],
            m_source=stacks["sm"], v_source=stacks["sv"],
            m_target=stacks["tm"], v_target=stacks["tv"],
            step=int(blob["step"]),
        )
    return params, cfg
