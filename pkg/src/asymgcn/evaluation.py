"""Experiment protocols: reconstruction, link prediction, classification.

Each protocol repeats its task over seeded runs and returns an
:class:`EvalReport` whose rows hold one metric value per run.  Runs are
reproducible: a run seed spawns independent streams for model init, edge or
node splits, and the downstream classifier, so re-running with the same
seeds is bit-identical end to end.
"""

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .classifier import LogRegConfig, predict_logreg, train_logreg
from .embedding import extract_embeddings, rank_all_pairs, rank_pairs
from .errors import TooFewEdges
from .graph_core import build_graph
from .metrics import accuracy, macro_f1, micro_f1, precision_at_k, silhouette
from .model import ModelConfig, train

# re-exported for callers that treat this module as the evaluation facade
__all__ = [
    "EdgeSplit", "EvalReport", "split_edges", "training_graph",
    "run_reconstruction", "run_link_prediction", "run_classification",
    "depth_sweep", "precision_at_k", "macro_f1", "micro_f1", "accuracy",
    "silhouette",
]


@dataclass
class EdgeSplit:
    """Disjoint train/test partition of a graph's directed edges."""

    train_edges: np.ndarray  # (m_train, 2)
    test_edges: np.ndarray  # (m_test, 2)
    ratio: float
    seed: int


def split_edges(g, ratio: float, seed: int) -> EdgeSplit:
    """Uniformly random edge holdout; |test| = round(ratio * |E|)."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    m = g.m
    num_test = int(round(ratio * m))
    if num_test == 0:
        raise TooFewEdges(f"ratio {ratio} of {m} edges leaves an empty test set")
    perm = np.random.default_rng(seed).permutation(m)
    test_idx = np.sort(perm[:num_test])
    train_idx = np.sort(perm[num_test:])
    edges = np.stack([g.src, g.dst], axis=1)
    return EdgeSplit(
        train_edges=edges[train_idx], test_edges=edges[test_idx],
        ratio=ratio, seed=int(seed),
    )


def training_graph(g, split: EdgeSplit):
    """The graph with test edges removed; nodes/attributes/labels intact."""
    return build_graph(split.train_edges, g.attributes, g.labels,
                       num_classes=g.num_classes)


@dataclass
class ReportRow:
    task: str
    metric: str
    k: int | None
    depth: int | None
    run: int
    seed: int
    value: float


@dataclass
class EvalReport:
    """Per-run metric values plus enough metadata to reproduce them."""

    task: str
    runs: int
    seeds: list
    config: dict
    rows: list = field(default_factory=list)

    def add(self, metric, value, run, seed, k=None, depth=None, task=None):
        self.rows.append(ReportRow(
            task=task or self.task, metric=metric,
            k=None if k is None else int(k),
            depth=None if depth is None else int(depth),
            run=int(run), seed=int(seed), value=float(value),
        ))

    def summary(self):
        """[(metric, k, depth, mean, sd, count)] grouped in first-seen order."""
        groups = {}
        order = []
        for row in self.rows:
            key = (row.metric, row.k, row.depth)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(row.value)
        out = []
        for key in order:
            vals = np.asarray(groups[key])
            sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
            out.append((key[0], key[1], key[2], float(vals.mean()), sd, vals.size))
        return out

    def mean(self, metric, k=None, depth=None) -> float:
        for m, kk, dd, mean, _, _ in self.summary():
            if m == metric and kk == k and dd == depth:
                return mean
        raise KeyError(f"no rows for metric={metric!r}, k={k}, depth={depth}")

    def to_csv(self, path):
        """Machine-readable rows; byte-identical for identical seeds."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("task,metric,k,depth,run,seed,value\n")
            for r in self.rows:
                k = "" if r.k is None else str(r.k)
                depth = "" if r.depth is None else str(r.depth)
                fh.write(f"{r.task},{r.metric},{k},{depth},{r.run},{r.seed},"
                         f"{r.value:.17g}\n")

    def format_table(self) -> str:
        lines = [f"task: {self.task}  (runs={self.runs})",
                 f"{'metric':<22} {'k':>6} {'depth':>6} {'mean':>12} {'sd':>12}"]
        for metric, k, depth, mean, sd, _ in self.summary():
            lines.append(
                f"{metric:<22} {k if k is not None else '-':>6} "
                f"{depth if depth is not None else '-':>6} "
                f"{mean:>12.6f} {sd:>12.6f}"
            )
        return "\n".join(lines)


def _run_seeds(cfg, runs, seeds):
    if seeds is None:
        seeds = [int(cfg.seed) + r for r in range(runs)]
    seeds = [int(s) for s in seeds]
    if len(seeds) != runs:
        raise ValueError(f"got {len(seeds)} seeds for {runs} runs")
    return seeds


def _streams(run_seed):
    """Independent (model, split, classifier) seeds for one run."""
    state = np.random.SeedSequence(int(run_seed)).generate_state(3)
    return int(state[0]), int(state[1]), int(state[2])


def _cfg_for(g, cfg, model_seed):
    return replace(cfg, seed=model_seed, num_classes=g.num_classes)


def _snapshot(cfg, **extra):
    snap = asdict(cfg)
    snap.update(extra)
    return snap


def run_reconstruction(g, model_cfg: ModelConfig, k_values, runs=10, seeds=None,
                       mask=None) -> EvalReport:
    """Train on the full graph, rank all ordered pairs, score Pr@k vs E."""
    k_values = [int(k) for k in k_values]
    seeds = _run_seeds(model_cfg, runs, seeds)
    report = EvalReport(
        task="reconstruction", runs=runs, seeds=seeds,
        config=_snapshot(model_cfg, k_values=k_values),
    )
    relevant = g.edge_set()
    for run, run_seed in enumerate(seeds):
        model_seed, _, _ = _streams(run_seed)
        cfg = _cfg_for(g, model_cfg, model_seed)
        params, _ = train(g, cfg, mask)
        Z = extract_embeddings(params, g, cfg.normalize_adjacency)
        ranked = rank_all_pairs(Z, max(k_values))
        for k in k_values:
            report.add("precision_at_k", precision_at_k(ranked, relevant, k),
                       run, run_seed, k=k)
    return report


def run_link_prediction(g, model_cfg: ModelConfig, ratio=0.3, k_values=(100,),
                        runs=10, seeds=None, mask=None, candidate_mode="full",
                        num_sampled_negatives=10000) -> EvalReport:
    """Edge-holdout protocol: hide ratio of E, train, rank non-train pairs.

    candidate_mode="full" ranks every ordered non-self pair outside the
    training edges; "sampled" ranks the test edges plus a random sample of
    non-edges (an approximation for graphs where n^2 is infeasible; the
    report's config records the mode).
    """
    k_values = [int(k) for k in k_values]
    seeds = _run_seeds(model_cfg, runs, seeds)
    report = EvalReport(
        task="link_prediction", runs=runs, seeds=seeds,
        config=_snapshot(model_cfg, ratio=ratio, k_values=k_values,
                         candidate_mode=candidate_mode),
    )
    for run, run_seed in enumerate(seeds):
        model_seed, split_seed, _ = _streams(run_seed)
        split = split_edges(g, ratio, split_seed)
        g_train = training_graph(g, split)
        cfg = _cfg_for(g, model_cfg, model_seed)
        params, _ = train(g_train, cfg, mask)
        Z = extract_embeddings(params, g_train, cfg.normalize_adjacency)
        relevant = set(map(tuple, split.test_edges.tolist()))
        if candidate_mode == "full":
            train_keys = (split.train_edges[:, 0].astype(np.int64) * g.n
                          + split.train_edges[:, 1])
            ranked = rank_all_pairs(Z, max(k_values), exclude_keys=train_keys)
        elif candidate_mode == "sampled":
            cands = _sampled_candidates(g, split, num_sampled_negatives,
                                        split_seed)
            ranked = rank_pairs(Z, cands, max(k_values))
        else:
            raise ValueError(f"unknown candidate_mode {candidate_mode!r}")
        for k in k_values:
            report.add("precision_at_k", precision_at_k(ranked, relevant, k),
                       run, run_seed, k=k)
    return report


def _sampled_candidates(g, split, num_negatives, seed):
    """Test edges plus uniformly sampled non-edges (without replacement)."""
    rng = np.random.default_rng(seed + 1)
    n = np.int64(g.n)
    forbidden = np.concatenate([
        g.edge_keys(), np.arange(g.n, dtype=np.int64) * n + np.arange(g.n)
    ])
    picked = set()
    target = min(num_negatives, g.n * (g.n - 1) - g.m)
    while len(picked) < target:
        draw = rng.integers(0, g.n * g.n, size=2 * (target - len(picked)))
        draw = draw[~np.isin(draw, forbidden)]
        for key in draw.tolist():
            picked.add(key)
            if len(picked) >= target:
                break
    keys = np.fromiter(picked, dtype=np.int64, count=len(picked))
    keys.sort()
    cands = [(int(k // n), int(k % n)) for k in keys]
    cands.extend(map(tuple, split.test_edges.tolist()))
    return cands


def run_classification(g, model_cfg: ModelConfig, train_frac=0.8, runs=10,
                       seeds=None, mask=None) -> EvalReport:
    """Embeddings -> logistic regression on a random node split, plus
    silhouette of the labeled embeddings; one row per metric per run."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must be in (0, 1), got {train_frac}")
    seeds = _run_seeds(model_cfg, runs, seeds)
    report = EvalReport(
        task="classification", runs=runs, seeds=seeds,
        config=_snapshot(model_cfg, train_frac=train_frac),
    )
    labeled = np.where(g.labels != -1)[0]
    if labeled.size < 2:
        raise ValueError("classification needs at least two labeled nodes")
    for run, run_seed in enumerate(seeds):
        model_seed, split_seed, clf_seed = _streams(run_seed)
        cfg = _cfg_for(g, model_cfg, model_seed)
        supervision = (g.labels != -1) if mask is None else np.asarray(mask, bool)
        params, _ = train(g, cfg, supervision)
        Z = extract_embeddings(params, g, cfg.normalize_adjacency)

        perm = np.random.default_rng(split_seed).permutation(labeled.size)
        num_train = int(round(train_frac * labeled.size))
        num_train = min(max(num_train, 1), labeled.size - 1)
        tr = labeled[perm[:num_train]]
        te = labeled[perm[num_train:]]
        clf = train_logreg(Z.data[tr], g.labels[tr],
                           LogRegConfig(seed=clf_seed))
        pred = predict_logreg(clf, Z.data[te])
        truth = g.labels[te]
        report.add("accuracy", accuracy(truth, pred), run, run_seed)
        report.add("micro_f1", micro_f1(truth, pred, g.num_classes),
                   run, run_seed)
        report.add("macro_f1", macro_f1(truth, pred, g.num_classes),
                   run, run_seed)
        report.add("silhouette", silhouette(Z.data[labeled], g.labels[labeled]),
                   run, run_seed)
        report.add("supervision_overlap", float(supervision[te].mean()),
                   run, run_seed)
    return report


_TASK_RUNNERS = {
    "classify": lambda g, cfg, runs, seeds, kw: run_classification(
        g, cfg, runs=runs, seeds=seeds, **kw),
    "reconstruct": lambda g, cfg, runs, seeds, kw: run_reconstruction(
        g, cfg, kw.pop("k_values", (200,)), runs=runs, seeds=seeds, **kw),
    "linkpred": lambda g, cfg, runs, seeds, kw: run_link_prediction(
        g, cfg, k_values=kw.pop("k_values", (100,)), runs=runs, seeds=seeds, **kw),
}


def depth_sweep(g, base_cfg: ModelConfig, depths, task="classify", runs=10,
                seeds=None, **task_kwargs) -> EvalReport:
    """Repeat a task at each depth (same seeds throughout); rows carry depth."""
    depths = [int(d) for d in depths]
    if not depths:
        raise ValueError("depths must be non-empty")
    if task not in _TASK_RUNNERS:
        raise ValueError(f"unknown task {task!r}; expected {sorted(_TASK_RUNNERS)}")
    seeds = _run_seeds(base_cfg, runs, seeds)
    report = EvalReport(
        task=f"depth_sweep:{task}", runs=runs, seeds=seeds,
        config=_snapshot(base_cfg, depths=depths, task=task),
    )
    for depth in depths:
        cfg = replace(base_cfg, num_conv_layers=depth)
        sub = _TASK_RUNNERS[task](g, cfg, runs, seeds, dict(task_kwargs))
        for row in sub.rows:
            report.add(row.metric, row.value, row.run, row.seed,
                       k=row.k, depth=depth, task=report.task)
    return report
