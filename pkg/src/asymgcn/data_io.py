"""Dataset loading, synthetic graph generation, and persistence.

Real datasets are described by a small key=value manifest pointing at either
(a) an edge file + sparse attribute file + label file, or (b) a classic
combined content file (``id w_1 ... w_F label``) plus a citation file.
String node ids are remapped to dense 0-based integers and the id/class maps
are persisted next to the manifest.

The synthetic generator produces directed stochastic-block-style graphs with
heavy-tailed degree propensities and class-informative Gaussian attributes;
it is the fixture factory for the property tests.
"""

import os
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbeddingMatrix
from .errors import CountMismatch, IoError, ParseError
from .graph_core import build_graph

_MANIFEST_KEYS = {
    "name", "edge_file", "attr_file", "label_file", "content_file",
    "attr_kind", "edge_columns", "expect_nodes", "expect_edges",
    "expect_features", "expect_classes", "strict_counts",
}
_ATTR_KINDS = ("binary", "tfidf", "dense")


@dataclass
class DatasetManifest:
    """Where a dataset lives and what shape it should have."""

    name: str
    path: Path  # manifest file location (anchors relative paths)
    edge_file: str = None
    attr_file: str = None
    label_file: str = None
    content_file: str = None
    attr_kind: str = "binary"
    edge_columns: str = "src_dst"  # or "dst_src" for cited-first files
    expect_nodes: int = None
    expect_edges: int = None
    expect_features: int = None
    expect_classes: int = None
    strict_counts: bool = False

    def resolve(self, relative) -> Path:
        """Anchor a manifest-relative path; falls back to ASYMGCN_DATA_DIR."""
        p = Path(relative)
        if p.is_absolute():
            return p
        local = self.path.parent / p
        if local.exists():
            return local
        env = os.environ.get("ASYMGCN_DATA_DIR")
        if env and (Path(env) / p).exists():
            return Path(env) / p
        return local


def read_manifest(path) -> DatasetManifest:
    """Parse a key=value manifest ('#' comments, blank lines ignored)."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"manifest not found: {path}")
    fields = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", path, lineno)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _MANIFEST_KEYS:
                raise ParseError(f"unknown manifest key {key!r}", path, lineno)
            fields[key] = value
    if "name" not in fields:
        raise ParseError("manifest must set a name", path)
    for key in ("expect_nodes", "expect_edges", "expect_features",
                "expect_classes"):
        if key in fields:
            fields[key] = int(fields[key])
    if "strict_counts" in fields:
        fields["strict_counts"] = fields["strict_counts"].lower() in (
            "1", "true", "yes")
    m = DatasetManifest(path=path, **fields)
    if m.attr_kind not in _ATTR_KINDS:
        raise ParseError(f"attr_kind must be one of {_ATTR_KINDS}", path)
    if m.edge_columns not in ("src_dst", "dst_src"):
        raise ParseError("edge_columns must be src_dst or dst_src", path)
    if m.content_file is None and (m.edge_file is None or m.attr_file is None):
        raise ParseError(
            "manifest needs either content_file or edge_file + attr_file", path)
    return m


def _read_edge_pairs(path, edge_columns):
    """(lineno, src, dst) triples from a `src dst` edge-list file."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(
                    f"expected two ids, got {len(parts)} fields", path, lineno)
            a, b = parts
            pairs.append((lineno, b, a) if edge_columns == "dst_src"
                         else (lineno, a, b))
    return pairs


def _check_count(manifest, what, expected, found):
    if expected is None or expected == found:
        return
    if manifest.strict_counts:
        raise CountMismatch(what, expected, found)
    warnings.warn(
        f"{manifest.name}: manifest expects {what}={expected}, files have "
        f"{found}; loading the files' counts"
    )


def _persist_map(path, pairs, header):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {header}\n")
            for key, idx in pairs:
                fh.write(f"{key}\t{idx}\n")
    except OSError as exc:
        warnings.warn(f"could not persist {path.name}: {exc}")


def load_dataset(manifest: DatasetManifest):
    """Load per the manifest; returns a graph with dense remapped ids."""
    if isinstance(manifest, (str, Path)):
        manifest = read_manifest(manifest)
    if manifest.content_file:
        ids, X, label_names = _load_content(
            manifest.resolve(manifest.content_file), manifest.attr_kind)
    else:
        ids, X = _load_attributes(
            manifest.resolve(manifest.attr_file), manifest.attr_kind)
        label_names = _load_labels(
            manifest.resolve(manifest.label_file), ids
        ) if manifest.label_file else {}

    id_of = {node: i for i, node in enumerate(ids)}
    edge_path = manifest.resolve(manifest.edge_file)
    edges = []
    for lineno, a, b in _read_edge_pairs(edge_path, manifest.edge_columns):
        if a not in id_of or b not in id_of:
            missing = a if a not in id_of else b
            raise ParseError(
                f"edge references unknown node id {missing!r}",
                edge_path, lineno)
        edges.append((id_of[a], id_of[b]))
    unique_edges = sorted(set(edges))
    if len(unique_edges) < len(edges):
        warnings.warn(
            f"{manifest.name}: dropped {len(edges) - len(unique_edges)} "
            f"duplicate edges")

    classes = sorted(set(label_names.values())) if label_names else []
    class_of = {name: i for i, name in enumerate(classes)}
    labels = [
        class_of[label_names[node]] if node in label_names else None
        for node in ids
    ]

    g = build_graph(unique_edges, X, labels)
    _check_count(manifest, "nodes", manifest.expect_nodes, g.n)
    _check_count(manifest, "edges", manifest.expect_edges, g.m)
    _check_count(manifest, "features", manifest.expect_features,
                 g.num_features)
    _check_count(manifest, "classes", manifest.expect_classes, g.num_classes)

    base = manifest.path.parent
    _persist_map(base / f"{manifest.name}.idmap.tsv",
                 [(node, i) for i, node in enumerate(ids)], "node_id index")
    if classes:
        _persist_map(base / f"{manifest.name}.classmap.tsv",
                     [(name, i) for name, i in class_of.items()],
                     "class_name index")
    return g


def _load_content(path, attr_kind):
    """Combined `id w_1 ... w_F label` rows (the classic citation layout)."""
    ids, rows, labels = [], [], {}
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 3:
                raise ParseError("content row needs id, features, label",
                                 path, lineno)
            node, feats, label = parts[0], parts[1:-1], parts[-1]
            if width is None:
                width = len(feats)
            elif len(feats) != width:
                raise ParseError(
                    f"row has {len(feats)} features, expected {width}",
                    path, lineno)
            if node in labels:
                raise ParseError(f"duplicate node id {node!r}", path, lineno)
            try:
                rows.append([float(v) for v in feats])
            except ValueError:
                raise ParseError("non-numeric feature value", path, lineno)
            ids.append(node)
            labels[node] = label
    if not ids:
        raise ParseError("content file is empty", path)
    return ids, np.asarray(rows, dtype=np.float64), labels


def _load_attributes(path, attr_kind):
    """Sparse `id idx:value ...` lines, or dense rows for attr_kind=dense."""
    ids, entries = [], []
    seen = set()
    max_idx = -1
    dense_rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            node = parts[0]
            if node in seen:
                raise ParseError(f"duplicate node id {node!r}", path, lineno)
            seen.add(node)
            ids.append(node)
            if attr_kind == "dense":
                try:
                    dense_rows.append([float(v) for v in parts[1:]])
                except ValueError:
                    raise ParseError("non-numeric feature value", path, lineno)
                continue
            row = []
            for tok in parts[1:]:
                if ":" not in tok:
                    raise ParseError(f"expected idx:value, got {tok!r}",
                                     path, lineno)
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(f"bad sparse entry {tok!r}", path, lineno)
                if idx < 0:
                    raise ParseError(f"negative feature index {idx}",
                                     path, lineno)
                max_idx = max(max_idx, idx)
                row.append((idx, val))
            entries.append(row)
    if not ids:
        raise ParseError("attribute file is empty", path)
    if attr_kind == "dense":
        widths = {len(r) for r in dense_rows}
        if len(widths) != 1:
            raise ParseError(f"inconsistent dense widths {sorted(widths)}",
                             path)
        return ids, np.asarray(dense_rows, dtype=np.float64)
    X = np.zeros((len(ids), max_idx + 1), dtype=np.float64)
    for i, row in enumerate(entries):
        for idx, val in row:
            X[i, idx] = val
    return ids, X


def _load_labels(path, ids):
    """`node_id class_name` lines; nodes absent from the file stay unlabeled."""
    known = set(ids)
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected `node_id class_name`", path, lineno)
            node, name = parts
            if node not in known:
                raise ParseError(f"label for unknown node {node!r}",
                                 path, lineno)
            if node in labels:
                raise ParseError(f"duplicate label for node {node!r}",
                                 path, lineno)
            labels[node] = name
    return labels


# ---------------------------------------------------------------------------
# synthetic graphs


@dataclass
class SyntheticSpec:
    """Directed degree-corrected block fixture.

    Edge (i, j) appears with probability 1 - (1 - p)^(theta_i * theta_j)
    where p is the intra/inter block probability and the theta are lognormal
    out/in propensities with sigma = degree_spread (0 = uniform degrees).
    This keeps p=1 blocks full and p=0 blocks empty while giving realistic
    heavy-tailed degrees in between.  Attributes are Gaussian with per-class
    means of scale `signal` and per-node noise of scale `attr_noise`; labels
    are the communities.
    """

    n: int = 200
    num_communities: int = 2
    p_intra: float = 0.1
    p_inter: float = 0.01
    num_features: int = 32
    signal: float = 1.0
    attr_noise: float = 1.0
    degree_spread: float = 1.5
    seed: int = 0

    def validate(self):
        if self.n < 1 or self.num_communities < 1:
            raise ValueError("n and num_communities must be >= 1")
        if self.n < self.num_communities:
            raise ValueError("n must be >= num_communities")
        for p in (self.p_intra, self.p_inter):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"edge probability {p} outside [0, 1]")
        if self.num_features < 1:
            raise ValueError("num_features must be >= 1")
        if self.attr_noise < 0:
            raise ValueError("attr_noise must be >= 0")
        if self.degree_spread < 0:
            raise ValueError("degree_spread must be >= 0")
        return self


_DENSE_LIMIT = 2000  # above this, pairwise Bernoulli sampling is replaced


def default_fixture_spec(seed=0) -> SyntheticSpec:
    return SyntheticSpec(seed=seed)


def generate_synthetic(spec: SyntheticSpec):
    """Deterministic directed attributed graph for the given spec."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n, spec.num_communities
    sizes = np.full(k, n // k, dtype=np.int64)
    sizes[: n % k] += 1
    comm = np.repeat(np.arange(k, dtype=np.int64), sizes)

    s = spec.degree_spread
    theta_out = np.exp(rng.normal(-0.5 * s * s, s, size=n)) if s > 0 else np.ones(n)
    theta_in = np.exp(rng.normal(-0.5 * s * s, s, size=n)) if s > 0 else np.ones(n)

    if n <= _DENSE_LIMIT:
        same = comm[:, None] == comm[None, :]
        base = np.where(same, spec.p_intra, spec.p_inter)
        prob = 1.0 - np.power(1.0 - base, np.outer(theta_out, theta_in))
        np.fill_diagonal(prob, 0.0)
        src, dst = np.nonzero(rng.random((n, n)) < prob)
    else:
        src, dst = _sample_sparse(rng, comm, sizes, theta_out, theta_in,
                                  spec.p_intra, spec.p_inter, n)

    means = rng.normal(0.0, spec.signal, size=(k, spec.num_features))
    X = means[comm] + rng.normal(0.0, spec.attr_noise, size=(n, spec.num_features))
    return build_graph(np.stack([src, dst], axis=1), X, comm)


def _sample_sparse(rng, comm, sizes, theta_out, theta_in, p_intra, p_inter, n):
    """Poisson-thinned equivalent of the dense sampler for large sparse graphs.

    Sampling pair (i, j) a Poisson(-ln(1-p) * theta_i * theta_j) number of
    times and keeping distinct pairs realizes exactly the dense path's
    per-pair probability 1 - (1-p)^(theta_i theta_j).
    """
    if max(p_intra, p_inter) >= 1.0:
        raise ValueError(
            f"probabilities must be < 1 for sparse sampling (n > {_DENSE_LIMIT})")
    k = sizes.shape[0]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    nodes_of = [np.arange(starts[a], starts[a + 1], dtype=np.int64)
                for a in range(k)]
    out_sum = [theta_out[idx].sum() for idx in nodes_of]
    in_sum = [theta_in[idx].sum() for idx in nodes_of]

    chunks_src, chunks_dst = [], []
    for a in range(k):
        for b in range(k):
            p = p_intra if a == b else p_inter
            if p <= 0.0:
                continue
            rate = -np.log1p(-p) * out_sum[a] * in_sum[b]
            count = int(rng.poisson(rate))
            if count == 0:
                continue
            src = rng.choice(nodes_of[a], size=count,
                             p=theta_out[nodes_of[a]] / out_sum[a])
            dst = rng.choice(nodes_of[b], size=count,
                             p=theta_in[nodes_of[b]] / in_sum[b])
            keep = src != dst
            chunks_src.append(src[keep])
            chunks_dst.append(dst[keep])
    if not chunks_src:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    src = np.concatenate(chunks_src)
    dst = np.concatenate(chunks_dst)
    keys = np.unique(src * np.int64(n) + dst)
    return keys // n, keys % n


# ---------------------------------------------------------------------------
# embedding persistence


def save_embeddings(Z: EmbeddingMatrix, path):
    """Plain text: header `# n d`, then `node_id v_1 ... v_2d` per node.

    Values use 17 significant digits, so save/load round-trips bit-exactly.
    """
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {Z.n} {Z.d}\n")
            for i in range(Z.n):
                row = " ".join(f"{v:.17g}" for v in Z.data[i])
                fh.write(f"{i} {row}\n")
    except OSError as exc:
        raise IoError(f"cannot write embeddings to {path}: {exc}")


def load_embeddings(path) -> EmbeddingMatrix:
    """Inverse of :func:`save_embeddings`; validates header and row shape."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"embedding file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "#":
            raise ParseError("expected header `# n d`", path, 1)
        try:
            n, d = int(header[1]), int(header[2])
        except ValueError:
            raise ParseError("non-integer header counts", path, 1)
        data = np.empty((n, 2 * d), dtype=np.float64)
        count = 0
        for lineno, raw in enumerate(fh, 2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 * d + 1:
                raise ParseError(
                    f"expected node id + {2 * d} values, got {len(parts)} "
                    f"fields", path, lineno)
            if count >= n:
                raise ParseError(
                    f"more than the declared {n} rows", path, lineno)
            if int(parts[0]) != count:
                raise ParseError(
                    f"expected node id {count}, got {parts[0]}", path, lineno)
            data[count] = [float(v) for v in parts[1:]]
            count += 1
    if count != n:
        raise ParseError(f"declared {n} rows but found {count}", path)
    return EmbeddingMatrix(n=n, d=d, data=data)
