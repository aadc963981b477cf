"""CSR graph storage, symmetric weight normalization, and neighbor queries.

The graph is undirected and unweighted on input; convolution weights arise
solely from :func:`normalize_weights`, which adds a self-loop to every node
and sets ``w[i, j] = 1 / sqrt(d_i * d_j)`` with degrees counting the
self-loop.  Node sets are represented as sorted, duplicate-free int64 arrays
throughout the package.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp


@dataclass
class WeightedGraph:
    """Undirected graph in canonical CSR form (rows sorted by neighbor id).

    Treated as immutable once built; all queries below are read-only and
    safe to call from concurrent workers.
    """

    n_nodes: int
    offsets: np.ndarray          # int64, len n_nodes+1
    neighbors: np.ndarray        # int64, column indices
    weights: np.ndarray          # float64, aligned with neighbors
    normalized: bool = False
    features: np.ndarray | None = None   # (n_nodes, feature_dim) float64
    labels: np.ndarray | None = None     # int64, -1 where unlabeled
    train_mask: np.ndarray | None = None  # bool per node
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.offsets = np.asarray(self.offsets, dtype=np.int64)
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.offsets.shape != (self.n_nodes + 1,):
            raise ValueError("offsets must have length n_nodes + 1")
        if self.offsets[0] != 0 or self.offsets[-1] != len(self.neighbors):
            raise ValueError("offsets must start at 0 and end at len(neighbors)")
        if np.any(np.diff(self.offsets) < 0):
            raise ValueError("offsets must be nondecreasing")
        if len(self.neighbors) != len(self.weights):
            raise ValueError("neighbors and weights must be aligned")
        if len(self.neighbors) and (
            self.neighbors.min() < 0 or self.neighbors.max() >= self.n_nodes
        ):
            raise ValueError("neighbor id out of range")

    @property
    def n_edges_stored(self) -> int:
        return len(self.neighbors)

    @property
    def feature_dim(self) -> int:
        if self.features is None:
            raise ValueError("graph carries no features")
        return self.features.shape[1]

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor ids and weights of node i."""
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return self.neighbors[lo:hi], self.weights[lo:hi]

    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def to_sparse(self) -> sp.csr_matrix:
        """Full adjacency operator as a scipy CSR matrix."""
        return sp.csr_matrix(
            (self.weights, self.neighbors, self.offsets),
            shape=(self.n_nodes, self.n_nodes),
        )


def node_set(ids) -> np.ndarray:
    """Sorted, duplicate-free int64 array of node ids."""
    arr = np.unique(np.asarray(ids, dtype=np.int64))
    if len(arr) and arr[0] < 0:
        raise ValueError("negative node id")
    return arr


def _check_node_set(s: np.ndarray, n_nodes: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.int64)
    if len(s) == 0:
        return s
    if np.any(np.diff(s) <= 0):
        raise ValueError("node set must be strictly increasing")
    if s[0] < 0 or s[-1] >= n_nodes:
        raise ValueError("node id out of range for this graph")
    return s


def _csr_from_pairs(src: np.ndarray, dst: np.ndarray,
                    n_nodes: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical CSR (sorted rows, deduplicated) from directed pairs."""
    if len(src) == 0:
        return np.zeros(n_nodes + 1, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)
    keys = np.unique(src.astype(np.int64) * n_nodes + dst.astype(np.int64))
    rows = keys // n_nodes
    cols = keys % n_nodes
    offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.add.at(offsets, rows + 1, 1)
    np.cumsum(offsets, out=offsets)
    return offsets, cols, np.ones(len(keys))


def load_edge_list(path: str | Path, n_hint: int | None = None) -> WeightedGraph:
    """Read an undirected edge list ("u v" per line, '#' comments ignored).

    Each edge is stored in both directions; duplicates collapse.  The node
    count is max id + 1, or n_hint if that is larger.
    """
    path = Path(path)
    us, vs = [], []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {text!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer node id in {text!r}") from exc
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative node id in {text!r}")
            us.append(u)
            vs.append(v)
    n_nodes = 0
    if us:
        n_nodes = max(max(us), max(vs)) + 1
    if n_hint is not None:
        n_nodes = max(n_nodes, n_hint)
    u = np.asarray(us, dtype=np.int64)
    v = np.asarray(vs, dtype=np.int64)
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    offsets, cols, w = _csr_from_pairs(src, dst, n_nodes)
    return WeightedGraph(n_nodes=n_nodes, offsets=offsets, neighbors=cols, weights=w)


def undirected_edges(g: WeightedGraph) -> np.ndarray:
    """Deduplicated undirected edge set as an array of (u, v) pairs, u <= v."""
    rows = np.repeat(np.arange(g.n_nodes, dtype=np.int64), g.degrees())
    mask = rows <= g.neighbors
    return np.stack([rows[mask], g.neighbors[mask]], axis=1)


def save_edge_list(g: WeightedGraph, path: str | Path) -> None:
    pairs = undirected_edges(g)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for u, v in pairs:
            fh.write(f"{u} {v}\n")


def normalize_weights(g: WeightedGraph) -> WeightedGraph:
    """Symmetric normalization with self-loops.

    Every row gains a self-loop entry; w[i, j] = 1/sqrt(d_i * d_j) where d
    counts the self-loop, so isolated nodes end up with a single weight-1
    entry.  Returns a new graph; the input is untouched.
    """
    if g.normalized:
        raise ValueError("graph is already normalized")
    rows = np.repeat(np.arange(g.n_nodes, dtype=np.int64), g.degrees())
    loops = np.arange(g.n_nodes, dtype=np.int64)
    src = np.concatenate([rows, loops])
    dst = np.concatenate([g.neighbors, loops])
    offsets, cols, _ = _csr_from_pairs(src, dst, g.n_nodes)
    deg = np.diff(offsets).astype(np.float64)
    row_ids = np.repeat(np.arange(g.n_nodes, dtype=np.int64), np.diff(offsets))
    w = 1.0 / np.sqrt(deg[row_ids] * deg[cols])  # symmetric in (i, j) bit-for-bit
    return replace(g, offsets=offsets, neighbors=cols, weights=w, normalized=True)


def neighbor_union(g: WeightedGraph, s: np.ndarray) -> np.ndarray:
    """Union of adjacency rows of the nodes in s (sorted, deduplicated).

    After normalization self-loops guarantee s is a subset of the result.
    """
    s = _check_node_set(s, g.n_nodes)
    if len(s) == 0:
        return np.zeros(0, dtype=np.int64)
    chunks = [g.neighbors[g.offsets[i]:g.offsets[i + 1]] for i in s]
    return np.unique(np.concatenate(chunks))


def column_norms(g: WeightedGraph, s_l: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Sum of squared weights from nodes in s_l into each candidate.

    Entry k is the squared column norm of candidate k over the rows s_l;
    candidates must all be neighbors of s_l, so every output is positive.
    """
    s_l = _check_node_set(s_l, g.n_nodes)
    candidates = _check_node_set(candidates, g.n_nodes)
    if len(s_l) == 0:
        if len(candidates):
            raise ValueError("candidates must be empty when s_l is empty")
        return np.zeros(0)
    out = np.zeros(len(candidates))
    cols = np.concatenate([g.neighbors[g.offsets[i]:g.offsets[i + 1]] for i in s_l])
    w = np.concatenate([g.weights[g.offsets[i]:g.offsets[i + 1]] for i in s_l])
    pos = np.searchsorted(candidates, cols)
    pos_clipped = np.minimum(pos, len(candidates) - 1)
    hit = candidates[pos_clipped] == cols
    np.add.at(out, pos_clipped[hit], w[hit] ** 2)
    if np.any(out <= 0.0):
        missing = candidates[out <= 0.0]
        raise ValueError(f"candidates not adjacent to s_l: {missing[:10].tolist()}")
    return out


def adjacency_block(g: WeightedGraph, rows: np.ndarray, cols: np.ndarray) -> sp.csr_matrix:
    """Sub-adjacency w[i, j] for i in rows, j in cols as a (|rows|, |cols|) CSR."""
    rows = _check_node_set(rows, g.n_nodes)
    cols = _check_node_set(cols, g.n_nodes)
    if len(rows) == 0 or len(cols) == 0:
        return sp.csr_matrix((len(rows), len(cols)))
    neigh = [g.neighbors[g.offsets[i]:g.offsets[i + 1]] for i in rows]
    wts = [g.weights[g.offsets[i]:g.offsets[i + 1]] for i in rows]
    lens = np.array([len(c) for c in neigh])
    row_idx = np.repeat(np.arange(len(rows)), lens)
    col_nodes = np.concatenate(neigh)
    w = np.concatenate(wts)
    pos = np.searchsorted(cols, col_nodes)
    pos_clipped = np.minimum(pos, len(cols) - 1)
    hit = cols[pos_clipped] == col_nodes
    mat = sp.csr_matrix(
        (w[hit], (row_idx[hit], pos_clipped[hit])),
        shape=(len(rows), len(cols)),
    )
    return mat


# ---------------------------------------------------------------------------
# Dataset files: edges.txt + features.csv + labels.csv + masks.csv
# ---------------------------------------------------------------------------

_SPLITS = ("train", "val", "test")


def load_features_csv(path: str | Path, n_nodes: int) -> np.ndarray:
    """Dense feature matrix; row r holds node r's feature_dim real columns."""
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if arr.shape[0] != n_nodes:
        raise ValueError(f"feature rows ({arr.shape[0]}) != n_nodes ({n_nodes})")
    return arr


def save_features_csv(features: np.ndarray, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in features:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _read_pairs_csv(path: str | Path, header: str) -> list[tuple[int, str]]:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, parts in enumerate(reader, start=1):
            if not parts:
                continue
            if lineno == 1 and not parts[0].strip().lstrip("-").isdigit():
                continue  # header row
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '{header}'")
            out.append((int(parts[0]), parts[1].strip()))
    return out


def load_labels_csv(path: str | Path, n_nodes: int) -> np.ndarray:
    """Integer class per node from "node,label" rows; -1 where unlabeled."""
    labels = np.full(n_nodes, -1, dtype=np.int64)
    for node, value in _read_pairs_csv(path, "node,label"):
        if not 0 <= node < n_nodes:
            raise ValueError(f"label for out-of-range node {node}")
        labels[node] = int(value)
    return labels


def save_labels_csv(labels: np.ndarray, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("node,label\n")
        for node, label in enumerate(labels):
            if label >= 0:
                fh.write(f"{node},{label}\n")


def load_masks_csv(path: str | Path, n_nodes: int) -> dict[str, np.ndarray]:
    """Train/val/test boolean masks from "node,split" rows."""
    masks = {name: np.zeros(n_nodes, dtype=bool) for name in _SPLITS}
    for node, split in _read_pairs_csv(path, "node,split"):
        if split not in masks:
            raise ValueError(f"unknown split {split!r} (want train/val/test)")
        if not 0 <= node < n_nodes:
            raise ValueError(f"mask for out-of-range node {node}")
        masks[split][node] = True
    return masks


def save_masks_csv(masks: dict[str, np.ndarray], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("node,split\n")
        n = len(next(iter(masks.values())))
        for node in range(n):
            for split in _SPLITS:
                if masks[split][node]:
                    fh.write(f"{node},{split}\n")


def load_dataset(directory: str | Path, n_hint: int | None = None,
                 normalize: bool = True) -> WeightedGraph:
    """Load edges.txt plus optional features/labels/masks CSVs from a directory.

    When features are present their row count fixes the node count, so
    trailing isolated nodes survive the round trip.
    """
    directory = Path(directory)
    feat_path = directory / "features.csv"
    features = None
    if feat_path.exists():
        features = np.loadtxt(feat_path, delimiter=",", dtype=np.float64, ndmin=2)
        n_hint = max(n_hint or 0, features.shape[0])
    g = load_edge_list(directory / "edges.txt", n_hint=n_hint)
    if normalize:
        g = normalize_weights(g)
    if features is not None:
        if features.shape[0] != g.n_nodes:
            raise ValueError(
                f"feature rows ({features.shape[0]}) != n_nodes ({g.n_nodes})")
        g.features = features
    label_path = directory / "labels.csv"
    if label_path.exists():
        g.labels = load_labels_csv(label_path, g.n_nodes)
    mask_path = directory / "masks.csv"
    if mask_path.exists():
        masks = load_masks_csv(mask_path, g.n_nodes)
        g.train_mask = masks["train"]
        g.val_mask = masks["val"]
        g.test_mask = masks["test"]
    return g


def save_dataset(g: WeightedGraph, directory: str | Path) -> None:
    """Write the directory layout load_dataset expects. Edges must be un-normalized."""
    if g.normalized:
        raise ValueError("save the un-normalized graph (weights are derived data)")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_edge_list(g, directory / "edges.txt")
    if g.features is not None:
        save_features_csv(g.features, directory / "features.csv")
    if g.labels is not None:
        save_labels_csv(g.labels, directory / "labels.csv")
    if g.train_mask is not None:
        masks = {"train": g.train_mask, "val": g.val_mask, "test": g.test_mask}
        save_masks_csv(masks, directory / "masks.csv")
