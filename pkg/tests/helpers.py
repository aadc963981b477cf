"""Shared test utilities: small graphs and brute-force oracles."""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

import skewgcn as sg


def graph_from_edges(edges: list[tuple[int, int]], n_hint: int | None = None,
                     normalize: bool = True) -> sg.WeightedGraph:
    """Build a graph through the public edge-list loader."""
    with tempfile.TemporaryDirectory() as td:
        path = Path(td) / "edges.txt"
        path.write_text("".join(f"{u} {v}\n" for u, v in edges), encoding="utf-8")
        g = sg.load_edge_list(path, n_hint=n_hint)
    return sg.normalize_weights(g) if normalize else g


def random_graph(n: int, p: float, seed: int, normalize: bool = True) -> sg.WeightedGraph:
    """Erdos-Renyi graph, possibly with isolated nodes."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    return graph_from_edges(edges, n_hint=n, normalize=normalize)


def dense_weights(g: sg.WeightedGraph) -> np.ndarray:
    """Adjacency operator as a dense matrix (brute-force oracle)."""
    a = np.zeros((g.n_nodes, g.n_nodes))
    for i in range(g.n_nodes):
        cols, w = g.row(i)
        a[i, cols] = w
    return a


def brute_column_norms(g: sg.WeightedGraph, s_l: np.ndarray,
                       candidates: np.ndarray) -> np.ndarray:
    """Sum over i in s_l of w[i, j]^2 via the dense matrix."""
    a = dense_weights(g)
    return np.sum(a[np.ix_(s_l, candidates)] ** 2, axis=0)


def inclusion_matrix(dist: sg.ProbDist, budget: int, trials: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Boolean (trials, m): whether each candidate appeared in each trial."""
    m = len(dist)
    draws = rng.choice(m, size=(trials, budget), replace=True, p=dist.q)
    flat = draws + np.arange(trials)[:, None] * m
    counts = np.bincount(flat.ravel(), minlength=trials * m).reshape(trials, m)
    return counts > 0


def inclusion_counts(dist: sg.ProbDist, budget: int, trials: int,
                     rng: np.random.Generator) -> np.ndarray:
    """How many of the trials included each candidate at least once."""
    return inclusion_matrix(dist, budget, trials, rng).sum(axis=0)


def batched_estimates(g: sg.WeightedGraph, s_l: np.ndarray, dist: sg.ProbDist,
                      budget: int, trials: int, rng: np.random.Generator,
                      x: np.ndarray) -> np.ndarray:
    """Stack of sampled-aggregation estimates, one per trial.

    Vectorized restatement of the per-draw estimator: trial t's matrix is
    W_block @ (x * include[t] / p).  Tests spot-check it against the real
    single-draw code path before trusting it in bulk.
    """
    included = inclusion_matrix(dist, budget, trials, rng)
    p = sg.inclusion_probability(dist.q, budget)
    w_block = sg.adjacency_block(g, s_l, dist.candidates).toarray()
    scaled = included / p  # (trials, m)
    return np.einsum("rm,tm,md->trd", w_block, scaled, x, optimize=True)
