"""Stochastic block model generator with block-aligned features and labels."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph, _csr_from_pairs, normalize_weights
from .seeding import spawn_rng


@dataclass
class SbmSpec:
    """Synthetic dataset recipe.

    Nodes split into n_blocks near-equal blocks; each within-block pair is
    an edge with probability p_in, each cross pair with p_out.  The label
    is the block id and the feature vector is a one-hot of the block plus
    iid Gaussian noise of scale noise_sigma.
    """

    n_nodes: int
    n_blocks: int
    p_in: float
    p_out: float
    feature_dim: int
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_nodes < 1 or self.n_blocks < 1:
            raise ValueError("n_nodes and n_blocks must be >= 1")
        if self.n_blocks > self.n_nodes:
            raise ValueError("more blocks than nodes")
        if not (0.0 <= self.p_out <= self.p_in <= 1.0):
            raise ValueError("need 0 <= p_out <= p_in <= 1")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be >= 1")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")


def _block_ids(n: int, k: int) -> np.ndarray:
    counts = np.full(k, n // k, dtype=np.int64)
    counts[: n % k] += 1
    return np.repeat(np.arange(k, dtype=np.int64), counts)


def synth_sbm(spec: SbmSpec, normalize: bool = True) -> WeightedGraph:
    """Sample a graph from the block model, with features, labels and masks.

    Masks split nodes 70/15/15 (train/val/test) by a seeded shuffle.  The
    graph may be disconnected; normalization gives isolated nodes a
    self-loop.
    """
    n, k = spec.n_nodes, spec.n_blocks
    if n > 1 and spec.p_in == 0.0 and spec.p_out == 0.0:
        warnings.warn("edgeless block model: every node ends up isolated")
    blocks = _block_ids(n, k)
    rng = spawn_rng(spec.seed, "sbm-edges")

    iu, ju = np.triu_indices(n, k=1)
    same_block = blocks[iu] == blocks[ju]
    prob = np.where(same_block, spec.p_in, spec.p_out)
    keep = rng.random(len(prob)) < prob
    u, v = iu[keep].astype(np.int64), ju[keep].astype(np.int64)
    offsets, cols, w = _csr_from_pairs(
        np.concatenate([u, v]), np.concatenate([v, u]), n)
    g = WeightedGraph(n_nodes=n, offsets=offsets, neighbors=cols, weights=w)

    feat_rng = spawn_rng(spec.seed, "sbm-features")
    features = feat_rng.normal(0.0, spec.noise_sigma, size=(n, spec.feature_dim))
    features[np.arange(n), blocks % spec.feature_dim] += 1.0

    mask_rng = spawn_rng(spec.seed, "sbm-masks")
    order = mask_rng.permutation(n)
    n_train = int(round(0.70 * n))
    n_val = int(round(0.15 * n))
    train_mask = np.zeros(n, dtype=bool)
    val_mask = np.zeros(n, dtype=bool)
    test_mask = np.zeros(n, dtype=bool)
    train_mask[order[:n_train]] = True
    val_mask[order[n_train:n_train + n_val]] = True
    test_mask[order[n_train + n_val:]] = True

    g.features = features
    g.labels = blocks.copy()
    g.train_mask = train_mask
    g.val_mask = val_mask
    g.test_mask = test_mask
    if normalize:
        g = normalize_weights(g)
    return g
