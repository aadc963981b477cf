"""Node-to-worker assignment and the local/remote split of candidate sets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import spawn_rng

STRATEGIES = ("contiguous", "hash", "random", "explicit")


@dataclass
class Partition:
    """Ownership map over k workers. Immutable after construction."""

    n_workers: int
    owner: np.ndarray  # int64 worker id per node
    strategy: str = "explicit"

    def __post_init__(self) -> None:
        self.owner = np.asarray(self.owner, dtype=np.int64)
        if self.n_workers < 1:
            raise ValueError("need at least one worker")
        if len(self.owner) and (self.owner.min() < 0 or self.owner.max() >= self.n_workers):
            raise ValueError("owner id out of range")

    @property
    def n_nodes(self) -> int:
        return len(self.owner)

    def owned_by(self, worker: int) -> np.ndarray:
        """Sorted node ids owned by the given worker."""
        return np.flatnonzero(self.owner == worker).astype(np.int64)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.owner, minlength=self.n_workers)


def _balanced_counts(n: int, k: int) -> np.ndarray:
    # first n % k workers take the extra node; sizes differ by at most 1
    counts = np.full(k, n // k, dtype=np.int64)
    counts[: n % k] += 1
    return counts


def partition_nodes(n: int, k: int, strategy: str = "contiguous",
                    seed: int | None = None) -> Partition:
    """Assign n nodes to k workers.

    contiguous: consecutive id blocks of near-equal size.
    hash: owner = node id mod k.
    random: a seeded permutation chunked evenly (seed required).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    if strategy == "contiguous":
        owner = np.repeat(np.arange(k, dtype=np.int64), _balanced_counts(n, k))
    elif strategy == "hash":
        owner = np.arange(n, dtype=np.int64) % k
    elif strategy == "random":
        if seed is None:
            raise ValueError("random strategy needs a seed")
        perm = spawn_rng(seed, "partition").permutation(n)
        owner = np.empty(n, dtype=np.int64)
        owner[perm] = np.repeat(np.arange(k, dtype=np.int64), _balanced_counts(n, k))
    else:
        raise ValueError(f"unknown strategy {strategy!r} (want one of {STRATEGIES})")
    return Partition(n_workers=k, owner=owner, strategy=strategy)


def load_partition_csv(path: str | Path, n_nodes: int, k: int) -> Partition:
    """Explicit "node,worker" assignment; every node must be covered."""
    owner = np.full(n_nodes, -1, dtype=np.int64)
    with Path(path).open("r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, parts in enumerate(reader, start=1):
            if not parts:
                continue
            if lineno == 1 and not parts[0].strip().lstrip("-").isdigit():
                continue
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node,worker'")
            node, worker = int(parts[0]), int(parts[1])
            if not 0 <= node < n_nodes:
                raise ValueError(f"{path}:{lineno}: node {node} out of range")
            if not 0 <= worker < k:
                raise ValueError(f"{path}:{lineno}: worker {worker} out of range")
            owner[node] = worker
    missing = np.flatnonzero(owner < 0)
    if len(missing):
        raise ValueError(f"partition file misses nodes {missing[:10].tolist()}")
    return Partition(n_workers=k, owner=owner, strategy="explicit")


def split_local_remote(candidates: np.ndarray, p: Partition,
                       worker: int) -> tuple[np.ndarray, np.ndarray]:
    """Partition candidates into (local, remote) for one worker."""
    if not 0 <= worker < p.n_workers:
        raise ValueError("worker id out of range")
    candidates = np.asarray(candidates, dtype=np.int64)
    local_mask = p.owner[candidates] == worker
    return candidates[local_mask], candidates[~local_mask]


def local_mask(candidates: np.ndarray, p: Partition, worker: int) -> np.ndarray:
    """Boolean flags aligned with candidates: True where locally owned."""
    if not 0 <= worker < p.n_workers:
        raise ValueError("worker id out of range")
    return p.owner[np.asarray(candidates, dtype=np.int64)] == worker
