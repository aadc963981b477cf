"""Deterministic RNG stream splitting.

All randomness in the package flows from one integer master seed.  A child
stream is addressed by a sequence of labels (strings and/or integers), e.g.
``spawn_rng(seed, "train", worker, epoch, iteration)``.  Labels are hashed
with SHA-256, so the derived streams are stable across platforms and numpy
versions and independent of the order in which streams are created.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_words(label: str | int) -> list[int]:
    digest = hashlib.sha256(repr(label).encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def spawn_rng(master_seed: int, *labels: str | int) -> np.random.Generator:
    """Return an independent generator for (master_seed, labels)."""
    entropy = [master_seed & 0xFFFFFFFFFFFFFFFF]
    for label in labels:
        entropy.extend(_label_words(label))
    return np.random.default_rng(np.random.SeedSequence(entropy))
