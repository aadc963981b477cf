"""Sampled neighbor aggregation, its exact oracle, and variance bounds.

The estimator reweights each sampled node's contribution by the inverse of
its inclusion probability, which makes the sampled aggregate an unbiased
estimate of the full one.  The analytic bounds cap the total squared
deviation of that estimate for linear and skewed sampling weights, with
embedding norms capped by a constant C.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import WeightedGraph, adjacency_block
from .sampling import SampleDraw

FORM_AGREEMENT_RTOL = 1e-9


@dataclass
class VarianceParams:
    """Inputs the analytic variance bounds depend on.

    norm_cap is the uniform bound C on squared embedding norms; sum_local
    and sum_remote are the squared-column-norm totals over the local and
    remote candidate subsets.
    """

    norm_cap: float
    budget: int
    n_local: int
    n_remote: int
    sum_local: float
    sum_remote: float

    def __post_init__(self) -> None:
        if self.norm_cap <= 0.0:
            raise ValueError("norm_cap must be positive")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.n_local < 0 or self.n_remote < 0:
            raise ValueError("counts must be nonnegative")
        if self.sum_local < 0.0 or self.sum_remote < 0.0:
            raise ValueError("norm sums must be nonnegative")

    @property
    def n_candidates(self) -> int:
        return self.n_local + self.n_remote

    @property
    def sum_total(self) -> float:
        return self.sum_local + self.sum_remote


def full_aggregate(g: WeightedGraph, s_l: np.ndarray, candidates: np.ndarray,
                   x: np.ndarray) -> np.ndarray:
    """Exact weighted aggregation: row i is sum over j of w[i, j] * x[j].

    x rows are aligned with candidates, which must cover every neighbor of
    s_l for the result to be the true convolution.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != len(candidates):
        raise ValueError("x rows must align with candidates")
    return adjacency_block(g, s_l, candidates) @ x


def estimate_aggregate(g: WeightedGraph, s_l: np.ndarray, draw: SampleDraw,
                       x_sampled: np.ndarray) -> np.ndarray:
    """Unbiased sampled aggregation: sum over sampled j of w[i, j] x[j] / p[j].

    x_sampled rows are aligned with draw.sampled.
    """
    x_sampled = np.asarray(x_sampled, dtype=np.float64)
    if x_sampled.shape[0] != len(draw.sampled):
        raise ValueError("x_sampled rows must align with draw.sampled")
    p = draw.sampled_inclusion_p()
    if np.any(p <= 0.0):
        raise ValueError("sampled node with zero inclusion probability")
    return adjacency_block(g, s_l, draw.sampled) @ (x_sampled / p[:, None])


def empirical_variance(trials: list[np.ndarray] | np.ndarray,
                       exact: np.ndarray) -> float:
    """Mean over trials of the squared Frobenius deviation from exact."""
    trials = np.asarray(trials, dtype=np.float64)
    if trials.ndim != 3 or trials.shape[0] < 2:
        raise ValueError("need at least two trials of matching shape")
    if trials.shape[1:] != exact.shape:
        raise ValueError("trial shape does not match exact")
    dev = trials - exact[None]
    return float(np.mean(np.sum(dev * dev, axis=(1, 2))))


def variance_bound_linear(vp: VarianceParams) -> float:
    """Variance cap under linear weights: (|N|/B - 1) * sum of norms * C."""
    if vp.budget > vp.n_candidates:
        raise ValueError("budget exceeds candidate count")
    return (vp.n_candidates / vp.budget - 1.0) * vp.sum_total * vp.norm_cap


def variance_bound_skewed(vp: VarianceParams, s: float) -> float:
    """Variance cap under skewed weights with local scale s.

    Evaluates two algebraically identical forms, the product expression and
    the linear bound plus its two correction terms, and insists they agree
    before returning the first.  Disagreement means an arithmetic bug, not
    bad inputs.
    """
    if s <= 0.0:
        raise ValueError("scale factor must be positive")
    if vp.budget > vp.n_candidates:
        raise ValueError("budget exceeds candidate count")
    b = float(vp.budget)
    product_form = (
        (vp.n_local / (s * b) + vp.n_remote / b)
        * (s * vp.sum_local + vp.sum_remote)
        - vp.sum_total
    ) * vp.norm_cap
    correction_form = (
        variance_bound_linear(vp)
        + (s - 1.0) * vp.n_remote / b * vp.sum_local * vp.norm_cap
        + (1.0 - s) * vp.n_local / (s * b) * vp.sum_remote * vp.norm_cap
    )
    scale = max(abs(product_form), abs(correction_form), 1e-30)
    if abs(product_form - correction_form) > FORM_AGREEMENT_RTOL * scale:
        raise ArithmeticError(
            f"variance bound forms disagree: {product_form!r} vs {correction_form!r}")
    return product_form
