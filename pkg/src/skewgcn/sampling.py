"""Weighted neighbor-sampling distributions and communication prediction.

Two categorical distributions over a candidate set are provided: plain
linear weighting, where a candidate's per-draw probability is proportional
to its squared column norm, and skewed weighting, where locally owned
candidates additionally get their weight multiplied by a scale factor
s >= 1 so that remote candidates are drawn less often.

A sample is B independent categorical draws with duplicates collapsed, so
a candidate's inclusion probability is exactly 1 - (1 - q_j)^B.  The scale
factor comes either from the cheap closed form :func:`skew_scale` or from
:func:`exact_scale_upper_bound`, the largest s for which the skewed
variance bound stays within a chosen multiple of the linear one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_SUM_TOL = 1e-12


@dataclass
class SamplerConfig:
    """Knobs shared by the plan builders.

    budget: categorical draws per layer (or subgraph size stand-in).
    skew_constant: the D in the closed-form scale factor; larger D skews
        harder toward local candidates.
    mode: "full" (linear weights, cross-worker), "local" (restrict
        candidates to locally owned), or "skewed".
    min_scale: lower clamp for the scale factor, default 1 so the skew
        never favors remote nodes.
    """

    budget: int
    skew_constant: float = 0.0
    mode: str = "full"
    min_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.skew_constant < 0:
            raise ValueError("skew_constant must be >= 0")
        if self.mode not in ("full", "local", "skewed"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class ProbDist:
    """Categorical distribution over a candidate node set."""

    candidates: np.ndarray   # sorted node ids
    q: np.ndarray            # per-draw probabilities, sum to 1
    is_local: np.ndarray     # aligned locality flags
    s_used: float = 1.0      # scale factor baked into q

    def __post_init__(self) -> None:
        self.candidates = np.asarray(self.candidates, dtype=np.int64)
        self.q = np.asarray(self.q, dtype=np.float64)
        self.is_local = np.asarray(self.is_local, dtype=bool)
        if not (len(self.candidates) == len(self.q) == len(self.is_local)):
            raise ValueError("candidates, q, is_local must be aligned")
        if len(self.q) == 0:
            raise ValueError("empty candidate set")
        if np.any(self.q <= 0.0):
            raise ValueError("all probabilities must be positive")
        if abs(self.q.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {self.q.sum()!r}, not 1")

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass
class SampleDraw:
    """Deduplicated outcome of n_draws categorical draws."""

    candidates: np.ndarray    # the distribution's candidate set
    sampled: np.ndarray       # sorted distinct sampled node ids
    inclusion_p: np.ndarray   # per-candidate inclusion probability
    n_draws: int

    def sampled_positions(self) -> np.ndarray:
        """Indices of the sampled nodes within candidates."""
        return np.searchsorted(self.candidates, self.sampled)

    def sampled_inclusion_p(self) -> np.ndarray:
        return self.inclusion_p[self.sampled_positions()]


def linear_weights(candidates: np.ndarray, col_norms: np.ndarray,
                   is_local: np.ndarray | None = None) -> ProbDist:
    """q_j proportional to the squared column norm of candidate j."""
    col_norms = np.asarray(col_norms, dtype=np.float64)
    if len(col_norms) == 0:
        raise ValueError("empty candidate set")
    if np.any(col_norms <= 0.0):
        raise ValueError("column norms must be positive")
    if is_local is None:
        is_local = np.ones(len(col_norms), dtype=bool)
    total = col_norms.sum()
    return ProbDist(candidates=candidates, q=col_norms / total,
                    is_local=is_local, s_used=1.0)


def skewed_weights(candidates: np.ndarray, col_norms: np.ndarray,
                   is_local: np.ndarray, s: float) -> ProbDist:
    """Linear weights with local candidates' mass multiplied by s."""
    col_norms = np.asarray(col_norms, dtype=np.float64)
    is_local = np.asarray(is_local, dtype=bool)
    if len(col_norms) == 0:
        raise ValueError("empty candidate set")
    if np.any(col_norms <= 0.0):
        raise ValueError("column norms must be positive")
    if s < 1.0:
        raise ValueError("scale factor must be >= 1")
    scaled = np.where(is_local, s * col_norms, col_norms)
    return ProbDist(candidates=candidates, q=scaled / scaled.sum(),
                    is_local=is_local, s_used=float(s))


def skew_scale(skew_constant: float, n_candidates: int, budget: int,
               n_remote: int, min_scale: float = 1.0) -> float:
    """Closed-form local scale factor D*(|N| - B)/|R| + 1/2, clamped below.

    Requires remote candidates: with |R| = 0 there is nothing to skew and
    callers fall back to linear weights.
    """
    if n_remote <= 0:
        raise ValueError("no remote candidates; use linear weights instead")
    if budget > n_candidates:
        raise ValueError("budget exceeds candidate count")
    raw = skew_constant * (n_candidates - budget) / n_remote + 0.5
    return max(min_scale, raw)


def exact_scale_upper_bound(d1: float, n_local: int, n_remote: int, budget: int,
                            sum_local: float, sum_remote: float) -> float:
    """Largest s with skewed variance bound equal to d1 times the linear one.

    Solves the quadratic s^2 - (T1 + T2) s + T3 = 0 for its larger root,
    where the T terms fold in the candidate counts, the budget, and the
    local/remote column-norm sums.  For d1 >= 1 the root is >= 1.
    """
    if n_remote <= 0:
        raise ValueError("need remote candidates")
    if sum_local <= 0.0:
        raise ValueError("sum_local must be positive")
    if budget > n_local + n_remote:
        raise ValueError("budget exceeds candidate count")
    slack = n_local + n_remote - budget
    t1 = (d1 - 1.0) * slack / n_remote + 1.0
    t2 = ((d1 - 1.0) * slack + n_local) * sum_remote / (n_remote * sum_local)
    t3 = n_local * sum_remote / (n_remote * sum_local)
    disc = (t1 + t2) ** 2 - 4.0 * t3
    if disc < 0.0:
        raise ArithmeticError(
            f"negative discriminant {disc!r}; inputs violate the contract")
    return (t1 + t2) / 2.0 + np.sqrt(disc) / 2.0


def inclusion_probability(q: np.ndarray | float, budget: int) -> np.ndarray | float:
    """Probability that a candidate appears among B deduplicated draws.

    Computed as -expm1(B * log1p(-q)) so tiny q stay accurate; equals
    1 - (1 - q)^B and is bounded above by q * B.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0.0) or np.any(q > 1.0):
        raise ValueError("q must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        p = -np.expm1(budget * np.log1p(-q))
    return p if p.ndim else float(p)


def draw_sample(dist: ProbDist, budget: int, rng: np.random.Generator) -> SampleDraw:
    """B independent categorical draws with duplicates collapsed."""
    picks = rng.choice(len(dist), size=budget, replace=True, p=dist.q)
    sampled = dist.candidates[np.unique(picks)]
    return SampleDraw(
        candidates=dist.candidates,
        sampled=sampled,
        inclusion_p=inclusion_probability(dist.q, budget),
        n_draws=budget,
    )


def expected_remote_count(dist: ProbDist, budget: int) -> float:
    """Expected number of remote candidates included in a B-draw sample."""
    remote_q = dist.q[~dist.is_local]
    if len(remote_q) == 0:
        return 0.0
    return float(np.sum(inclusion_probability(remote_q, budget)))
