"""Multi-layer GCN training over sampled plans on simulated workers.

A sample plan is a stack of reweighted adjacency blocks: block l maps the
layer-l node set to the layer-(l+1) node set with entries w[i, j] / p[j],
so the expected block equals the exact adjacency restricted to those rows.
Plans come from a layer-wise builder (fresh candidate set per layer, the
LADIES recipe) or a subgraph builder (one node set reused at every layer,
the GraphSAINT recipe).

The simulated distributed loop gives each of K workers its own seeded
stream, averages worker gradients every iteration in fixed worker order,
and tallies how many remote node features each worker would have fetched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .graph import WeightedGraph, adjacency_block, column_norms, neighbor_union, node_set
from .partition import Partition, local_mask
from .sampling import (
    ProbDist,
    SamplerConfig,
    draw_sample,
    linear_weights,
    skew_scale,
    skewed_weights,
)
from .seeding import spawn_rng


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass
class GcnModel:
    """Per-layer weight matrices; ReLU between layers, none on raw features."""

    weights: list[np.ndarray]

    def __post_init__(self) -> None:
        for a, b in zip(self.weights, self.weights[1:]):
            if a.shape[1] != b.shape[0]:
                raise ValueError("adjacent layer dims do not match")
        if any(not np.all(np.isfinite(w)) for w in self.weights):
            raise ValueError("non-finite model weights")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def copy(self) -> "GcnModel":
        return GcnModel([w.copy() for w in self.weights])


def init_model(layer_dims: list[int], seed: int) -> GcnModel:
    """Glorot-uniform weights for the dimension chain layer_dims."""
    if len(layer_dims) < 2:
        raise ValueError("need at least input and output dims")
    weights = []
    for l, (d_in, d_out) in enumerate(zip(layer_dims, layer_dims[1:])):
        bound = np.sqrt(6.0 / (d_in + d_out))
        rng = spawn_rng(seed, "init", l)
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
    return GcnModel(weights)


# ---------------------------------------------------------------------------
# Sample plans
# ---------------------------------------------------------------------------

@dataclass
class PlanLayer:
    """One reweighted adjacency block.

    nodes is the lower (input) node set; block has one row per node of the
    layer above and entries w[i, j] / p[j] over the sampled columns.  dist
    is None when the budget covered every candidate, in which case all
    inclusion probabilities are 1.
    """

    nodes: np.ndarray
    block: sp.csr_matrix
    dist: ProbDist | None
    remote_sampled: int


@dataclass
class SamplePlan:
    """Bottom-up stack of plan layers; layers[0].nodes feeds raw features."""

    layers: list[PlanLayer]
    batch: np.ndarray
    starvation_events: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def input_nodes(self) -> np.ndarray:
        return self.layers[0].nodes

    def remote_per_layer(self) -> np.ndarray:
        return np.array([layer.remote_sampled for layer in self.layers], dtype=np.int64)


@dataclass
class CommLedger:
    """Remote-feature-fetch counts indexed by (epoch, worker, layer)."""

    counts: np.ndarray  # int64 (n_epochs, n_workers, n_layers)

    @classmethod
    def empty(cls, n_epochs: int, n_workers: int, n_layers: int) -> "CommLedger":
        return cls(np.zeros((n_epochs, n_workers, n_layers), dtype=np.int64))

    def add_plan(self, epoch: int, worker: int, plan: SamplePlan) -> None:
        self.counts[epoch, worker, :] += plan.remote_per_layer()

    def total(self) -> int:
        return int(self.counts.sum())

    def per_worker_epoch(self, epoch: int, worker: int) -> int:
        return int(self.counts[epoch, worker].sum())


def _reweighted_block(g: WeightedGraph, upper: np.ndarray, sampled: np.ndarray,
                      p_sampled: np.ndarray) -> sp.csr_matrix:
    block = adjacency_block(g, upper, sampled)
    if len(sampled):
        block = block.multiply(1.0 / p_sampled[None, :]).tocsr()
    return block


def _sample_layer(candidates: np.ndarray, norms: np.ndarray, flags: np.ndarray,
                  cfg: SamplerConfig, rng: np.random.Generator
                  ) -> tuple[np.ndarray, np.ndarray, ProbDist | None]:
    """Pick the layer's nodes; budgets covering all candidates skip sampling."""
    if cfg.budget >= len(candidates):
        return candidates, np.ones(len(candidates)), None
    if cfg.mode == "skewed" and np.any(~flags):
        n_remote = int(np.sum(~flags))
        s = skew_scale(cfg.skew_constant, len(candidates), cfg.budget,
                       n_remote, cfg.min_scale)
        dist = skewed_weights(candidates, norms, flags, s)
    else:
        dist = linear_weights(candidates, norms, flags)
    draw = draw_sample(dist, cfg.budget, rng)
    return draw.sampled, draw.sampled_inclusion_p(), dist


def ladies_plan(g: WeightedGraph, partition: Partition, worker: int,
                batch: np.ndarray, cfg: SamplerConfig, n_layers: int,
                rng: np.random.Generator) -> SamplePlan:
    """Layer-wise plan: each layer samples from the neighbors of the one above.

    In local mode the candidate set is restricted to the worker's own nodes;
    an upper node with no local neighbor gets an all-zero row and counts as
    a starvation event.
    """
    batch = node_set(batch)
    if len(batch) == 0:
        raise ValueError("empty batch")
    upper = batch
    layers: list[PlanLayer] = []
    starved = 0
    for _ in range(n_layers):
        candidates = neighbor_union(g, upper)
        if cfg.mode == "local":
            flags_all = local_mask(candidates, partition, worker)
            candidates = candidates[flags_all]
            if len(candidates):
                cand_rows = adjacency_block(g, upper, candidates)
                starved += int(np.sum(np.diff(cand_rows.indptr) == 0))
            else:
                starved += len(upper)
        if len(candidates) == 0:
            layers.append(PlanLayer(
                nodes=candidates,
                block=sp.csr_matrix((len(upper), 0)),
                dist=None,
                remote_sampled=0,
            ))
            upper = candidates
            continue
        norms = column_norms(g, upper, candidates)
        flags = local_mask(candidates, partition, worker)
        sampled, p_sampled, dist = _sample_layer(candidates, norms, flags, cfg, rng)
        remote = int(np.sum(~local_mask(sampled, partition, worker)))
        layers.append(PlanLayer(
            nodes=sampled,
            block=_reweighted_block(g, upper, sampled, p_sampled),
            dist=dist,
            remote_sampled=remote,
        ))
        upper = sampled
    layers.reverse()
    return SamplePlan(layers=layers, batch=batch, starvation_events=starved)


def train_column_norms(g: WeightedGraph, train_nodes: np.ndarray) -> np.ndarray:
    """Squared column norms over training-node rows, for the subgraph sampler."""
    return column_norms(g, train_nodes, train_nodes)


def saint_plan(g: WeightedGraph, partition: Partition, worker: int,
               train_nodes: np.ndarray, subgraph_size: int, cfg: SamplerConfig,
               n_layers: int, rng: np.random.Generator,
               norms: np.ndarray | None = None) -> SamplePlan:
    """Subgraph plan: one node set sampled from all training nodes.

    Every layer reuses the induced subgraph block; remote subgraph members
    are charged once (layer 0) since their features travel once per plan.
    Pass precomputed norms (train_column_norms) to skip the per-call scan.
    """
    train_nodes = node_set(train_nodes)
    if len(train_nodes) == 0:
        raise ValueError("empty training node set")
    if subgraph_size > len(train_nodes):
        warnings.warn("subgraph size exceeds training set; clamping")
        subgraph_size = len(train_nodes)
    if subgraph_size < 1:
        raise ValueError("subgraph size must be >= 1")
    candidates = train_nodes
    flags = local_mask(candidates, partition, worker)
    if cfg.mode == "local":
        candidates = candidates[flags]
        if len(candidates) == 0:
            raise ValueError("no local training nodes to sample a subgraph from")
        flags = np.ones(len(candidates), dtype=bool)
        norms = None
        subgraph_size = min(subgraph_size, len(candidates))
    if norms is None:
        norms = column_norms(g, train_nodes, candidates)
    sub_cfg = replace(cfg, budget=subgraph_size)
    sub, p_sub, dist = _sample_layer(candidates, norms, flags, sub_cfg, rng)
    block = _reweighted_block(g, sub, sub, p_sub)
    remote = int(np.sum(~local_mask(sub, partition, worker)))
    layers = [
        PlanLayer(nodes=sub, block=block, dist=dist,
                  remote_sampled=remote if l == 0 else 0)
        for l in range(n_layers)
    ]
    return SamplePlan(layers=layers, batch=sub)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def forward(model: GcnModel, plan: SamplePlan, features: np.ndarray) -> np.ndarray:
    """Logits for the plan's batch; ReLU on every layer input except raw features."""
    if plan.n_layers != model.n_layers:
        raise ValueError("plan depth does not match model depth")
    h = features[plan.input_nodes]
    for l, (layer, w) in enumerate(zip(plan.layers, model.weights)):
        a = np.maximum(h, 0.0) if l > 0 else h
        h = (layer.block @ a) @ w
    return h


def loss_and_backward(model: GcnModel, plan: SamplePlan, features: np.ndarray,
                      labels: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Softmax cross-entropy over the batch and gradients for every layer.

    Unlabeled batch nodes (label < 0) are excluded from the mean; a batch
    with no labeled node is an error.  Uses the log-sum-exp form, so large
    logits do not overflow.
    """
    if plan.n_layers != model.n_layers:
        raise ValueError("plan depth does not match model depth")
    hs = [features[plan.input_nodes]]
    us = []
    h = hs[0]
    for l, (layer, w) in enumerate(zip(plan.layers, model.weights)):
        a = np.maximum(h, 0.0) if l > 0 else h
        u = layer.block @ a
        h = u @ w
        us.append(u)
        hs.append(h)
    logits = hs[-1]

    batch_labels = labels[plan.batch]
    labeled = batch_labels >= 0
    n_labeled = int(np.sum(labeled))
    if n_labeled == 0:
        raise ValueError("batch contains no labeled nodes")
    z = logits[labeled]
    y = batch_labels[labeled]
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.sum(np.exp(z - zmax), axis=1))
    loss = float(np.mean(lse - z[np.arange(n_labeled), y]))

    grad_z = np.exp(z - lse[:, None])
    grad_z[np.arange(n_labeled), y] -= 1.0
    grad_z /= n_labeled
    g = np.zeros_like(logits)
    g[labeled] = grad_z

    grads: list[np.ndarray] = [np.empty(0)] * model.n_layers
    for l in range(model.n_layers - 1, -1, -1):
        grads[l] = us[l].T @ g
        if l == 0:
            break
        g_u = g @ model.weights[l].T
        g_a = plan.layers[l].block.T @ g_u
        g = g_a * (hs[l] > 0.0)
    return loss, grads


# ---------------------------------------------------------------------------
# Full-graph inference and evaluation
# ---------------------------------------------------------------------------

def predict_logits(model: GcnModel, g: WeightedGraph) -> np.ndarray:
    """Exact (non-sampled) forward pass over the whole graph."""
    if g.features is None:
        raise ValueError("graph carries no features")
    p = g.to_sparse()
    h = g.features
    for l, w in enumerate(model.weights):
        a = np.maximum(h, 0.0) if l > 0 else h
        h = (p @ a) @ w
    return h


@dataclass
class EvalResult:
    accuracy: float
    micro_f1: float


def evaluate(model: GcnModel, g: WeightedGraph, nodes: np.ndarray) -> EvalResult:
    """Argmax accuracy and micro-F1 on the given labeled nodes, full inference."""
    nodes = node_set(nodes)
    if len(nodes) == 0:
        raise ValueError("empty evaluation node set")
    if g.labels is None or np.any(g.labels[nodes] < 0):
        raise ValueError("evaluation nodes must be labeled")
    preds = np.argmax(predict_logits(model, g)[nodes], axis=1)
    truth = g.labels[nodes]
    accuracy = float(np.mean(preds == truth))
    n_classes = int(max(preds.max(), truth.max())) + 1
    tp = np.zeros(n_classes)
    fp = np.zeros(n_classes)
    fn = np.zeros(n_classes)
    for c in range(n_classes):
        tp[c] = np.sum((preds == c) & (truth == c))
        fp[c] = np.sum((preds == c) & (truth != c))
        fn[c] = np.sum((preds != c) & (truth == c))
    denom = 2 * tp.sum() + fp.sum() + fn.sum()
    micro_f1 = float(2 * tp.sum() / denom) if denom > 0 else 0.0
    return EvalResult(accuracy=accuracy, micro_f1=micro_f1)


# ---------------------------------------------------------------------------
# Distributed training loop (simulated workers)
# ---------------------------------------------------------------------------

@dataclass
class MetricRow:
    epoch: int
    worker: int
    loss: float
    train_acc: float
    val_acc: float
    comm_nodes_epoch: int


@dataclass
class Metrics:
    rows: list[MetricRow] = field(default_factory=list)

    def best_val_acc(self) -> float:
        return max((r.val_acc for r in self.rows), default=0.0)

    def final_val_acc(self) -> float:
        return self.rows[-1].val_acc if self.rows else 0.0

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,worker,loss,train_acc,val_acc,comm_nodes_epoch\n")
            for r in self.rows:
                fh.write(f"{r.epoch},{r.worker},{r.loss!r},{r.train_acc!r},"
                         f"{r.val_acc!r},{r.comm_nodes_epoch}\n")


class _SgdStep:
    def __init__(self, lr: float):
        self.lr = lr

    def __call__(self, weights: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for w, grad in zip(weights, grads):
            w -= self.lr * grad


class _AdamStep:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def __call__(self, weights: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if self.m is None:
            self.m = [np.zeros_like(w) for w in weights]
            self.v = [np.zeros_like(w) for w in weights]
        self.t += 1
        for w, grad, m, v in zip(weights, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * grad
            v *= self.beta2
            v += (1 - self.beta2) * grad * grad
            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            w -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train_distributed(g: WeightedGraph, partition: Partition, model: GcnModel,
                      cfg: SamplerConfig, *, epochs: int, batch_size: int,
                      lr: float, mode: str, seed: int, sampler: str = "ladies",
                      subgraph_size: int | None = None,
                      optimizer: str = "sgd") -> tuple[Metrics, CommLedger]:
    """Simulated K-worker training with per-iteration gradient averaging.

    Every worker draws a batch from its own training nodes, builds a plan,
    and computes gradients; the uniform average over contributing workers
    is applied once per iteration.  All randomness derives from the master
    seed keyed by (role, epoch, iteration, worker), so results do not
    depend on worker execution order and repeat runs are bit-identical.
    """
    if g.features is None or g.labels is None or g.train_mask is None:
        raise ValueError("training needs features, labels and masks")
    if sampler not in ("ladies", "saint"):
        raise ValueError(f"unknown sampler {sampler!r}")
    if sampler == "saint" and subgraph_size is None:
        raise ValueError("saint sampler needs subgraph_size")
    cfg = replace(cfg, mode=mode)
    k = partition.n_workers
    m_layers = model.n_layers

    worker_train = [np.flatnonzero(g.train_mask & (partition.owner == w))
                    for w in range(k)]
    active = [w for w in range(k) if len(worker_train[w])]
    for w in range(k):
        if not len(worker_train[w]):
            warnings.warn(f"worker {w} has no training nodes; skipping it")
    if not active:
        raise ValueError("no worker has training nodes")

    all_train = np.flatnonzero(g.train_mask)
    saint_norms = None
    if sampler == "saint":
        saint_norms = train_column_norms(g, all_train)
        per_epoch = max(1, int(np.ceil(len(all_train) / subgraph_size)))
    else:
        per_epoch = max(1, max(int(np.ceil(len(worker_train[w]) / batch_size))
                               for w in active))

    step = _SgdStep(lr) if optimizer == "sgd" else _AdamStep(lr)
    if optimizer not in ("sgd", "adam"):
        raise ValueError(f"unknown optimizer {optimizer!r}")

    ledger = CommLedger.empty(epochs, k, m_layers)
    metrics = Metrics()
    val_nodes = np.flatnonzero(g.val_mask) if g.val_mask is not None else np.empty(0, dtype=np.int64)
    labels = g.labels

    for epoch in range(epochs):
        loss_sum = np.zeros(k)
        loss_count = np.zeros(k, dtype=np.int64)
        for it in range(per_epoch):
            grad_sum = [np.zeros_like(w) for w in model.weights]
            contributors = 0
            for w in active:
                if sampler == "ladies":
                    batch_rng = spawn_rng(seed, "batch", epoch, it, w)
                    take = min(batch_size, len(worker_train[w]))
                    batch = node_set(batch_rng.choice(worker_train[w], size=take,
                                                      replace=False))
                    plan = ladies_plan(g, partition, w, batch, cfg, m_layers,
                                       spawn_rng(seed, "plan", epoch, it, w))
                else:
                    plan = saint_plan(g, partition, w, all_train, subgraph_size,
                                      cfg, m_layers,
                                      spawn_rng(seed, "plan", epoch, it, w),
                                      norms=saint_norms)
                loss, grads = loss_and_backward(model, plan, g.features, labels)
                for l in range(m_layers):
                    grad_sum[l] += grads[l]
                ledger.add_plan(epoch, w, plan)
                loss_sum[w] += loss
                loss_count[w] += 1
                contributors += 1
            step(model.weights, [gs / contributors for gs in grad_sum])

        preds = np.argmax(predict_logits(model, g), axis=1)
        val_acc = float(np.mean(preds[val_nodes] == labels[val_nodes])) if len(val_nodes) else 0.0
        for w in range(k):
            tw = worker_train[w]
            train_acc = float(np.mean(preds[tw] == labels[tw])) if len(tw) else 0.0
            mean_loss = float(loss_sum[w] / loss_count[w]) if loss_count[w] else 0.0
            metrics.rows.append(MetricRow(
                epoch=epoch, worker=w, loss=mean_loss, train_acc=train_acc,
                val_acc=val_acc, comm_nodes_epoch=ledger.per_worker_epoch(epoch, w),
            ))
    return metrics, ledger
