"""Communication-efficient distributed GCN training via skewed neighbor sampling."""

from .graph import (
    WeightedGraph,
    adjacency_block,
    column_norms,
    load_dataset,
    load_edge_list,
    load_features_csv,
    load_labels_csv,
    load_masks_csv,
    neighbor_union,
    node_set,
    normalize_weights,
    save_dataset,
    save_edge_list,
    undirected_edges,
)
from .partition import Partition, load_partition_csv, local_mask, partition_nodes, split_local_remote
from .sampling import (
    ProbDist,
    SampleDraw,
    SamplerConfig,
    draw_sample,
    exact_scale_upper_bound,
    expected_remote_count,
    inclusion_probability,
    linear_weights,
    skew_scale,
    skewed_weights,
)
from .estimation import (
    VarianceParams,
    empirical_variance,
    estimate_aggregate,
    full_aggregate,
    variance_bound_linear,
    variance_bound_skewed,
)
from .training import (
    CommLedger,
    EvalResult,
    GcnModel,
    Metrics,
    SamplePlan,
    evaluate,
    forward,
    init_model,
    ladies_plan,
    loss_and_backward,
    predict_logits,
    saint_plan,
    train_distributed,
)
from .synth import SbmSpec, synth_sbm
from .seeding import spawn_rng
from .experiment import ExperimentConfig, load_config, run_experiment, save_config

__version__ = "0.1.0"

__all__ = [
    "WeightedGraph", "adjacency_block", "column_norms", "load_dataset",
    "load_edge_list", "load_features_csv", "load_labels_csv", "load_masks_csv",
    "neighbor_union", "node_set", "normalize_weights", "save_dataset",
    "save_edge_list", "undirected_edges",
    "Partition", "load_partition_csv", "local_mask", "partition_nodes",
    "split_local_remote",
    "ProbDist", "SampleDraw", "SamplerConfig", "draw_sample",
    "exact_scale_upper_bound", "expected_remote_count",
    "inclusion_probability", "linear_weights", "skew_scale", "skewed_weights",
    "VarianceParams", "empirical_variance", "estimate_aggregate",
    "full_aggregate", "variance_bound_linear", "variance_bound_skewed",
    "CommLedger", "EvalResult", "GcnModel", "Metrics", "SamplePlan",
    "evaluate", "forward", "init_model", "ladies_plan", "loss_and_backward",
    "predict_logits", "saint_plan", "train_distributed",
    "SbmSpec", "synth_sbm", "spawn_rng",
    "ExperimentConfig", "load_config", "run_experiment", "save_config",
]
