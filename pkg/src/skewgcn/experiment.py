"""Experiment configuration, orchestration across modes, and output files.

A run sweeps the configured (mode, skew constant) grid.  Every cell starts
from the same model init and writes one metrics CSV; summary.json collects
per-cell accuracy and communication totals, and comparison.json reports the
communication reduction of each skewed cell against the full baseline.
Outputs carry no timestamps, so identical configs produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import WeightedGraph, load_dataset
from .partition import Partition, load_partition_csv, partition_nodes
from .sampling import SamplerConfig
from .synth import SbmSpec, synth_sbm
from .training import evaluate, init_model, train_distributed

NON_SKEWED_TAG = 0  # placeholder skew constant in filenames for full/local cells


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown config key(s) in {where}: {sorted(unknown)}")


@dataclass
class DatasetSpec:
    """Either a dataset directory or a synthetic block-model recipe."""

    path: str | None = None
    synthetic: SbmSpec | None = None

    def __post_init__(self) -> None:
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("dataset needs exactly one of 'path' or 'synthetic'")

    @classmethod
    def from_dict(cls, section: dict) -> "DatasetSpec":
        _reject_unknown(section, {"path", "synthetic"}, "dataset")
        synthetic = None
        if "synthetic" in section:
            _reject_unknown(section["synthetic"],
                            {"n_nodes", "n_blocks", "p_in", "p_out",
                             "feature_dim", "noise_sigma", "seed"},
                            "dataset.synthetic")
            synthetic = SbmSpec(**section["synthetic"])
        return cls(path=section.get("path"), synthetic=synthetic)

    def to_dict(self) -> dict:
        if self.path is not None:
            return {"path": self.path}
        return {"synthetic": asdict(self.synthetic)}

    def load(self) -> WeightedGraph:
        if self.path is not None:
            return load_dataset(self.path)
        return synth_sbm(self.synthetic)


@dataclass
class ExperimentConfig:
    dataset: DatasetSpec
    workers: int = 1
    partition_strategy: str = "contiguous"
    partition_seed: int = 0
    partition_file: str | None = None
    sampler: str = "ladies"
    budget: int = 64
    subgraph_size: int | None = None
    modes: list[str] = field(default_factory=lambda: ["full"])
    skew_constants: list[float] = field(default_factory=list)
    min_scale: float = 1.0
    hidden: list[int] = field(default_factory=lambda: [32])
    optimizer: str = "sgd"
    lr: float = 0.1
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self) -> None:
        if self.workers < 1 or self.epochs < 1 or self.batch_size < 1 or self.budget < 1:
            raise ValueError("counts must be >= 1")
        if not self.modes:
            raise ValueError("modes must be nonempty")
        for mode in self.modes:
            if mode not in ("full", "local", "skewed"):
                raise ValueError(f"unknown mode {mode!r}")
        if "skewed" in self.modes and not self.skew_constants:
            raise ValueError("skewed mode needs skew_constants")
        if any(d <= 0 for d in self.skew_constants):
            raise ValueError("skew constants must be positive")
        if self.sampler not in ("ladies", "saint"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.sampler == "saint" and self.subgraph_size is None:
            raise ValueError("saint sampler needs subgraph_size")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        _reject_unknown(raw, {
            "dataset", "workers", "partition", "sampler", "modes",
            "skew_constants", "min_scale", "model", "optimizer", "lr",
            "epochs", "batch_size", "seed", "output_dir",
        }, "config")
        if "dataset" not in raw:
            raise ValueError("config needs a 'dataset' section")
        dataset = DatasetSpec.from_dict(raw["dataset"])

        part = raw.get("partition", {})
        _reject_unknown(part, {"strategy", "seed", "file"}, "partition")

        samp = raw.get("sampler", {})
        _reject_unknown(samp, {"kind", "budget", "subgraph_size"}, "sampler")

        model = raw.get("model", {})
        _reject_unknown(model, {"hidden"}, "model")

        return cls(
            dataset=dataset,
            workers=raw.get("workers", 1),
            partition_strategy=part.get("strategy", "contiguous"),
            partition_seed=part.get("seed", 0),
            partition_file=part.get("file"),
            sampler=samp.get("kind", "ladies"),
            budget=samp.get("budget", 64),
            subgraph_size=samp.get("subgraph_size"),
            modes=list(raw.get("modes", ["full"])),
            skew_constants=[float(d) for d in raw.get("skew_constants", [])],
            min_scale=float(raw.get("min_scale", 1.0)),
            hidden=list(model.get("hidden", [32])),
            optimizer=raw.get("optimizer", "sgd"),
            lr=float(raw.get("lr", 0.1)),
            epochs=raw.get("epochs", 10),
            batch_size=raw.get("batch_size", 32),
            seed=raw.get("seed", 0),
            output_dir=raw.get("output_dir", "out"),
        )

    def to_dict(self) -> dict:
        partition: dict = {"strategy": self.partition_strategy, "seed": self.partition_seed}
        if self.partition_file is not None:
            partition["file"] = self.partition_file
        sampler: dict = {"kind": self.sampler, "budget": self.budget}
        if self.subgraph_size is not None:
            sampler["subgraph_size"] = self.subgraph_size
        return {
            "dataset": self.dataset.to_dict(),
            "workers": self.workers,
            "partition": partition,
            "sampler": sampler,
            "modes": list(self.modes),
            "skew_constants": list(self.skew_constants),
            "min_scale": self.min_scale,
            "model": {"hidden": list(self.hidden)},
            "optimizer": self.optimizer,
            "lr": self.lr,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }


def load_config(path: str | Path) -> ExperimentConfig:
    with Path(path).open("r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _d_tag(d: float) -> str:
    return str(int(d)) if float(d) == int(d) else str(d)


def _build_partition(cfg: ExperimentConfig, n_nodes: int) -> Partition:
    if cfg.partition_file is not None:
        return load_partition_csv(cfg.partition_file, n_nodes, cfg.workers)
    return partition_nodes(n_nodes, cfg.workers, cfg.partition_strategy,
                           seed=cfg.partition_seed)


def _write_json(path: Path, payload: dict) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Train every (mode, skew constant) cell and write the output files.

    Returns the list of files written.  Every cell restarts from the same
    seeded model init, so cells differ only in sampling behavior.
    """
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g = cfg.dataset.load()
    if g.features is None or g.labels is None or g.train_mask is None:
        raise ValueError("experiment dataset needs features, labels and masks")
    partition = _build_partition(cfg, g.n_nodes)
    layer_dims = [g.feature_dim, *cfg.hidden, int(g.labels.max()) + 1]

    cells = []
    for mode in cfg.modes:
        if mode == "skewed":
            cells.extend(("skewed", d) for d in cfg.skew_constants)
        else:
            cells.append((mode, float(NON_SKEWED_TAG)))

    written: list[Path] = []
    summary_cells = []
    test_nodes = np.flatnonzero(g.test_mask) if g.test_mask is not None else np.empty(0, dtype=np.int64)
    for mode, d in cells:
        model = init_model(layer_dims, cfg.seed)
        sampler_cfg = SamplerConfig(budget=cfg.budget, skew_constant=d,
                                    mode=mode, min_scale=cfg.min_scale)
        metrics, ledger = train_distributed(
            g, partition, model, sampler_cfg,
            epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr,
            mode=mode, seed=cfg.seed, sampler=cfg.sampler,
            subgraph_size=cfg.subgraph_size, optimizer=cfg.optimizer,
        )
        csv_name = f"metrics_{mode}_{_d_tag(d)}.csv"
        metrics.write_csv(out_dir / csv_name)
        written.append(out_dir / csv_name)
        test_acc = evaluate(model, g, test_nodes).accuracy if len(test_nodes) else None
        summary_cells.append({
            "mode": mode,
            "skew_constant": d,
            "best_val_acc": metrics.best_val_acc(),
            "final_val_acc": metrics.final_val_acc(),
            "test_acc": test_acc,
            "total_comm_nodes": ledger.total(),
            "metrics_csv": csv_name,
        })

    full_totals = [c["total_comm_nodes"] for c in summary_cells if c["mode"] == "full"]
    reductions = []
    if full_totals:
        full_total = full_totals[0]
        for c in summary_cells:
            if c["mode"] == "skewed" and c["total_comm_nodes"] > 0:
                reductions.append({
                    "skew_constant": c["skew_constant"],
                    "total_comm_nodes": c["total_comm_nodes"],
                    "reduction_vs_full": full_total / c["total_comm_nodes"],
                })

    summary = {
        "config": cfg.to_dict(),
        "cells": summary_cells,
        "reduction_factors": reductions,
    }
    summary_path = out_dir / "summary.json"
    _write_json(summary_path, summary)
    written.append(summary_path)

    comparison = {
        "full_total_comm_nodes": full_totals[0] if full_totals else None,
        "reductions": reductions,
    }
    comparison_path = out_dir / "comparison.json"
    _write_json(comparison_path, comparison)
    written.append(comparison_path)
    return written
