"""Configuration, presets and the experiment runner behind the CLI."""

from __future__ import annotations

import copy
import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .constraints import build_label_constraint
from .dataset import (MultiViewDataset, SyntheticSpec, generate_synthetic, load_dataset,
                      mask_labels)
from .evaluation import evaluate_run
from .factorization import VARIANTS, DivergenceError, SolverConfig, fit, write_trace_csv
from .graph import build_view_graph

log = logging.getLogger(__name__)

ABLATION_ORDER = ("baseline", "baseline_alpha", "baseline_beta", "no_normalization", "full")

# (alpha, beta, gamma, k) at 10%, 20%, 30% labeled samples
PRESETS = {
    "yale": {"0.1": (1e3, 0.1, 0.1, 2), "0.2": (1e4, 0.1, 0.1, 2), "0.3": (1e2, 1.0, 0.1, 2)},
    "orl": {"0.1": (1e2, 1.0, 0.01, 2), "0.2": (1e3, 1.0, 0.01, 2), "0.3": (1e3, 0.1, 0.01, 2)},
    "ecg": {"0.1": (1e5, 10.0, 0.1, 4), "0.2": (1e4, 1.0, 0.1, 4), "0.3": (1e3, 10.0, 0.1, 4)},
    "webkb": {"0.1": (1e3, 1.0, 1.0, 3), "0.2": (1e3, 1.0, 1.0, 3), "0.3": (1e3, 1.0, 1.0, 3)},
}
PER_RATIO_KEYS = ("alpha", "beta", "gamma", "k")


class ConfigError(ValueError):
    pass


@dataclass
class GraphConfig:
    k: int = 5
    # None selects the median heuristic
    delta: Optional[float] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")


@dataclass
class DatasetConfig:
    kind: str = "synthetic"
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    views: List[str] = field(default_factory=list)
    labels: Optional[str] = None
    n_classes: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("synthetic", "files"):
            raise ValueError("kind must be 'synthetic' or 'files'")
        if self.kind == "files" and (not self.views or not self.labels):
            raise ValueError("file datasets need 'views' and 'labels' paths")


@dataclass
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    ratios: List[float] = field(default_factory=lambda: [0.1, 0.2, 0.3])
    redraws: int = 5
    solver: SolverConfig = field(default_factory=SolverConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    # optional per-view graph settings, overriding ``graph``
    view_graphs: Optional[List[GraphConfig]] = None
    variants: List[str] = field(default_factory=lambda: ["full"])
    sweep: Dict[str, List[float]] = field(default_factory=dict)
    preset: Optional[str] = None
    # ratio -> {alpha, beta, gamma, k}; filled from a preset
    per_ratio: Dict[str, Dict[str, float]] = field(default_factory=dict)
    seed: int = 0
    repeats: int = 10
    restarts: int = 20
    assign: str = "kmeans"
    out: str = "results"
    save_factors: bool = False
    dump_graph: bool = False
    parallel: bool = False

    def __post_init__(self):
        if not self.ratios or any(not 0 < r <= 1 for r in self.ratios):
            raise ConfigError("ratios: every ratio must lie in (0, 1]")
        if self.redraws < 1:
            raise ConfigError("redraws: must be >= 1")
        if self.repeats < 1 or self.restarts < 1:
            raise ConfigError("repeats/restarts: must be >= 1")
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad or not self.variants:
            raise ConfigError(f"variants: unknown or empty {bad}; choose from {VARIANTS}")
        for key, grid in self.sweep.items():
            if key not in PER_RATIO_KEYS:
                raise ConfigError(f"sweep.{key}: only {PER_RATIO_KEYS} can be swept")
            if not grid:
                raise ConfigError(f"sweep.{key}: grid is empty")
        if self.assign not in ("kmeans", "argmax"):
            raise ConfigError("assign: must be 'kmeans' or 'argmax'")


# ---------------------------------------------------------------- parsing

_NESTED = {
    "dataset": DatasetConfig,
    "dataset.synthetic": SyntheticSpec,
    "solver": SolverConfig,
    "graph": GraphConfig,
}


def _build(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path + '.' if path else ''}{sorted(unknown)[0]}: unknown field")
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if sub in _NESTED:
            value = _build(_NESTED[sub], value, sub)
        elif sub == "view_graphs" and value is not None:
            value = [_build(GraphConfig, g, f"{sub}[{i}]") for i, g in enumerate(value)]
        elif sub == "dataset.synthetic.view_dims":
            value = tuple(int(m) for m in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path + '.' if path else ''}{exc}") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def config_to_dict(config: ExperimentConfig) -> dict:
    d = dataclasses.asdict(config)
    d["dataset"]["synthetic"]["view_dims"] = list(d["dataset"]["synthetic"]["view_dims"])
    return d


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "per_ratio":
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def preset(name: str) -> dict:
    """Per-ratio hyperparameter table for a named preset."""
    try:
        table = PRESETS[name]
    except KeyError:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return {r: dict(zip(PER_RATIO_KEYS, vals)) for r, vals in table.items()}


def resolve_config(file_data: Optional[dict] = None, preset_name: Optional[str] = None,
                   overrides: Optional[dict] = None) -> ExperimentConfig:
    """Merge built-in defaults < preset < config file < flag overrides."""
    file_data = file_data or {}
    overrides = overrides or {}
    data = config_to_dict(ExperimentConfig())
    name = preset_name or file_data.get("preset")
    if name:
        data["preset"] = name
        data["per_ratio"] = preset(name)
    data = _deep_merge(data, file_data)
    if name and "per_ratio" not in file_data:
        # explicit file values beat the preset table
        explicit = set(file_data.get("solver", {})) | set(file_data.get("graph", {}))
        for entry in data["per_ratio"].values():
            for key in explicit & set(PER_RATIO_KEYS):
                entry.pop(key, None)
    data = _deep_merge(data, overrides)
    if preset_name:
        data["preset"] = preset_name
    return config_from_dict(data)


def params_for_ratio(config: ExperimentConfig, ratio: float) -> dict:
    params = {"alpha": config.solver.alpha, "beta": config.solver.beta,
              "gamma": config.solver.gamma, "k": config.graph.k}
    for key, entry in config.per_ratio.items():
        if abs(float(key) - ratio) < 1e-9:
            params.update(entry)
            break
    else:
        if config.per_ratio:
            log.warning("no per-ratio entry for ratio %s; using base settings", ratio)
    return params


# ---------------------------------------------------------------- running

def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed from the master seed and a tuple of cell coordinates."""
    blob = json.dumps([int(master), *parts], separators=(",", ":")).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


def load_experiment_dataset(config: ExperimentConfig) -> MultiViewDataset:
    dc = config.dataset
    if dc.kind == "synthetic":
        return generate_synthetic(dc.synthetic)
    return load_dataset(dc.views, dc.labels, dc.n_classes)


@dataclass
class Cell:
    grid_index: int
    grid_point: dict
    ratio_index: int
    ratio: float
    redraw: int
    variant: str

    @property
    def name(self) -> str:
        prefix = f"g{self.grid_index}_" if self.grid_point else ""
        return f"{prefix}r{self.ratio_index}_d{self.redraw}_{self.variant}"


def _grid(config: ExperimentConfig, sweep: bool):
    if not sweep:
        return [{}]
    keys = [k for k in PER_RATIO_KEYS if k in config.sweep]
    return [dict(zip(keys, vals)) for vals in itertools.product(*(config.sweep[k] for k in keys))]


def plan_cells(config: ExperimentConfig, variants, sweep: bool = False) -> List[Cell]:
    cells = []
    for g, point in enumerate(_grid(config, sweep)):
        for ri, ratio in enumerate(config.ratios):
            for redraw in range(config.redraws):
                for variant in variants:
                    cells.append(Cell(g, point, ri, float(ratio), redraw, variant))
    return cells


def run_cell(config: ExperimentConfig, dataset: MultiViewDataset, cell: Cell) -> dict:
    """Mask, build constraints and graphs, fit and score one cell.

    Mask and initialization seeds depend only on (ratio, redraw), so every
    variant and grid point of a redraw sees the same labels and start.
    """
    master = config.seed
    mask_seed = derive_seed(master, "mask", cell.ratio_index, cell.redraw)
    init_seed = derive_seed(master, "init", cell.ratio_index, cell.redraw)
    km_seeds = [derive_seed(master, "kmeans", cell.ratio_index, cell.redraw, cell.variant, r)
                for r in range(config.repeats)]

    params = params_for_ratio(config, cell.ratio)
    params.update(cell.grid_point)
    masked = mask_labels(dataset, cell.ratio, mask_seed)
    solver = dataclasses.replace(config.solver, alpha=float(params["alpha"]),
                                 beta=float(params["beta"]), gamma=float(params["gamma"]),
                                 seed=init_seed, variant=cell.variant)
    constraint = build_label_constraint(masked.labels, masked.n_classes, solver.m_s)
    graphs = []
    for v, X in enumerate(masked.views):
        gc = config.view_graphs[v] if config.view_graphs else config.graph
        k = int(params["k"]) if not config.view_graphs or "k" in cell.grid_point else gc.k
        graphs.append(build_view_graph(X, k, gc.delta))

    record = {
        "cell": cell.name, "variant": cell.variant, "ratio": cell.ratio,
        "redraw": cell.redraw, "grid": cell.grid_point,
        "alpha": solver.alpha, "beta": solver.beta, "gamma": solver.gamma,
        "k": [g.k for g in graphs],
        "seeds": {"master": master, "mask": mask_seed, "init": init_seed, "kmeans": km_seeds},
        "n_labeled": masked.n_labeled,
    }
    try:
        state = fit(masked, constraint, graphs, solver)
    except DivergenceError as exc:
        record.update(status="diverged", error=str(exc))
        return {"record": record, "state": None, "masked": masked}
    scores = evaluate_run(state, masked, constraint, seeds=km_seeds, assign=config.assign,
                          restarts=config.restarts)
    record.update(
        status="ok", iterations=len(state.trace), converged=state.converged,
        objective_initial=state.initial.total, objective_final=state.trace[-1].total,
        AC_mean=scores.AC_mean, AC_std=scores.AC_std,
        NMI_mean=scores.NMI_mean, NMI_std=scores.NMI_std,
    )
    return {"record": record, "state": state, "masked": masked}


def _run_cell_job(args):
    config, dataset, cell = args
    return run_cell(config, dataset, cell)


def _sample_std(x) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def summarize(records: List[dict]) -> List[dict]:
    """Aggregate cells over label redraws.

    ``*_std`` spreads over redraws; ``*_std_within`` is the mean spread
    over k-means repeats inside a redraw.
    """
    groups: Dict[tuple, List[dict]] = {}
    for r in records:
        key = (json.dumps(r["grid"], sort_keys=True), r["variant"], r["ratio"])
        groups.setdefault(key, []).append(r)
    out = []
    for (grid, variant, ratio), rows in groups.items():
        ok = [r for r in rows if r["status"] == "ok"]
        row = {"variant": variant, "ratio": ratio, "grid": json.loads(grid),
               "redraws": len(rows), "failed": len(rows) - len(ok)}
        for metric in ("AC", "NMI"):
            means = [r[f"{metric}_mean"] for r in ok]
            row[f"{metric}_mean"] = float(np.mean(means)) if ok else None
            row[f"{metric}_std"] = _sample_std(means) if ok else None
            row[f"{metric}_std_within"] = (float(np.mean([r[f"{metric}_std"] for r in ok]))
                                           if ok else None)
        out.append(row)
    return out


def format_score(mean, std) -> str:
    if mean is None:
        return "n/a"
    return f"{100 * mean:.2f}±{100 * std:.2f}"


def write_table_csv(summary: List[dict], path: str) -> None:
    """Rows per label ratio, an AC and an NMI column per variant."""
    variants = list(dict.fromkeys(r["variant"] for r in summary))
    ratios = list(dict.fromkeys(r["ratio"] for r in summary))
    index = {(r["variant"], r["ratio"]): r for r in summary}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ratio"] + [f"{v}_{m}" for v in variants for m in ("AC", "NMI")])
        for ratio in ratios:
            row = [f"{100 * ratio:g}%"]
            for v in variants:
                r = index.get((v, ratio))
                row += [format_score(r["AC_mean"], r["AC_std"]),
                        format_score(r["NMI_mean"], r["NMI_std"])]
            w.writerow(row)


def write_sweep_csv(summary: List[dict], keys, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(keys) + ["variant", "ratio", "AC_mean", "AC_std", "NMI_mean", "NMI_std"])
        for r in summary:
            w.writerow([r["grid"][k] for k in keys]
                       + [r["variant"], r["ratio"], r["AC_mean"], r["AC_std"],
                          r["NMI_mean"], r["NMI_std"]])


def save_factors(state, masked: MultiViewDataset, constraint_m_s: int, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    for v in range(state.n_views):
        np.savetxt(os.path.join(directory, f"W_{v}.csv"), state.W[v], delimiter=",", fmt="%.17g")
        np.savetxt(os.path.join(directory, f"Z_{v}.csv"), state.Z[v], delimiter=",", fmt="%.17g")
    np.savetxt(os.path.join(directory, "Z_c.csv"), state.Z_c, delimiter=",", fmt="%.17g")
    np.savetxt(os.path.join(directory, "labels.txt"), masked.labels, fmt="%d")
    np.savetxt(os.path.join(directory, "truth.txt"), masked.truth, fmt="%d")
    np.savetxt(os.path.join(directory, "permutation.txt"), masked.permutation, fmt="%d")
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump({"n_classes": masked.n_classes, "m_s": constraint_m_s,
                   "n_views": state.n_views}, fh, indent=2)


def run_experiment(config: ExperimentConfig, mode: str = "run") -> dict:
    """Execute every cell and write reports under ``config.out``.

    ``mode`` is ``run`` (configured variants), ``ablate`` (all variants)
    or ``sweep`` (grid over ``config.sweep``). Returns the written paths.
    """
    if mode not in ("run", "ablate", "sweep"):
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == "ablate":
        config = dataclasses.replace(config, variants=list(ABLATION_ORDER))
    if mode == "sweep" and not config.sweep:
        raise ConfigError("sweep: no grids given")
    os.makedirs(config.out, exist_ok=True)
    dataset = load_experiment_dataset(config)
    cells = plan_cells(config, config.variants, sweep=(mode == "sweep"))
    log.info("running %d cells (%s)", len(cells), mode)

    if config.parallel and len(cells) > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_run_cell_job, [(config, dataset, c) for c in cells]))
    else:
        results = [run_cell(config, dataset, c) for c in cells]

    paths = {}
    records = []
    for cell, res in zip(cells, results):
        records.append(res["record"])
        if res["state"] is not None:
            trace_path = os.path.join(config.out, f"trace_{cell.name}.csv")
            write_trace_csv(res["state"], trace_path)
            if config.save_factors:
                save_factors(res["state"], res["masked"], config.solver.m_s,
                             os.path.join(config.out, f"factors_{cell.name}"))
        rec = res["record"]
        if rec["status"] == "ok":
            log.info("%s AC %.4f NMI %.4f (%d iters)", cell.name, rec["AC_mean"],
                     rec["NMI_mean"], rec["iterations"])
        else:
            log.warning("%s %s", cell.name, rec["error"])

    summary = summarize(records)
    metrics = {"summary": summary, "cells": records}
    paths["metrics.json"] = os.path.join(config.out, "metrics.json")
    with open(paths["metrics.json"], "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
    paths["metrics.csv"] = os.path.join(config.out, "metrics.csv")
    write_table_csv([r for r in summary if not r["grid"]] or summary, paths["metrics.csv"])
    if mode == "sweep":
        keys = [k for k in PER_RATIO_KEYS if k in config.sweep]
        paths["sweep.csv"] = os.path.join(config.out, "sweep.csv")
        write_sweep_csv(summary, keys, paths["sweep.csv"])
    if config.dump_graph:
        _dump_graphs(config, dataset)

    manifest = config_to_dict(config)
    manifest["_mode"] = mode
    manifest["_cells"] = [{"cell": r["cell"], "seeds": r["seeds"]} for r in records]
    paths["manifest.json"] = os.path.join(config.out, "manifest.json")
    with open(paths["manifest.json"], "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return paths


def _dump_graphs(config: ExperimentConfig, dataset: MultiViewDataset) -> None:
    inv = np.argsort(dataset.permutation)
    params = params_for_ratio(config, config.ratios[0])
    for v, X in enumerate(dataset.views):
        gc = config.view_graphs[v] if config.view_graphs else config.graph
        k = gc.k if config.view_graphs else int(params["k"])
        g = build_view_graph(X[:, inv], k, gc.delta)
        np.savetxt(os.path.join(config.out, f"graph_S_{v}.csv"), g.S, delimiter=",",
                   fmt="%.17g")


def manifest_to_config(manifest: dict):
    """Strip run bookkeeping from a manifest; returns (file_data, mode)."""
    data = {k: v for k, v in manifest.items() if not k.startswith("_")}
    return data, manifest.get("_mode", "run")
