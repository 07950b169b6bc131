"""Command line entry point: ``dcs2mvnmf {run,sweep,ablate,synth,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .constraints import build_label_constraint
from .dataset import save_dataset
from .evaluation import evaluate_representation
from .experiment import (ConfigError, derive_seed, format_score, load_experiment_dataset,
                         manifest_to_config, resolve_config, run_experiment)

log = logging.getLogger("dcs2mvnmf")


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _grid(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config or a manifest.json from an earlier run")
    p.add_argument("--preset", choices=["yale", "orl", "ecg", "webkb"])
    p.add_argument("--ratio", type=float, action="append",
                   help="label ratio; repeat for several")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--variant", action="append",
                   help="solver variant; repeat for several")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--redraws", type=int)
    p.add_argument("--repeats", type=int, help="k-means repeats per fitted model")
    p.add_argument("--parallel", type=_bool, help="run cells in worker processes")
    p.add_argument("--save-factors", action="store_true")
    p.add_argument("--dump-graph", action="store_true", help="write each view's S as CSV")


def _overrides(args) -> dict:
    o: dict = {}
    if args.ratio:
        o["ratios"] = args.ratio
    if args.seed is not None:
        o["seed"] = args.seed
    if args.out:
        o["out"] = args.out
    if args.variant:
        o["variants"] = args.variant
    solver = {}
    if args.max_iters is not None:
        solver["max_iters"] = args.max_iters
    if args.tol is not None:
        solver["tol"] = args.tol
    if solver:
        o["solver"] = solver
    if args.redraws is not None:
        o["redraws"] = args.redraws
    if args.repeats is not None:
        o["repeats"] = args.repeats
    if args.parallel is not None:
        o["parallel"] = args.parallel
    if args.save_factors:
        o["save_factors"] = True
    if args.dump_graph:
        o["dump_graph"] = True
    sweep = {}
    for key in ("alpha", "beta", "gamma", "k"):
        grid = getattr(args, f"{key}_grid", None)
        if grid:
            sweep[key] = grid
    if sweep:
        o["sweep"] = sweep
    return o


def _load_config(args):
    file_data = {}
    if args.config:
        with open(args.config) as fh:
            file_data, _ = manifest_to_config(json.load(fh))
    return resolve_config(file_data, args.preset, _overrides(args))


def cmd_experiment(args, mode: str) -> int:
    config = _load_config(args)
    paths = run_experiment(config, mode)
    with open(paths["metrics.json"]) as fh:
        summary = json.load(fh)["summary"]
    for row in summary:
        grid = " ".join(f"{k}={v:g}" for k, v in row["grid"].items())
        ac = format_score(row["AC_mean"], row["AC_std"])
        nm = format_score(row["NMI_mean"], row["NMI_std"])
        print(f"{row['variant']:>17} ratio={row['ratio']:<5g} {grid} AC {ac}  NMI {nm}")
    print(f"wrote {', '.join(sorted(paths))} to {config.out}")
    return 0


def cmd_synth(args) -> int:
    config = _load_config(args)
    if args.seed is not None:
        config.dataset.synthetic.seed = args.seed
    if config.dataset.kind != "synthetic":
        raise ConfigError("dataset.kind: synth needs a synthetic dataset spec")
    dataset = load_experiment_dataset(config)
    views, labels = save_dataset(dataset, config.out)
    for p in views + [labels]:
        print(p)
    return 0


def cmd_eval(args) -> int:
    d = args.factors
    with open(os.path.join(d, "meta.json")) as fh:
        meta = json.load(fh)
    Z_c = np.loadtxt(os.path.join(d, "Z_c.csv"), delimiter=",", ndmin=2)
    labels = np.loadtxt(os.path.join(d, "labels.txt"), dtype=np.int64, ndmin=1)
    truth = np.loadtxt(os.path.join(d, "truth.txt"), dtype=np.int64, ndmin=1)
    constraint = build_label_constraint(labels, meta["n_classes"], meta["m_s"])
    H = constraint.A @ Z_c
    seeds = [derive_seed(args.seed, "eval", r) for r in range(args.repeats)]
    scores = evaluate_representation(H, truth, meta["n_classes"], seeds, args.assign)
    print(json.dumps({"AC_mean": scores.AC_mean, "AC_std": scores.AC_std,
                      "NMI_mean": scores.NMI_mean, "NMI_std": scores.NMI_std,
                      "seeds": seeds}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcs2mvnmf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("run", "fit and score the configured variants"),
                        ("ablate", "fit and score every ablation variant"),
                        ("sweep", "grid over alpha/beta/gamma/k"),
                        ("synth", "write a synthetic dataset to CSV files")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "sweep":
            for key in ("alpha", "beta", "gamma", "k"):
                p.add_argument(f"--{key}-grid", type=_grid, metavar="V1,V2,...")

    p = sub.add_parser("eval", help="score factors saved with --save-factors")
    p.add_argument("factors", help="factors_<cell> directory")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assign", choices=["kmeans", "argmax"], default="kmeans")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("run", "ablate", "sweep"):
            return cmd_experiment(args, args.command)
        if args.command == "synth":
            return cmd_synth(args)
        return cmd_eval(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
