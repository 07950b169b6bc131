"""Ablation table: every solver variant at several label ratios.

Runs on the synthetic problem by default, or on CSV views given through a
JSON config (see README). Writes metrics.csv with one AC/NMI column pair per
variant.

    python scripts/ablation.py --out results/ablation
    python scripts/ablation.py --config my_data.json --preset yale
"""

import argparse
import json

from dcs2mvnmf.experiment import resolve_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--preset", choices=["yale", "orl", "ecg", "webkb"])
    ap.add_argument("--out", default="results/ablation")
    ap.add_argument("--redraws", type=int, default=5)
    ap.add_argument("--parallel", action="store_true")
    args = ap.parse_args()

    file_data = {}
    if args.config:
        with open(args.config) as fh:
            file_data = json.load(fh)
    cfg = resolve_config(file_data, args.preset,
                         {"out": args.out, "redraws": args.redraws, "parallel": args.parallel})
    paths = run_experiment(cfg, "ablate")
    with open(paths["metrics.csv"]) as fh:
        print(fh.read(), end="")


if __name__ == "__main__":
    main()
