#!/usr/bin/env python3
"""Run the full two-family sweep and emit the four figure data files.

Thin driver over the copesim CLI: writes one config per cost family, runs
both sweeps, merges the result tables, and converts them into tidy
per-figure CSVs (principal payoff vs N, network profit vs N).  Raw results
and manifests land in <out>/<cost>/, figure files in <out>/figures/.
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from copesim import cli
from copesim.config import ExperimentConfig, save_config
from copesim.costs import LINEAR, QUADRATIC


def main(argv=None):
    ap = argparse.ArgumentParser(
        description=__doc__.splitlines()[0],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument("-o", "--out", default="figure_run",
                    help="output directory")
    ap.add_argument("--trials", type=int, default=50_000,
                    help="Monte-Carlo trials per cell")
    ap.add_argument("--seed", type=int, default=0, help="master seed")
    ap.add_argument("-w", "--workers", type=int, default=None,
                    help="worker processes (default: serial)")
    ap.add_argument("--denominator", choices=("participants", "full-n"),
                    default="full-n",
                    help="posted-contract predictor denominator; full-n is "
                         "the variant the headline comparisons are stated "
                         "for, participants is the library default")
    ap.add_argument("--quick", action="store_true",
                    help="small smoke sweep (N = 3, 5, 7 at 2000 trials)")
    args = ap.parse_args(argv)

    n_agents = (3, 5, 7) if args.quick else tuple(range(3, 20))
    n_trials = 2000 if args.quick else args.trials
    os.makedirs(args.out, exist_ok=True)

    t0 = time.time()
    result_paths = []
    for cost in (LINEAR, QUADRATIC):
        cfg = ExperimentConfig(cost=cost, n_agents_list=n_agents,
                               n_trials=n_trials, master_seed=args.seed,
                               hom_denominator=args.denominator)
        ini = os.path.join(args.out, f"{cost}.ini")
        save_config(cfg, ini)
        run_dir = os.path.join(args.out, cost)
        run_argv = ["run", "-c", ini, "-o", run_dir]
        if args.workers:
            run_argv += ["-w", str(args.workers)]
        rc = cli.main(run_argv)
        if rc != 0:
            print(f"sweep for {cost} cost failed (exit {rc})", file=sys.stderr)
            return rc
        result_paths.append(os.path.join(run_dir, "results.csv"))

    merged = os.path.join(args.out, "results_all.csv")
    with open(merged, "w", encoding="utf-8", newline="") as out_fh:
        for i, path in enumerate(result_paths):
            with open(path, "r", encoding="utf-8", newline="") as fh:
                lines = fh.readlines()
            out_fh.writelines(lines if i == 0 else lines[1:])

    fig_dir = os.path.join(args.out, "figures")
    rc = cli.main(["figures", merged, "-o", fig_dir])
    if rc != 0:
        return rc

    print(f"done in {time.time() - t0:.1f}s")
    print(f"  merged results: {merged}")
    for name in sorted(os.listdir(fig_dir)):
        print(f"  figure data:    {os.path.join(fig_dir, name)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
