"""Swap-rosca ratio on crra9 over the (a, W) grid; writes csv, json, markdown and a manifest."""

import argparse
import sys

from roscalab.experiments import ExperimentConfig, emit_table, run_crra_experiment, timed, write_results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    config = ExperimentConfig(profiles="crra9", runs=args.runs, seed=args.seed)
    table, elapsed = timed(run_crra_experiment, config)
    write_results("crra_grid", table, args.out, config, elapsed)
    sys.stdout.write(emit_table(table, "markdown").decode())
    print(f"OPT {table.opt:g}, random ratio {table.random_ratio:.3f}, {elapsed:.1f}s")


if __name__ == "__main__":
    main()
