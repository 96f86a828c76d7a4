"""Command-line interface: ``roscalab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .auctions import (
    Format,
    Mechanism,
    Monitoring,
    PaymentTiming,
    check_no_overbidding,
    load_strategies,
    run_sequential,
    run_upfront,
)
from .core import approximation_ratio, welfare
from .costs import parse_cost
from .equilibria import (
    BidGrid,
    SearchSpaceError,
    best_response_dynamics,
    empirical_poa,
    find_nash_upfront,
    is_nash_sequential,
)
from .experiments import (
    DEFAULT_RUNS,
    ExperimentConfig,
    cell_rng,
    dist_profile_names,
    emit_table,
    random_allocation,
    resolve_instance,
    run_crra_experiment,
    run_distributional_experiment,
    simulate_swap_welfare,
    timed,
    write_results,
)
from .matching import optimal_welfare
from .swaps import DEFAULT_POLICY, ScanPolicy, run_swap_rosca
from .verify import SUITES, report_json, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _num(x: float):
    return x if math.isfinite(x) else "inf"


def _emit(args, payload: dict, lines: Sequence[str]) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _instance(args):
    try:
        return resolve_instance(args.profiles)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot load profiles {args.profiles!r}: {e}") from e


def _cost(text: str):
    try:
        return parse_cost(text)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _grid(text: str) -> BidGrid:
    try:
        return BidGrid.parse(text)
    except ValueError as e:
        raise UsageError(str(e)) from e


# ------------------------------------------------------------- commands


def cmd_opt(args) -> int:
    inst = _instance(args)
    opt, alloc = optimal_welfare(inst)
    rounds = [r + 1 for r in alloc.rounds]
    _emit(
        args,
        {"opt": opt, "rounds": rounds},
        [f"OPT = {opt:g}"] + [f"participant {i + 1}: round {r}" for i, r in enumerate(rounds)],
    )
    return EXIT_OK


def cmd_swap_sim(args) -> int:
    inst = _instance(args)
    cost = _cost(args.cost)
    opt, _ = optimal_welfare(inst)
    rng = cell_rng(args.seed, "swap-sim", inst.digest(), cost.to_dict())
    policy = ScanPolicy(args.scan_policy)
    if args.trace:
        # The reference engine reports each swap; the batch kernel does not.
        w = np.empty(args.runs)
        for run in range(args.runs):
            trace: list = []
            outcome = run_swap_rosca(inst, random_allocation(inst.n, rng), cost, rng, policy, trace)
            w[run] = welfare(inst, outcome, cost)
            for rec in trace:
                line = json.dumps({"run": run + 1, **json.loads(rec.to_json())})
                print(line, file=sys.stderr if args.format == "json" else sys.stdout)
    else:
        w = simulate_swap_welfare(inst, cost, args.runs, rng, policy, args.workers)
    mean = float(np.mean(w))
    ratio = approximation_ratio(opt, mean)
    _emit(
        args,
        {"opt": opt, "mean_welfare": mean, "ratio": _num(ratio), "runs": args.runs, "seed": args.seed},
        [f"OPT = {opt:g}", f"mean welfare = {mean:.6f}", f"ratio = {ratio:.4f}"],
    )
    return EXIT_OK


def cmd_auction_sim(args) -> int:
    inst = _instance(args)
    cost = _cost(args.cost)
    try:
        strategies = load_strategies(args.strategies, inst.n)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot load strategies: {e}") from e
    if args.auction == "upfront":
        if not all(isinstance(s, float) for s in strategies):
            raise UsageError("up-front auctions take one number per participant")
        outcome = run_upfront(inst, strategies, cost, PaymentTiming(args.payment_timing))
    else:
        if any(isinstance(s, float) for s in strategies):
            raise UsageError("sequential auctions take strategy objects, not plain bids")
        outcome = run_sequential(inst, strategies, Format(args.auction), Monitoring(args.monitoring), cost)
    opt, _ = optimal_welfare(inst)
    w = welfare(inst, outcome, cost)
    payload = outcome.to_dict()
    del payload["allocation"]
    payload = {"rounds": [r + 1 for r in outcome.allocation.rounds], **payload}
    payload.update(welfare=w, opt=opt, ratio=_num(approximation_ratio(opt, w)),
                   no_overbidding=check_no_overbidding(inst, outcome, cost))
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_ne_search(args) -> int:
    inst = _instance(args)
    cost = _cost(args.cost)
    grid = _grid(args.grid)
    mech = Mechanism(args.mechanism)
    opt, _ = optimal_welfare(inst)
    if mech is Mechanism.UPFRONT:
        eqs = find_nash_upfront(inst, grid, cost, args.epsilon)
        outcomes = [run_upfront(inst, b, cost) for b in eqs]
        found = [{"bids": list(b), "welfare": welfare(inst, o, cost)} for b, o in zip(eqs, outcomes)]
        converged = True
    else:
        fmt = Format(mech.value)
        mon = Monitoring(args.monitoring)
        res = best_response_dynamics(inst, grid, fmt, mon, cost)
        converged = res.converged
        outcomes, found = [], []
        if converged and is_nash_sequential(inst, res.strategies, grid, fmt, mon, cost, args.epsilon):
            o = run_sequential(inst, res.strategies, fmt, mon, cost)
            outcomes.append(o)
            found.append({"rounds": [r + 1 for r in o.allocation.rounds],
                          "winning_bids": o.winning_bids.tolist(), "welfare": welfare(inst, o, cost),
                          "no_overbidding": check_no_overbidding(inst, o, cost)})
    poa = empirical_poa(inst, outcomes, cost)
    payload = {"opt": opt, "epsilon": args.epsilon, "equilibria": found, "converged": converged,
               "empirical_poa": None if poa is None else _num(poa)}
    lines = [f"OPT = {opt:g}", f"equilibria found: {len(found)} (epsilon = {args.epsilon:g})"]
    lines += [json.dumps(f) for f in found]
    if not converged:
        lines.append("best-response dynamics did not converge")
    lines.append("empirical PoA = " + ("n/a" if poa is None else f"{poa:.4f}"))
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    alpha = 1.0 if args.alpha is None else args.alpha
    beta = alpha if args.beta is None else args.beta
    if not 0 < alpha <= beta:
        raise UsageError("need 0 < alpha <= beta")
    results = run_suite(args.suite, args.seed, alpha, beta)
    if args.format == "json":
        print(report_json(results))
    else:
        for r in results:
            print(f"[{r.verdict}] {r.claim} (slack {r.slack:.6g}, instance {r.instance})")
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def cmd_experiment(args) -> int:
    if args.config:
        try:
            config = ExperimentConfig.from_json(args.config)
        except (OSError, ValueError, TypeError) as e:
            raise UsageError(f"bad config: {e}") from e
    else:
        profiles = "crra9" if args.kind == "crra" else dist_profile_names(9)
        config = ExperimentConfig(profiles=profiles)
    if args.runs is not None:
        config.runs = args.runs
    if args.seed is not None:
        config.seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    run = run_crra_experiment if args.kind == "crra" else run_distributional_experiment
    results, elapsed = timed(run, config)
    if args.out:
        write_results(args.kind, results, args.out, config, elapsed)
    out_fmt = "json" if args.format == "json" else config.output_format
    sys.stdout.write(emit_table(results, out_fmt).decode())
    return EXIT_OK


# --------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="roscalab", description="Rosca welfare simulations and bound checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def output(sp):
        sp.add_argument("--format", choices=("text", "json"), default="text", help="stdout format")

    def common(sp, cost=True):
        output(sp)
        sp.add_argument("--profiles", required=True, help="profile file (csv/json) or built-in name")
        if cost:
            sp.add_argument("--cost", default="quasilinear", help='"quasilinear" or "crra:W=<f>,a=<f>"')

    sp = sub.add_parser("opt", help="optimal welfare and allocation")
    common(sp, cost=False)
    sp.set_defaults(func=cmd_opt)

    sp = sub.add_parser("swap-sim", help="swap rosca from random starts")
    common(sp)
    sp.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace", action="store_true", help="print every executed swap as JSON")
    sp.add_argument("--scan-policy", choices=[s.value for s in ScanPolicy], default=DEFAULT_POLICY.value)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_swap_sim)

    sp = sub.add_parser("auction-sim", help="run one auction rosca with given strategies; prints JSON")
    sp.add_argument("--profiles", required=True, help="profile file (csv/json) or built-in name")
    sp.add_argument("--cost", default="quasilinear", help='"quasilinear" or "crra:W=<f>,a=<f>"')
    sp.add_argument("--format", dest="auction", choices=("first", "second", "upfront"), required=True)
    sp.add_argument("--strategies", required=True, help="JSON strategy file")
    sp.add_argument("--monitoring", choices=[m.value for m in Monitoring], default=Monitoring.FULL_DISCLOSURE.value)
    sp.add_argument("--payment-timing", choices=[t.value for t in PaymentTiming],
                    default=PaymentTiming.LUMP_ROUND1.value)
    sp.set_defaults(func=cmd_auction_sim)

    sp = sub.add_parser("ne-search", help="equilibria on a bid grid and their welfare")
    common(sp)
    sp.add_argument("--mechanism", choices=[m.value for m in Mechanism], required=True)
    sp.add_argument("--grid", required=True, help='"start:step:stop" or comma-separated bids')
    sp.add_argument("--epsilon", type=float, default=0.0)
    sp.add_argument("--monitoring", choices=[m.value for m in Monitoring], default=Monitoring.FULL_DISCLOSURE.value)
    sp.set_defaults(func=cmd_ne_search)

    sp = sub.add_parser("verify-bounds", help="check welfare and payment bounds")
    sp.add_argument("--suite", choices=("all",) + SUITES, default="all")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--seed", type=int, default=0)
    output(sp)
    sp.set_defaults(func=cmd_verify_bounds)

    sp = sub.add_parser("experiment", help="reproduce the swap-rosca tables")
    sp.add_argument("kind", choices=("crra", "dist"))
    sp.add_argument("--config", help="JSON experiment config")
    sp.add_argument("--out", help="directory for csv/json/md tables and manifest")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    output(sp)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"roscalab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except (ValueError, SearchSpaceError) as e:
        print(f"roscalab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as e:
        print(f"roscalab: assertion failed: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
