"""Batteries of bound checks producing a JSON-serializable report."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .auctions import (
    ConstantStrategy,
    Format,
    Mechanism,
    Monitoring,
    run_sequential,
    run_upfront,
)
from .core import RoscaInstance, utilities, welfare
from .costs import CRRA, Quasilinear, slope_bounds
from .equilibria import BidGrid, find_nash_upfront, overpay_report
from .matching import optimal_welfare
from .scenarios import overbidding_loss, zero_strategies
from .smoothness import (
    SECOND_PRICE_PARAMS,
    check_payment_utility_lemmas,
    first_price_params,
    first_price_theorem_bound,
    nonlinear_poa_bound,
    roundrobin_slack,
    smoothness_slack,
    upfront_bound_by_search,
    upfront_rho,
)

SUITES = ("smoothness", "overpay", "lemmas")
_MECH_NAMES = {Mechanism.UPFRONT: "up-front", Mechanism.FIRST_PRICE: "first-price", Mechanism.SECOND_PRICE: "second-price"}


@dataclass
class CheckResult:
    claim: str
    anchor: str
    instance: str  # content digest, or a label for instance-free checks
    verdict: str
    slack: float
    epsilon: float = 0.0

    @property
    def ok(self) -> bool:
        return self.verdict != "violated"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slack"] = _finite(self.slack)
        return d


def _finite(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def verdict(slack: float, tol: float) -> str:
    if slack < -tol:
        return "violated"
    return "tight, holds" if slack <= tol else "holds"


def _random_instance(rng, n, high=4.0) -> RoscaInstance:
    v = np.sort(rng.uniform(0, high, (n, n)), axis=1)[:, ::-1]
    return RoscaInstance(np.round(v, 2))


def _aggregate(claim, anchor, slacks, tol, label, eps=0.0) -> CheckResult:
    worst = min(slacks) if slacks else math.inf
    return CheckResult(claim, anchor, label, verdict(worst, tol), worst, eps)


# ------------------------------------------------------------ smoothness


def smoothness_checks(rng: np.random.Generator, samples: int = 500, roscas: int = 100) -> list[CheckResult]:
    out = []
    crra = CRRA(W=4.0, a=0.5)
    for cost in (Quasilinear(), crra):
        tag = "quasilinear" if cost.is_quasilinear else "crra"
        for fmt in Format:
            slacks = []
            for _ in range(samples):
                n = int(rng.integers(1, 5))
                hi = 3.0 if tag == "crra" else 10.0
                v = rng.uniform(0, hi, n)
                a = rng.uniform(0, hi, n)
                if fmt is Format.SECOND_PRICE:
                    params, beta = SECOND_PRICE_PARAMS, None
                else:
                    beta = float(cost.derivative(float(v.max()))) if v.max() > 0 else 1.0
                    params = first_price_params(beta)
                slacks.append(smoothness_slack(params, v, a, fmt, cost, beta))
            out.append(
                _aggregate(f"single-item {fmt.value}-price smoothness ({tag})",
                           f"{fmt.value}-price single-item smoothness", slacks, 1e-7, f"{samples} samples")
            )
            slacks = []
            for _ in range(roscas):
                n = int(rng.integers(2, 5))
                inst = _random_instance(rng, n, 3.0)
                strats = [ConstantStrategy(tuple(rng.uniform(0, 2.5, n))) for _ in range(n)]
                slacks.append(roundrobin_slack(inst, strats, fmt, Monitoring.FULL_DISCLOSURE, cost))
            out.append(
                _aggregate(f"round-robin {fmt.value}-price smoothness ({tag})",
                           "round-robin composition adds one to mu1", slacks, 1e-7, f"{roscas} roscas")
            )
    sc = overbidding_loss()
    s = roundrobin_slack(sc.instance, sc.strategies, sc.fmt, Monitoring.FULL_DISCLOSURE, Quasilinear())
    out.append(CheckResult("round-robin first-price smoothness on the overbidding example",
                           "round-robin composition adds one to mu1", sc.instance.digest(), verdict(s, 1e-7), s))
    return out


# --------------------------------------------------------------- overpay


def overpay_checks() -> list[CheckResult]:
    sc = overbidding_loss()
    outcome = run_sequential(sc.instance, sc.strategies, sc.fmt, Monitoring.FULL_DISCLOSURE)
    rep = overpay_report(sc.instance, outcome)
    tol = 1e-9 * sc.instance.scale
    out = [
        CheckResult("first-price winner payment cap, round 1", "per-round overpayment cap",
                    sc.instance.digest(), verdict(rep.round_slack[0], tol), rep.round_slack[0]),
        CheckResult("first-price winner payment cap, all rounds", "per-round overpayment cap",
                    sc.instance.digest(), verdict(min(rep.round_slack), tol), min(rep.round_slack)),
        CheckResult("total payments at most e times allocated value", "aggregate overpayment cap",
                    sc.instance.digest(), verdict(rep.total_bound - rep.total_payment, tol),
                    rep.total_bound - rep.total_payment),
    ]
    zero = run_sequential(sc.instance, zero_strategies(3), Format.FIRST_PRICE)
    zrep = overpay_report(sc.instance, zero)
    out.append(CheckResult("payment cap with zero bids", "per-round overpayment cap", sc.instance.digest(),
                           verdict(zrep.slack, tol), zrep.slack))
    return out


# ---------------------------------------------------------------- lemmas


def formula_checks(alpha: float = 1.0, beta: float = 1.0) -> list[CheckResult]:
    out = []
    up = nonlinear_poa_bound(1.0, 1.0, Mechanism.UPFRONT)
    d = abs(up - (2 + math.sqrt(3)))
    out.append(CheckResult("up-front nonlinear bound at alpha = beta = 1 is 2 + sqrt 3", "up-front nonlinear bound",
                           "-", "holds" if d <= 1e-12 else "violated", -d))
    label = f"alpha={alpha:g},beta={beta:g}"
    for mech in Mechanism:
        base = nonlinear_poa_bound(alpha, beta, mech)
        worst = max(abs(nonlinear_poa_bound(g * alpha, g * beta, mech) - base) for g in (0.1, 10.0))
        out.append(CheckResult(f"{_MECH_NAMES[mech]} nonlinear bound is scale invariant", "scale invariance of C",
                               label, "holds" if worst <= 1e-12 * base else "violated", -worst))
    rho = upfront_rho(alpha, beta)
    out.append(CheckResult("optimizing rho lies in [0, 2/beta]", "up-front nonlinear bound", label,
                           verdict(min(rho, 2 / beta - rho), 0.0), min(rho, 2 / beta - rho)))
    gap = upfront_bound_by_search(alpha, beta) - nonlinear_poa_bound(alpha, beta, Mechanism.UPFRONT)
    out.append(CheckResult("closed-form up-front bound equals the numeric optimum over rho",
                           "up-front nonlinear bound", label, "holds" if abs(gap) <= 1e-6 else "violated", -abs(gap)))
    fp, fp_thm = nonlinear_poa_bound(alpha, beta, Mechanism.FIRST_PRICE), first_price_theorem_bound(alpha, beta)
    out.append(CheckResult(f"first-price nonlinear bound: stated {fp:.6f}, theorem-derived {fp_thm:.6f}",
                           "first-price nonlinear bound", label, "reported", fp_thm - fp))
    return out


def payment_utility_checks(rng: np.random.Generator, runs: int = 200) -> list[CheckResult]:
    applicable, violated, skipped = 0, 0, 0
    for _ in range(runs):
        n = int(rng.integers(2, 5))
        inst = _random_instance(rng, n, 3.0)
        cost = CRRA(W=float(rng.uniform(3, 8)), a=float(rng.uniform(0.1, 2.0)))
        strats = [ConstantStrategy(tuple(rng.uniform(0, 1.5, n))) for _ in range(n)]
        fmt = Format.FIRST_PRICE if rng.random() < 0.5 else Format.SECOND_PRICE
        outcome = run_sequential(inst, strats, fmt, Monitoring.FULL_DISCLOSURE, cost)
        net = outcome.ledger.net
        lo, hi = float(net.min()), float(net.max())
        if not lo < hi:
            skipped += 1
            continue
        alpha, beta = slope_bounds(cost, lo, hi)
        res = check_payment_utility_lemmas(inst, outcome, alpha, beta, cost)
        if res is None:
            skipped += 1
        else:
            applicable += 1
            violated += not res
    return [CheckResult("allocated value and payments bounded by utility under no-overbidding",
                        "nonlinear payment and utility lemmas", f"{applicable} applicable of {runs} runs",
                        "violated" if violated else "holds", float(-violated))]


def upfront_checks(rng: np.random.Generator, instances: int = 20, grid_points: int = 11) -> list[CheckResult]:
    """Equilibria of small up-front roscas: bids at most values, utility lemma, ratio at most 4."""
    cost = Quasilinear()
    bid_slack, util_slack, ratio_slack = [], [], []
    for _ in range(instances):
        n = int(rng.integers(2, 4))
        inst = RoscaInstance(np.sort(rng.integers(0, 5, (n, n)), axis=1)[:, ::-1].astype(float))
        grid = BidGrid.uniform(float(inst.scale) / (grid_points - 1), float(inst.scale))
        opt, _ = optimal_welfare(inst)
        for bids in find_nash_upfront(inst, grid, cost):
            o = run_upfront(inst, bids, cost)
            vals = inst.values[np.arange(n), o.allocation.as_array()]
            bid_slack.append(float(np.min(vals - np.array(bids))))
            u = float(utilities(inst, o, cost).sum())
            util_slack.append(u - (opt / 2 - float(o.ledger.gross.sum())))
            w = welfare(inst, o, cost)
            ratio_slack.append(4 * w - opt)
    label = f"{instances} instances, {len(bid_slack)} equilibria"
    return [
        _aggregate("up-front equilibrium bids at most the value won", "up-front no-overbidding", bid_slack, 1e-9, label),
        _aggregate("up-front utility at least OPT/2 minus payments", "up-front utility lemma", util_slack, 1e-9, label),
        _aggregate("up-front equilibrium welfare at least OPT/4", "up-front price of anarchy 4", ratio_slack, 1e-9, label),
    ]


def lemma_checks(rng, alpha=1.0, beta=1.0, runs=200, instances=20) -> list[CheckResult]:
    return formula_checks(alpha, beta) + payment_utility_checks(rng, runs) + upfront_checks(rng, instances)


def run_suite(suite: str = "all", seed: int = 0, alpha: Optional[float] = None, beta: Optional[float] = None,
              samples: int = 500, roscas: int = 100) -> list[CheckResult]:
    if suite != "all" and suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    rng = np.random.default_rng(seed)
    a = 1.0 if alpha is None else alpha
    b = a if beta is None else beta
    out: list[CheckResult] = []
    if suite in ("all", "smoothness"):
        out += smoothness_checks(rng, samples, roscas)
    if suite in ("all", "overpay"):
        out += overpay_checks()
    if suite in ("all", "lemmas"):
        out += lemma_checks(rng, a, b)
    return out


def report_json(results: list[CheckResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2)
