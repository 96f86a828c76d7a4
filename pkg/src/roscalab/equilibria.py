"""Nash equilibria of auction roscas on finite bid grids.

Up-front roscas are searched exhaustively. For sequential roscas the
opponents' behavioral strategies are fixed and deterministic, so one
participant's best response is found by backward induction over their own
decision tree of grid bids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .auctions import (
    Format,
    Monitoring,
    PaymentTiming,
    Strategy,
    TableStrategy,
    ZERO_STRATEGY,
    check_no_overbidding,
    disclose,
    resolve_round,
    run_sequential,
    run_upfront,
)
from .core import Outcome, RoscaInstance, approximation_ratio, utilities, welfare
from .costs import CostModel, DomainError
from .matching import optimal_welfare

PROFILE_CAP = 10**6
NODE_CAP = 10**6
BRD_MAX_ITER = 10**4


class SearchSpaceError(RuntimeError):
    """An enumeration or game tree exceeds its size cap."""


class NonConvergence(RuntimeError):
    """Best-response dynamics hit the iteration cap."""


@dataclass(frozen=True)
class BidGrid:
    """Sorted, distinct, nonnegative bid levels including 0."""

    points: tuple

    def __post_init__(self):
        pts = tuple(sorted({float(p) for p in self.points}))
        if not pts or pts[0] != 0.0:
            raise ValueError("a bid grid must contain 0")
        if any(not math.isfinite(p) or p < 0 for p in pts):
            raise ValueError("bid grid points must be finite and nonnegative")
        object.__setattr__(self, "points", pts)

    @classmethod
    def parse(cls, text: str) -> "BidGrid":
        """``start:step:stop`` (inclusive) or a comma-separated list."""
        if ":" in text:
            start, step, stop = (float(x) for x in text.split(":"))
            return cls.uniform(step, stop, start)
        return cls(tuple(float(x) for x in text.split(",")))

    @classmethod
    def uniform(cls, step: float, stop: float, start: float = 0.0) -> "BidGrid":
        if step <= 0:
            raise ValueError("grid step must be positive")
        k = int(math.floor((stop - start) / step + 1e-9))
        pts = [round(start + j * step, 12) for j in range(k + 1)]
        return cls(tuple({0.0, *pts}))

    @property
    def step(self) -> float:
        """Largest gap between consecutive points (0 for a single point)."""
        return max(np.diff(self.points), default=0.0)

    def __len__(self):
        return len(self.points)

    def __contains__(self, x):
        return any(abs(x - p) <= 1e-12 for p in self.points)


def _tol(instance: RoscaInstance) -> float:
    return 1e-12 * instance.scale


# ---------------------------------------------------------------- up-front


def upfront_utilities(
    instance: RoscaInstance, bids, cost: CostModel, timing=PaymentTiming.LUMP_ROUND1
) -> np.ndarray:
    """Utilities of an up-front rosca; ``-inf`` for a payment outside the cost domain."""
    outcome = run_upfront(instance, bids, cost, timing)
    try:
        return utilities(instance, outcome, cost)
    except DomainError:
        net = outcome.ledger.net
        vals = instance.values[np.arange(instance.n), outcome.allocation.as_array()]
        out = np.empty(instance.n)
        for i in range(instance.n):
            try:
                out[i] = vals[i] - sum(cost(float(p)) for p in net[i])
            except DomainError:
                out[i] = -math.inf
        return out


def upfront_deviation_gains(
    instance: RoscaInstance, bids, grid: BidGrid, cost: CostModel, timing=PaymentTiming.LUMP_ROUND1
) -> np.ndarray:
    """Per participant, best utility over grid deviations minus current utility."""
    base = upfront_utilities(instance, bids, cost, timing)
    gains = np.zeros(instance.n)
    for i in range(instance.n):
        best = base[i]
        for g in grid.points:
            dev = list(bids)
            dev[i] = g
            best = max(best, upfront_utilities(instance, dev, cost, timing)[i])
        gains[i] = best - base[i] if math.isfinite(best - base[i]) else (math.inf if best > base[i] else 0.0)
    return gains


def is_nash_upfront(
    instance: RoscaInstance,
    bids,
    grid: BidGrid,
    cost: CostModel,
    epsilon: float = 0.0,
    timing=PaymentTiming.LUMP_ROUND1,
) -> bool:
    """No participant gains more than ``epsilon`` by switching to another grid bid."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if math.isinf(epsilon):
        return True
    for i, b in enumerate(bids):
        if b not in grid:
            raise ValueError(f"participant {i + 1} bid {b} is not on the grid")
    gains = upfront_deviation_gains(instance, bids, grid, cost, timing)
    return bool((gains <= epsilon + _tol(instance)).all())


def _upfront_utility_tensor(instance, grid, cost, timing):
    n, G = instance.n, len(grid)
    pts = np.array(grid.points)
    idx = np.indices((G,) * n).reshape(n, -1).T
    P = pts[idx]  # (M, n)
    ar = np.arange(n)
    higher = (P[:, None, :] > P[:, :, None]).sum(-1)
    lower_idx = ar[None, :] < ar[:, None]  # k < i
    ties = ((P[:, None, :] == P[:, :, None]) & lower_idx[None]).sum(-1)
    rank = higher + ties
    vals = instance.values[ar[None, :], rank]
    net = P - (P.sum(axis=1, keepdims=True) - P) / (n - 1)
    lump = PaymentTiming(timing) is PaymentTiming.LUMP_ROUND1
    per = net if lump else net / n
    ok = (per < cost.upper) & (per >= cost.lower)
    c = np.full_like(per, math.inf)
    c[ok] = cost._value(per[ok])
    # A lump payment leaves every later round at C(0) = 0.
    disutil = c if lump else n * c
    U = vals - disutil
    return U.reshape((G,) * n + (n,)), P.reshape((G,) * n + (n,))


def find_nash_upfront(
    instance: RoscaInstance,
    grid: BidGrid,
    cost: CostModel,
    epsilon: float = 0.0,
    timing=PaymentTiming.LUMP_ROUND1,
) -> list[tuple]:
    """Every grid bid profile from which no unilateral grid deviation gains more than ``epsilon``."""
    n, G = instance.n, len(grid)
    if G**n > PROFILE_CAP:
        raise SearchSpaceError(f"{G}^{n} profiles exceed the cap of {PROFILE_CAP}")
    U, P = _upfront_utility_tensor(instance, grid, cost, timing)
    tol = epsilon + _tol(instance)
    mask = np.ones((G,) * n, dtype=bool)
    for i in range(n):
        ui = U[..., i]
        best = ui.max(axis=i, keepdims=True)
        with np.errstate(invalid="ignore"):
            gain = np.where(np.isneginf(best) & np.isneginf(ui), 0.0, best - ui)
        mask &= gain <= tol
    return [tuple(float(x) for x in P[k]) for k in zip(*np.nonzero(mask))]


# -------------------------------------------------------------- sequential


def sequential_utilities(
    instance: RoscaInstance,
    strategies: Sequence[Strategy],
    fmt: Format,
    monitoring: Monitoring,
    cost: CostModel,
) -> np.ndarray:
    return utilities(instance, run_sequential(instance, strategies, fmt, monitoring, cost), cost)


@dataclass
class BestResponse:
    value: float
    plan: TableStrategy
    nodes: int


def best_response(
    instance: RoscaInstance,
    strategies: Sequence[Strategy],
    i: int,
    grid: BidGrid,
    fmt: Format,
    monitoring: Monitoring,
    cost: CostModel,
    node_cap: int = NODE_CAP,
) -> BestResponse:
    """Participant ``i``'s optimal grid plan against fixed opponent strategies.

    Utility is additive over rounds (value of the round won minus C of each
    round's net payment), so backward induction over disclosed histories is exact.
    """
    n = instance.n
    fmt = Format(fmt)
    v = instance.values
    share = 1.0 / (n - 1)
    memo: dict = {}
    plan: dict = {}
    nodes = [0]

    def rebate_cost(price):
        return cost(-price * share)

    def play(history, t, bids):
        winner, price = resolve_round(bids, fmt)
        return winner, price, history + (disclose(monitoring, winner, price, bids),)

    def value(history):
        if history in memo:
            return memo[history]
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise SearchSpaceError(f"best-response tree exceeds {node_cap} nodes")
        t = len(history)
        if t == n:
            return 0.0
        won = {rec[0] for rec in history}
        base = [
            None if k in won else float(strategies[k](history, t)) if k != i else 0.0
            for k in range(n)
        ]
        if i in won:
            winner, price, nxt = play(history, t, base)
            res = -rebate_cost(price) + value(nxt)
        else:
            res, best_bid = -math.inf, 0.0
            for b in grid.points:
                bids = list(base)
                bids[i] = b
                winner, price, nxt = play(history, t, bids)
                if winner == i:
                    if not cost.in_domain(price):
                        continue
                    now = v[i, t] - cost(price)
                else:
                    now = -rebate_cost(price)
                total = now + value(nxt)
                if total > res + 1e-15:
                    res, best_bid = total, b
            plan[history] = best_bid
        memo[history] = res
        return res

    val = value(())
    return BestResponse(val, TableStrategy(plan, 0.0), nodes[0])


def best_response_value(
    instance, strategies_minus_i, i, grid, fmt, monitoring, cost, node_cap: int = NODE_CAP
) -> float:
    """Highest utility ``i`` can reach with any history-dependent grid plan.

    ``strategies_minus_i`` is a full strategy list; entry ``i`` is ignored.
    """
    return best_response(instance, strategies_minus_i, i, grid, fmt, monitoring, cost, node_cap).value


def sequential_gains(instance, strategies, grid, fmt, monitoring, cost) -> np.ndarray:
    """Best-response value minus realized utility, per participant."""
    realized = sequential_utilities(instance, strategies, fmt, monitoring, cost)
    return np.array(
        [
            best_response_value(instance, strategies, i, grid, fmt, monitoring, cost) - realized[i]
            for i in range(instance.n)
        ]
    )


def is_nash_sequential(
    instance: RoscaInstance,
    strategies: Sequence[Strategy],
    grid: BidGrid,
    fmt: Format,
    monitoring: Monitoring,
    cost: CostModel,
    epsilon: float = 0.0,
) -> bool:
    if math.isinf(epsilon):
        return True
    gains = sequential_gains(instance, strategies, grid, fmt, monitoring, cost)
    return bool((gains <= epsilon + 1e-9 * instance.scale).all())


@dataclass
class DynamicsResult:
    strategies: list
    converged: bool
    iterations: int


def best_response_dynamics(
    instance: RoscaInstance,
    grid: BidGrid,
    fmt: Format,
    monitoring: Monitoring,
    cost: CostModel,
    max_iter: int = BRD_MAX_ITER,
    initial: Optional[Sequence[Strategy]] = None,
    raise_on_cap: bool = False,
) -> DynamicsResult:
    """Round-robin best responses from all-zero strategies until nobody improves."""
    n = instance.n
    strategies = list(initial) if initial is not None else [ZERO_STRATEGY] * n
    tol = 1e-9 * instance.scale
    quiet = 0
    it = 0
    while it < max_iter:
        i = it % n
        it += 1
        current = sequential_utilities(instance, strategies, fmt, monitoring, cost)[i]
        br = best_response(instance, strategies, i, grid, fmt, monitoring, cost)
        if br.value > current + tol:
            strategies[i] = br.plan
            quiet = 0
        else:
            quiet += 1
            if quiet >= n:
                return DynamicsResult(strategies, True, it)
    if raise_on_cap:
        raise NonConvergence(f"no equilibrium after {max_iter} best responses")
    return DynamicsResult(strategies, False, it)


# ------------------------------------------------------------ welfare bounds


def empirical_poa(
    instance: RoscaInstance,
    outcomes: Sequence[Outcome],
    cost: CostModel,
    require_no_overbidding: bool = False,
) -> Optional[float]:
    """Worst OPT / welfare over the given equilibrium outcomes; None when none qualify."""
    kept = [
        o for o in outcomes if not require_no_overbidding or check_no_overbidding(instance, o, cost)
    ]
    if not kept:
        return None
    opt, _ = optimal_welfare(instance)
    return max(approximation_ratio(opt, welfare(instance, o, cost)) for o in kept)


@dataclass
class OverpayReport:
    holds: bool
    round_slack: list  # bound minus payment, per round
    total_payment: float
    total_bound: float  # e times allocated value

    @property
    def slack(self) -> float:
        return min(min(self.round_slack), self.total_bound - self.total_payment)


def overpay_report(instance: RoscaInstance, outcome: Outcome) -> OverpayReport:
    """Per-round and aggregate caps on first-price winners' payments.

    The winner of round ``t`` may pay at most their value for ``t`` plus a
    geometrically weighted share of later winners' values.
    """
    n = instance.n
    winners = outcome.allocation.winners
    vt = np.array([instance.values[winners[t], t] for t in range(n)])
    paid = np.array([outcome.ledger.gross[winners[t], t] for t in range(n)])
    slack = []
    for t in range(n):
        tail = 0.0
        if n > 1:
            tail = sum(vt[s] * (n / (n - 1)) ** (s - t - 1) for s in range(t + 1, n)) / (n - 1)
        slack.append(float(vt[t] + tail - paid[t]))
    total_pay = float(outcome.ledger.gross.sum())
    total_bound = math.e * float(vt.sum())
    tol = 1e-9 * instance.scale
    holds = all(s >= -tol for s in slack) and total_pay <= total_bound + tol
    return OverpayReport(holds, slack, total_pay, total_bound)


def verify_overpay_bound(instance: RoscaInstance, outcome: Outcome) -> bool:
    return overpay_report(instance, outcome).holds
