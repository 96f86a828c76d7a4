"""Auction roscas: a single up-front auction or one auction per round.

All payments are redistributed: whatever a winner pays is split evenly among
the other ``n - 1`` participants, so every round is budget balanced. Ties go
to the lowest participant index.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Allocation, Outcome, PaymentLedger, RoscaInstance, allocated_values
from .costs import CostModel


class Format(str, enum.Enum):
    FIRST_PRICE = "first"
    SECOND_PRICE = "second"


class Mechanism(str, enum.Enum):
    UPFRONT = "upfront"
    FIRST_PRICE = "first"
    SECOND_PRICE = "second"


class Monitoring(str, enum.Enum):
    """What is revealed after each round of a sequential rosca."""

    FULL_DISCLOSURE = "full"
    WINNER_AND_PRICE = "winner_price"


class PaymentTiming(str, enum.Enum):
    """When up-front payments and rebates are settled."""

    LUMP_ROUND1 = "lump"
    EVEN_SPREAD = "even"


class BidError(ValueError):
    """A bid is negative or not a finite number."""


def _check_bid(b: float, who: int) -> float:
    b = float(b)
    if not math.isfinite(b) or b < 0:
        raise BidError(f"participant {who + 1} bid {b}")
    return b


def upfront_order(bids: Sequence[float]) -> list[int]:
    """Participants sorted by descending bid, lower index first on ties."""
    return sorted(range(len(bids)), key=lambda i: (-bids[i], i))


def run_upfront(
    instance: RoscaInstance,
    bids: Sequence[float],
    cost: Optional[CostModel] = None,
    payment_timing: PaymentTiming = PaymentTiming.LUMP_ROUND1,
) -> Outcome:
    """Allocate rounds by descending bid; everyone pays their bid and shares the others'.

    ``cost`` does not affect the outcome; it is accepted for a uniform call shape.
    """
    n = instance.n
    if n < 2:
        raise ValueError("an up-front rosca needs at least two participants")
    if len(bids) != n:
        raise ValueError(f"expected {n} bids, got {len(bids)}")
    b = np.array([_check_bid(x, i) for i, x in enumerate(bids)])
    alloc = Allocation.from_winners(upfront_order(list(b)))
    rebate = (b.sum() - b) / (n - 1)
    gross = np.zeros((n, n))
    reb = np.zeros((n, n))
    if PaymentTiming(payment_timing) is PaymentTiming.LUMP_ROUND1:
        gross[:, 0] = b
        reb[:, 0] = rebate
    else:
        gross[:] = (b / n)[:, None]
        reb[:] = (rebate / n)[:, None]
    return Outcome(alloc, PaymentLedger(gross, reb), b)


# A disclosed round: (winner, price) or (winner, price, bids) under full disclosure,
# where bids holds None for participants who had already won.
History = tuple


class Strategy:
    """A behavioral strategy: bid as a function of the disclosed history and round."""

    def bid(self, history: History, t: int) -> float:
        raise NotImplementedError

    def __call__(self, history: History, t: int) -> float:
        return self.bid(history, t)


@dataclass(frozen=True)
class ConstantStrategy(Strategy):
    """Bid ``bids[t]`` in round ``t`` regardless of history."""

    bids: tuple

    def bid(self, history, t):
        return float(self.bids[t])


@dataclass
class TableStrategy(Strategy):
    """Bid looked up by history; ``default`` for histories not in the table."""

    table: dict = field(default_factory=dict)
    default: float = 0.0

    def bid(self, history, t):
        return float(self.table.get(history, self.default))


@dataclass(frozen=True)
class ScriptedStrategy(Strategy):
    """Wraps an arbitrary function ``(history, t) -> bid``."""

    fn: Callable[[History, int], float]
    name: str = "scripted"

    def bid(self, history, t):
        return float(self.fn(history, t))


@dataclass(frozen=True)
class _Zero(Strategy):
    def bid(self, history, t):
        return 0.0


ZERO_STRATEGY = _Zero()


def disclose(monitoring: Monitoring, winner: int, price: float, bids: Sequence) -> tuple:
    if Monitoring(monitoring) is Monitoring.FULL_DISCLOSURE:
        return (winner, price, tuple(bids))
    return (winner, price)


def resolve_round(
    bids: Sequence[Optional[float]], fmt: Format
) -> tuple[int, float]:
    """Winner and price among active bidders (inactive entries are None)."""
    active = [(b, i) for i, b in enumerate(bids) if b is not None]
    winner = min(active, key=lambda bi: (-bi[0], bi[1]))[1]
    top = bids[winner]
    if Format(fmt) is Format.FIRST_PRICE:
        return winner, top
    others = [b for b, i in active if i != winner]
    return winner, (max(others) if others else 0.0)


@dataclass
class SequentialRun:
    outcome: Outcome
    history: History
    bids: np.ndarray  # bids[t, i], NaN when inactive


def run_sequential_detailed(
    instance: RoscaInstance,
    strategies: Sequence[Strategy],
    fmt: Format,
    monitoring: Monitoring = Monitoring.FULL_DISCLOSURE,
    cost: Optional[CostModel] = None,
) -> SequentialRun:
    n = instance.n
    if n < 2:
        raise ValueError("a sequential rosca needs at least two participants")
    if len(strategies) != n:
        raise ValueError(f"expected {n} strategies, got {len(strategies)}")
    fmt = Format(fmt)
    active = [True] * n
    winners = []
    gross = np.zeros((n, n))
    reb = np.zeros((n, n))
    winning = np.zeros(n)
    bid_log = np.full((n, n), np.nan)
    history: History = ()
    for t in range(n):
        bids = [
            _check_bid(strategies[i](history, t), i) if active[i] else None for i in range(n)
        ]
        winner, price = resolve_round(bids, fmt)
        for i, b in enumerate(bids):
            if b is not None:
                bid_log[t, i] = b
        gross[winner, t] = price
        for i in range(n):
            if i != winner:
                reb[i, t] = price / (n - 1)
        winning[winner] = bids[winner]
        active[winner] = False
        winners.append(winner)
        history = history + (disclose(monitoring, winner, price, bids),)
    outcome = Outcome(Allocation.from_winners(winners), PaymentLedger(gross, reb), winning)
    return SequentialRun(outcome, history, bid_log)


def run_sequential(
    instance: RoscaInstance,
    strategies: Sequence[Strategy],
    fmt: Format,
    monitoring: Monitoring = Monitoring.FULL_DISCLOSURE,
    cost: Optional[CostModel] = None,
) -> Outcome:
    """One first- or second-price auction per round among participants yet to win."""
    return run_sequential_detailed(instance, strategies, fmt, monitoring, cost).outcome


def check_no_overbidding(instance: RoscaInstance, outcome: Outcome, cost: CostModel) -> bool:
    """Every winning bid (or its disutility) is at most the value of the round won."""
    vals = allocated_values(instance, outcome.allocation)
    tol = 1e-12 * instance.scale
    for i, b in enumerate(outcome.winning_bids):
        if cost.is_quasilinear:
            paid = b
        elif cost.in_domain(float(b)):
            paid = cost(float(b))
        else:
            return False
        if paid > vals[i] + tol:
            return False
    return True


def strategy_from_dict(d: dict, n: int) -> Strategy:
    """``{"constant": [...]}`` or ``{"table": [{"history": ..., "bid": ...}], "default": 0}``."""
    if "constant" in d:
        bids = tuple(float(x) for x in d["constant"])
        if len(bids) != n:
            raise ValueError(f"constant strategy needs {n} bids, got {len(bids)}")
        return ConstantStrategy(bids)
    if "table" in d:
        table = {_freeze(row["history"]): float(row["bid"]) for row in d["table"]}
        return TableStrategy(table, float(d.get("default", 0.0)))
    raise ValueError(f"unrecognized strategy entry {d!r}")


def _freeze(x):
    if isinstance(x, list):
        return tuple(_freeze(y) for y in x)
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return x
    return x


def _thaw(x):
    if isinstance(x, tuple):
        return [_thaw(y) for y in x]
    return x


def strategy_to_dict(s: Strategy) -> dict:
    if isinstance(s, ConstantStrategy):
        return {"constant": list(s.bids)}
    if isinstance(s, TableStrategy):
        return {
            "table": [{"history": _thaw(h), "bid": b} for h, b in s.table.items()],
            "default": s.default,
        }
    raise TypeError(f"{type(s).__name__} cannot be serialized")


def load_strategies(path: str | Path, n: int) -> list[Strategy] | list[float]:
    """Strategy file: a list with one entry per participant.

    For up-front roscas each entry may be a plain number (the bid).
    """
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "participants" in data:
        data = data["participants"]
    if len(data) != n:
        raise ValueError(f"strategy file lists {len(data)} participants, instance has {n}")
    if all(isinstance(x, (int, float)) for x in data):
        return [float(x) for x in data]
    return [strategy_from_dict(d, n) for d in data]
