"""Small hand-built instances with scripted strategies.

``overbidding_loss`` is a first-price rosca where early overbidding sustains
a suboptimal outcome; ``free_win`` is a second-price rosca where a zero-value
participant blocks a valuable one at no cost; ``swap_tight`` is a swap-stable
allocation with half the optimal welfare.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .auctions import ConstantStrategy, Format, ScriptedStrategy, Strategy
from .core import Allocation, RoscaInstance


@dataclass(frozen=True)
class Scenario:
    name: str
    instance: RoscaInstance
    strategies: tuple
    fmt: Format
    description: str


def swap_tight_instance() -> RoscaInstance:
    """Values (0,0,0), (1,0,0), (1,1,0)."""
    return RoscaInstance(np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0]]))


def swap_tight_allocation() -> Allocation:
    """Participant 3 takes round 1, participant 1 round 2, participant 2 round 3."""
    return Allocation((1, 2, 0))


def _round1_bid(history, participant: int):
    return history[0][2][participant]


def _follower(history, t):
    if t == 0:
        return 1.0
    if t == 1:
        return 2.0 if _round1_bid(history, 0) >= 2 else 0.0
    return 0.0


def overbidding_loss() -> Scenario:
    """Three participants; welfare 3 against an optimum of 4.

    Participant 1 bids 2 in round 1. Participants 2 and 3 bid 1 in round 1,
    then bid 2 in round 2 if participant 1 bid at least 2, else 0. Everyone
    bids 0 in round 3. Strategies read round-1 bids, so this needs full
    disclosure.
    """
    inst = RoscaInstance(np.array([[1.0, 0, 0], [2, 2, 0], [2, 2, 0]]))
    leader = ConstantStrategy((2.0, 0.0, 0.0))
    follower = ScriptedStrategy(_follower, "follow-leader")
    return Scenario(
        "overbidding_loss", inst, (leader, follower, follower), Format.FIRST_PRICE, overbidding_loss.__doc__
    )


def free_win() -> Scenario:
    """Two participants with values (10, 0) and (0, 0).

    Participant 2 bids 10 in round 1 and wins for free under second-price
    payments; participant 1 bids 0. Welfare is 0 against an optimum of 10.
    """
    inst = RoscaInstance(np.array([[10.0, 0], [0, 0]]))
    return Scenario(
        "free_win",
        inst,
        (ConstantStrategy((0.0, 0.0)), ConstantStrategy((10.0, 0.0))),
        Format.SECOND_PRICE,
        free_win.__doc__,
    )


SCENARIOS = {"overbidding_loss": overbidding_loss, "free_win": free_win}


def zero_strategies(n: int) -> list[Strategy]:
    return [ConstantStrategy((0.0,) * n) for _ in range(n)]
