"""Pairwise swap aftermarket on top of an initial allocation.

In round ``t`` every participant still waiting for the pot (assigned a round
``>= t``) may trade rounds with another waiting participant. The holder of the
later round pays the holder of the earlier one. Each round's payments start at
zero and accumulate as swaps execute, so later swap evaluations within the
round see the disutility of money already paid or received.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Allocation, Outcome, PaymentLedger, RoscaInstance, matching_weight
from .costs import CostModel, DomainError, RangeError

EPS_REL = 1e-6


class ScanPolicy(str, enum.Enum):
    """Order in which candidate swaps are examined within a round.

    SHUFFLE: each pass visits all unordered pairs in a fresh random order and
    executes every valid swap it meets. LEXICOGRAPHIC: the same with pairs in
    index order. PAYER_FIRST: shuffle the waiting participants, let each in
    turn look for a partner holding an earlier round (partners in the same
    shuffled order), execute the first valid swap and reshuffle.
    """

    SHUFFLE = "shuffle"
    LEXICOGRAPHIC = "lexicographic"
    PAYER_FIRST = "payer_first"


DEFAULT_POLICY = ScanPolicy.SHUFFLE


class SwapNonConvergence(RuntimeError):
    """A swap round exceeded its pass cap."""


def strictness_margin(instance: RoscaInstance) -> float:
    return EPS_REL * instance.scale


@dataclass
class SwapState:
    """Current round assignment plus payments accumulated in the current round."""

    rounds: np.ndarray
    round_payments: np.ndarray
    current_round: int = 0

    @classmethod
    def start(cls, allocation: Allocation) -> "SwapState":
        return cls(allocation.as_array().copy(), np.zeros(allocation.n), 0)

    @property
    def allocation(self) -> Allocation:
        return Allocation(tuple(int(x) for x in self.rounds))

    def waiting(self) -> list[int]:
        return [i for i in range(len(self.rounds)) if self.rounds[i] >= self.current_round]

    def copy(self) -> "SwapState":
        return SwapState(self.rounds.copy(), self.round_payments.copy(), self.current_round)


@dataclass(frozen=True)
class SwapRecord:
    round: int
    payer: int
    receiver: int
    payer_from: int
    payer_to: int
    payment: float

    def to_json(self) -> str:
        # One-based in the external trace format.
        return json.dumps(
            {
                "round": self.round + 1,
                "i": self.payer + 1,
                "i'": self.receiver + 1,
                "j": self.payer_from + 1,
                "j'": self.payer_to + 1,
                "payment": self.payment,
            }
        )


def _roles(state: SwapState, x: int, y: int) -> tuple[int, int]:
    """(payer, receiver): the payer holds the later round."""
    return (x, y) if state.rounds[x] > state.rounds[y] else (y, x)


def is_valid_swap(
    instance: RoscaInstance, state: SwapState, i: int, i2: int, p_hat: float, cost: CostModel
) -> bool:
    """Whether ``i`` (moving into ``i2``'s round) paying ``p_hat`` to ``i2`` strictly helps both."""
    if i == i2:
        raise ValueError("a swap needs two distinct participants")
    j, j2 = int(state.rounds[i]), int(state.rounds[i2])
    if min(j, j2) < state.current_round:
        raise ValueError("both participants must still be waiting for the pot")
    v = instance.values
    p_i, p_i2 = float(state.round_payments[i]), float(state.round_payments[i2])
    if not cost.in_domain(p_i + p_hat):
        raise DomainError(f"payer payment {p_i + p_hat} outside the domain of {cost!r}")
    payer_ok = v[i, j2] - cost(p_i + p_hat) > v[i, j] - cost(p_i)
    receiver_ok = v[i2, j] - cost(p_i2 - p_hat) > v[i2, j2] - cost(p_i2)
    return bool(payer_ok and receiver_ok)


def minimal_swap_payment(
    instance: RoscaInstance,
    state: SwapState,
    i: int,
    i2: int,
    cost: CostModel,
    eps: Optional[float] = None,
) -> Optional[float]:
    """Smallest payment from ``i`` to ``i2`` that makes the swap valid, or None.

    The receiver is made exactly indifferent and then paid ``eps`` more. The swap
    is feasible when the payer still strictly gains at that price.
    """
    eps = strictness_margin(instance) if eps is None else eps
    v = instance.values
    j, j2 = int(state.rounds[i]), int(state.rounds[i2])
    gain = v[i, j2] - v[i, j]
    loss = v[i2, j2] - v[i2, j]
    if cost.is_quasilinear:
        return loss + eps if gain - loss > eps else None
    p_pay, p_recv = float(state.round_payments[i]), float(state.round_payments[i2])
    try:
        indifferent = p_recv - cost.inverse(cost(p_recv) - loss)
    except (RangeError, DomainError):
        return None
    p_hat = indifferent + eps
    if not cost.in_domain(p_pay + p_hat):
        return None
    if gain - (cost(p_pay + p_hat) - cost(p_pay)) > 0:
        return p_hat
    return None


def _execute(state: SwapState, payer: int, receiver: int, p_hat: float) -> SwapRecord:
    j, j2 = int(state.rounds[payer]), int(state.rounds[receiver])
    state.rounds[payer], state.rounds[receiver] = j2, j
    state.round_payments[payer] += p_hat
    state.round_payments[receiver] -= p_hat
    return SwapRecord(state.current_round, payer, receiver, j, j2, p_hat)


def run_swap_round(
    instance: RoscaInstance,
    state: SwapState,
    cost: CostModel,
    rng: np.random.Generator,
    scan_policy: ScanPolicy = DEFAULT_POLICY,
    on_swap: Optional[Callable[[SwapRecord], None]] = None,
) -> SwapState:
    """Execute swaps among waiting participants until none is valid."""
    state = state.copy()
    n = instance.n
    cap = n**3
    eps = strictness_margin(instance)
    policy = ScanPolicy(scan_policy)
    passes = 0
    while True:
        passes += 1
        if passes > cap:
            raise SwapNonConvergence(f"round {state.current_round + 1}: more than {cap} passes")
        waiting = state.waiting()
        if len(waiting) < 2:
            return state
        found = False
        if policy is ScanPolicy.PAYER_FIRST:
            order = list(rng.permutation(waiting))
            for payer in order:
                for receiver in order:
                    if state.rounds[payer] <= state.rounds[receiver]:
                        continue
                    p_hat = minimal_swap_payment(instance, state, payer, receiver, cost, eps)
                    if p_hat is not None:
                        rec = _execute(state, payer, receiver, p_hat)
                        if on_swap:
                            on_swap(rec)
                        found = True
                        break
                if found:
                    break
        else:
            pairs = [(x, y) for k, x in enumerate(waiting) for y in waiting[k + 1 :]]
            if policy is ScanPolicy.SHUFFLE:
                pairs = [pairs[k] for k in rng.permutation(len(pairs))]
            for x, y in pairs:
                payer, receiver = _roles(state, x, y)
                p_hat = minimal_swap_payment(instance, state, payer, receiver, cost, eps)
                if p_hat is not None:
                    rec = _execute(state, payer, receiver, p_hat)
                    if on_swap:
                        on_swap(rec)
                    found = True
        if not found:
            return state


def run_swap_rosca(
    instance: RoscaInstance,
    initial: Allocation,
    cost: CostModel,
    rng: np.random.Generator,
    scan_policy: ScanPolicy = DEFAULT_POLICY,
    trace: Optional[list] = None,
) -> Outcome:
    """Run the swap aftermarket through all rounds and return the final outcome.

    Under quasilinear cost every swap happens in the first round; later swaps
    would indicate an engine bug and raise ``AssertionError``.
    """
    if initial.n != instance.n:
        raise ValueError("initial allocation size does not match the instance")
    n = instance.n
    net = np.zeros((n, n))
    state = SwapState.start(initial)
    records: list[SwapRecord] = []
    for t in range(n):
        state.current_round = t
        state.round_payments = np.zeros(n)
        before = len(records)
        state = run_swap_round(instance, state, cost, rng, scan_policy, records.append)
        if cost.is_quasilinear and t > 0 and len(records) > before:
            raise AssertionError(f"quasilinear swap executed in round {t + 1}")
        net[:, t] = state.round_payments
    if trace is not None:
        trace.extend(records)
    return Outcome(state.allocation, PaymentLedger.from_net(net))


def is_swap_stable(instance: RoscaInstance, allocation: Allocation) -> bool:
    """No pair gains in total allocated value by exchanging rounds (up to float rounding)."""
    return is_epsilon_swap_stable(instance, allocation, 1e-12 * instance.scale)


def is_epsilon_swap_stable(instance: RoscaInstance, allocation: Allocation, eps: float) -> bool:
    """No pair gains more than ``eps`` by exchanging rounds."""
    v = instance.values
    r = allocation.as_array()
    own = v[np.arange(instance.n), r]
    cross = v[:, r]
    return bool((cross + cross.T - own[:, None] - own[None, :] <= eps).all())


def swap_welfare_gain(instance: RoscaInstance, initial: Allocation, final: Allocation) -> float:
    return matching_weight(instance, final) - matching_weight(instance, initial)
