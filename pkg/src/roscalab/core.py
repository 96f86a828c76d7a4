"""Rosca instances, allocations, payment ledgers and welfare.

Indices are 0-based throughout: participant ``i`` and round ``t`` range over
``0..n-1``. An allocation stores ``rounds[i]``, the round in which participant
``i`` receives the pot.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .costs import CostModel, DomainError

UNBOUNDED = math.inf


class InstanceError(ValueError):
    """A value matrix violates the instance invariants."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RoscaInstance:
    """``n`` participants, per-round contribution ``p0`` and values ``v[i, t]``.

    Rows must be non-increasing in ``t``: getting the pot earlier is never worse.
    """

    values: np.ndarray
    p0: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] == 0:
            raise InstanceError(f"value matrix must be square and nonempty, got shape {v.shape}")
        bad = ~np.isfinite(v)
        if bad.any():
            i, t = map(int, np.argwhere(bad)[0])
            raise InstanceError(f"participant {i + 1}, round {t + 1}: value {v[i, t]} is not finite")
        if (v < 0).any():
            i, t = map(int, np.argwhere(v < 0)[0])
            raise InstanceError(f"participant {i + 1}, round {t + 1}: value {v[i, t]} is negative")
        rising = v[:, 1:] > v[:, :-1]
        if rising.any():
            i, t = map(int, np.argwhere(rising)[0])
            raise InstanceError(
                f"participant {i + 1}: value rises from round {t + 1} ({v[i, t]}) "
                f"to round {t + 2} ({v[i, t + 1]})"
            )
        if not (self.p0 >= 0 and math.isfinite(self.p0)):
            raise InstanceError(f"contribution p0 must be nonnegative, got {self.p0}")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def scale(self) -> float:
        """Largest absolute value, floored at 1; used for relative tolerances."""
        return max(1.0, float(np.abs(self.values).max()))

    def __eq__(self, other):
        if not isinstance(other, RoscaInstance):
            return NotImplemented
        return self.p0 == other.p0 and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.digest())

    def digest(self) -> str:
        return hashlib.sha256(self.values.tobytes() + repr(self.p0).encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {"n": self.n, "p0": self.p0, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RoscaInstance":
        inst = cls(np.asarray(d["values"], dtype=float), float(d.get("p0", 0.0)))
        if "n" in d and int(d["n"]) != inst.n:
            raise InstanceError(f"declared n={d['n']} but value matrix has side {inst.n}")
        return inst


@dataclass(frozen=True)
class Allocation:
    """Bijection participant -> round."""

    rounds: tuple

    def __post_init__(self):
        r = tuple(int(x) for x in self.rounds)
        if sorted(r) != list(range(len(r))):
            raise ValueError(f"allocation {r} is not a permutation of 0..{len(r) - 1}")
        object.__setattr__(self, "rounds", r)

    @property
    def n(self) -> int:
        return len(self.rounds)

    def round_of(self, i: int) -> int:
        return self.rounds[i]

    @property
    def winners(self) -> tuple:
        """Inverse map: ``winners[t]`` is the participant receiving round ``t``."""
        inv = [0] * self.n
        for i, t in enumerate(self.rounds):
            inv[t] = i
        return tuple(inv)

    @classmethod
    def from_winners(cls, winners: Sequence[int]) -> "Allocation":
        rounds = [0] * len(winners)
        for t, i in enumerate(winners):
            rounds[int(i)] = t
        return cls(tuple(rounds))

    @classmethod
    def identity(cls, n: int) -> "Allocation":
        return cls(tuple(range(n)))

    def as_array(self) -> np.ndarray:
        return np.array(self.rounds, dtype=np.int64)


@dataclass(frozen=True)
class PaymentLedger:
    """Per participant, per round gross payments and rebates; ``net = gross - rebates``."""

    gross: np.ndarray
    rebates: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gross, dtype=float)
        r = np.asarray(self.rebates, dtype=float)
        if g.shape != r.shape or g.ndim != 2:
            raise ValueError("gross and rebates must be matrices of equal shape")
        if (g < 0).any() or (r < 0).any():
            raise ValueError("gross payments and rebates must be nonnegative")
        object.__setattr__(self, "gross", _readonly(g))
        object.__setattr__(self, "rebates", _readonly(r))

    @property
    def net(self) -> np.ndarray:
        return self.gross - self.rebates

    @classmethod
    def zeros(cls, n: int) -> "PaymentLedger":
        return cls(np.zeros((n, n)), np.zeros((n, n)))

    @classmethod
    def from_net(cls, net: np.ndarray) -> "PaymentLedger":
        net = np.asarray(net, dtype=float)
        return cls(np.maximum(net, 0.0), np.maximum(-net, 0.0))

    def is_budget_balanced(self, scale: float = 1.0) -> bool:
        return bool(np.all(np.abs(self.net.sum(axis=0)) <= 1e-9 * scale))

    @property
    def total_gross(self) -> np.ndarray:
        """Gross payment per participant summed over rounds."""
        return self.gross.sum(axis=1)


@dataclass(frozen=True)
class Outcome:
    allocation: Allocation
    ledger: PaymentLedger
    winning_bids: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.allocation.n
        if self.ledger.gross.shape != (n, n):
            raise ValueError(f"ledger shape {self.ledger.gross.shape} does not match n={n}")
        b = np.zeros(n) if self.winning_bids is None else np.asarray(self.winning_bids, dtype=float)
        if b.shape != (n,) or (b < 0).any():
            raise ValueError("winning bids must be a nonnegative vector of length n")
        object.__setattr__(self, "winning_bids", _readonly(b))

    @classmethod
    def unpaid(cls, allocation: Allocation) -> "Outcome":
        return cls(allocation, PaymentLedger.zeros(allocation.n))

    def to_dict(self) -> dict:
        return {
            "allocation": list(self.allocation.rounds),
            "gross": self.ledger.gross.tolist(),
            "rebates": self.ledger.rebates.tolist(),
            "winning_bids": self.winning_bids.tolist(),
        }


def matching_weight(instance: RoscaInstance, allocation: Allocation) -> float:
    """Sum of allocated values, correctly rounded."""
    v = instance.values
    return math.fsum(v[i, t] for i, t in enumerate(allocation.rounds))


def allocated_values(instance: RoscaInstance, allocation: Allocation) -> np.ndarray:
    return instance.values[np.arange(instance.n), allocation.as_array()]


def payment_costs(outcome: Outcome, cost: CostModel) -> np.ndarray:
    """Matrix of C(net[i, t]); raises DomainError naming the offending entry."""
    net = outcome.ledger.net
    out = np.empty_like(net)
    for i in range(net.shape[0]):
        for t in range(net.shape[1]):
            p = float(net[i, t])
            if not cost.in_domain(p):
                raise DomainError(
                    f"participant {i + 1}, round {t + 1}: payment {p} outside the domain of {cost!r}"
                )
            out[i, t] = cost._value(p)
    return out


def utilities(instance: RoscaInstance, outcome: Outcome, cost: CostModel) -> np.ndarray:
    """Per-participant utility above the baseline."""
    _check_dims(instance, outcome)
    return allocated_values(instance, outcome.allocation) - payment_costs(outcome, cost).sum(axis=1)


def welfare(instance: RoscaInstance, outcome: Outcome, cost: CostModel) -> float:
    """Total allocated value minus total disutility of payments."""
    _check_dims(instance, outcome)
    return matching_weight(instance, outcome.allocation) - math.fsum(
        payment_costs(outcome, cost).ravel()
    )


def _check_dims(instance: RoscaInstance, outcome: Outcome) -> None:
    if outcome.allocation.n != instance.n:
        raise ValueError(f"outcome has {outcome.allocation.n} participants, instance has {instance.n}")


def approximation_ratio(opt: float, achieved: float) -> float:
    """OPT / achieved; ``math.inf`` when nothing positive was achieved but OPT is."""
    if opt == 0 and achieved == 0:
        return 1.0
    if achieved <= 0:
        return UNBOUNDED
    return opt / achieved


def is_unbounded(ratio: float) -> bool:
    return math.isinf(ratio)


def load_instance(path: str | Path) -> RoscaInstance:
    """Load a CSV (one row per participant, optional ``r1,...,rn`` header) or JSON profile."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        return RoscaInstance.from_dict(json.loads(text))
    return parse_csv_instance(text)


def parse_csv_instance(text: str) -> RoscaInstance:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows and rows[0][0].strip().lower().startswith("r"):
        rows = rows[1:]
    try:
        values = [[float(c) for c in r] for r in rows]
    except ValueError as exc:
        raise InstanceError(f"non-numeric entry in profile: {exc}") from None
    widths = {len(r) for r in values}
    if len(widths) != 1 or widths.pop() != len(values):
        raise InstanceError(f"profile must have n rows of n values, got {len(values)} rows")
    return RoscaInstance(np.array(values))


def instance_to_csv(instance: RoscaInstance) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"r{t + 1}" for t in range(instance.n)])
    for row in instance.values:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
