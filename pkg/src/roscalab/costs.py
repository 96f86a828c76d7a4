"""Disutility-for-money functions C(p).

Every model satisfies C(0) = 0 and is increasing and convex on its domain.
Payments may be negative (rebates). Models are callable on floats and on
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

# |a - 1| below this uses the logarithmic limit of the CRRA formula.
LOG_THRESHOLD = 1e-9
BISECTION_MAX_ITER = 200


class DomainError(ValueError):
    """A payment lies outside the domain of a cost model."""


class RangeError(ValueError):
    """A disutility value cannot be produced by any payment in the domain."""


class CostModel:
    """Base class. Subclasses implement ``_value`` and ``_derivative``."""

    kind: str = "abstract"

    # Exclusive upper bound of the payment domain.
    @property
    def upper(self) -> float:
        return math.inf

    # Inclusive lower bound of the payment domain.
    @property
    def lower(self) -> float:
        return -math.inf

    @property
    def is_quasilinear(self) -> bool:
        return False

    def in_domain(self, p: float) -> bool:
        return self.lower <= p < self.upper

    def _check(self, p: ArrayLike) -> None:
        if isinstance(p, np.ndarray):
            bad = (p >= self.upper) | (p < self.lower) | ~np.isfinite(p)
            if bad.any():
                raise DomainError(
                    f"payment {p[bad].flat[0]!r} outside domain "
                    f"[{self.lower}, {self.upper}) of {self!r}"
                )
        elif not (self.lower <= p < self.upper) or math.isnan(p):
            raise DomainError(
                f"payment {p!r} outside domain [{self.lower}, {self.upper}) of {self!r}"
            )

    def __call__(self, p: ArrayLike) -> ArrayLike:
        self._check(p)
        return self._value(p)

    def derivative(self, p: ArrayLike) -> ArrayLike:
        self._check(p)
        return self._derivative(p)

    def inverse(self, c: float) -> float:
        """Payment p with C(p) = c, by bisection on the domain."""
        return _bisect_inverse(self, c)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _value(self, p):
        raise NotImplementedError

    def _derivative(self, p):
        raise NotImplementedError


@dataclass(frozen=True)
class Quasilinear(CostModel):
    """C(p) = p."""

    kind = "quasilinear"

    @property
    def is_quasilinear(self) -> bool:
        return True

    def _value(self, p):
        return p * 1.0

    def _derivative(self, p):
        if isinstance(p, np.ndarray):
            return np.ones_like(p, dtype=float)
        return 1.0

    def inverse(self, c: float) -> float:
        return float(c)

    def to_dict(self) -> dict:
        return {"kind": "quasilinear"}


@dataclass(frozen=True)
class CRRA(CostModel):
    """Constant relative risk aversion with wealth ``W`` and curvature ``a``.

    ``C(p) = (W**(1-a) - (W-p)**(1-a)) / (1-a)``, with the log limit
    ``ln W - ln(W-p)`` at ``a = 1``. For ``a > 0`` the domain is ``p < W``.
    """

    W: float
    a: float

    kind = "crra"

    def __post_init__(self):
        if not (self.W > 0 and math.isfinite(self.W)):
            raise ValueError(f"CRRA wealth must be positive, got {self.W}")
        if not (self.a >= 0 and math.isfinite(self.a)):
            raise ValueError(f"CRRA curvature must be nonnegative, got {self.a}")

    @property
    def upper(self) -> float:
        return self.W if self.a > 0 else math.inf

    @property
    def is_quasilinear(self) -> bool:
        return self.a == 0

    @property
    def is_log(self) -> bool:
        return abs(self.a - 1.0) <= LOG_THRESHOLD

    def _value(self, p):
        W, a = self.W, self.a
        if isinstance(p, np.ndarray):
            if self.is_log:
                return np.log(W) - np.log(W - p)
            return (W ** (1 - a) - np.power(W - p, 1 - a)) / (1 - a)
        if self.is_log:
            return math.log(W) - math.log(W - p)
        return (W ** (1 - a) - (W - p) ** (1 - a)) / (1 - a)

    def _derivative(self, p):
        if isinstance(p, np.ndarray):
            return np.power(self.W - p, -self.a)
        return (self.W - p) ** (-self.a)

    # Infimum of C over the domain (p -> -inf).
    @property
    def range_lower(self) -> float:
        if self.a > 1 + LOG_THRESHOLD:
            return -(self.W ** (1 - self.a)) / (self.a - 1)
        return -math.inf

    # Supremum of C over the domain (p -> W).
    @property
    def range_upper(self) -> float:
        if self.a < 1 - LOG_THRESHOLD:
            return self.W ** (1 - self.a) / (1 - self.a) if self.a > 0 else math.inf
        return math.inf

    def inverse(self, c: float) -> float:
        W, a = self.W, self.a
        if not (self.range_lower < c < self.range_upper):
            raise RangeError(
                f"disutility {c} outside range ({self.range_lower}, {self.range_upper}) of {self!r}"
            )
        if self.is_log:
            return W - W * math.exp(-c)
        base = W ** (1 - a) - (1 - a) * c
        return W - base ** (1 / (1 - a))

    def to_dict(self) -> dict:
        return {"kind": "crra", "W": self.W, "a": self.a}


@dataclass(frozen=True)
class SlopeBounded(CostModel):
    """An inner model restricted to ``[p_min, p_max]``.

    On that interval the slope of C lies in ``[alpha, beta]``.
    """

    inner: CostModel
    p_min: float
    p_max: float

    kind = "slope_bounded"

    def __post_init__(self):
        if not self.p_min < self.p_max:
            raise ValueError("p_min must be below p_max")
        if not (self.inner.lower <= self.p_min and self.p_max < self.inner.upper):
            raise DomainError(f"[{self.p_min}, {self.p_max}] not inside the domain of {self.inner!r}")

    @property
    def lower(self) -> float:
        return self.p_min

    @property
    def upper(self) -> float:
        # p_max itself is allowed; nudge the exclusive bound past it.
        return math.nextafter(self.p_max, math.inf)

    @property
    def is_quasilinear(self) -> bool:
        return self.inner.is_quasilinear

    @property
    def alpha(self) -> float:
        return float(self.inner.derivative(self.p_min))

    @property
    def beta(self) -> float:
        return float(self.inner.derivative(self.p_max))

    def _value(self, p):
        return self.inner._value(p)

    def _derivative(self, p):
        return self.inner._derivative(p)

    def to_dict(self) -> dict:
        return {
            "kind": "slope_bounded",
            "inner": self.inner.to_dict(),
            "p_min": self.p_min,
            "p_max": self.p_max,
        }


def _bracket(model: CostModel, c: float) -> tuple[float, float]:
    lo = model.lower if math.isfinite(model.lower) else -1.0
    hi = model.p_max if isinstance(model, SlopeBounded) else min(model.upper, 1.0)
    if not math.isfinite(model.upper):
        while model._value(hi) < c and hi < 1e300:
            hi *= 2
    elif hi >= model.upper:
        hi = math.nextafter(model.upper, -math.inf)
    if not math.isfinite(model.lower):
        while model._value(lo) > c and lo > -1e300:
            lo *= 2
    return lo, hi


def _bisect_inverse(model: CostModel, c: float) -> float:
    lo, hi = _bracket(model, c)
    if not (model._value(lo) <= c <= model._value(hi)):
        raise RangeError(f"disutility {c} outside the range of {model!r} on [{lo}, {hi}]")
    tol = 1e-12 * max(1.0, abs(c))
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        val = model._value(mid)
        if abs(val - c) <= tol:
            return mid
        if val < c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cost(model: CostModel, p: ArrayLike) -> ArrayLike:
    return model(p)


def inverse_cost(model: CostModel, c: float) -> float:
    """Payment whose disutility is ``c``.

    Closed form for the quasilinear and CRRA families, bisection otherwise.
    """
    return model.inverse(c)


def slope_bounds(model: CostModel, p_min: float, p_max: float) -> tuple[float, float]:
    """(alpha, beta) = (C'(p_min), C'(p_max)); convexity makes these the extremes."""
    if not p_min < p_max:
        raise ValueError(f"need p_min < p_max, got [{p_min}, {p_max}]")
    return float(model.derivative(p_min)), float(model.derivative(p_max))


def cost_from_dict(d: dict) -> CostModel:
    kind = d.get("kind", "").lower()
    if kind == "quasilinear":
        return Quasilinear()
    if kind == "crra":
        a = float(d["a"])
        return CRRA(W=float(d["W"]), a=a)
    if kind == "slope_bounded":
        return SlopeBounded(cost_from_dict(d["inner"]), float(d["p_min"]), float(d["p_max"]))
    raise ValueError(f"unknown cost model kind {d.get('kind')!r}")


def parse_cost(text: str) -> CostModel:
    """Parse ``quasilinear`` or ``crra:W=<f>,a=<f>``."""
    text = text.strip()
    if text.lower() in ("quasilinear", "linear", "ql"):
        return Quasilinear()
    head, _, rest = text.partition(":")
    if head.lower() != "crra" or not rest:
        raise ValueError(f"cannot parse cost model {text!r}")
    params = {}
    for item in rest.split(","):
        key, _, val = item.partition("=")
        params[key.strip()] = float(val)
    if set(params) != {"W", "a"}:
        raise ValueError(f"crra cost needs W and a, got {sorted(params)}")
    return CRRA(W=params["W"], a=params["a"])
