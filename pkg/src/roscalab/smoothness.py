"""Smoothness inequalities and welfare-bound formulas as executable checks.

A single-item auction is (lambda, mu1, mu2)-smooth when prescribed deviations
earn, in total, at least ``lambda * OPT - mu1 * payments - mu2 * winning bids``
(``mu2 * C(winning bid)`` under nonlinear cost). The checks below construct
those deviations and evaluate both sides on concrete values and bids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .auctions import (
    Format,
    Mechanism,
    Monitoring,
    Strategy,
    ScriptedStrategy,
    check_no_overbidding,
    run_sequential,
    run_sequential_detailed,
)
from .core import Outcome, RoscaInstance, allocated_values, utilities
from .costs import CostModel, Quasilinear
from .matching import optimal_welfare

TOL = 1e-7
QUAD_ABS = 1e-8


@dataclass(frozen=True)
class SmoothnessParams:
    lam: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if not (0 < self.lam <= 1):
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("mu1 and mu2 must be nonnegative")

    def composed(self) -> "SmoothnessParams":
        """Parameters of the per-round composition: one extra unit of payments."""
        return SmoothnessParams(self.lam, self.mu1 + 1, self.mu2)


SECOND_PRICE_PARAMS = SmoothnessParams(1.0, 0.0, 1.0)
FIRST_PRICE_PARAMS = SmoothnessParams(1 - 1 / math.e, 1.0, 0.0)


def first_price_params(beta: float) -> SmoothnessParams:
    """First-price parameters when the slope of C is at most ``beta``."""
    return SmoothnessParams((1 - math.exp(-beta)) / beta, 1.0, 0.0)


def single_item(actions: Sequence[float], fmt: Format) -> tuple[int, float]:
    """Winner (highest bid, lowest index on ties) and price."""
    a = list(actions)
    winner = min(range(len(a)), key=lambda i: (-a[i], i))
    if Format(fmt) is Format.FIRST_PRICE:
        return winner, float(a[winner])
    rest = [a[i] for i in range(len(a)) if i != winner]
    return winner, float(max(rest)) if rest else 0.0


def _unilateral_utility(values, actions, i, bid, fmt, cost) -> float:
    a = list(actions)
    a[i] = bid
    w, price = single_item(a, fmt)
    return float(values[i] - cost(price)) if w == i else 0.0


def default_beta(v_h: float, cost: CostModel) -> float:
    """Slope of C at ``v_h``, an upper bound on C' over every bid the deviation can place."""
    return float(cost.derivative(v_h))


def first_price_deviation_utility(v_h: float, m: float, cost: CostModel, beta: float) -> float:
    """Expected utility of the randomized first-price bid against highest rival bid ``m``.

    Bids have density ``1 / (v_h - beta x)`` on ``[0, (1 - e^-beta) v_h / beta]``.
    """
    if v_h <= 0:
        return 0.0
    top = (1 - math.exp(-beta)) * v_h / beta
    if m >= top:
        return 0.0
    lo = max(m, 0.0)
    if cost.is_quasilinear:
        if abs(beta - 1) < 1e-12:
            return top - lo
        return (top - lo) / beta + v_h * (1 - 1 / beta) / beta * math.log(
            (v_h - beta * lo) / (v_h - beta * top)
        )
    val, _ = integrate.quad(
        lambda x: (v_h - cost(x)) / (v_h - beta * x), lo, top, epsabs=QUAD_ABS, limit=200
    )
    return float(val)


def smoothness_deviation_utility(
    values: Sequence[float],
    actions: Sequence[float],
    mechanism: Format,
    cost: CostModel,
    beta: Optional[float] = None,
) -> float:
    """Total utility of the prescribed unilateral deviations in a single-item auction.

    The highest-value bidder deviates as the mechanism's smoothness argument
    prescribes; everyone else bids 0.
    """
    values = np.asarray(values, dtype=float)
    actions = list(map(float, actions))
    if values.max(initial=0.0) <= 0:
        return sum(
            _unilateral_utility(values, actions, i, 0.0, mechanism, cost) for i in range(len(values))
        )
    h = int(np.argmax(values))
    v_h = float(values[h])
    total = 0.0
    for i in range(len(values)):
        if i != h:
            total += _unilateral_utility(values, actions, i, 0.0, mechanism, cost)
    if Format(mechanism) is Format.SECOND_PRICE:
        total += _unilateral_utility(values, actions, h, cost.inverse(v_h), mechanism, cost)
    else:
        b = default_beta(v_h, cost) if beta is None else beta
        m = max((actions[i] for i in range(len(actions)) if i != h), default=0.0)
        total += first_price_deviation_utility(v_h, m, cost, b)
    return total


def smoothness_rhs(params, values, actions, mechanism, cost) -> float:
    """``lambda * OPT - mu1 * payment - mu2 * B`` (``C(B)`` when cost is nonlinear)."""
    w, price = single_item(actions, mechanism)
    bid = float(actions[w])
    bid_term = bid if cost.is_quasilinear else float(cost(bid)) if cost.in_domain(bid) else math.inf
    if params.mu2 == 0:
        bid_term = 0.0
    return params.lam * float(np.max(values)) - params.mu1 * price - params.mu2 * bid_term


def smoothness_slack(params, values, actions, mechanism, cost, beta=None) -> float:
    return smoothness_deviation_utility(values, actions, mechanism, cost, beta) - smoothness_rhs(
        params, values, actions, mechanism, cost
    )


def check_smoothness_inequality(
    params: SmoothnessParams, values, actions, mechanism, cost: CostModel, beta=None
) -> bool:
    return smoothness_slack(params, values, actions, mechanism, cost, beta) >= -TOL


# ------------------------------------------------------------- round robin


@dataclass(frozen=True)
class _Composed(Strategy):
    base: Strategy
    switch_round: int
    deviation_bid: float

    def bid(self, history, t):
        if t < self.switch_round:
            return self.base(history, t)
        if t == self.switch_round:
            return self.deviation_bid
        return 0.0


def roundrobin_deviation_utility(
    instance: RoscaInstance,
    strategies: Sequence[Strategy],
    fmt: Format,
    monitoring: Monitoring,
    cost: CostModel,
    beta: Optional[float] = None,
) -> float:
    """Total gross-payment utility of the composed deviations.

    Participant ``i`` follows their strategy until their optimal round ``t*``,
    plays the single-item deviation there with value ``v_i[t*]`` (rivals have
    value 0), and bids 0 afterwards. Payments count gross of rebates. For the
    randomized first-price bid, rounds after a loss at ``t*`` are bounded below
    by 0, since bidding 0 never costs anything.
    """
    n = instance.n
    _, opt_alloc = optimal_welfare(instance)
    eq = run_sequential_detailed(instance, strategies, fmt, monitoring, cost)
    eq_rounds = eq.outcome.allocation.rounds
    v = instance.values
    total = 0.0
    for i in range(n):
        t_star = opt_alloc.rounds[i]
        if eq_rounds[i] < t_star:
            # Wins while still following the equilibrium strategy.
            t_hat = eq_rounds[i]
            total += v[i, t_hat] - cost(float(eq.outcome.ledger.gross[i, t_hat]))
            continue
        v_hat = float(v[i, t_star])
        if Format(fmt) is Format.SECOND_PRICE:
            bid = cost.inverse(v_hat) if v_hat > 0 else 0.0
            dev = list(strategies)
            dev[i] = _Composed(strategies[i], t_star, bid)
            out = run_sequential(instance, dev, fmt, monitoring, cost)
            j = out.allocation.rounds[i]
            total += v[i, j] - cost(float(out.ledger.gross[i, j]))
        else:
            rivals = [eq.bids[t_star, k] for k in range(n) if k != i and not np.isnan(eq.bids[t_star, k])]
            m = max(rivals, default=0.0)
            b = default_beta(v_hat, cost) if beta is None and v_hat > 0 else (beta or 1.0)
            total += first_price_deviation_utility(v_hat, m, cost, b)
    return total


def roundrobin_rhs(instance, outcome: Outcome, params: SmoothnessParams, cost: CostModel) -> float:
    opt, _ = optimal_welfare(instance)
    paid = float(outcome.ledger.gross.sum())
    B = outcome.winning_bids
    bid_term = float(B.sum()) if cost.is_quasilinear else sum(float(cost(float(b))) for b in B)
    if params.mu2 == 0:
        bid_term = 0.0
    return params.lam * opt - params.mu1 * paid - params.mu2 * bid_term


def roundrobin_slack(
    instance, strategies, fmt, monitoring, cost, params: Optional[SmoothnessParams] = None, beta=None
) -> float:
    """Deviation total minus the composed right-hand side ``(lambda, mu1 + 1, mu2)``.

    ``params`` are the single-item parameters; by default the standard ones for
    the format, with the first-price lambda adjusted for the slope bound.
    """
    if params is None:
        if Format(fmt) is Format.SECOND_PRICE:
            params = SECOND_PRICE_PARAMS
        elif cost.is_quasilinear:
            params = FIRST_PRICE_PARAMS
        else:
            b = beta if beta is not None else _max_slope(instance, cost)
            params = first_price_params(b)
            beta = b
    outcome = run_sequential(instance, strategies, fmt, monitoring, cost)
    lhs = roundrobin_deviation_utility(instance, strategies, fmt, monitoring, cost, beta)
    return lhs - roundrobin_rhs(instance, outcome, params.composed(), cost)


def _max_slope(instance: RoscaInstance, cost: CostModel) -> float:
    return float(cost.derivative(float(instance.values.max()))) if instance.values.max() > 0 else 1.0


def check_roundrobin_smoothness(
    instance, strategies, fmt, monitoring, cost, params=None, beta=None
) -> bool:
    if instance.n == 1:
        return True
    return roundrobin_slack(instance, strategies, fmt, monitoring, cost, params, beta) >= -TOL * instance.scale


# ------------------------------------------------------- bound formulas


def upfront_rho(alpha: float, beta: float) -> float:
    root = math.sqrt(beta * (2 * alpha + beta))
    return (beta + root) / (beta * (alpha + beta + root))


def nonlinear_poa_bound(alpha: float, beta: float, mechanism: Mechanism) -> float:
    """Closed-form price-of-anarchy bound for slopes of C within ``[alpha, beta]``.

    The first-price value is the stated closed form, which multiplies by
    ``1 - 1/e``; ``first_price_theorem_bound`` gives the value derived from the
    general smoothness bound instead.
    """
    if not (alpha > 0 and beta >= alpha):
        raise ValueError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    mech = Mechanism(mechanism)
    if mech is Mechanism.UPFRONT:
        rho = upfront_rho(alpha, beta)
        if not (0 <= rho <= 2 / beta + 1e-15):
            raise AssertionError(f"rho={rho} outside [0, 2/beta]")
        return (alpha + beta + math.sqrt(beta * (2 * alpha + beta))) / alpha
    if mech is Mechanism.SECOND_PRICE:
        return 1 + 2 * beta / alpha
    return (1 + 2 * beta / alpha) * (1 - 1 / math.e)


def first_price_theorem_bound(alpha: float, beta: float) -> float:
    """``(1 + mu1/alpha + mu2 beta/alpha) / lambda`` with the first-price parameters,
    after rescaling C so that ``beta = 1``."""
    if not (alpha > 0 and beta >= alpha):
        raise ValueError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    return (1 + 2 * beta / alpha) / (1 - 1 / math.e)


def upfront_bound_by_search(alpha: float, beta: float) -> float:
    """Minimize ``(1 + 1/(rho alpha)) / (1 - rho beta / 2)`` over ``rho`` numerically."""
    f = lambda r: (1 + 1 / (r * alpha)) / (1 - r * beta / 2)
    res = optimize.minimize_scalar(f, bounds=(1e-12, 2 / beta * (1 - 1e-12)), method="bounded",
                                   options={"xatol": 1e-14})
    return float(res.fun)


def upfront_welfare_lower_bound(
    instance: RoscaInstance, outcome: Outcome, alpha: float, beta: float
) -> float:
    """``(1 - rho beta / 2) OPT - (1/rho) sum of gross payments`` at the optimizing rho."""
    opt, _ = optimal_welfare(instance)
    rho = upfront_rho(alpha, beta)
    return (1 - rho * beta / 2) * opt - float(outcome.ledger.gross.sum()) / rho


NOT_APPLICABLE = None


def check_payment_utility_lemmas(
    instance: RoscaInstance, outcome: Outcome, alpha: float, beta: float, cost: CostModel
) -> Optional[bool]:
    """Allocated value <= (beta/alpha) total utility, and payments <= total utility / alpha.

    Returns None when the outcome overbids, where neither inequality is claimed.
    """
    if not check_no_overbidding(instance, outcome, cost):
        return NOT_APPLICABLE
    u = float(utilities(instance, outcome, cost).sum())
    value = float(allocated_values(instance, outcome.allocation).sum())
    paid = float(outcome.ledger.gross.sum())
    tol = 1e-9 * max(1.0, abs(value), abs(u))
    return bool(value <= beta / alpha * u + tol and paid <= u / alpha + tol)
