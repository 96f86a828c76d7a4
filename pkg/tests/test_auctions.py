import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from roscalab.auctions import (
    BidError,
    ConstantStrategy,
    Format,
    Monitoring,
    PaymentTiming,
    ScriptedStrategy,
    TableStrategy,
    check_no_overbidding,
    load_strategies,
    run_sequential,
    run_sequential_detailed,
    run_upfront,
    strategy_from_dict,
    strategy_to_dict,
)
from roscalab.core import RoscaInstance, approximation_ratio, is_unbounded, matching_weight, welfare
from roscalab.costs import CRRA, Quasilinear
from roscalab.matching import optimal_welfare
from roscalab.scenarios import free_win, overbidding_loss, zero_strategies

from conftest import random_instance

Q = Quasilinear()


def test_upfront_two_bids():
    inst = RoscaInstance(np.array([[1.0, 0], [1, 0]]))
    out = run_upfront(inst, [3, 1])
    assert out.allocation.rounds == (0, 1)
    assert out.ledger.gross[:, 0].tolist() == [3, 1]
    assert out.ledger.rebates[:, 0].tolist() == [1, 3]
    assert out.ledger.net[:, 0].tolist() == [2, -2]
    assert out.ledger.is_budget_balanced()


def test_upfront_zero_bids_tie_break(example1):
    out = run_upfront(example1, [0, 0, 0])
    assert out.allocation.rounds == (0, 1, 2)
    assert not out.ledger.gross.any() and not out.ledger.rebates.any()


def test_upfront_example1_welfare(example1):
    out = run_upfront(example1, [0, 1, 0.5])
    assert out.allocation.winners == (1, 2, 0)
    assert welfare(example1, out, Q) == pytest.approx(2)


def test_upfront_timing_changes_only_nonlinear_welfare(example1):
    lump = run_upfront(example1, [0, 1, 0.5], payment_timing=PaymentTiming.LUMP_ROUND1)
    even = run_upfront(example1, [0, 1, 0.5], payment_timing=PaymentTiming.EVEN_SPREAD)
    assert np.allclose(lump.ledger.net.sum(axis=1), even.ledger.net.sum(axis=1))
    assert welfare(example1, lump, Q) == pytest.approx(welfare(example1, even, Q))
    m = CRRA(2, 2)
    assert welfare(example1, lump, m) != pytest.approx(welfare(example1, even, m))


def test_upfront_rejects_bad_bids(example1):
    with pytest.raises(BidError):
        run_upfront(example1, [0, -1, 0])
    with pytest.raises(ValueError):
        run_upfront(RoscaInstance(np.array([[1.0]])), [0])


def test_free_win_example():
    sc = free_win()
    out = run_sequential(sc.instance, sc.strategies, sc.fmt)
    assert out.allocation.winners[0] == 1
    assert out.ledger.gross[1, 0] == 0
    assert not out.ledger.rebates.any()
    w = welfare(sc.instance, out, Q)
    assert w == 0
    assert is_unbounded(approximation_ratio(optimal_welfare(sc.instance)[0], w))
    assert not check_no_overbidding(sc.instance, out, Q)


def test_overbidding_example_outcome():
    sc = overbidding_loss()
    out = run_sequential(sc.instance, sc.strategies, sc.fmt, Monitoring.FULL_DISCLOSURE)
    assert out.allocation.winners == (0, 1, 2)
    assert matching_weight(sc.instance, out.allocation) == 3
    assert welfare(sc.instance, out, Q) == pytest.approx(3)
    assert out.winning_bids.tolist() == [2, 2, 0]
    assert not check_no_overbidding(sc.instance, out, Q)


@pytest.mark.parametrize("fmt", list(Format))
def test_zero_bids_two_participants(fmt):
    inst = RoscaInstance(np.array([[1.0, 0], [1, 0]]))
    out = run_sequential(inst, zero_strategies(2), fmt)
    assert out.allocation.winners == (0, 1)
    assert not out.ledger.gross.any()
    assert check_no_overbidding(inst, out, Q)


def test_rebates_reach_past_winners():
    inst = RoscaInstance(np.array([[3.0, 0, 0], [2, 2, 0], [1, 1, 1]]))
    strats = [ConstantStrategy((3, 0, 0)), ConstantStrategy((1, 2, 0)), ConstantStrategy((0, 1, 0))]
    out = run_sequential(inst, strats, Format.FIRST_PRICE)
    assert out.ledger.rebates[0, 1] == pytest.approx(1.0)  # participant 1 won round 1
    sp = run_sequential(inst, strats, Format.SECOND_PRICE)
    assert sp.ledger.gross[0, 0] == 1 and sp.ledger.gross[1, 1] == 1
    assert sp.ledger.gross[2, 2] == 0  # lone bidder in the last round pays nothing


def test_bid_validation():
    inst = RoscaInstance(np.array([[1.0, 0], [1, 0]]))
    bad = [ConstantStrategy((float("nan"), 0)), ConstantStrategy((0, 0))]
    with pytest.raises(BidError):
        run_sequential(inst, bad, Format.FIRST_PRICE)


def test_monitoring_disclosure():
    inst = RoscaInstance(np.array([[1.0, 0], [1, 0]]))
    strats = [ConstantStrategy((1, 0)), ConstantStrategy((0.5, 0))]
    full = run_sequential_detailed(inst, strats, Format.FIRST_PRICE, Monitoring.FULL_DISCLOSURE)
    assert full.history[0] == (0, 1.0, (1.0, 0.5))
    assert full.history[1] == (1, 0.0, (None, 0.0))
    short = run_sequential_detailed(inst, strats, Format.SECOND_PRICE, Monitoring.WINNER_AND_PRICE)
    assert short.history[0] == (0, 0.5)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1), st.sampled_from(list(Format)))
def test_sequential_invariants(n, seed, fmt):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    strats = [ConstantStrategy(tuple(rng.uniform(0, 5, n))) for _ in range(n)]
    run = run_sequential_detailed(inst, strats, fmt)
    out = run.outcome
    assert sorted(out.allocation.winners) == list(range(n))
    assert out.ledger.is_budget_balanced(inst.scale)
    assert welfare(inst, out, Q) == pytest.approx(matching_weight(inst, out.allocation), abs=1e-9 * inst.scale)
    for t, w in enumerate(out.allocation.winners):
        assert out.ledger.gross[w, t] <= run.bids[t, w] + 1e-12
        if fmt is Format.FIRST_PRICE:
            assert out.ledger.gross[w, t] == run.bids[t, w]
    last = out.allocation.winners[-1]
    expected = run.bids[n - 1, last] if fmt is Format.FIRST_PRICE else 0.0
    assert out.ledger.gross[last, n - 1] == expected


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_upfront_invariants(n, seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    bids = list(rng.integers(0, 4, n).astype(float))
    out = run_upfront(inst, bids)
    assert out.ledger.is_budget_balanced(inst.scale)
    assert welfare(inst, out, Q) == pytest.approx(matching_weight(inst, out.allocation), abs=1e-9 * inst.scale)
    order = out.allocation.winners
    for a, b in zip(order, order[1:]):
        assert bids[a] > bids[b] or (bids[a] == bids[b] and a < b)


def test_nonlinear_no_overbidding():
    inst = RoscaInstance(np.array([[1.0, 0], [1, 0]]))
    m = CRRA(2, 1)
    strats = [ConstantStrategy((0.7, 0)), ConstantStrategy((0.0, 0))]
    out = run_sequential(inst, strats, Format.FIRST_PRICE, cost=m)
    assert m(0.7) < 1 and check_no_overbidding(inst, out, m)
    strats = [ConstantStrategy((1.5, 0)), ConstantStrategy((0.0, 0))]
    out = run_sequential(inst, strats, Format.FIRST_PRICE, cost=m)
    assert m(1.5) > 1 and not check_no_overbidding(inst, out, m)


def test_strategy_files(tmp_path):
    n = 2
    table = TableStrategy({(): 1.0, ((0, 1.0, (1.0, 0.0)),): 0.0}, 0.5)
    for s in (ConstantStrategy((1.0, 2.0)), table):
        d = json.loads(json.dumps(strategy_to_dict(s)))
        assert strategy_from_dict(d, n) == s
    p = tmp_path / "s.json"
    p.write_text(json.dumps([{"constant": [1, 0]}, {"table": [{"history": [], "bid": 2}]}]))
    strats = load_strategies(p, 2)
    assert strats[0] == ConstantStrategy((1.0, 0.0))
    assert strats[1].bid((), 0) == 2
    p.write_text("[3, 1]")
    assert load_strategies(p, 2) == [3.0, 1.0]
    with pytest.raises(ValueError):
        load_strategies(p, 3)
    with pytest.raises(TypeError):
        strategy_to_dict(ScriptedStrategy(lambda h, t: 0.0))
