import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from roscalab.core import (
    Allocation,
    InstanceError,
    Outcome,
    PaymentLedger,
    RoscaInstance,
    UNBOUNDED,
    approximation_ratio,
    is_unbounded,
    load_instance,
    matching_weight,
    parse_csv_instance,
    instance_to_csv,
    welfare,
)
from roscalab.costs import CRRA, DomainError, Quasilinear

from conftest import random_instance

Q = Quasilinear()


def test_welfare_swap_stable_allocation(example1):
    # participant 3 wins round 1, participant 1 round 2, participant 2 round 3
    alloc = Allocation((1, 2, 0))
    assert welfare(example1, Outcome.unpaid(alloc), Q) == 1


def test_welfare_optimal_allocation(example1):
    alloc = Allocation((2, 0, 1))
    assert welfare(example1, Outcome.unpaid(alloc), Q) == 2


def test_zero_payment_welfare_is_matching_weight():
    rng = np.random.default_rng(3)
    for n in range(1, 7):
        inst = random_instance(rng, n)
        alloc = Allocation(tuple(int(x) for x in rng.permutation(n)))
        assert welfare(inst, Outcome.unpaid(alloc), CRRA(4, 0.5)) == pytest.approx(matching_weight(inst, alloc), abs=1e-12)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_quasilinear_budget_balanced_welfare_is_matching_weight(n, seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    alloc = Allocation(tuple(int(x) for x in rng.permutation(n)))
    net = rng.normal(size=(n, n))
    net -= net.mean(axis=0, keepdims=True)
    ledger = PaymentLedger.from_net(net)
    assert ledger.is_budget_balanced()
    w = welfare(inst, Outcome(alloc, ledger), Q)
    assert abs(w - matching_weight(inst, alloc)) <= 1e-9 * inst.scale


def test_welfare_domain_error_names_participant_and_round(example1):
    net = np.zeros((3, 3))
    net[1, 2] = 5.0
    net[0, 2] = -5.0
    out = Outcome(Allocation((0, 1, 2)), PaymentLedger.from_net(net))
    with pytest.raises(DomainError, match="participant 2.*round 3"):
        welfare(example1, out, CRRA(4, 0.5))


def test_ratio_examples():
    assert approximation_ratio(2, 1) == 2
    assert is_unbounded(approximation_ratio(10, 0))
    assert approximation_ratio(10, 0) == UNBOUNDED
    assert approximation_ratio(5, 5) == 1
    assert approximation_ratio(0, 0) == 1
    assert is_unbounded(approximation_ratio(1, -1))


def test_instance_invariants():
    with pytest.raises(InstanceError, match="participant 1"):
        RoscaInstance(np.array([[0.0, 1.0], [0, 0]]))
    with pytest.raises(InstanceError):
        RoscaInstance(np.array([[1.0, 0.0]]))
    with pytest.raises(InstanceError):
        RoscaInstance(np.array([[-1.0]]))
    with pytest.raises(InstanceError):
        RoscaInstance(np.array([[math.nan]]))


def test_instance_immutable():
    inst = RoscaInstance(np.array([[1.0]]))
    with pytest.raises(ValueError):
        inst.values[0, 0] = 2


def test_allocation_bijection():
    a = Allocation((2, 0, 1))
    assert a.winners == (1, 2, 0)
    assert Allocation.from_winners(a.winners) == a
    for i in range(3):
        assert a.winners[a.rounds[i]] == i
    with pytest.raises(ValueError):
        Allocation((0, 0, 1))


def test_ledger_identity():
    g = np.array([[3.0, 0], [1, 0]])
    r = np.array([[1.0, 0], [3, 0]])
    led = PaymentLedger(g, r)
    assert np.array_equal(led.net, g - r)
    assert led.is_budget_balanced()
    with pytest.raises(ValueError):
        PaymentLedger(-g, r)


def test_outcome_rejects_negative_bids():
    with pytest.raises(ValueError):
        Outcome(Allocation((0,)), PaymentLedger.zeros(1), np.array([-1.0]))


def test_csv_and_json_loading(tmp_path):
    text = "r1,r2\n2,1\n1,0\n"
    p = tmp_path / "v.csv"
    p.write_text(text)
    inst = load_instance(p)
    assert np.array_equal(inst.values, [[2, 1], [1, 0]])
    assert parse_csv_instance(instance_to_csv(inst)) == inst
    j = tmp_path / "v.json"
    j.write_text(json.dumps({"n": 2, "p0": 1.5, "values": [[2, 1], [1, 0]]}))
    inst2 = load_instance(j)
    assert inst2.p0 == 1.5 and np.array_equal(inst2.values, inst.values)
    assert RoscaInstance.from_dict(inst2.to_dict()) == inst2


def test_csv_monotonicity_diagnostic(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n0,0\n")
    with pytest.raises(InstanceError, match="participant 1.*round"):
        load_instance(p)
