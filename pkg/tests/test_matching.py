import numpy as np
import pytest
from hypothesis import given, strategies as st

from roscalab.core import Allocation, RoscaInstance, matching_weight
from roscalab.matching import brute_force_optimal, hungarian, optimal_welfare
from roscalab.profiles import load_builtin

from conftest import random_instance


def test_example1(example1):
    assert brute_force_optimal(example1)[0] == 2
    assert optimal_welfare(example1)[0] == 2


def test_single():
    inst = RoscaInstance(np.array([[7.0]]))
    assert brute_force_optimal(inst) == (7.0, Allocation((0,)))
    assert optimal_welfare(inst) == (7.0, Allocation((0,)))


def test_builtin_opts():
    assert optimal_welfare(load_builtin("crra9"))[0] == 45
    assert optimal_welfare(load_builtin("pointmass9"))[0] == 32


def test_all_zero_picks_identity():
    inst = RoscaInstance(np.zeros((5, 5)))
    val, alloc = optimal_welfare(inst)
    assert val == 0 and alloc == Allocation.identity(5)


def test_brute_force_refuses_large():
    with pytest.raises(ValueError):
        brute_force_optimal(RoscaInstance(np.zeros((11, 11))))


def test_random_7x7_agrees():
    rng = np.random.default_rng(7)
    inst = random_instance(rng, 7)
    assert optimal_welfare(inst) == brute_force_optimal(inst)


@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.booleans())
def test_matches_brute_force_including_ties(n, seed, integer):
    rng = np.random.default_rng(seed)
    if integer:
        v = np.sort(rng.integers(0, 3, (n, n)), axis=1)[:, ::-1].astype(float)
        inst = RoscaInstance(v)
    else:
        inst = random_instance(rng, n)
    val, alloc = optimal_welfare(inst)
    bval, balloc = brute_force_optimal(inst)
    assert val == bval
    assert alloc == balloc
    assert matching_weight(inst, alloc) == val


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_row_permutation_invariance(n, seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, n)
    perm = rng.permutation(n)
    other = RoscaInstance(inst.values[perm])
    assert optimal_welfare(other)[0] == pytest.approx(optimal_welfare(inst)[0], abs=1e-12)


def test_hungarian_returns_permutation():
    rng = np.random.default_rng(0)
    w = rng.uniform(0, 5, (6, 6))
    col, u, v = hungarian(w)
    assert sorted(col) == list(range(6))
