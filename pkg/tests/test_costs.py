import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from roscalab.costs import (
    CRRA,
    DomainError,
    Quasilinear,
    RangeError,
    SlopeBounded,
    cost,
    cost_from_dict,
    inverse_cost,
    parse_cost,
    slope_bounds,
)

MODELS = [Quasilinear(), CRRA(4, 0.5), CRRA(4, 1.0), CRRA(4, 2.0), CRRA(1, 0.1), CRRA(10, 1.5)]


def test_cost_examples():
    assert cost(Quasilinear(), 3.5) == 3.5
    assert cost(CRRA(4, 0.5), 2) == pytest.approx(2 * (2 - math.sqrt(2)), abs=1e-12)
    assert cost(CRRA(4, 0.5), 2) == pytest.approx(1.171573, abs=1e-6)
    assert cost(CRRA(4, 1), 2) == pytest.approx(math.log(2), abs=1e-15)
    for m in MODELS:
        assert abs(cost(m, 0.0)) <= 1e-12


def test_crra_domain():
    with pytest.raises(DomainError):
        cost(CRRA(4, 0.5), 4.0)
    with pytest.raises(DomainError):
        cost(CRRA(4, 2), 5.0)
    assert cost(CRRA(4, 0.5), -10.0) < 0
    with pytest.raises(ValueError):
        CRRA(0, 0.5)
    with pytest.raises(ValueError):
        CRRA(4, -0.1)


def test_inverse_examples():
    assert inverse_cost(Quasilinear(), 2) == 2
    assert inverse_cost(CRRA(4, 1), math.log(2)) == pytest.approx(2, abs=1e-12)
    assert inverse_cost(CRRA(4, 0.5), 1.171573) == pytest.approx(2, abs=1e-6)


def test_inverse_out_of_range():
    m = CRRA(4, 0.5)  # C is bounded by 2 sqrt(4) = 4 as p -> W
    with pytest.raises(RangeError):
        inverse_cost(m, 4.0)
    assert inverse_cost(m, 3.99) < 4


def test_slope_bounds_examples():
    assert slope_bounds(Quasilinear(), -3, 7) == (1, 1)
    a, b = slope_bounds(CRRA(4, 0.5), 0, 2)
    assert a == pytest.approx(0.5) and b == pytest.approx(1 / math.sqrt(2))
    a, b = slope_bounds(CRRA(4, 2), 0, 2)
    assert a == pytest.approx(1 / 16) and b == pytest.approx(1 / 4)
    with pytest.raises(DomainError):
        slope_bounds(CRRA(4, 2), 0, 4)


@given(st.sampled_from(MODELS), st.floats(-5, 0.95), st.floats(-5, 0.95))
def test_increasing_and_convex(m, x, y):
    hi = m.upper if math.isfinite(m.upper) else 10.0
    p, q = sorted((x * hi, y * hi))
    if q - p < 1e-6:
        return
    assert cost(m, p) < cost(m, q)
    mid = (p + q) / 2
    assert cost(m, mid) <= (cost(m, p) + cost(m, q)) / 2 + 1e-9


@given(st.sampled_from(MODELS), st.floats(-0.95, 0.95))
def test_slope_sandwich(m, frac):
    hi = m.upper if math.isfinite(m.upper) else 10.0
    x = frac * hi
    if abs(x) < 1e-9:
        return
    a, b = slope_bounds(m, min(0, x), max(0, x))
    c = cost(m, x)
    if x > 0:
        assert a * x - 1e-12 <= c <= b * x + 1e-12
    else:
        assert b * x - 1e-12 <= c <= a * x + 1e-12


@given(st.sampled_from(MODELS), st.floats(-0.99, 0.99))
def test_round_trip(m, frac):
    hi = m.upper if math.isfinite(m.upper) else 10.0
    p = frac * hi
    assert inverse_cost(m, cost(m, p)) == pytest.approx(p, abs=1e-8)


def test_log_continuity():
    base = CRRA(4, 1.0)
    for p in np.linspace(0, 3.9, 40):
        for a in (1 - 1e-6, 1 + 1e-6):
            assert abs(cost(CRRA(4, a), p) - cost(base, p)) <= 1e-4


def test_slope_bounded_wrapper():
    inner = CRRA(4, 0.5)
    sb = SlopeBounded(inner, 0.0, 2.0)
    assert (sb.alpha, sb.beta) == slope_bounds(inner, 0.0, 2.0)
    assert cost(sb, 1.0) == cost(inner, 1.0)
    assert cost(sb, 2.0) == cost(inner, 2.0)
    with pytest.raises(DomainError):
        cost(sb, 2.5)
    assert inverse_cost(sb, cost(inner, 1.3)) == pytest.approx(1.3, abs=1e-9)
    with pytest.raises(DomainError):
        SlopeBounded(inner, 0.0, 4.0)


def test_serialization():
    for m in MODELS + [SlopeBounded(CRRA(4, 0.5), -1, 2)]:
        assert cost_from_dict(m.to_dict()) == m
    assert parse_cost("quasilinear") == Quasilinear()
    assert parse_cost("crra:W=4,a=0.5") == CRRA(4, 0.5)
    with pytest.raises(ValueError):
        parse_cost("crra:W=4")
    with pytest.raises(ValueError):
        parse_cost("exp:k=1")
