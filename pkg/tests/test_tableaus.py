from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schrocq.tableaus import (TABLEAU_NAMES, StabilityPoleError, TableauError, builtin_tableau,
                              check_order_conditions, r_infinity, stability_function,
                              stability_function_alt, stability_function_many)


def test_backward_euler():
    t = builtin_tableau("radau_iia_1")
    assert t.A.tolist() == [[1.0]] and t.b.tolist() == [1.0] and t.c.tolist() == [1.0]


def test_midpoint():
    t = builtin_tableau("gauss1")
    assert t.A.tolist() == [[0.5]] and t.b.tolist() == [1.0] and t.c.tolist() == [0.5]


def test_radau2_coefficients():
    t = builtin_tableau("radau_iia_2")
    assert t.exact[0] == ((Fraction(5, 12), Fraction(-1, 12)), (Fraction(3, 4), Fraction(1, 4)))
    assert t.exact[1] == (Fraction(3, 4), Fraction(1, 4))
    assert t.order == 3 and t.stiffly_accurate


def test_unknown_name():
    with pytest.raises(TableauError):
        builtin_tableau("rk4")


@pytest.mark.parametrize("name", TABLEAU_NAMES)
def test_invariants(name):
    t = builtin_tableau(name)
    check_order_conditions(t)
    assert abs(np.linalg.det(t.A)) > 1e-14
    assert np.allclose(t.A.sum(axis=1), t.c, atol=1e-13)
    assert abs(t.b.sum() - 1) <= 1e-13
    assert np.all(np.linalg.eigvals(t.A).real > 0)
    grid = np.linspace(-1e3, 1e3, 4001)
    assert np.max(np.abs(stability_function_many(t, 1j * grid))) <= 1 + 1e-12
    assert np.allclose(t.d, -1j * t.Ainv @ np.ones(t.m))


@pytest.mark.parametrize("name", TABLEAU_NAMES)
def test_stiff_or_symmetric(name):
    t = builtin_tableau(name)
    if name.startswith("radau"):
        assert abs(t.r_infinity) <= 1e-13 and t.stiffly_accurate
    else:
        assert abs(abs(t.r_infinity) - 1) <= 1e-12
        grid = np.linspace(-50, 50, 1001)
        assert np.max(np.abs(np.abs(stability_function_many(t, 1j * grid)) - 1)) <= 1e-12


@pytest.mark.parametrize("name", TABLEAU_NAMES)
def test_stability_at_zero(name):
    assert stability_function(builtin_tableau(name), 0) == pytest.approx(1)


def test_stability_backward_euler():
    assert stability_function(builtin_tableau("radau_iia_1"), -1) == pytest.approx(0.5)


def test_stability_midpoint():
    R = stability_function(builtin_tableau("gauss1"), 1j)
    assert R == pytest.approx((1 + 0.5j) / (1 - 0.5j))
    assert abs(R) == pytest.approx(1)


def test_stability_pole():
    with pytest.raises(StabilityPoleError):
        stability_function(builtin_tableau("radau_iia_1"), 1)


@pytest.mark.parametrize("name,expected", [("radau_iia_2", 0.0), ("gauss1", -1.0), ("radau_iia_1", 0.0)])
def test_r_infinity(name, expected):
    assert r_infinity(builtin_tableau(name)) == pytest.approx(expected, abs=1e-13)


@pytest.mark.parametrize("name", TABLEAU_NAMES)
def test_stability_forms_agree(name, rng):
    t = builtin_tableau(name)
    z = rng.uniform(-20, 5, 1000) + 1j * rng.uniform(-20, 20, 1000)
    for zz in z:
        try:
            a = stability_function(t, zz)
        except StabilityPoleError:
            continue
        b = stability_function_alt(t, zz)
        assert abs(a - b) <= 1e-11 * max(abs(a), 1)


@given(st.sampled_from(TABLEAU_NAMES), st.floats(-1e3, 0), st.floats(-1e3, 1e3))
def test_a_stability_property(name, x, y):
    assert abs(stability_function(builtin_tableau(name), complex(x, y))) <= 1 + 1e-12
