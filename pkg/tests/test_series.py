import pytest
import sympy as sp

from laurent_series_system import (
    Z0, kovalevskaya_exponent, kovalevskaya_matrix, laurent_solve, leading_balances, residual_valuations,
)
from newton_weight_system import builtin_ode, builtin_weights
from painleve_config import load_builtin_system

alpha, theta, kappa = sp.symbols("alpha theta kappa")


def _same(a, b):
    return sp.simplify(sp.sympify(a) - sp.sympify(b)) == 0


def _balance(tag, target):
    ode, w = builtin_ode(tag), builtin_weights(tag)
    for balance in leading_balances(ode, w):
        if all(_same(a, b) for a, b in zip(balance, target)):
            return ode, w, balance
    raise AssertionError(f"balance {target} not found for {tag}")


@pytest.mark.parametrize("tag, expected", [
    ("P1", {(-2, 1)}),
    ("P2", {(1, -1), (-1, 1)}),
    ("P4", {(1, 0), (-1, -1), (0, 1)}),
])
def test_leading_balances(tag, expected):
    balances = leading_balances(builtin_ode(tag), builtin_weights(tag))
    assert {(int(a), int(b)) for a, b in balances} == expected


def test_p1_series_coefficients():
    ode, w, balance = _balance("P1", (-2, 1))
    sol = laurent_solve(ode, w, balance, 6)
    assert sol.orders == (3, 2)
    assert _same(sol.x_coefficient(1), -Z0 / 5)
    assert _same(sol.x_coefficient(2), sp.Rational(-1, 2))
    assert _same(sol.y_coefficient(2), -Z0 / 10)
    assert _same(sol.y_coefficient(3), sp.Rational(-1, 6))
    assert kovalevskaya_exponent(sol) == 6
    assert sol.free_symbols


def test_p2_resonance_coefficient():
    ode, w, balance = _balance("P2", (1, -1))
    sol = laurent_solve(ode, w, balance, 6)
    assert _same(sol.B[3], (1 - alpha) / 4)
    assert 4 in sol.free_indices


def test_p4_first_balance_coefficients():
    ode, w, balance = _balance("P4", (1, 0))
    sol = laurent_solve(ode, w, balance, 5)
    assert _same(sol.y_coefficient(1), 2 * kappa)
    assert _same(sol.x_coefficient(1), (2 + Z0 ** 2 - 2 * theta + 4 * kappa) / 3)


@pytest.mark.parametrize("tag, kappa_value", [("P1", 6), ("P2", 4), ("P4", 3)])
def test_kovalevskaya_exponent_for_every_balance(tag, kappa_value):
    ode, w = builtin_ode(tag), builtin_weights(tag)
    for balance in leading_balances(ode, w):
        assert kovalevskaya_exponent(laurent_solve(ode, w, balance)) == kappa_value


def test_kovalevskaya_equals_hamiltonian_degree(tag):
    ode, w = builtin_ode(tag), builtin_weights(tag)
    balance = leading_balances(ode, w)[0]
    k = kovalevskaya_exponent(laurent_solve(ode, w, balance))
    assert k == ode.hamiltonian.weighted_degree(w.as_mapping()) == w.s + 1


def test_kovalevskaya_matrix_has_the_exponent_as_eigenvalue(tag):
    ode, w = builtin_ode(tag), builtin_weights(tag)
    balance = leading_balances(ode, w)[0]
    K = kovalevskaya_matrix(ode, w, balance)
    assert (K - (w.s + 1) * sp.eye(2)).det() == 0


def test_no_free_parameter_below_the_exponent():
    ode, w, balance = _balance("P1", (-2, 1))
    assert kovalevskaya_exponent(laurent_solve(ode, w, balance, 3)) is None


def test_truncation_residual_order(tag):
    ode, w = builtin_ode(tag), builtin_weights(tag)
    for balance in leading_balances(ode, w):
        sol = laurent_solve(ode, w, balance)
        assert min(residual_valuations(ode, sol)) >= sol.n_max - max(sol.orders)


def test_balance_count_matches_blowup_charts(tag):
    balances = leading_balances(builtin_ode(tag), builtin_weights(tag))
    assert len(balances) == load_builtin_system(tag).blowup_charts
