import random
from fractions import Fraction

import pytest
import sympy as sp

from laurent_algebra_system import (
    FractionalExponentError, FractionalMonomial, InconsistentSystemError, LaurentAlgebraError, LaurentPoly, MonomialMap, NonMonomialPowerError,
    PolynomialParseError, RationalFn, UndefinedDegreeError, exact_linear_solve, fraction_free_rank, lp,
    parse_expression, substitute, weighted_degree,
)
from newton_weight_system import Weights


def test_additive_and_multiplicative_identities():
    p = lp("6*y^2 + z")
    assert p + LaurentPoly.zero() == p
    q = lp("2*y^3 + y*z + alpha")
    assert q * LaurentPoly.one() == q
    assert lp("y^-2") * lp("y^2") == LaurentPoly.one()


def test_negative_power_of_non_monomial_raises():
    with pytest.raises(NonMonomialPowerError):
        lp("x + y") ** -1
    assert lp("2*y") ** -2 == LaurentPoly.from_expr(sp.Rational(1, 4) * sp.Symbol("y") ** -2)


def test_diff_handles_laurent_exponents():
    assert lp("6*y^2 + z").diff("y") == lp("12*y")
    assert lp("w^-2").diff("w") == lp("-2*w^-3")
    assert lp("x").diff("z").is_zero()


def test_weighted_degree_of_hamiltonians():
    assert weighted_degree(lp("x^2/2 - 2*y^3 - z*y"), {"x": 3, "y": 2, "z": 4}) == 6
    h2 = lp("x^2/2 - y^4/2 - z*y^2/2 - alpha*y")
    assert weighted_degree(h2, Weights(2, 1, 2, 3)) == 4
    assert weighted_degree(LaurentPoly.constant(5), {"x": 3}) == 0
    with pytest.raises(UndefinedDegreeError):
        weighted_degree(LaurentPoly.zero(), {"x": 1})


def test_parameters_never_carry_negative_exponents():
    with pytest.raises(ValueError):
        lp("alpha^-1*y")
    assert lp("alpha*y").parameters == frozenset({"alpha"})


def test_substitute_monomial_images():
    assert substitute(lp("x^2"), MonomialMap({"x": "tau^-3"})) == lp("tau^-6")
    identity = MonomialMap.identity(["y", "z"])
    assert substitute(lp("6*y^2 + z"), identity) == lp("6*y^2 + z")
    assert substitute(lp("2*y^3"), MonomialMap({"y": "w3^-2"})) == lp("2*w3^-6")


def test_fractional_exponent_is_rejected():
    half = FractionalMonomial.of({"e": Fraction(1, 2)})
    with pytest.raises(FractionalExponentError):
        substitute(lp("x"), MonomialMap({"x": half}))


def test_composition_matches_sequential_substitution():
    rng = random.Random(7)
    names = ["x", "y", "z"]
    for _ in range(10):
        m1 = MonomialMap({n: LaurentPoly.monomial({"a": rng.randint(-3, 3), "b": rng.randint(-3, 3)},
                                                  rng.randint(1, 4)) for n in names})
        m2 = MonomialMap({"a": LaurentPoly.monomial({"t": rng.randint(-2, 2)}, rng.randint(1, 3)),
                          "b": LaurentPoly.monomial({"t": rng.randint(-2, 2), "s": 1})})
        p = lp("3*x^2*y - z + x*y*z^-1 + 7")
        assert substitute(substitute(p, m1), m2) == substitute(p, m1.compose(m2))


def test_ring_laws_on_random_polynomials():
    rng = random.Random(11)

    def random_poly():
        terms = LaurentPoly.zero()
        for _ in range(4):
            exps = {"x": rng.randint(-2, 3), "y": rng.randint(-2, 3)}
            terms = terms + LaurentPoly.monomial(exps, Fraction(rng.randint(-9, 9), rng.randint(1, 5)))
        return terms

    for _ in range(10):
        a, b, c = random_poly(), random_poly(), random_poly()
        assert a + b == b + a
        assert a * (b + c) == a * b + a * c


def test_weighted_degree_is_additive_for_quasi_homogeneous_factors():
    w = {"x": 3, "y": 2, "z": 4}
    a, b = lp("x^2 - 2*y^3"), lp("y^2 + z")
    assert weighted_degree(a * b, w) == weighted_degree(a, w) + weighted_degree(b, w)


def test_text_round_trip():
    p = lp("-1/2*x*w^-3 + 7/3*y^2 - z")
    assert lp(p.to_text()) == p


def test_parse_error_reports_position():
    with pytest.raises(PolynomialParseError) as info:
        lp("6*y^2 + * z")
    assert "cannot parse" in str(info.value)


def test_parse_expression_accepts_rational_maps():
    expr = parse_expression("x - 2*kappa/y")
    assert sp.simplify(expr - (sp.Symbol("x") - 2 * sp.Symbol("kappa") / sp.Symbol("y"))) == 0


def test_rational_canonical_form():
    x, y = sp.symbols("x y")
    r = RationalFn.from_expr((2 * x + 2) / (4 * x * y + 4 * y))
    assert r.denom == lp("y")
    assert r == RationalFn(lp("1"), lp("2*y"))


def test_exact_linear_solve():
    assert exact_linear_solve([[1, 0], [0, 1]], [5, -3]).solution == (5, -3)
    assert exact_linear_solve([[2, 0], [0, 3]], [4, 9]).solution == (2, 3)


def test_exact_linear_solve_accepts_sympy_matrices():
    a, b, k = sp.symbols("a b kappa")
    A, rhs = sp.linear_eq_to_matrix([a + 2 * b - 3, k * a - b], [a, b])
    result = exact_linear_solve(A, rhs)
    assert not result.singular
    assert sp.simplify(result.solution[0] - 3 / (1 + 2 * k)) == 0
    assert sp.simplify(result.solution[1] - 3 * k / (1 + 2 * k)) == 0
    assert fraction_free_rank(A) == 2

    wide, rhs = sp.linear_eq_to_matrix([a + b - 1], [a, b])
    result = exact_linear_solve(wide, rhs, square=False)
    assert result.rank == 1
    assert len(result.free_parameters) == 1


def test_singular_consistent_system_reports_free_parameter():
    A = [[1, 2], [2, 4]]
    result = exact_linear_solve(A, [3, 6])
    assert result.singular
    assert result.rank == fraction_free_rank(A) == 1


def test_inconsistent_system_carries_ranks():
    with pytest.raises(InconsistentSystemError) as info:
        exact_linear_solve([[1, 2], [2, 4]], [3, 7])
    assert (info.value.rank, info.value.augmented_rank) == (1, 2)


def test_non_polynomial_denominator_raises_algebra_error():
    x, y = sp.symbols("x y")
    with pytest.raises(LaurentAlgebraError):
        RationalFn.from_expr(1 / (sp.sqrt(x) + y))
