import pytest

from laurent_algebra_system import RationalFn, lp
from newton_weight_system import PlanarODE, Weights, builtin_ode, builtin_weights
from orbifold_chart_system import (
    ChartId, ChartVectorField, all_charts, infinity_restriction, nonautonomous_rhs, orbifold_action_check,
    same_orbifold_point, to_chart, transition_map, transported_field_parallel,
)


def _chart(tag, chart):
    return to_chart(builtin_ode(tag), builtin_weights(tag), chart)


def test_p1_boutroux_chart():
    vf = _chart("P1", ChartId.C3)
    assert vf.variables == ("X3", "Y3", "e3")
    assert vf.components == (lp("24*Y3^2 + 4 - 3*X3*e3"), lp("4*X3 - 2*Y3*e3"), lp("-5*e3^2"))


def test_p1_second_chart_after_clearing():
    vf = _chart("P1", ChartId.C2)
    assert vf.components == (lp("-12 - 2*Z2 + 3*X2^2"), lp("-2*e2 + 4*X2*Z2"), lp("5*X2*e2"))
    assert vf.orbifold_order == 2


def test_perturbed_system_inherits_the_builtin_chart_signs():
    perturbed = PlanarODE(lp("2*y^3 + y*z + 1"), lp("x"))
    vf = to_chart(perturbed, builtin_weights("P2"), ChartId.C2)
    assert vf.orientation == _chart("P2", ChartId.C2).orientation == -1
    assert vf.components[2] == lp("3*X2*e2")


def test_unmatched_principal_part_keeps_the_cleared_sign():
    other = PlanarODE(lp("12*y^2 + z"), lp("x"))
    assert to_chart(other, builtin_weights("P1"), ChartId.C2).orientation == 1


def test_original_chart_is_the_embedding():
    vf = _chart("P1", ChartId.ORIG)
    assert vf.variables == ("x", "y", "z")


@pytest.mark.parametrize("tag, expected", [
    ("P1", ("24*Y3^2 + 4", "4*X3")),
    ("P2", ("4*Y3^3 + 2*Y3", "2*X3")),
    ("P4", ("-X3^2 + 2*X3*Y3 + 2*X3", "-Y3^2 + 2*X3*Y3 - 2*Y3")),
])
def test_infinity_restriction(tag, expected):
    field = infinity_restriction(_chart(tag, ChartId.C3))
    assert field.variables == ("X3", "Y3")
    assert field.components == tuple(lp(e) for e in expected)


def test_infinity_restriction_needs_an_infinity_chart():
    with pytest.raises(ValueError):
        infinity_restriction(_chart("P1", ChartId.ORIG))


def test_nonautonomous_form_matches_direct_derivation():
    dX, dY = nonautonomous_rhs(_chart("P1", ChartId.C3))
    assert dX == RationalFn(lp("24*Y3^2 + 4 - 3*X3*e3"), lp("-5*e3^2"))
    assert dY == RationalFn(lp("4*X3 - 2*Y3*e3"), lp("-5*e3^2"))


def test_orbifold_actions(tag):
    for vf in all_charts(builtin_ode(tag), builtin_weights(tag)).values():
        assert orbifold_action_check(vf)


def test_asymmetric_field_fails_orbifold_check():
    vf = ChartVectorField(ChartId.C2, ("X2", "Z2", "e2"), (lp("1"), lp("Z2"), lp("e2")), Weights(3, 2, 4, 5))
    assert not orbifold_action_check(vf)


def test_transition_to_second_chart_on_double_cover():
    t = transition_map(Weights(3, 2, 4, 5), ChartId.ORIG, ChartId.C2)
    assert t.coordinate == "y"
    assert t.cover_degree == 2
    assert t.images["X2"] == lp("x*_sigma^3")
    assert t.images["Z2"] == lp("z*_sigma^4")
    assert t.images["e2"] == lp("_sigma^5")


def test_transition_to_same_chart_is_identity():
    t = transition_map(Weights(3, 2, 4, 5), ChartId.C3, ChartId.C3)
    assert t.uniformizer is None
    assert t.images["X3"] == lp("X3")


def test_transition_cover_degrees():
    t = transition_map(Weights(3, 2, 4, 5), ChartId.C1, ChartId.C2)
    assert t.coordinate == "Y1"
    assert t.cover_degree == 2
    back = transition_map(Weights(3, 2, 4, 5), ChartId.C2, ChartId.C1)
    assert back.cover_degree == 3


@pytest.mark.parametrize("source, target, point", [
    (ChartId.C2, ChartId.C3, {"X2": 0.4 + 0.1j, "Z2": 0.7 - 0.2j, "e2": 0.3 + 0.05j}),
    (ChartId.C3, ChartId.C2, {"X3": -0.2 + 0.3j, "Y3": 0.9 + 0.1j, "e3": 0.25 - 0.1j}),
    (ChartId.C1, ChartId.C3, {"Y1": 0.5 + 0.5j, "Z1": 1.2 - 0.1j, "e1": 0.2 + 0.2j}),
])
def test_transported_fields_are_parallel(source, target, point):
    ode, w = builtin_ode("P1"), builtin_weights("P1")
    sine = transported_field_parallel(to_chart(ode, w, source), to_chart(ode, w, target), point)
    assert sine < 1e-6


def test_pole_lifts_are_the_same_orbifold_point():
    w = builtin_weights("P1")
    assert same_orbifold_point(w, ChartId.C2, (2, 0, 0), ChartId.C2, (-2, 0, 0))
    assert not same_orbifold_point(w, ChartId.C2, (2, 0, 0), ChartId.C2, (3, 0, 0))
