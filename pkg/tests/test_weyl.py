import pytest
import sympy as sp

from newton_weight_system import builtin_ode, builtin_weights
from orbifold_chart_system import ChartId
from weyl_symmetry_system import (
    REFLECTION, BacklundMismatchError, BirationalAction, NonRationalExtensionError, builtin_group, commutes_with_zs_action, compose,
    composition_table, extend_to_chart, foliation_symmetry_group, generator, group_relations,
    infinity_action_report, orbifold_chart_action, solve_parameter_map, verify_backlund, weyl_report,
)

kappa, theta = sp.symbols("kappa theta")


@pytest.mark.parametrize("tag", ["P2", "P4"])
def test_every_generator_is_a_backlund_transformation(tag):
    ode = builtin_ode(tag)
    for a in builtin_group(tag):
        assert verify_backlund(ode, a).holds, a.name


def test_corrupted_parameter_map_is_rejected():
    ode = builtin_ode("P4")
    bad = BirationalAction.build("s1_bad", {"kappa": "-kappa", "theta": "theta"}, {"x": "x - 2*kappa/y"})
    check = verify_backlund(ode, bad)
    assert not check
    assert check.residuals
    with pytest.raises(BacklundMismatchError):
        verify_backlund(ode, bad, strict=True)


def test_parameter_map_solved_from_variable_map():
    ode = builtin_ode("P4")
    sigma2 = generator("P4", "sigma2")
    solved = solve_parameter_map(ode, dict(sigma2.variable_map))
    assert sp.simplify(solved["kappa"] - (1 + theta - kappa)) == 0
    assert solved["theta"] == theta


def test_s1_parameter_map_is_recovered():
    solved = solve_parameter_map(builtin_ode("P4"), {"x": "x - 2*kappa/y"})
    assert solved == {"kappa": -kappa, "theta": theta - kappa}


@pytest.mark.parametrize("tag", ["P2", "P4"])
def test_reflections_are_involutions(tag):
    relations = group_relations(tag)
    assert relations.reflections_involutive
    for a in builtin_group(tag):
        if a.kind == REFLECTION:
            assert relations.orders[a.name] == 2


def test_sigma1_squares_to_the_orbifold_action():
    relations = group_relations("P4")
    assert relations.orders["sigma1"] == 4
    assert relations.orbifold_powers["sigma1"] == (2, 1)


def test_composition_table_identifies_squares():
    table = composition_table("P2")
    assert table["s1"]["s1"] == "id"
    assert table["pi"]["pi"] == "id"


def test_composition_respects_order_of_application():
    s1, s2 = generator("P4", "s1"), generator("P4", "s2")
    assert compose(s1, s2).parameter_image("kappa") != compose(s2, s1).parameter_image("kappa")


@pytest.mark.parametrize("tag", ["P2", "P4"])
def test_generators_commute_with_orbifold_action(tag):
    w = builtin_weights(tag)
    for a in builtin_group(tag):
        assert commutes_with_zs_action(a, w), a.name


def test_reflection_extends_rationally_to_c3():
    action = extend_to_chart(generator("P4", "s1"), builtin_weights("P4"), ChartId.C3)
    assert action.rational
    assert action.equivariant
    X3, Y3, e3 = sp.symbols("X3 Y3 e3")
    assert sp.simplify(action.image("X3") - (X3 - 2 * kappa * e3 / Y3)) == 0


def test_p2_automorphism_on_c3():
    action = extend_to_chart(generator("P2", "pi"), builtin_weights("P2"), ChartId.C3)
    X3, Y3, e3 = sp.symbols("X3 Y3 e3")
    assert (action.image("X3"), action.image("Y3"), action.image("e3")) == (-X3, -Y3, e3)


def test_reflection_is_trivial_on_the_infinity_set():
    report = infinity_action_report(generator("P4", "s1"), tag="P4")
    assert report.trivial_on_infinity
    assert report.foliation_character == 1


def test_rotation_preserves_the_boutroux_hamiltonian():
    report = infinity_action_report(generator("P4", "pi"), tag="P4")
    assert not report.trivial_on_infinity
    assert report.foliation_character == 1


def test_p1_chart_rotation_negates_the_boutroux_hamiltonian():
    action = orbifold_chart_action("P1", ChartId.C3)
    assert action.name == "Z4"
    report = infinity_action_report(action, tag="P1")
    assert report.foliation_character == -1


def test_p4_foliation_symmetry_group():
    report = foliation_symmetry_group("P_IV")
    assert report.order == 6
    assert not report.abelian
    assert report.preserves_foliation
    assert report.symmetric_group_s3


def test_p1_has_no_weyl_group():
    with pytest.raises(ValueError):
        builtin_group("P1")


def test_unknown_generator():
    with pytest.raises(KeyError):
        generator("P2", "s7")


def test_weyl_report_rows():
    report = weyl_report("P2")
    assert report["system"] == "P_II"
    assert {row["generator"] for row in report["generators"]} == {"s1", "pi"}
    assert all(row["backlund"] for row in report["generators"])
    assert "foliation_symmetry" not in report


def test_square_root_extension_is_reported_not_raised():
    action = extend_to_chart(generator("P2", "s1"), builtin_weights("P2"), ChartId.C1)
    assert not action.rational
    assert action.equivariant is None
    with pytest.raises(NonRationalExtensionError):
        extend_to_chart(generator("P2", "s1"), builtin_weights("P2"), ChartId.C1, require_rational=True)
