import pytest
import sympy as sp

from infinity_analysis_system import characteristic_index, find_fixed_points_at_infinity
from initial_condition_space_system import (
    boutroux_soic_atlas, chart_system, deck_action, extended_symplectic_check, painleve_coordinates,
    polynomiality_uniqueness, preblowup_change, rational_two_form_check, soic_atlas, surface_invariants,
    surface_system_regularity, symplectic_factor, transformed_hamiltonian, weighted_blowup,
)
from newton_weight_system import Weights, builtin_ode, builtin_weights
from orbifold_chart_system import ChartId, all_charts


def _p1_pole():
    ode, w = builtin_ode("P1"), builtin_weights("P1")
    charts = all_charts(ode, w)
    fp = next(p for p in find_fixed_points_at_infinity(charts) if p.is_movable)
    return charts, fp


def test_p1_painleve_coordinates():
    maps = painleve_coordinates("P1")
    assert [m.label for m in maps] == ["upper", "lower"]
    upper = maps[0]
    assert upper.sign_branch == 1
    assert upper.point[0] == -2
    assert upper.cover_order == 2
    assert upper.target_variables == ("u", "w", "z")
    assert upper.forward["y"] == sp.Symbol("w") ** -2
    assert upper.is_identity_on_cover()
    assert upper.to_dict()["coordinates"] == "painleve"


def test_deck_action_rotates_the_cover():
    upper = painleve_coordinates("P1")[0]
    w = sp.Symbol("w")
    assert sp.simplify(deck_action(upper)[w] + w) == 0


def test_chart_systems_are_polynomial(tag):
    for m in painleve_coordinates(tag):
        system = chart_system(m)
        assert set(system) == {"u", "w"}
        for expr in system.values():
            assert sp.fraction(sp.together(expr))[1].free_symbols == set()


def test_symplectic_factor_is_constant():
    for m in painleve_coordinates("P1"):
        assert symplectic_factor(m).factor == -2
    p4 = painleve_coordinates("P4")[0]
    assert p4.chart is ChartId.C1
    factor = symplectic_factor(p4)
    assert factor.factor == 1
    assert factor.in_orientation("dy^dx") == -1
    with pytest.raises(ValueError):
        factor.in_orientation("dz^dx")


def test_extended_form_identity(tag):
    for m in painleve_coordinates(tag):
        check = extended_symplectic_check(m)
        assert check.holds, check.residuals
        assert check


def test_wrong_chart_hamiltonian_breaks_the_identity():
    m = painleve_coordinates("P1")[0]
    H_tilde = transformed_hamiltonian(m)
    assert not extended_symplectic_check(m, H_tilde=H_tilde + sp.Symbol("u"))


def test_soic_atlas_contents(tag):
    atlas = soic_atlas(tag)
    assert atlas.coordinates == "painleve"
    assert len(atlas.charts) == len(painleve_coordinates(tag))
    data = atlas.to_dict()
    assert data["base_variables"] == ["x", "y", "z"]
    assert all(chart["hamiltonian"] is not None for chart in data["charts"])


def test_boutroux_atlas_allows_poles_only_in_e3():
    atlas = boutroux_soic_atlas("P1")
    assert atlas.coordinates == "boutroux"
    assert len(atlas.charts) == 2
    assert all(chart.pole_order >= 0 for chart in atlas.charts)


def test_preblowup_and_weighted_blowup():
    charts, fp = _p1_pole()
    pre = preblowup_change(charts[fp.chart], fp)
    assert tuple(int(l) for l in pre.index) == (6, 4, 5)
    system = weighted_blowup(pre, chart=3)
    assert system.independent == "v3"
    assert set(system.rhs) == {"u3", "w3"}
    assert system.exceptional == "w3"


def test_weighted_blowup_arguments():
    charts, fp = _p1_pole()
    pre = preblowup_change(charts[fp.chart], fp)
    with pytest.raises(ValueError):
        weighted_blowup(pre, chart=4)
    with pytest.raises(ValueError):
        weighted_blowup(pre.field)
    with pytest.raises(ValueError):
        preblowup_change(charts[ChartId.C3], fp)


def test_p1_quotient_surface():
    model = surface_invariants("P_I")
    assert model.relation_holds
    assert model.invariant
    assert set(model.generators) == {"U", "V", "W"}
    assert model.to_dict()["relation"].endswith("= 0")


def test_quotient_surface_only_for_p1():
    with pytest.raises(ValueError):
        surface_invariants("P2")


def test_surface_system_is_regular_after_reduction():
    assert surface_system_regularity("P_I").regular


def test_two_form_rationality():
    charts, fp = _p1_pole()
    idx = characteristic_index(charts[fp.chart], fp)
    report = rational_two_form_check(Weights(3, 2, 4, 5), idx, builtin_ode("P1").hamiltonian)
    assert report.holds
    assert report.index_ratio_integer
    assert not rational_two_form_check(Weights(1, 1, 1, 3)).weights_divisible


def test_polynomiality_determines_p1():
    result = polynomiality_uniqueness("P1")
    assert result.unique
    assert result.matches_builtin
    assert result.builtin_satisfies


@pytest.mark.slow
def test_builtin_p2_satisfies_polynomiality_equations():
    assert polynomiality_uniqueness("P2").builtin_satisfies


def test_p4_blowup_points_resolve_in_their_configured_charts():
    maps = painleve_coordinates("P4")
    assert [m.label for m in maps] == ["i", "ii", "iii"]
    assert [m.chart for m in maps] == [ChartId.C1, ChartId.C1, ChartId.C2]
    assert soic_atlas("P4").to_dict()["base_variables"] == ["x", "y", "z"]
