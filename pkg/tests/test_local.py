import pytest
import sympy as sp

from infinity_analysis_system import (
    FAST_SLOW_MODELS, FixedPointKind, Resonance, characteristic_index, check_poincare_conditions, coefficient_filter,
    fastslow_blowup_limit, find_fixed_points_at_infinity, index_properties, local_integrals, poincare_linearize,
    riccati_linearization, singular_normal_form,
)
from newton_weight_system import builtin_ode, builtin_weights
from orbifold_chart_system import ChartId, all_charts, to_chart
from painleve_config import load_builtin_system


def _charts(tag):
    return all_charts(builtin_ode(tag), builtin_weights(tag))


def _movable(tag):
    return [p for p in find_fixed_points_at_infinity(_charts(tag)) if p.is_movable]


def test_p1_has_one_movable_pole_point():
    movable = _movable("P1")
    assert len(movable) == 1
    fp = movable[0]
    assert fp.chart is ChartId.C2
    assert {int(c[0]) for c in fp.lifts(ChartId.C2)} == {2, -2}
    assert fp.to_dict()["classification"] == "movable_pole"


def test_movable_points_match_balance_count(tag):
    assert len(_movable(tag)) == load_builtin_system(tag).blowup_charts


def test_irregular_points_sit_off_the_pole_locus():
    records = find_fixed_points_at_infinity(_charts("P1"))
    irregular = [r for r in records if r.classification is FixedPointKind.IRREGULAR_INFINITY]
    assert irregular
    assert all(not r.is_movable for r in irregular)
    # movable points are listed first
    assert records[0].is_movable


def test_non_infinity_charts_are_ignored():
    original = to_chart(builtin_ode("P1"), builtin_weights("P1"), ChartId.ORIG)
    assert find_fixed_points_at_infinity([original]) == []
    mixed = find_fixed_points_at_infinity([original, *_charts("P1").values()])
    assert len(mixed) == len(find_fixed_points_at_infinity(_charts("P1")))


@pytest.mark.parametrize("tag, expected", [("P1", (6, 4, 5)), ("P2", (4, 2, 3)), ("P4", (3, 1, 2))])
def test_characteristic_indices(tag, expected):
    props = index_properties(tag)
    assert tuple(int(l) for l in props.eigenvalues) == expected
    assert props.kovalevskaya == expected[0]
    assert props.hamiltonian_degree == expected[0]


def test_index_properties_hold(tag):
    props = index_properties(tag)
    assert props.all_hold, props.checks


def test_index_needs_three_coordinates():
    with pytest.raises(ValueError):
        characteristic_index(_charts("P1")[ChartId.C2], (2, 0))


def test_p1_index_is_nonresonant_in_poincare_domain():
    fp = _movable("P1")[0]
    report = check_poincare_conditions(characteristic_index(_charts("P1")[fp.chart], fp))
    assert report.nonresonant
    assert report.poincare_domain


def test_p2_index_has_a_resonance():
    fp = _movable("P2")[0]
    report = check_poincare_conditions(characteristic_index(_charts("P2")[fp.chart], fp))
    assert not report.nonresonant
    assert Resonance((0, 2, 0), 0) in report.resonances
    assert Resonance((0, 2, 0), 0).monomial(("X2", "Z2", "e2")) == "Z2^2"


def test_p1_linearization_and_integrals():
    fp = _movable("P1")[0]
    vf = _charts("P1")[fp.chart]
    lin = poincare_linearize(vf, fp, 3)
    assert lin.order == 3
    assert lin.coords == fp.coords
    rows = lin.linear_system()
    assert len(rows) == 3
    integrals = local_integrals(lin)
    assert integrals.unit_variable == "y"
    assert integrals.unit_weight == 2
    assert not integrals.C1.is_zero()
    assert not integrals.C2.is_zero()


def test_linearization_order_must_be_positive():
    fp = _movable("P1")[0]
    with pytest.raises(ValueError):
        poincare_linearize(_charts("P1")[fp.chart], fp, 0)


def test_singular_normal_form_uses_unit_variable():
    nf = singular_normal_form("P1")
    assert nf.chart is ChartId.C2
    assert nf.unit_variable == "yt"
    assert set(nf.to_text()) == {"xt", "yt"}


def test_coefficient_filter_survivors():
    result = coefficient_filter(12)
    assert set(result.survivors) == {"a100", "b0", "p020", "p001", "q100"}
    c = sp.Symbol("a100") / sp.Symbol("b0")
    assert sp.simplify(result.family["c"] - c) == 0
    x = sp.Symbol("x")
    assert sp.simplify(result.g - c * x) == 0
    assert set(result.rejected_cases) == {"I", "M>M', N<=N'", "M<=M', N>N'", "II-a"}
    assert "II-b" not in result.rejected_cases
    assert not result.excluded_cases
    y, z = sp.symbols("y z")
    assert sp.simplify(result.f - (result.family["a"] * y ** 2 + result.family["b"] * z)) == 0


def test_coefficient_filter_bound():
    with pytest.raises(ValueError):
        coefficient_filter(4)


def test_saddle_node_limit_is_riccati():
    limit = fastslow_blowup_limit("saddle_node")
    X, Z = sp.symbols("X Z")
    assert limit.variables == ("X",)
    assert sp.simplify(limit.rhs["X"] - (X ** 2 + Z)) == 0
    assert limit.leading_power == 1


def test_riccati_limit_linearizes_to_airy():
    Z = sp.Symbol("Z")
    u = sp.Function("u")(Z)
    linear = riccati_linearization("saddle-node")
    assert sp.simplify(linear - (sp.diff(u, Z, 2) + Z * u)) == 0


@pytest.mark.parametrize("kind", sorted(FAST_SLOW_MODELS))
def test_fast_slow_limits_are_finite(kind):
    limit = fastslow_blowup_limit(kind)
    assert limit.leading_power == 1
    for expr in limit.rhs.values():
        assert not expr.has(sp.nan, sp.zoo)


def test_transcritical_and_bogdanov_takens_limits():
    X, Y, Z = sp.symbols("X Y Z")
    assert sp.simplify(fastslow_blowup_limit("transcritical").rhs["X"] - (X ** 2 + Z * X)) == 0
    bt = fastslow_blowup_limit("BT")
    assert sp.simplify(bt.rhs["X"] - (Y ** 2 + Z)) == 0
    assert bt.rhs["Y"] == X


def test_unknown_fast_slow_model():
    with pytest.raises(ValueError):
        fastslow_blowup_limit("pitchfork")


def test_lifts_collect_equivalent_points_in_other_charts():
    movable = _movable("P4")
    assert len(movable) == 3
    shared = [p for p in movable if (1, 0, 0) in p.lifts(ChartId.C1) and (1, 0, 0) in p.lifts(ChartId.C2)]
    assert len(shared) == 1
    assert shared[0].lifts(ChartId.C3) == []
