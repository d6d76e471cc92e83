import csv
import json

import numpy as np
import pytest

from infinity_analysis_system import find_fixed_points_at_infinity, poincare_linearize
from newton_weight_system import builtin_ode, builtin_weights
from orbifold_chart_system import all_charts
from painleve_dynamics_system import (
    BASE_CHART, CSV_COLUMNS, IllConditionedFitError, IntegratorOptions, NumericAtlas, PathSpec, StepUnderflowError,
    boutroux_center_path, boutroux_energy_drift, fit_laurent_samples, hamiltonian_z_derivative_check, integrate_complex,
    integrate_with_switching, laurent_refit, level_set_sampler, level_sets_to_csv, local_integral_drift,
    pole_events_to_json, round_trip_error, trajectory_to_csv,
)


@pytest.fixture(scope="module")
def p1_through_poles():
    return integrate_with_switching("P1", {}, (0, 0), PathSpec.line(0, 4))


def test_path_needs_two_distinct_waypoints():
    with pytest.raises(ValueError):
        PathSpec((1,))
    with pytest.raises(ValueError):
        PathSpec((0, 0, 1))


def test_path_arc_length_parametrisation():
    path = PathSpec((0, 3, 3 + 4j))
    assert path.length == pytest.approx(7.0)
    assert path.z_at(5.0) == pytest.approx(3 + 2j)
    assert [leg.s1 for leg in path.legs()] == pytest.approx([3.0, 7.0])
    back = path.reversed()
    assert back.start == path.end
    assert back.end == path.start


def test_integrator_options_validation():
    with pytest.raises(ValueError):
        IntegratorOptions(switch_bound=5.0, back_switch_bound=5.0)
    with pytest.raises(ValueError):
        IntegratorOptions(rtol=0.0)
    opts = IntegratorOptions.from_config(None, rtol=1e-8, atol=None)
    assert opts.rtol == 1e-8
    assert opts.atol == 1e-12
    assert opts.max_events == 64


def test_atlas_needs_parameter_values():
    with pytest.raises(ValueError):
        NumericAtlas("P2")
    with pytest.raises(ValueError):
        integrate_with_switching("P1", {}, (0, 0), PathSpec.line(0, 1), start_chart="c9")


def test_single_chart_integration_fails_at_a_pole():
    with pytest.raises(StepUnderflowError):
        integrate_complex(builtin_ode("P1"), {}, (0, 0), PathSpec.line(0, 4))


def test_p1_poles_are_double_with_boutroux_leading_terms(p1_through_poles):
    traj = p1_through_poles
    assert traj.complete
    assert traj.poles
    assert traj.switch_count() >= 2
    for pole in traj.poles:
        assert pole.order == 2
        assert pole.exponents == (3, 2)
        assert pole.variable == "y"
        assert abs(pole.location.imag) < 1e-8
        assert pole.leading_coefficients[0] == pytest.approx(-2, abs=1e-6)
        assert pole.leading_coefficients[1] == pytest.approx(1, abs=1e-6)


def test_integration_continues_past_the_pole(p1_through_poles):
    traj = p1_through_poles
    assert traj.final_z == pytest.approx(4)
    assert all(np.isfinite(traj.final_state))


def test_p2_poles_are_simple():
    traj = integrate_with_switching("P2", {"alpha": 0.5}, (0, 0), PathSpec.line(0, 5))
    assert traj.poles
    for pole in traj.poles:
        assert pole.order == 1
        assert pole.exponents == (2, 1)
        assert abs(pole.leading_coefficients[1]) == pytest.approx(1, abs=1e-6)


def test_event_budget_stops_integration():
    opts = IntegratorOptions.from_config(None, max_events=0)
    traj = integrate_with_switching("P1", {}, (0, 0), PathSpec.line(0, 4), opts)
    assert not traj.complete
    assert traj.final_chart == BASE_CHART


def test_round_trip_through_poles():
    assert round_trip_error("P1", {}, (0, 0), PathSpec.line(0, 4)) < 1e-8


def test_hamiltonian_changes_by_its_explicit_z_derivative(p1_through_poles):
    check = hamiltonian_z_derivative_check(p1_through_poles)
    assert check.segments_checked >= 2
    assert check.holds(1e-8)


def test_local_integrals_along_the_trajectory(p1_through_poles):
    ode, w = builtin_ode("P1"), builtin_weights("P1")
    charts = all_charts(ode, w)
    fp = next(p for p in find_fixed_points_at_infinity(charts) if p.is_movable)
    lin = poincare_linearize(charts[fp.chart], fp, 6)
    report = local_integral_drift("P1", lin, p1_through_poles)
    assert report.samples > 0
    assert report.max_drift < 1e-6
    quiet = integrate_with_switching("P1", {}, (0, 0), PathSpec.line(0, 0.5))
    with pytest.raises(ValueError):
        local_integral_drift("P1", lin, quiet)


def test_fit_recovers_exact_laurent_polynomial():
    T = 0.2 * np.exp(2j * np.pi * np.arange(16) / 16)
    X = -2 * T ** -3 - T ** 2 / 2
    Y = T ** -2 - T ** 3 / 6
    fit = fit_laurent_samples(T, X, Y, (3, 2), 8)
    assert fit.x[0] == pytest.approx(-2)
    assert fit.x[5] == pytest.approx(-0.5)
    assert fit.y[0] == pytest.approx(1)
    assert fit.y[5] == pytest.approx(-1 / 6)
    assert abs(fit.y[2]) < 1e-9
    assert fit.condition < 10


def test_clustered_samples_are_ill_conditioned():
    T = np.linspace(0.1, 0.1001, 20)
    with pytest.raises(IllConditionedFitError):
        fit_laurent_samples(T, T ** -3, T ** -2, (3, 2), 8)


def test_laurent_refit_matches_exact_series(p1_through_poles):
    pole = p1_through_poles.poles[0]
    refit = laurent_refit(p1_through_poles, pole)
    assert [int(b) for b in refit.balance] == [-2, 1]
    assert refit.fitted.x[0] == pytest.approx(-2, abs=1e-6)
    assert refit.fitted.y[0] == pytest.approx(1, abs=1e-6)
    assert refit.deviation_x[0] < 1e-6
    assert refit.deviation_y[0] < 1e-6
    assert set(refit.to_dict()) >= {"pole", "fitted_x", "exact_y", "condition"}


@pytest.mark.parametrize("tag", ["P1", "P2", "P4"])
def test_boutroux_energy_is_conserved_along_a_complex_path(tag):
    init, path = boutroux_center_path(tag)
    assert path.length == pytest.approx(10.0)
    assert boutroux_energy_drift(tag, init, path) < 1e-9


@pytest.mark.parametrize("tag", ["P1", "P2", "P4"])
def test_boutroux_drift_shrinks_with_tolerance(tag):
    init, path = boutroux_center_path(tag, amplitude=0.1)
    coarse = IntegratorOptions.from_config(None, rtol=1e-6, atol=1e-8, max_step=1.0)
    fine = IntegratorOptions.from_config(None, rtol=1e-11, atol=1e-13, max_step=1.0)
    drift, tight = boutroux_energy_drift(tag, init, path, coarse), boutroux_energy_drift(tag, init, path, fine)
    assert tight < 1e-9
    assert 0.0 < drift and tight < 1e-2 * drift


def test_boutroux_path_needs_positive_length():
    with pytest.raises(ValueError):
        boutroux_center_path("P1", length=0.0)


def test_boutroux_equilibrium_has_no_drift():
    assert boutroux_energy_drift("P4", (0, 0), (0.0, 10.0)) == 0.0


def test_zero_level_of_p4_boutroux_hamiltonian_is_three_lines():
    (level,) = level_set_sampler("P4", [0.0], (-3, 3, -3, 3), resolution=200)
    assert level.points > 0
    for poly in level.polylines:
        X, Y = poly[:, 0], poly[:, 1]
        distance = np.minimum(np.minimum(np.abs(X), np.abs(Y)), np.abs(X - Y - 2) / np.sqrt(2))
        assert float(np.max(distance)) < 0.05


def test_empty_window_gives_empty_level_sets():
    levels = level_set_sampler("P4", [0.0, 1.0], (1, 0, 0, 1))
    assert [lv.level for lv in levels] == [0.0, 1.0]
    assert all(lv.points == 0 for lv in levels)


def test_exports(tmp_path, p1_through_poles):
    csv_path = trajectory_to_csv(p1_through_poles, tmp_path / "out" / "trajectory.csv")
    with open(csv_path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1][3] == BASE_CHART
    assert {r[3] for r in rows[1:]} > {BASE_CHART}

    text = pole_events_to_json(p1_through_poles.poles, tmp_path / "poles.json")
    events = json.loads((tmp_path / "poles.json").read_text(encoding="utf-8"))
    assert events == json.loads(text)
    assert events[0]["order"] == 2

    levels = level_set_sampler("P4", [0.5], (-3, 3, -3, 3), resolution=50)
    level_path = level_sets_to_csv(levels, tmp_path / "levels.csv")
    assert level_path.read_text(encoding="utf-8").splitlines()[0] == "level,component,X,Y"


P4_PARAMETERS = {"theta": 0.3, "kappa": 0.7}
P4_LEADING = ((1, 0), (-1, -1), (0, 1))


def _matches_p4_balance(pole):
    return any(abs(pole.leading_coefficients[0] - a) < 1e-6 and abs(pole.leading_coefficients[1] - b) < 1e-6
               for a, b in P4_LEADING)


def test_p4_integration_crosses_a_simple_pole():
    traj = integrate_with_switching("P4", P4_PARAMETERS, (-5, 0), PathSpec.line(0, 1))
    assert traj.complete
    assert traj.poles
    assert traj.final_z == pytest.approx(1)
    for pole in traj.poles:
        assert pole.order == 1
        assert pole.exponents == (1, 1)
        assert _matches_p4_balance(pole)
    refit = laurent_refit(traj, traj.poles[0])
    assert refit.deviation_x[0] < 1e-6
    assert refit.deviation_y[0] < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("tag, parameters, order, length", [
    ("P1", {}, 2, 4),
    ("P2", {"alpha": 0.5}, 1, 5),
    ("P4", P4_PARAMETERS, 1, 4),
])
def test_random_starts_keep_pole_order(tag, parameters, order, length):
    rng = np.random.default_rng(3)
    total = 0
    for _ in range(20):
        init = rng.normal(size=2) * 0.3
        traj = integrate_with_switching(tag, parameters, init, PathSpec.line(0, length))
        assert traj.complete
        assert all(p.order == order for p in traj.poles)
        if tag == "P4":
            assert all(_matches_p4_balance(p) for p in traj.poles)
        total += len(traj.poles)
    assert total > 0
