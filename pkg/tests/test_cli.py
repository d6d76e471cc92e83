import json

import jsonschema
import pytest

from master_controller import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, PainleveController, build_parser, main
from painleve_config import load_report_schema


def _run(capsys, tmp_path, *argv):
    code = main(["--log-dir", str(tmp_path / "logs"), *argv])
    return code, json.loads(capsys.readouterr().out)


def test_analyze_builtin_p1(capsys, tmp_path):
    code, report = _run(capsys, tmp_path, "analyze", "--system", "P1", "--output", str(tmp_path / "p1.json"))
    assert code == EXIT_OK
    assert report["weights"] == [3, 2, 4, 5]
    assert report["kovalevskaya"]["kappa"] == 6
    assert all(report["checks"].values())
    assert "note" in report["weyl"]
    assert json.loads((tmp_path / "p1.json").read_text(encoding="utf-8")) == report
    assert (tmp_path / "logs" / "painleve.log").exists()


def test_text_input_matches_builtin(capsys, tmp_path):
    _, builtin = _run(capsys, tmp_path, "analyze", "--system", "P1")
    _, text = _run(capsys, tmp_path, "analyze", "--f", "6*y^2+z", "--g", "x")
    assert text == builtin


@pytest.mark.parametrize("tag", [
    "P1",
    pytest.param("P2", marks=pytest.mark.slow),
    pytest.param("P4", marks=pytest.mark.slow),
])
def test_analyze_reports_match_the_schema(capsys, tmp_path, tag):
    _, report = _run(capsys, tmp_path, "analyze", "--system", tag)
    jsonschema.validate(instance=report, schema=load_report_schema())


def test_schema_rejects_a_report_without_weights(capsys, tmp_path):
    _, report = _run(capsys, tmp_path, "analyze", "--system", "P1")
    del report["weights"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(instance=report, schema=load_report_schema())
    with pytest.raises(jsonschema.ValidationError):
        PainleveController(tmp_path / "logs").validate(report)


def test_chart_report(capsys, tmp_path):
    code, report = _run(capsys, tmp_path, "chart", "--system", "P1", "--chart", "c3")
    assert code == EXIT_OK
    assert report["orbifold_action_holds"]


def test_missing_system_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["--log-dir", str(tmp_path), "weyl"])
    assert info.value.code == EXIT_USAGE


def test_malformed_initial_condition(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["--log-dir", str(tmp_path), "integrate", "--system", "P1", "--init", "1,2,3", "--to", "1"])
    assert info.value.code == EXIT_USAGE


def test_integrate_needs_parameter_values(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["--log-dir", str(tmp_path), "integrate", "--system", "P2", "--init", "0,0", "--to", "1"])
    assert info.value.code == EXIT_USAGE


def test_parser_reads_complex_waypoints():
    args = build_parser().parse_args(["integrate", "--system", "P2", "--init", "0,1+0.5i", "--to", "2-1i",
                                      "--via", "1i", "--alpha", "1/2"])
    assert args.init == (0j, 1 + 0.5j)
    assert args.end == 2 - 1j
    assert args.via == [1j]
    assert args.alpha.numerator == 1 and args.alpha.denominator == 2


def test_weyl_for_p1_is_a_note(capsys, tmp_path):
    code, report = _run(capsys, tmp_path, "weyl", "--system", "P1")
    assert code == EXIT_OK
    assert report["system"] == "P_I"
    assert "note" in report


def test_weyl_for_p4(capsys, tmp_path):
    code, report = _run(capsys, tmp_path, "weyl", "--system", "P4")
    assert code == EXIT_OK
    assert report["foliation_symmetry"]["order"] == 6


def test_levels_without_values_writes_nothing(capsys, tmp_path):
    out = tmp_path / "levels.csv"
    code, report = _run(capsys, tmp_path, "levels", "--system", "P4", "--c", "--output", str(out))
    assert code == EXIT_OK
    assert report["levels"] == []
    assert not out.exists()


def test_levels_writes_csv(capsys, tmp_path):
    out = tmp_path / "levels.csv"
    code, report = _run(capsys, tmp_path, "levels", "--system", "P4", "--c", "0", "--resolution", "60",
                        "--output", str(out))
    assert code == EXIT_OK
    assert report["levels"][0]["points"] > 0
    assert out.exists()


def test_integrate_writes_trajectory_and_poles(capsys, tmp_path):
    code, summary = _run(capsys, tmp_path, "integrate", "--system", "P1", "--init", "0,0", "--to", "4",
                         "--output-dir", str(tmp_path / "run"))
    assert code == EXIT_OK
    assert summary["complete"]
    assert summary["poles"]
    assert (tmp_path / "run" / "trajectory.csv").exists()
    poles = json.loads((tmp_path / "run" / "poles.json").read_text(encoding="utf-8"))
    assert len(poles) == len(summary["poles"])


def test_exit_codes_are_distinct():
    assert len({EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE}) == 3
