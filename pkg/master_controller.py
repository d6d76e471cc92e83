#!/usr/bin/env python3
"""
Painleve Master Controller
가중 사영 공간 분석 파이프라인과 수치 적분을 묶는 명령행 도구
"""

import sys
import json
import logging
import argparse
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Any, Sequence, Tuple

import jsonschema
import sympy as sp

from laurent_algebra_system import LaurentPoly, LaurentAlgebraError
from newton_weight_system import (
    PlanarODE, NewtonFaceError, builtin_ode, check_perturbation_lower_order,
    check_quasi_homogeneous, check_zs_invariance, detect_weights,
)
from orbifold_chart_system import (
    INFINITY_CHARTS, all_charts, chart_id, infinity_restriction, nonautonomous_rhs, orbifold_action_check,
    to_chart,
)
from laurent_series_system import kovalevskaya_exponent, laurent_solve, leading_balances, residual_valuations
from infinity_analysis_system import (
    characteristic_index, check_poincare_conditions, find_fixed_points_at_infinity, index_properties,
    poincare_linearize, resonant_terms_present,
)
from initial_condition_space_system import extended_symplectic_check, soic_atlas
from weyl_symmetry_system import weyl_report
from painleve_dynamics_system import (
    IntegratorOptions, PathSpec, integrate_with_switching, level_set_sampler, level_sets_to_csv,
    pole_events_to_json, trajectory_to_csv,
)
from painleve_config import (
    builtin_tags, load_builtin_system, load_report_schema, load_system_config, normalize_tag, serialize_value,
    setup_logging,
)

logger = logging.getLogger('painleve.controller')

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
PARAMETER_FLAGS = ("alpha", "theta", "kappa")


class PainleveController:
    """서브커맨드마다 리포트 딕셔너리와 종료 코드를 만든다"""

    def __init__(self, log_dir: Optional[Path] = None):
        setup_logging(log_dir)
        self.schema = load_report_schema()
        self.schema_version = str(load_system_config()["system_config"].get("schema_version", "1"))

    def log_action(self, action: str, details: str = ""):
        logger.info(f"🎯 {action}: {details}")

    # ---- input ----------------------------------------------------------

    def resolve_system(self, tag: Optional[str] = None, f: Optional[str] = None,
                       g: Optional[str] = None) -> Tuple[PlanarODE, Optional[str]]:
        """내장 태그 또는 f, g 텍스트; 내장 시스템과 같으면 그 태그를 돌려준다"""
        if tag is not None:
            key = normalize_tag(tag)
            return builtin_ode(key), key
        if f is None or g is None:
            raise ValueError("give either --system or both --f and --g")
        ode = PlanarODE(LaurentPoly.parse(f), LaurentPoly.parse(g))
        for key in builtin_tags():
            known = builtin_ode(key)
            if known.f == ode.f and known.g == ode.g:
                return known, key
        return ode, None

    # ---- analyze --------------------------------------------------------

    def analyze(self, ode: PlanarODE, tag: Optional[str], order: Optional[int] = None) -> Dict[str, Any]:
        """가중치 -> 차트 -> 고정점 -> 지수 -> 급수 -> 아틀라스 -> 바이엘 검증"""
        w = detect_weights(ode)
        checks: Dict[str, bool] = {
            "quasi_homogeneous": check_quasi_homogeneous(ode.principal_part(w), w),
            "perturbation_lower_order": check_perturbation_lower_order(ode.perturbation(w), w),
            "zs_invariant": check_zs_invariance(ode, w),
        }
        charts = all_charts(ode, w)
        chart_report = {}
        for chart, vf in charts.items():
            checks[f"orbifold_action_{chart.value}"] = orbifold_action_check(vf)
            restriction = infinity_restriction(vf)
            chart_report[chart.value] = {
                "equations": vf.to_text(),
                "infinity_set": {v: c.to_text() for v, c in zip(restriction.variables, restriction.components)},
            }

        records = find_fixed_points_at_infinity(charts)
        indices = []
        for record in records:
            if record.is_movable:
                idx = characteristic_index(charts[record.chart], record)
                indices.append(idx.to_dict())

        series = []
        kappas = []
        for balance in leading_balances(ode, w):
            sol = laurent_solve(ode, w, balance, order)
            kappa = kovalevskaya_exponent(sol)
            kappas.append(kappa)
            series.append({
                "balance": [sp.sstr(b) for b in balance],
                "kovalevskaya": kappa,
                "free_parameters": [s.name for s in sol.free_symbols],
                "A": [sp.sstr(c) for c in sol.A],
                "B": [sp.sstr(c) for c in sol.B],
            })

        report: Dict[str, Any] = {
            "schema_version": self.schema_version,
            "system": {"name": ode.name, "f": ode.f.to_text(), "g": ode.g.to_text()},
            "weights": list(w.as_tuple()),
            "charts": chart_report,
            "fixed_points": [r.to_dict() for r in records],
            "characteristic_indices": indices,
            "kovalevskaya": {
                "exponents": kappas,
                "kappa": None if not kappas or kappas[0] is None else kappas[0],
            },
            "series": series,
            "atlas": None,
            "weyl": None,
            "checks": {},
        }
        if tag is not None:
            properties = index_properties(tag)
            checks.update({f"index_{k}": v for k, v in properties.checks.items()})
            atlas = soic_atlas(tag)
            for chart in atlas.charts:
                checks[f"extended_form_{chart.chart_map.label}"] = \
                    extended_symplectic_check(chart.chart_map).holds
            report["atlas"] = atlas.to_dict()
            weyl = self.weyl(tag)
            report["weyl"] = weyl
            if "generators" in weyl:
                checks["weyl_backlund"] = all(row["backlund"] for row in weyl["generators"])
        report["checks"] = checks
        self.validate(report)
        self.log_action("ANALYZE", f"{ode.name} 검사 {sum(checks.values())}/{len(checks)} 통과")
        return report

    def validate(self, report: Dict[str, Any]):
        jsonschema.validate(instance=json.loads(json.dumps(serialize_value(report))), schema=self.schema)

    # ---- smaller reports ------------------------------------------------

    def chart(self, ode: PlanarODE, chart: str) -> Dict[str, Any]:
        w = detect_weights(ode)
        vf = to_chart(ode, w, chart_id(chart))
        report = {"system": ode.name, "chart": vf.chart.value, "weights": list(w.as_tuple()),
                  "variables": list(vf.variables), "equations": vf.to_text(),
                  "orbifold_order": vf.orbifold_order,
                  "orbifold_action_holds": orbifold_action_check(vf)}
        if vf.chart in INFINITY_CHARTS:
            restriction = infinity_restriction(vf)
            report["infinity_set"] = {v: c.to_text() for v, c in zip(restriction.variables, restriction.components)}
            report["nonautonomous"] = {v: str(r.to_expr()) for v, r in zip(vf.variables[:2], nonautonomous_rhs(vf))}
        return report

    def laurent(self, ode: PlanarODE, order: Optional[int] = None) -> Dict[str, Any]:
        w = detect_weights(ode)
        out = []
        for balance in leading_balances(ode, w):
            sol = laurent_solve(ode, w, balance, order)
            out.append({"balance": [sp.sstr(b) for b in balance], "kovalevskaya": kovalevskaya_exponent(sol),
                        "A": [sp.sstr(c) for c in sol.A], "B": [sp.sstr(c) for c in sol.B],
                        "residual_valuations": list(residual_valuations(ode, sol))})
        return {"system": ode.name, "weights": list(w.as_tuple()), "solutions": out}

    def indices(self, ode: PlanarODE, tag: Optional[str]) -> Dict[str, Any]:
        w = detect_weights(ode)
        charts = all_charts(ode, w)
        rows = []
        for record in find_fixed_points_at_infinity(charts):
            row = record.to_dict()
            if record.is_movable:
                idx = characteristic_index(charts[record.chart], record)
                row["index"] = idx.to_dict()
                poincare = check_poincare_conditions(idx)
                row["poincare_domain"] = poincare.poincare_domain
                row["nonresonant"] = poincare.nonresonant
            rows.append(row)
        report = {"system": ode.name, "weights": list(w.as_tuple()), "fixed_points": rows}
        if tag is not None:
            properties = index_properties(tag)
            report["properties"] = {"kovalevskaya": properties.kovalevskaya,
                                    "hamiltonian_degree": properties.hamiltonian_degree,
                                    "checks": properties.checks}
        return report

    def linearize(self, ode: PlanarODE, order: int) -> Dict[str, Any]:
        w = detect_weights(ode)
        charts = all_charts(ode, w)
        rows = []
        for record in find_fixed_points_at_infinity(charts):
            if not record.is_movable:
                continue
            vf = charts[record.chart]
            idx = characteristic_index(vf, record)
            poincare = check_poincare_conditions(idx)
            lin = poincare_linearize(vf, record, order)
            rows.append({
                "chart": record.chart.value,
                "coords": [sp.sstr(c) for c in record.coords],
                "order": lin.order,
                "phi1": lin.phi1.to_text(),
                "phi2": lin.phi2.to_text(),
                "resonances": [r.monomial(lin.variables) for r in poincare.resonances],
                "resonant_terms_present": resonant_terms_present(vf, record, poincare.resonances),
            })
        return {"system": ode.name, "linearizations": rows}

    def blowup(self, tag: str) -> Tuple[Dict[str, Any], bool]:
        atlas = soic_atlas(tag)
        report = atlas.to_dict()
        checks = {c.chart_map.label: extended_symplectic_check(c.chart_map).holds for c in atlas.charts}
        report["extended_form_checks"] = checks
        return report, all(checks.values())

    def weyl(self, tag: str) -> Dict[str, Any]:
        try:
            return weyl_report(tag)
        except ValueError as e:
            return {"system": load_builtin_system(tag).name, "note": str(e)}

    # ---- numerics -------------------------------------------------------

    def integrate(self, tag: str, parameters: Dict[str, Fraction], init: Sequence[complex],
                  path: PathSpec, opts: IntegratorOptions, output_dir: Path) -> Dict[str, Any]:
        traj = integrate_with_switching(tag, parameters, init, path, opts)
        csv_path = trajectory_to_csv(traj, Path(output_dir) / "trajectory.csv")
        json_path = Path(output_dir) / "poles.json"
        pole_events_to_json(traj.poles, json_path)
        summary = traj.summary()
        summary["files"] = {"trajectory": str(csv_path), "poles": str(json_path)}
        self.log_action("INTEGRATE", f"{traj.system} 극 {len(traj.poles)}개, 파일 {csv_path}")
        return summary

    def levels(self, tag: str, c_values: Sequence[float], window: Sequence[float], resolution: int,
               output: Path) -> Dict[str, Any]:
        if not c_values:
            return {"system": load_builtin_system(tag).name, "levels": [], "files": {}}
        levels = level_set_sampler(tag, c_values, tuple(window), resolution)
        path = level_sets_to_csv(levels, output)
        return {"system": load_builtin_system(tag).name,
                "levels": [{"level": lv.level, "components": len(lv.polylines), "points": lv.points}
                           for lv in levels],
                "files": {"levels": str(path)}}


# ---- argument parsing ----------------------------------------------------

def _complex(text: str) -> complex:
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def _complex_pair(text: str) -> Tuple[complex, complex]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    return _complex(parts[0]), _complex(parts[1])


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}")


def _add_system_flags(p: argparse.ArgumentParser, allow_text: bool = True):
    p.add_argument('--system', help='Builtin system tag (P1, P2, P4)')
    if allow_text:
        p.add_argument('--f', help="x' as polynomial text, e.g. '6*y^2+z'")
        p.add_argument('--g', help="y' as polynomial text, e.g. 'x'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Painleve orbifold toolkit')
    parser.add_argument('--log-dir', type=Path, help='Directory for painleve.log')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('analyze', help='Full pipeline report (JSON)')
    _add_system_flags(p)
    p.add_argument('--order', type=int, help='Series truncation index')
    p.add_argument('--output', type=Path, help='Write the report to this file')

    p = sub.add_parser('chart', help='Chart equations')
    _add_system_flags(p)
    p.add_argument('--chart', default='c3', choices=['orig', 'c1', 'c2', 'c3'])

    p = sub.add_parser('laurent', help='Formal Laurent solutions')
    _add_system_flags(p)
    p.add_argument('--order', type=int)

    p = sub.add_parser('indices', help='Fixed points at infinity and characteristic indices')
    _add_system_flags(p)

    p = sub.add_parser('linearize', help='Truncated Poincare linearization')
    _add_system_flags(p)
    p.add_argument('--order', type=int, default=6)

    p = sub.add_parser('blowup', help='Space-of-initial-conditions atlas')
    _add_system_flags(p, allow_text=False)

    p = sub.add_parser('weyl', help='Backlund transformation verification table')
    _add_system_flags(p, allow_text=False)

    p = sub.add_parser('integrate', help='Integrate through poles along a complex path')
    _add_system_flags(p, allow_text=False)
    p.add_argument('--init', type=_complex_pair, required=True, help='x0,y0')
    p.add_argument('--from', dest='start', type=_complex, default=0j)
    p.add_argument('--to', dest='end', type=_complex, required=True)
    p.add_argument('--via', type=_complex, nargs='*', default=[], help='Intermediate waypoints')
    for name in PARAMETER_FLAGS:
        p.add_argument(f'--{name}', type=_rational)
    p.add_argument('--rtol', type=float)
    p.add_argument('--atol', type=float)
    p.add_argument('--output-dir', type=Path, default=Path('output'))

    p = sub.add_parser('levels', help='Level sets of the infinity-set Hamiltonian (CSV)')
    _add_system_flags(p, allow_text=False)
    p.add_argument('--c', type=float, nargs='*', default=[])
    p.add_argument('--window', type=float, nargs=4, default=[-3.0, 3.0, -3.0, 3.0],
                   metavar=('XMIN', 'XMAX', 'YMIN', 'YMAX'))
    p.add_argument('--resolution', type=int, default=200)
    p.add_argument('--output', type=Path, default=Path('output') / 'levels.csv')
    return parser


def _emit(report: Dict[str, Any], output: Optional[Path] = None):
    text = json.dumps(serialize_value(report), indent=2)
    if output is not None:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text + "\n", encoding='utf-8')
    print(text)


def main(argv: Optional[List[str]] = None) -> int:
    """마스터 컨트롤러 메인 함수"""
    parser = build_parser()
    args = parser.parse_args(argv)
    controller = PainleveController(args.log_dir)

    needs_tag = args.command in ('blowup', 'weyl', 'integrate', 'levels')
    if needs_tag and not args.system:
        parser.error(f"{args.command} needs --system")
    try:
        ode, tag = controller.resolve_system(args.system, getattr(args, 'f', None), getattr(args, 'g', None))
    except (LaurentAlgebraError, NewtonFaceError, ValueError) as e:
        parser.error(str(e))

    try:
        if args.command == 'analyze':
            report = controller.analyze(ode, tag, args.order)
            _emit(report, args.output)
            return EXIT_OK if all(report["checks"].values()) else EXIT_CHECK_FAILED
        if args.command == 'chart':
            report = controller.chart(ode, args.chart)
            _emit(report)
            return EXIT_OK if report["orbifold_action_holds"] else EXIT_CHECK_FAILED
        if args.command == 'laurent':
            _emit(controller.laurent(ode, args.order))
            return EXIT_OK
        if args.command == 'indices':
            report = controller.indices(ode, tag)
            _emit(report)
            ok = all(report.get("properties", {}).get("checks", {}).values())
            return EXIT_OK if ok else EXIT_CHECK_FAILED
        if args.command == 'linearize':
            _emit(controller.linearize(ode, args.order))
            return EXIT_OK
        if args.command == 'blowup':
            report, ok = controller.blowup(tag)
            _emit(report)
            return EXIT_OK if ok else EXIT_CHECK_FAILED
        if args.command == 'weyl':
            report = controller.weyl(tag)
            _emit(report)
            ok = all(row["backlund"] for row in report.get("generators", []))
            return EXIT_OK if ok else EXIT_CHECK_FAILED
        if args.command == 'integrate':
            parameters = {k: getattr(args, k) for k in PARAMETER_FLAGS
                          if getattr(args, k) is not None and k in ode.parameters}
            missing = sorted(set(ode.parameters) - set(parameters))
            if missing:
                parser.error(f"{ode.name} needs values for {', '.join('--' + m for m in missing)}")
            try:
                path = PathSpec((args.start, *args.via, args.end))
                opts = IntegratorOptions.from_config(rtol=args.rtol, atol=args.atol)
            except ValueError as e:
                parser.error(str(e))
            _emit(controller.integrate(tag, parameters, args.init, path, opts, args.output_dir))
            return EXIT_OK
        if args.command == 'levels':
            _emit(controller.levels(tag, args.c, args.window, args.resolution, args.output))
            return EXIT_OK
    except jsonschema.ValidationError as e:
        print(f"report does not match the schema: {e.message}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except RuntimeError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
