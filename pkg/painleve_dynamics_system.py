#!/usr/bin/env python3
"""
Painleve Dynamics System
복소 경로 적분, 블로업 차트 전환을 통한 가동 극 통과, 극 위치 정밀화, 로랑 재적합, 에너지 보존, 등위선 샘플링
"""

import csv
import json
import math
import cmath
import logging
from functools import lru_cache
from pathlib import Path
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Any, Tuple, Callable, Mapping, Sequence, Union

import numpy as np
import sympy as sp
from scipy.integrate import RK45, solve_ivp, simpson
from scipy.optimize import brentq
from skimage import measure

from laurent_algebra_system import parse_expression
from newton_weight_system import PlanarODE, Weights, builtin_ode, builtin_weights
from orbifold_chart_system import (
    ChartId, PlanarField, all_charts, infinity_restriction,
    slot_variables, to_chart,
)
from laurent_series_system import leading_balances, laurent_solve
from infinity_analysis_system import LinearizationData, find_fixed_points_at_infinity, local_integrals
from initial_condition_space_system import BlowupChartMap, ORIGINAL_BASE, chart_system, painleve_coordinates
from painleve_config import load_builtin_system, load_integrator_defaults, normalize_tag, serialize_value

logger = logging.getLogger('painleve.dynamics')

BASE_CHART = "base"
INFINITY_CHART = "infinity"
CSV_COLUMNS = ("arc_param", "re_z", "im_z", "chart", "re_x", "im_x", "re_y", "im_y", "local_error")

_ARC_EPS = 1e-13
_NEWTON_ITERATIONS = 40
_FIT_CONDITION_LIMIT = 1e10


class StepUnderflowError(RuntimeError):
    """특이점 근처에서 스텝 크기 붕괴"""

    def __init__(self, last_state: Any, z: complex, chart: str, message: str = ""):
        self.last_state = np.asarray(last_state)
        self.z = z
        self.chart = chart
        super().__init__(f"step size collapsed in chart {chart} at z = {z:.12g}: {message} "
                         f"(last state {self.last_state.tolist()})")


class UnreducedBlowupStateError(RuntimeError):
    """어떤 블로업 차트도 상태를 유계로 만들지 못함"""

    def __init__(self, state: Any, z: complex, best_norm: float):
        self.state = np.asarray(state)
        self.z = z
        super().__init__(f"unreduced blow-up state at z = {z:.12g}: best chart norm {best_norm:.3g}")


class IrregularPointApproachError(RuntimeError):
    """비정칙 고정점에 너무 가까이 가는 경로 거부"""

    def __init__(self, z: complex, point: Tuple[complex, ...], distance: float):
        self.z = z
        self.point = point
        super().__init__(f"path approaches the irregular point {point} at z = {z:.12g} "
                         f"(distance {distance:.3g}); refusing to continue")


class IllConditionedFitError(RuntimeError):
    """로랑 재적합 행렬 조건수 초과"""

    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"Laurent fit is ill conditioned (condition number {condition:.3g}); "
                         f"use a smaller window or fewer terms")


# ---- paths and options ----------------------------------------------------

@dataclass(frozen=True)
class PathLeg:
    s0: float
    s1: float
    z0: complex
    direction: complex

    def z(self, s: float) -> complex:
        return self.z0 + (s - self.s0) * self.direction


@dataclass(frozen=True)
class PathSpec:
    """복소 z 평면의 꺾은선 경로 (호길이 매개변수)"""
    waypoints: Tuple[complex, ...]

    def __post_init__(self):
        points = tuple(complex(p) for p in self.waypoints)
        object.__setattr__(self, "waypoints", points)
        if len(points) < 2:
            raise ValueError("a path needs at least two waypoints")
        for a, b in zip(points, points[1:]):
            if a == b:
                raise ValueError(f"consecutive waypoints must be distinct, got {a} twice")

    @classmethod
    def line(cls, start: complex, end: complex) -> 'PathSpec':
        return cls((start, end))

    @property
    def start(self) -> complex:
        return self.waypoints[0]

    @property
    def end(self) -> complex:
        return self.waypoints[-1]

    @property
    def length(self) -> float:
        return sum(abs(b - a) for a, b in zip(self.waypoints, self.waypoints[1:]))

    def legs(self) -> List[PathLeg]:
        legs, s = [], 0.0
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            d = abs(b - a)
            legs.append(PathLeg(s, s + d, a, (b - a) / d))
            s += d
        return legs

    def z_at(self, s: float) -> complex:
        for leg in self.legs():
            if s <= leg.s1:
                return leg.z(s)
        return self.end

    def reversed(self) -> 'PathSpec':
        return PathSpec(tuple(reversed(self.waypoints)))


@dataclass(frozen=True)
class IntegratorOptions:
    """적분기 설정 (설정 파일의 integrator 블록)"""
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = 0.05
    switch_bound: float = 10.0
    back_switch_bound: float = 5.0
    max_events: int = 64
    pole_tolerance: float = 1e-12
    irregular_margin: float = 0.05
    reduction_bound: float = 1e4

    def __post_init__(self):
        if not 0 < self.back_switch_bound < self.switch_bound:
            raise ValueError(f"need 0 < back_switch_bound < switch_bound, got "
                             f"{self.back_switch_bound} and {self.switch_bound}")
        if self.rtol <= 0 or self.atol <= 0 or self.max_step <= 0:
            raise ValueError("tolerances and max_step must be positive")

    @classmethod
    def from_config(cls, mapping: Optional[Mapping[str, Any]] = None, **overrides) -> 'IntegratorOptions':
        values = dict(load_integrator_defaults() if mapping is None else mapping)
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = cls.__dataclass_fields__
        kwargs = {k: (int(v) if k == "max_events" else float(v)) for k, v in values.items() if k in known}
        return cls(**kwargs)


# ---- results --------------------------------------------------------------

@dataclass(frozen=True)
class PoleEvent:
    """가동 극 (위치, 위수, 선도 계수, 공명 좌표)"""
    location: complex
    order: int
    leading_coefficients: Tuple[complex, complex]
    exponents: Tuple[int, int]
    free_parameter: complex
    chart: str
    arc_param: float
    path_distance: float
    variable: str = "y"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "location": serialize_value(self.location),
            "order": self.order,
            "variable": self.variable,
            "exponents": list(self.exponents),
            "leading_coefficients": [serialize_value(c) for c in self.leading_coefficients],
            "free_parameter": serialize_value(self.free_parameter),
            "chart": self.chart,
            "arc_param": self.arc_param,
            "path_distance": self.path_distance,
        }


@dataclass
class Segment:
    """한 차트 안에서의 궤적 구간"""
    chart: str
    variables: Tuple[str, str]
    s: List[float] = field(default_factory=list)
    z: List[complex] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)
    dense: List[Tuple[float, float, Any, PathLeg]] = field(default_factory=list)
    junction_error: float = 0.0
    to_base: Optional[Callable[[np.ndarray, complex], np.ndarray]] = None

    def record(self, s: float, z: complex, state: Any, error: float,
               interpolant: Any = None, leg: Optional[PathLeg] = None, s_old: Optional[float] = None):
        if interpolant is not None:
            self.dense.append((s_old, s, interpolant, leg))
        self.s.append(float(s))
        self.z.append(complex(z))
        self.states.append(np.array(state, dtype=complex))
        self.errors.append(float(error))

    def state_at(self, s: float) -> Tuple[complex, np.ndarray]:
        for s0, s1, interp, leg in self.dense:
            if min(s0, s1) - _ARC_EPS <= s <= max(s0, s1) + _ARC_EPS:
                return leg.z(s), np.asarray(interp(s), dtype=complex)
        raise ValueError(f"arc parameter {s} outside segment [{self.s[0]}, {self.s[-1]}]")

    def base_state(self, state: np.ndarray, z: complex) -> np.ndarray:
        return np.asarray(state) if self.to_base is None else self.to_base(state, z)


@dataclass
class Trajectory:
    """차트 구간들과 극 사건들"""
    system: str
    path: PathSpec
    parameters: Dict[str, complex] = field(default_factory=dict)
    segments: List[Segment] = field(default_factory=list)
    poles: List[PoleEvent] = field(default_factory=list)
    complete: bool = True

    def open_segment(self, chart: str, variables: Tuple[str, str], junction: float = 0.0,
                     to_base: Optional[Callable] = None) -> Segment:
        segment = Segment(chart, tuple(variables), junction_error=junction, to_base=to_base)
        self.segments.append(segment)
        return segment

    @property
    def final_chart(self) -> str:
        return self.segments[-1].chart

    @property
    def final_state(self) -> np.ndarray:
        return self.segments[-1].states[-1]

    @property
    def final_z(self) -> complex:
        return self.segments[-1].z[-1]

    def final_base_state(self) -> np.ndarray:
        last = self.segments[-1]
        return last.base_state(last.states[-1], last.z[-1])

    def has_pole_near(self, location: complex, tolerance: float = 1e-8) -> bool:
        return any(abs(p.location - location) < tolerance * max(1.0, abs(location)) for p in self.poles)

    def switch_count(self) -> int:
        return len(self.segments) - 1

    def rows(self):
        for seg in self.segments:
            for s, z, y, err in zip(seg.s, seg.z, seg.states, seg.errors):
                yield s, z, seg.chart, y, err

    def summary(self) -> Dict[str, Any]:
        return {
            "system": self.system,
            "path": [serialize_value(p) for p in self.path.waypoints],
            "segments": [{"chart": s.chart, "samples": len(s.s), "junction_error": s.junction_error}
                         for s in self.segments],
            "poles": [p.to_dict() for p in self.poles],
            "final_chart": self.final_chart,
            "final_state": [serialize_value(complex(v)) for v in self.final_state],
            "complete": self.complete,
        }


# ---- numeric charts -------------------------------------------------------

def _constant_safe(fn: Callable, n: int) -> Callable[..., np.ndarray]:
    def wrapped(*args):
        values = fn(*args)
        return np.array([complex(v) for v in values], dtype=complex) if n > 1 else complex(values)
    return wrapped


def _parameter_subs(parameters: Optional[Mapping[str, Any]]) -> Dict[sp.Symbol, Any]:
    return {sp.Symbol(k): sp.nsimplify(v) if isinstance(v, str) else v for k, v in (parameters or {}).items()}


@dataclass
class NumericChart:
    """수치 차트: d(상태)/dz 와 기저 좌표 사이 변환"""
    label: str
    variables: Tuple[str, str]
    rhs: Callable[[np.ndarray, complex], np.ndarray]
    chart_map: Optional[BlowupChartMap] = None
    lead_slot: int = 0
    unit_slot: int = 1
    lead_weight: int = 0
    order: int = 1
    lead0: complex = 0j
    _lead: Optional[Callable] = None
    _lead_free: Optional[Callable] = None
    _lead_slope: Optional[Callable] = None

    def to_base(self, state: np.ndarray, z: complex) -> np.ndarray:
        u, w = complex(state[0]), complex(state[1])
        out = np.empty(2, dtype=complex)
        if w == 0:
            out[:] = complex(math.inf, 0.0)
            return out
        out[self.lead_slot] = complex(self._lead(u, w, z))
        out[self.unit_slot] = w ** (-self.order)
        return out

    def from_base(self, state: np.ndarray, z: complex) -> List[np.ndarray]:
        """피복 가지마다 (u, w) 후보"""
        unit = complex(state[self.unit_slot])
        lead = complex(state[self.lead_slot])
        if unit == 0:
            return []
        root = unit ** (-1.0 / self.order)
        out = []
        for k in range(self.order):
            w = root * cmath.exp(2j * cmath.pi * k / self.order)
            slope = complex(self._lead_slope(w, z))
            if slope == 0:
                continue
            u = (lead - complex(self._lead_free(w, z))) / slope
            out.append(np.array([u, w], dtype=complex))
        return out


def _base_chart(ode: PlanarODE, parameters: Mapping[str, Any]) -> NumericChart:
    subs = _parameter_subs(parameters)
    x, y, z = sp.symbols(ORIGINAL_BASE)
    fn = sp.lambdify((x, y, z), [ode.f.to_expr().subs(subs), ode.g.to_expr().subs(subs)], "numpy")
    fn = _constant_safe(fn, 2)
    return NumericChart(BASE_CHART, ("x", "y"), lambda state, zv: fn(state[0], state[1], zv))


@lru_cache(maxsize=None)
def _symbolic_atlas(tag: str) -> Tuple[Tuple[BlowupChartMap, Tuple[Tuple[str, sp.Expr], ...]], ...]:
    return tuple((m, tuple(chart_system(m).items())) for m in painleve_coordinates(tag))


def _blowup_chart(m: BlowupChartMap, system: Mapping[str, sp.Expr], w: Weights,
                  parameters: Mapping[str, Any]) -> NumericChart:
    subs = _parameter_subs(parameters)
    a, t, s = m.symbols()
    rhs = sp.lambdify((a, t, s), [system[a.name].subs(subs), system[t.name].subs(subs)], "numpy")
    rhs = _constant_safe(rhs, 2)
    lead_expr = m.forward[m.lead_variable].subs(subs)
    lead_slot = ORIGINAL_BASE.index(m.lead_variable)
    hw = w.homogeneous()
    return NumericChart(
        label=m.label, variables=(a.name, t.name),
        rhs=lambda state, zv: rhs(state[0], state[1], zv),
        chart_map=m, lead_slot=lead_slot, unit_slot=1 - lead_slot,
        lead_weight=hw[lead_slot], order=m.cover_order,
        lead0=complex(sp.N(sp.sympify(m.point[0]).subs(subs))),
        _lead=_constant_safe(sp.lambdify((a, t, s), lead_expr, "numpy"), 1),
        _lead_free=_constant_safe(sp.lambdify((t, s), lead_expr.subs(a, 0), "numpy"), 1),
        _lead_slope=_constant_safe(sp.lambdify((t, s), sp.diff(lead_expr, a), "numpy"), 1),
    )


class NumericAtlas:
    """기저 차트와 파인레베 좌표 차트들의 수치 아틀라스"""

    def __init__(self, tag: str, parameters: Optional[Mapping[str, Any]] = None):
        self.tag = normalize_tag(tag)
        self.ode = builtin_ode(self.tag)
        self.weights = builtin_weights(self.tag)
        self.parameters = dict(parameters or {})
        missing = set(self.ode.parameters) - set(self.parameters)
        if missing:
            raise ValueError(f"{self.ode.name} needs numeric values for {sorted(missing)}")
        self.charts: Dict[str, NumericChart] = {BASE_CHART: _base_chart(self.ode, self.parameters)}
        for m, system in _symbolic_atlas(self.tag):
            self.charts[m.label] = _blowup_chart(m, dict(system), self.weights, self.parameters)

    def __getitem__(self, label: str) -> NumericChart:
        return self.charts[label]

    @property
    def blowup_labels(self) -> List[str]:
        return [k for k in self.charts if k != BASE_CHART]

    def to_base(self, label: str) -> Optional[Callable]:
        return None if label == BASE_CHART else self.charts[label].to_base

    def base_state(self, label: str, state: np.ndarray, z: complex) -> np.ndarray:
        return np.asarray(state) if label == BASE_CHART else self.charts[label].to_base(state, z)

    def enter_chart(self, state: np.ndarray, z: complex, opts: IntegratorOptions) -> Tuple[str, np.ndarray, float]:
        """변환 후 상태 노름이 가장 작은 차트와 가지 선택"""
        best = None
        for label in self.blowup_labels:
            for cand in self.charts[label].from_base(state, z):
                norm = float(np.max(np.abs(cand)))
                if math.isfinite(norm) and (best is None or norm < best[0]):
                    best = (norm, label, cand)
        if best is None or best[0] > opts.reduction_bound:
            self._refuse(state, z, opts, math.inf if best is None else best[0])
        norm, label, cand = best
        back = self.charts[label].to_base(cand, z)
        junction = float(np.max(np.abs(back - state)) / max(1.0, float(np.max(np.abs(state)))))
        return label, cand, junction

    def _refuse(self, state: np.ndarray, z: complex, opts: IntegratorOptions, best_norm: float):
        if z != 0:
            w = self.weights
            irregular = [p for p in find_fixed_points_at_infinity(all_charts(self.ode, w)) if not p.is_movable]
            root = complex(z) ** (-1.0 / w.r)
            for k in range(w.r):
                sigma = root * cmath.exp(2j * cmath.pi * k / w.r)
                lifted = (state[0] * sigma ** w.p, state[1] * sigma ** w.q, sigma ** w.s)
                for record in irregular:
                    for coords in record.lifts(ChartId.C3):
                        point = tuple(complex(sp.N(c)) for c in coords)
                        distance = max(abs(a - b) for a, b in zip(lifted, point))
                        if distance < opts.irregular_margin:
                            raise IrregularPointApproachError(z, point, distance)
        raise UnreducedBlowupStateError(state, z, best_norm)

    def switch_target(self, label: str, state: np.ndarray, z: complex,
                      opts: IntegratorOptions) -> Optional[Tuple[str, np.ndarray, float]]:
        if label == BASE_CHART:
            if float(np.max(np.abs(state))) <= opts.switch_bound:
                return None
            return self.enter_chart(state, z, opts)
        base = self.charts[label].to_base(state, z)
        if np.all(np.isfinite(base)) and float(np.max(np.abs(base))) < opts.back_switch_bound:
            return BASE_CHART, base, 0.0
        return None


# ---- the integrator -------------------------------------------------------

def _arc_rhs(chart: NumericChart, leg: PathLeg) -> Callable[[float, np.ndarray], np.ndarray]:
    return lambda s, state: chart.rhs(state, leg.z(s)) * leg.direction


def _integrate_line(chart: NumericChart, state: np.ndarray, z0: complex, dz: complex,
                    opts: IntegratorOptions) -> np.ndarray:
    """경로 밖 직선 z0 -> z0 + dz 적분 (극 정밀화용)"""
    sol = solve_ivp(lambda tau, y: chart.rhs(y, z0 + tau * dz) * dz, (0.0, 1.0),
                    np.asarray(state, dtype=complex), method="RK45", rtol=opts.rtol, atol=opts.atol)
    if not sol.success:
        raise StepUnderflowError(state, z0, chart.label, sol.message)
    return sol.y[:, -1]


def _closest_approach(chart: NumericChart, interp: Any, leg: PathLeg) -> Callable[[float], float]:
    """d|w|^2/ds 의 절반: 음에서 양으로 바뀌면 |w| 최소"""
    def g(s: float) -> float:
        state = np.asarray(interp(s), dtype=complex)
        dw = chart.rhs(state, leg.z(s))[1] * leg.direction
        return float(np.real(np.conj(state[1]) * dw))
    return g


def refine_pole(chart: NumericChart, state: np.ndarray, z: complex,
                opts: IntegratorOptions) -> Optional[Tuple[complex, np.ndarray]]:
    """w(z) = 0 의 뉴턴 반복 (경로 밖 적분)"""
    state = np.asarray(state, dtype=complex)
    for _ in range(_NEWTON_ITERATIONS):
        dwdz = chart.rhs(state, z)[1]
        if dwdz == 0:
            return None
        dz = -state[1] / dwdz
        if abs(dz) <= opts.pole_tolerance * max(1.0, abs(z)):
            return z, state
        state = _integrate_line(chart, state, z, dz, opts)
        z = z + dz
    return None


def _pole_event(chart: NumericChart, z_star: complex, state: np.ndarray, s: float,
                distance: float) -> PoleEvent:
    slope = chart.rhs(state, z_star)[1]
    coefficients = [0j, 0j]
    exponents = [0, 0]
    coefficients[chart.lead_slot] = chart.lead0 * slope ** (-chart.lead_weight)
    coefficients[chart.unit_slot] = slope ** (-chart.order)
    exponents[chart.lead_slot] = chart.lead_weight
    exponents[chart.unit_slot] = chart.order
    return PoleEvent(
        location=complex(z_star), order=chart.order,
        leading_coefficients=(complex(coefficients[0]), complex(coefficients[1])),
        exponents=(exponents[0], exponents[1]), free_parameter=complex(state[0]),
        chart=chart.label, arc_param=float(s), path_distance=float(distance),
        variable=ORIGINAL_BASE[chart.unit_slot],
    )


def _detect_pole(chart: NumericChart, interp: Any, leg: PathLeg, s_old: float, s_new: float,
                 opts: IntegratorOptions) -> Optional[PoleEvent]:
    g = _closest_approach(chart, interp, leg)
    g0, g1 = g(s_old), g(s_new)
    if not (g0 < 0.0 <= g1):
        return None
    s_c = s_new if g1 == 0.0 else brentq(g, s_old, s_new, xtol=1e-15)
    z_c = leg.z(s_c)
    state = np.asarray(interp(s_c), dtype=complex)
    slope = chart.rhs(state, z_c)[1]
    if slope == 0:
        return None
    reach = 2.0 * abs(state[1]) / abs(slope) + 1e-9
    refined = refine_pole(chart, state, z_c, opts)
    if refined is None:
        return None
    z_star, at_pole = refined
    if abs(z_star - z_c) > reach:
        return None
    return _pole_event(chart, z_star, at_pole, s_c, abs(z_star - z_c))


def _march(atlas_charts: Mapping[str, NumericChart], traj: Trajectory, chart: str, state: np.ndarray,
           opts: IntegratorOptions, switch: Optional[Callable] = None,
           to_base: Optional[Callable[[str], Optional[Callable]]] = None) -> Trajectory:
    to_base = to_base or (lambda label: None)
    segment = traj.open_segment(chart, atlas_charts[chart].variables, to_base=to_base(chart))
    s = 0.0
    first_step = None
    for leg in traj.path.legs():
        if not segment.s:
            segment.record(s, leg.z(s), state, 0.0)
        while leg.s1 - s > _ARC_EPS * max(1.0, leg.s1):
            numeric = atlas_charts[chart]
            h0 = None if first_step is None else min(first_step, leg.s1 - s)
            solver = RK45(_arc_rhs(numeric, leg), s, np.asarray(state, dtype=complex), leg.s1,
                          rtol=opts.rtol, atol=opts.atol, max_step=opts.max_step,
                          first_step=h0 if h0 is None or h0 > 0 else None)
            first_step = None
            target = None
            while solver.status == "running":
                message = solver.step()
                y = np.array(solver.y, dtype=complex)
                if solver.status == "failed" or not np.all(np.isfinite(y)):
                    raise StepUnderflowError(state, leg.z(s), chart, message or "non-finite state")
                s_old, s, state = solver.t_old, solver.t, y
                interp = solver.dense_output()
                bound = opts.atol + opts.rtol * float(np.max(np.abs(y)))
                segment.record(s, leg.z(s), y, bound, interp, leg, s_old)
                if numeric.chart_map is not None:
                    pole = _detect_pole(numeric, interp, leg, s_old, s, opts)
                    if pole is not None and not traj.has_pole_near(pole.location):
                        traj.poles.append(pole)
                        logger.info(f"📍 {traj.system} 극 z* = {pole.location:.12g} (위수 {pole.order})")
                if switch is not None:
                    target = switch(chart, y, leg.z(s), opts)
                    if target is not None:
                        break
            if target is None:
                s = leg.s1
                continue
            new_chart, new_state, junction = target
            if traj.switch_count() + 1 > opts.max_events:
                traj.complete = False
                logger.warning(f"⚠️ {traj.system} 차트 전환 한도 {opts.max_events} 도달, 적분 중단")
                return traj
            logger.debug(f"🔀 {chart} -> {new_chart} at z = {leg.z(s):.6g}")
            first_step = max(solver.step_size / 10.0, _ARC_EPS)
            chart, state = new_chart, np.asarray(new_state, dtype=complex)
            segment = traj.open_segment(chart, atlas_charts[chart].variables, junction, to_base(chart))
            segment.record(s, leg.z(s), state, 0.0)
    return traj


def _field_chart(field_: Union[PlanarODE, PlanarField, BlowupChartMap],
                 parameters: Mapping[str, Any]) -> Tuple[NumericChart, Optional[Weights]]:
    if isinstance(field_, PlanarODE):
        return _base_chart(field_, parameters), None
    if isinstance(field_, PlanarField):
        syms = sp.symbols(field_.variables)
        subs = _parameter_subs(parameters)
        fn = _constant_safe(sp.lambdify(syms, [c.to_expr().subs(subs) for c in field_.components], "numpy"), 2)
        chart = NumericChart(INFINITY_CHART, tuple(field_.variables), lambda state, t: fn(state[0], state[1]))
        return chart, None
    if isinstance(field_, BlowupChartMap):
        w = builtin_weights(field_.tag)
        return _blowup_chart(field_, chart_system(field_), w, parameters), w
    raise TypeError(f"cannot integrate {type(field_).__name__}")


def integrate_complex(field_: Union[PlanarODE, PlanarField, BlowupChartMap], parameters: Optional[Mapping[str, Any]],
                      init: Sequence[complex], path: PathSpec,
                      opts: Optional[IntegratorOptions] = None) -> Trajectory:
    """단일 차트 적분 (전환 없음); 특이점에서 StepUnderflowError"""
    opts = opts or IntegratorOptions.from_config()
    chart, _ = _field_chart(field_, parameters or {})
    name = getattr(field_, "name", None) or getattr(field_, "tag", "custom")
    traj = Trajectory(str(name), path, {k: complex(v) for k, v in (parameters or {}).items()})
    _march({chart.label: chart}, traj, chart.label, np.asarray(init, dtype=complex), opts,
           to_base=lambda label: None if chart.chart_map is None else chart.to_base)
    return traj


def integrate_with_switching(tag: str, parameters: Optional[Mapping[str, Any]], init: Sequence[complex],
                             path: PathSpec, opts: Optional[IntegratorOptions] = None,
                             start_chart: str = BASE_CHART) -> Trajectory:
    """기저 차트에서 적분하다 상태가 커지면 파인레베 좌표 차트로 넘어가 극을 통과"""
    opts = opts or IntegratorOptions.from_config()
    atlas = NumericAtlas(tag, parameters)
    if start_chart not in atlas.charts:
        raise ValueError(f"unknown chart {start_chart!r}; charts: {sorted(atlas.charts)}")
    traj = Trajectory(atlas.ode.name, path, {k: complex(v) for k, v in atlas.parameters.items()})
    _march(atlas.charts, traj, start_chart, np.asarray(init, dtype=complex), opts,
           switch=atlas.switch_target, to_base=atlas.to_base)
    logger.info(f"🧭 {atlas.ode.name} 적분 완료: 구간 {len(traj.segments)}개, 극 {len(traj.poles)}개")
    return traj


def round_trip_error(tag: str, parameters: Optional[Mapping[str, Any]], init: Sequence[complex],
                     path: PathSpec, opts: Optional[IntegratorOptions] = None) -> float:
    """경로를 왕복한 뒤 기저 좌표에서 초기값과의 차이"""
    forward = integrate_with_switching(tag, parameters, init, path, opts)
    back = integrate_with_switching(tag, parameters, forward.final_state, path.reversed(), opts,
                                    start_chart=forward.final_chart)
    error = float(np.max(np.abs(back.final_base_state() - np.asarray(init, dtype=complex))))
    logger.info(f"↩️ {forward.system} 왕복 오차 {error:.3e}")
    return error


# ---- checks along trajectories ------------------------------------------

@dataclass(frozen=True)
class HamiltonianDerivativeCheck:
    """H(끝) - H(시작) 와 경로 적분 dH/dz 비교"""
    max_error: float
    segments_checked: int

    def holds(self, tolerance: float) -> bool:
        return self.segments_checked > 0 and self.max_error < tolerance


def hamiltonian_z_derivative_check(traj: Trajectory, tag: Optional[str] = None,
                                   nodes: int = 9) -> HamiltonianDerivativeCheck:
    """기저 차트 구간마다 해 위에서 dH/dz = dH/dz (편미분) 확인"""
    ode = builtin_ode(normalize_tag(tag or traj.system))
    subs = _parameter_subs(traj.parameters)
    x, y, z = sp.symbols(ORIGINAL_BASE)
    H = ode.hamiltonian.to_expr().subs(subs)
    H_fn = sp.lambdify((x, y, z), H, "numpy")
    Hz_fn = sp.lambdify((x, y, z), sp.diff(H, z), "numpy")
    worst, checked = 0.0, 0
    for seg in traj.segments:
        if seg.chart != BASE_CHART or not seg.dense:
            continue
        integral = 0j
        for s0, s1, interp, leg in seg.dense:
            grid = np.linspace(s0, s1, nodes)
            values = []
            for s in grid:
                state = np.asarray(interp(s), dtype=complex)
                values.append(complex(Hz_fn(state[0], state[1], leg.z(s))) * leg.direction)
            values = np.array(values)
            integral += simpson(values.real, x=grid) + 1j * simpson(values.imag, x=grid)
        start, end = seg.states[0], seg.states[-1]
        change = complex(H_fn(end[0], end[1], seg.z[-1])) - complex(H_fn(start[0], start[1], seg.z[0]))
        worst = max(worst, abs(change - integral) / max(1.0, abs(change)))
        checked += 1
    return HamiltonianDerivativeCheck(worst, checked)


@dataclass(frozen=True)
class LocalDriftReport:
    """국소 적분 C1, C2 의 궤적 위 변화"""
    drift: Tuple[float, float]
    samples: int
    initial: Tuple[complex, complex]
    values: Tuple[Tuple[complex, complex], ...] = ()

    @property
    def max_drift(self) -> float:
        return max(self.drift)


def _chart_distance(integrals, values: Mapping[str, complex], w: complex) -> float:
    hw = integrals.weights.homogeneous()
    names = slot_variables(integrals.chart)
    coords = [complex(sp.N(c)) for c in integrals.coords]
    base = (values["x"], values["y"], values["z"])
    chart_values = []
    for slot in sorted(names):
        chart_values.append(w ** hw[3] if slot == 3 else base[slot] * w ** hw[slot])
    return max(abs(a - b) for a, b in zip(chart_values, coords))


def local_integral_drift(tag: str, lin: LinearizationData, traj: Trajectory,
                         radius: float = 0.1, inner: float = 1e-2) -> LocalDriftReport:
    """고정점 근방 (차트 거리 < radius) 표본에서 절단 국소 적분의 최대 변화"""
    integrals = local_integrals(lin)
    params = dict(traj.parameters)
    values_seen = []
    for seg in traj.segments:
        for z, state in zip(seg.z, seg.states):
            base = seg.base_state(state, z)
            if not np.all(np.isfinite(base)):
                continue
            values = {"x": complex(base[0]), "y": complex(base[1]), "z": complex(z)}
            if values[integrals.unit_variable] == 0:
                continue
            values.update(params)
            w = integrals.branch(values)
            if abs(w) < inner or _chart_distance(integrals, values, w) >= radius:
                continue
            values_seen.append(integrals.evaluate(values["x"], values["y"], values["z"], params))
    if not values_seen:
        raise ValueError(f"no {tag} trajectory samples inside the linearization neighbourhood")
    first = values_seen[0]
    drift = tuple(max(abs(v[i] - first[i]) for v in values_seen) for i in range(2))
    logger.info(f"∫ {tag} 국소 적분 변화 C1 {drift[0]:.3e}, C2 {drift[1]:.3e} ({len(values_seen)} 표본)")
    return LocalDriftReport(drift, len(values_seen), first, tuple(values_seen))


# ---- Laurent refit --------------------------------------------------------

@dataclass(frozen=True)
class LaurentFit:
    x: Tuple[complex, ...]
    y: Tuple[complex, ...]
    condition: float


def fit_laurent_samples(T: Sequence[complex], X: Sequence[complex], Y: Sequence[complex],
                        exponents: Tuple[int, int], n_terms: int) -> LaurentFit:
    """x = sum a_n T^(n-p1), y = sum b_n T^(n-p2) 최소제곱 (T 는 창 반지름으로 정규화)"""
    T = np.asarray(T, dtype=complex)
    scale = float(np.max(np.abs(T)))
    tau = T / scale
    fits, worst = [], 0.0
    for values, p in ((np.asarray(X, dtype=complex), exponents[0]), (np.asarray(Y, dtype=complex), exponents[1])):
        powers = np.arange(n_terms) - p
        M = tau[:, None] ** powers[None, :]
        condition = float(np.linalg.cond(M))
        worst = max(worst, condition)
        if condition > _FIT_CONDITION_LIMIT:
            raise IllConditionedFitError(condition)
        coeffs, *_ = np.linalg.lstsq(M, values, rcond=None)
        fits.append(tuple(complex(c) / scale ** int(k) for c, k in zip(coeffs, powers)))
    return LaurentFit(fits[0], fits[1], worst)


@dataclass(frozen=True)
class LaurentRefit:
    """로랑 재적합 결과와 정확한 계수와의 차이"""
    pole: PoleEvent
    balance: Tuple[sp.Expr, sp.Expr]
    fitted: LaurentFit
    exact_x: Tuple[complex, ...]
    exact_y: Tuple[complex, ...]

    @property
    def deviation_x(self) -> Tuple[float, ...]:
        return tuple(abs(a - b) for a, b in zip(self.fitted.x, self.exact_x))

    @property
    def deviation_y(self) -> Tuple[float, ...]:
        return tuple(abs(a - b) for a, b in zip(self.fitted.y, self.exact_y))

    @property
    def max_deviation(self) -> float:
        return max(self.deviation_x + self.deviation_y)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pole": self.pole.to_dict(),
            "balance": [str(b) for b in self.balance],
            "fitted_x": [serialize_value(c) for c in self.fitted.x],
            "fitted_y": [serialize_value(c) for c in self.fitted.y],
            "exact_x": [serialize_value(c) for c in self.exact_x],
            "exact_y": [serialize_value(c) for c in self.exact_y],
            "deviation_x": list(self.deviation_x),
            "deviation_y": list(self.deviation_y),
            "condition": self.fitted.condition,
        }


def _window_samples(traj: Trajectory, pole: PoleEvent, window: Tuple[float, float], per_step: int):
    T, X, Y = [], [], []
    for seg in traj.segments:
        if seg.chart != pole.chart:
            continue
        for s0, s1, interp, leg in seg.dense:
            for s in np.linspace(s0, s1, per_step, endpoint=False):
                z = leg.z(s)
                t = z - pole.location
                if not window[0] <= abs(t) <= window[1]:
                    continue
                base = seg.base_state(np.asarray(interp(s), dtype=complex), z)
                if np.all(np.isfinite(base)):
                    T.append(t)
                    X.append(base[0])
                    Y.append(base[1])
    return T, X, Y


def laurent_refit(traj: Trajectory, pole: PoleEvent, n_terms: int = 8,
                  window: Tuple[float, float] = (0.05, 0.3), per_step: int = 4) -> LaurentRefit:
    """극 주변 궤적을 절단 로랑 모형에 맞추고 정확한 급수 계수와 비교"""
    T, X, Y = _window_samples(traj, pole, window, per_step)
    if len(T) < 2 * n_terms:
        raise ValueError(f"only {len(T)} samples in the window {window}; widen it or reduce n_terms")
    fitted = fit_laurent_samples(T, X, Y, pole.exponents, n_terms)

    key = normalize_tag(traj.system)
    ode, w = builtin_ode(key), builtin_weights(key)
    balances = leading_balances(ode, w)
    target = np.asarray(pole.leading_coefficients)
    balance = min(balances, key=lambda b: float(np.max(np.abs(
        np.array([complex(sp.N(b[0])), complex(sp.N(b[1]))]) - target))))
    sol = laurent_solve(ode, w, balance, n_max=max(n_terms - 1, 1))
    values: Dict[str, complex] = {"z0": pole.location}
    values.update(traj.parameters)
    for sym in sol.free_symbols:
        side, index = sym.name[0], int(sym.name[1:])
        fitted_side = fitted.x if side == "A" else fitted.y
        values[sym.name] = fitted_side[index] if index < n_terms else 0j
    exact = sol.numeric(values)
    refit = LaurentRefit(pole, balance, fitted, exact.A[:n_terms], exact.B[:n_terms])
    logger.info(f"📏 {traj.system} z* = {pole.location:.8g} 로랑 재적합 최대 편차 {refit.max_deviation:.3e}")
    return refit


# ---- the infinity set -----------------------------------------------------

def boutroux_field(tag: str) -> PlanarField:
    """eps3 = 0 위 자율 벡터장"""
    key = normalize_tag(tag)
    return infinity_restriction(to_chart(builtin_ode(key), builtin_weights(key), ChartId.C3))


def _boutroux_function(tag: str) -> Callable[[Any, Any], Any]:
    X, Y = sp.symbols("X Y")
    H = parse_expression(load_builtin_system(tag).boutroux_text)
    return sp.lambdify((X, Y), H, "numpy")


def boutroux_center_path(tag: str, length: float = 10.0,
                         amplitude: float = 1e-2) -> Tuple[np.ndarray, PathSpec]:
    """비퇴화 평형점 근처 시작점과, 선형화가 회전이 되는 복소 시간 방향의 길이 length 경로"""
    if length <= 0 or amplitude <= 0:
        raise ValueError(f"length and amplitude must be positive, got {length} and {amplitude}")
    field_ = boutroux_field(tag)
    syms = sp.symbols(field_.variables)
    rates = [c.to_expr() for c in field_.components]
    J = sp.Matrix(rates).jacobian(syms)
    candidates = []
    for sol in sp.solve(rates, syms, dict=True):
        if set(sol) != set(syms):
            continue
        point = np.array([complex(sp.N(sol[s])) for s in syms])
        Jn = np.array(J.subs(sol).evalf().tolist(), dtype=complex)
        eigvals, eigvecs = np.linalg.eig(Jn)
        scale = float(np.max(np.abs(eigvals)))
        if float(np.min(np.abs(eigvals))) < 1e-9 or abs(eigvals.sum()) > 1e-9 * scale:
            continue
        offset = sum(eigvecs[:, i] / np.linalg.norm(eigvecs[:, i]) for i in range(2))
        candidates.append((float(np.linalg.norm(point)), point, eigvals[0], offset))
    if not candidates:
        raise ValueError(f"{tag} Boutroux field has no nondegenerate equilibrium")
    _, point, lam, vec = min(candidates, key=lambda c: c[0])
    # lam * direction is purely imaginary, so both modes rotate along the path
    direction = 1j * np.conj(lam) / abs(lam)
    init = point + amplitude * vec / np.linalg.norm(vec)
    logger.debug(f"⚡ {tag} 부트루 중심 {point}, 고유값 {lam:.6g}, 방향 {direction:.6g}")
    return init, PathSpec.line(0.0, length * direction)


def boutroux_energy_drift(tag: str, init: Sequence[complex], path: Union[PathSpec, Tuple[float, float]],
                          opts: Optional[IntegratorOptions] = None) -> float:
    """무한대 집합 흐름을 경로를 따라 적분하고 max |H - H(0)|"""
    if not isinstance(path, PathSpec):
        path = PathSpec.line(path[0], path[1])
    start = np.asarray(init, dtype=complex)
    H = _boutroux_function(tag)
    h0 = complex(H(start[0], start[1]))
    field_ = boutroux_field(tag)
    if all(abs(v) == 0 for v in _field_chart(field_, {})[0].rhs(start, 0.0)):
        return 0.0
    traj = integrate_complex(field_, {}, start, path, opts)
    drift = max(abs(complex(H(state[0], state[1])) - h0) for _, _, _, state, _ in traj.rows())
    logger.info(f"⚡ {tag} 부트루 에너지 변화 {drift:.3e} (경로 길이 {path.length:.3g})")
    return float(drift)


@dataclass
class LevelSet:
    """H = c 등위선 (실수 창)"""
    level: float
    polylines: List[np.ndarray] = field(default_factory=list)

    @property
    def points(self) -> int:
        return sum(len(p) for p in self.polylines)


def level_set_sampler(tag: str, c_values: Sequence[float], window: Tuple[float, float, float, float],
                      resolution: int = 200) -> List[LevelSet]:
    """마칭 스퀘어로 (X3, Y3) 실수 창에서 부트루 해밀토니안 등위선 추출"""
    xmin, xmax, ymin, ymax = (float(v) for v in window)
    if xmax <= xmin or ymax <= ymin or resolution < 2:
        return [LevelSet(float(c)) for c in c_values]
    H = _boutroux_function(tag)
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    grid = np.real(np.asarray(H(XX, YY), dtype=complex))
    dx = (xmax - xmin) / (resolution - 1)
    dy = (ymax - ymin) / (resolution - 1)
    result = []
    for c in c_values:
        level = LevelSet(float(c))
        for contour in measure.find_contours(grid, float(c)):
            points = np.column_stack((xmin + contour[:, 0] * dx, ymin + contour[:, 1] * dy))
            level.polylines.append(points)
        result.append(level)
    logger.info(f"🗺️ {tag} 등위선 {len(result)}개 추출 (격자 {resolution}x{resolution})")
    return result


# ---- export ---------------------------------------------------------------

def trajectory_to_csv(traj: Trajectory, path: Path) -> Path:
    """구간의 차트 좌표를 그대로 기록 (chart 열이 좌표계를 나타냄)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for s, z, chart, state, err in traj.rows():
            writer.writerow([repr(s), repr(z.real), repr(z.imag), chart,
                             repr(state[0].real), repr(state[0].imag),
                             repr(state[1].real), repr(state[1].imag), repr(err)])
    return path


def pole_events_to_json(events: Sequence[PoleEvent], path: Optional[Path] = None) -> str:
    text = json.dumps([e.to_dict() for e in events], indent=2)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n", encoding='utf-8')
    return text


def level_sets_to_csv(levels: Sequence[LevelSet], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(("level", "component", "X", "Y"))
        for level in levels:
            for k, poly in enumerate(level.polylines):
                for X, Y in poly:
                    writer.writerow([repr(level.level), k, repr(float(X)), repr(float(Y))])
    return path
