#!/usr/bin/env python3
"""
Initial Condition Space System
무한대 가동 극 고정점의 가중 블로업, 파인레베 좌표, 심플렉틱 검증, 곡면 M(z), 부트루 좌표 아틀라스
"""

import logging
from functools import lru_cache
from itertools import combinations, product
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Any, Tuple, Sequence, Union

import sympy as sp

from laurent_algebra_system import LaurentPoly, exact_linear_solve
from newton_weight_system import Weights, PlanarODE, builtin_ode, builtin_weights
from orbifold_chart_system import (
    ChartId, ChartVectorField, INFINITY_CHARTS, UNIT_SLOT,
    all_charts, chart_id, nonautonomous_rhs, slot_variables,
)
from infinity_analysis_system import (
    CharacteristicIndex, FixedPointRecord, characteristic_index, find_fixed_points_at_infinity,
)
from painleve_config import load_builtin_system, normalize_tag

logger = logging.getLogger('painleve.soic')

PREBLOWUP_VARIABLES = ("u", "v", "w")
ORIGINAL_BASE = ("x", "y", "z")
PAINLEVE_VARIABLES = ("u", "w", "z")
BOUTROUX_BASE = ("X3", "Y3", "e3")
BOUTROUX_VARIABLES = ("u2", "v2", "w2")

SIGN_BRANCHES = {"upper": 1, "lower": -1}

# V, W 는 기저 좌표의 식, U 는 관계식에서 풀어낸다
SURFACE_MODELS = {
    "P_I": {
        "coordinates": "painleve",
        "V": "x*y^-2 + y^-3/2",
        "W": "y^-1",
        "relation": "U*W^4 + 2*z*W^3 + 4*W",
    },
    "P_I_boutroux": {
        "coordinates": "boutroux",
        "V": "X3*Y3^-2 + e3*Y3^-3/2",
        "W": "Y3^-1",
        "relation": "U*W^4 + 2*W^3 + 4*W",
    },
}

Coords = Tuple[sp.Expr, sp.Expr, sp.Expr]


class NonPolynomialBlowupError(ValueError):
    """블로업 차트 시스템이 다항식이 아님 (가중치 또는 선행 변환 오류)"""

    def __init__(self, residual: Any, where: str = ""):
        self.residual = residual
        location = f" in {where}" if where else ""
        super().__init__(f"blow-up system is not polynomial{location}: denominator {residual}")


class SymplecticFactorError(ValueError):
    """야코비 행렬식이 상수가 아님"""

    def __init__(self, residual: Any):
        self.residual = residual
        super().__init__(f"Jacobian determinant is not constant: {residual}")


def _syms(names: Sequence[str]) -> Tuple[sp.Symbol, ...]:
    return tuple(sp.Symbol(n) for n in names)


def _min_exponent(expr: sp.Expr, var: sp.Symbol) -> int:
    exponents = [term.as_coeff_exponent(var)[1] for term in sp.Add.make_args(sp.expand(expr)) if term != 0]
    return int(min(exponents)) if exponents else 0


def _require_polynomial(expr: Any, gens: Sequence[sp.Symbol], where: str = "") -> sp.Expr:
    num, den = sp.fraction(sp.cancel(sp.together(sp.sympify(expr))))
    if den.free_symbols & set(gens):
        raise NonPolynomialBlowupError(den, where)
    return sp.expand(num / den)


def _is_zero(expr: sp.Expr) -> bool:
    return sp.simplify(sp.expand(expr)) == 0


# ---- pre-blow-up change ------------------------------------------------------

@dataclass(frozen=True)
class PreBlowupField:
    """고정점으로 평행이동하고 선형부의 (1,2), (1,3) 성분을 제거한 벡터장"""
    field: ChartVectorField
    source_variables: Tuple[str, str, str]
    point: Coords
    shifts: Tuple[sp.Expr, sp.Expr]
    linear_part: sp.Matrix
    index: Tuple[sp.Expr, sp.Expr, sp.Expr]

    def change_of_variables(self) -> Dict[str, sp.Expr]:
        """원래 차트 변수 -> (u, v, w) 식"""
        u, v, w = _syms(PREBLOWUP_VARIABLES)
        a, b = self.shifts
        lead, mid, eps = self.source_variables
        return {lead: self.point[0] + u + a * v + b * w, mid: self.point[1] + v, eps: w}


def _linear_shifts(J: sp.Matrix) -> Tuple[sp.Expr, sp.Expr]:
    if _is_zero(J[1, 1] - J[0, 0]) or _is_zero(J[2, 2] - J[0, 0]):
        raise ValueError(f"resonant diagonal {J[0, 0]}, {J[1, 1]}, {J[2, 2]}: "
                         f"the (1,2) and (1,3) entries cannot be removed")
    a = sp.simplify(J[0, 1] / (J[1, 1] - J[0, 0]))
    b = sp.simplify((J[0, 2] - a * J[1, 2]) / (J[2, 2] - J[0, 0]))
    return a, b


def preblowup_change(vf: ChartVectorField, fp: Union[FixedPointRecord, Sequence[Any]]) -> PreBlowupField:
    if vf.chart not in (ChartId.C1, ChartId.C2):
        raise ValueError(f"movable-pole blow-ups live in chart c1 or c2, got {vf.chart.value}")
    idx = characteristic_index(vf, fp)
    J = idx.jacobian
    if not all(_is_zero(J[i, j]) for i, j in ((1, 0), (2, 0), (2, 1))):
        raise ValueError(f"linear part at {idx.coords} is not upper triangular: {J.tolist()}")
    a, b = _linear_shifts(J)

    source = _syms(vf.variables)
    u, v, w = _syms(PREBLOWUP_VARIABLES)
    subs = {source[0]: idx.coords[0] + u + a * v + b * w, source[1]: idx.coords[1] + v, source[2]: w}
    pulled = [sp.expand(c.to_expr().subs(subs, simultaneous=True)) for c in vf.components]
    rates = (pulled[0] - a * pulled[1] - b * pulled[2], pulled[1], pulled[2])
    params = vf.parameters
    shifted = ChartVectorField(vf.chart, PREBLOWUP_VARIABLES,
                               tuple(LaurentPoly.from_expr(sp.expand(r), params) for r in rates),
                               vf.weights, vf.orientation, vf.name)

    new_idx = characteristic_index(shifted, (0, 0, 0))
    Jn = new_idx.jacobian
    if not (_is_zero(Jn[0, 1]) and _is_zero(Jn[0, 2])):
        raise ValueError(f"pre-blow-up change left first row {Jn.row(0).tolist()}")
    index = tuple(Jn[i, i] for i in range(3))
    logger.info(f"🔧 {vf.name} {vf.chart.value}{tuple(idx.coords)} 선행 변환: "
                f"shift=({a}, {b}), 지수 {index}")
    return PreBlowupField(shifted, tuple(vf.variables), idx.coords, (a, b), Jn, index)


# ---- weighted blow-up --------------------------------------------------------

@dataclass(frozen=True)
class BlowupSystem:
    """가중 블로업 한 차트의 시스템"""
    chart: int
    variables: Tuple[str, str, str]
    weights: Tuple[int, int, int]
    rhs: Dict[str, sp.Expr]
    independent: Optional[str] = None
    divided_power: int = 0

    @property
    def exceptional(self) -> str:
        return self.variables[self.chart - 1]

    def to_text(self) -> Dict[str, str]:
        return {name: str(expr) for name, expr in self.rhs.items()}


def _integer_weights(weights: Sequence[Any]) -> Tuple[int, int, int]:
    values = tuple(sp.nsimplify(wt) for wt in weights)
    if len(values) != 3 or not all(v.is_Integer and v > 0 for v in values):
        raise ValueError(f"blow-up weights must be three positive integers, got {tuple(weights)}")
    return tuple(int(v) for v in values)


def weighted_blowup(field_: Union[PreBlowupField, ChartVectorField],
                    blowup_weights: Optional[Sequence[Any]] = None, chart: int = 3) -> BlowupSystem:
    """원점의 가중 블로업; 3번 차트는 v3 를 독립변수로 하는 (u3, w3) 시스템"""
    if isinstance(field_, PreBlowupField):
        vf = field_.field
        if blowup_weights is None:
            blowup_weights = field_.index
    else:
        vf = field_
    if blowup_weights is None:
        raise ValueError("blow-up weights are required for a bare chart field")
    lams = _integer_weights(blowup_weights)
    if chart not in (1, 2, 3):
        raise ValueError(f"blow-up chart must be 1, 2 or 3, got {chart}")

    base = _syms(vf.variables)
    names = tuple(f"{n}{chart}" for n in PREBLOWUP_VARIABLES)
    new = _syms(names)
    k = chart - 1
    E = new[k]
    subs = {base[i]: E ** lams[i] * (1 if i == k else new[i]) for i in range(3)}
    dots = [c.to_expr().subs(subs, simultaneous=True) for c in vf.components]
    e_rate = dots[k] / (lams[k] * E ** (lams[k] - 1))
    rates = [e_rate if i == k else (dots[i] - lams[i] * E ** (lams[i] - 1) * new[i] * e_rate) / E ** lams[i]
             for i in range(3)]

    where = f"{vf.name} blow-up chart {chart} with weights {lams}"
    if chart == 3:
        rhs = {names[0]: _require_polynomial(rates[0] / rates[1], new, where),
               names[2]: _require_polynomial(rates[2] / rates[1], new, where)}
        system = BlowupSystem(chart, names, lams, rhs, independent=names[1])
    else:
        rates = [sp.expand(r) for r in rates]
        power = min(_min_exponent(r, E) for r in rates if r != 0)
        rhs = {n: _require_polynomial(r * E ** (-power), new, where) for n, r in zip(names, rates)}
        system = BlowupSystem(chart, names, lams, rhs, divided_power=power)
    logger.info(f"💥 {vf.name} 가중 블로업 {lams} 차트 {chart} 완료")
    return system


# ---- Painlevé coordinates ----------------------------------------------------

@dataclass(frozen=True)
class BlowupChartMap:
    """블로업 차트 좌표와 기저 좌표 사이의 합성 사상 (순환 피복 위)"""
    tag: str
    label: str
    sign_branch: int
    chart: ChartId
    point: Coords
    source_variables: Tuple[str, str, str]
    target_variables: Tuple[str, str, str]
    lead_variable: str
    forward: Dict[str, sp.Expr] = field(default_factory=dict)
    inverse: Dict[str, sp.Expr] = field(default_factory=dict)
    blowup_weights: Tuple[int, int, int] = (1, 1, 1)
    shifts: Tuple[sp.Expr, sp.Expr] = (sp.Integer(0), sp.Integer(0))
    cover_order: int = 1
    parameters: Tuple[str, ...] = ()

    @property
    def coordinates(self) -> str:
        return "boutroux" if self.source_variables == BOUTROUX_BASE else "painleve"

    def symbols(self) -> Tuple[sp.Symbol, sp.Symbol, sp.Symbol]:
        return _syms(self.target_variables)

    def images(self) -> Dict[sp.Symbol, sp.Expr]:
        return {sp.Symbol(n): self.forward[n] for n in self.source_variables}

    def jacobian(self) -> sp.Matrix:
        """d(기저 1, 2번 좌표) / d(블로업 1, 2번 좌표), 독립변수 고정"""
        a, t, _ = self.symbols()
        rows = [self.forward[n] for n in self.source_variables[:2]]
        return sp.Matrix(rows).jacobian([a, t])

    def is_identity_on_cover(self) -> bool:
        tpos = {s: sp.Symbol(s.name, positive=True) for s in self.symbols()}
        spos = {s: sp.Symbol(s.name, positive=True) for s in _syms(self.source_variables)}
        images = {s: self.forward[s.name].subs(tpos, simultaneous=True) for s in spos}
        for t in tpos:
            back = self.inverse[t.name].subs(images, simultaneous=True) - tpos[t]
            if not _is_zero(sp.powsimp(sp.expand(back), force=True)):
                return False
        inverse = {t: self.inverse[t.name].subs(spos, simultaneous=True) for t in tpos}
        for s in spos:
            back = self.forward[s.name].subs(inverse, simultaneous=True) - spos[s]
            if not _is_zero(sp.powsimp(sp.expand(back), force=True)):
                return False
        return True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tag": self.tag,
            "label": self.label,
            "sign_branch": self.sign_branch,
            "chart": self.chart.value,
            "point": [str(c) for c in self.point],
            "coordinates": self.coordinates,
            "forward": {k: str(v) for k, v in self.forward.items()},
            "inverse": {k: str(v) for k, v in self.inverse.items()},
            "blowup_weights": list(self.blowup_weights),
            "shifts": [str(s) for s in self.shifts],
            "cover_order": self.cover_order,
        }


@lru_cache(maxsize=None)
def _chart_data(tag: str) -> Tuple[PlanarODE, Weights, Dict[ChartId, ChartVectorField], Tuple[FixedPointRecord, ...]]:
    ode = builtin_ode(tag)
    w = builtin_weights(tag)
    charts = all_charts(ode, w)
    movable = tuple(p for p in find_fixed_points_at_infinity(charts) if p.is_movable)
    return ode, w, charts, movable


def _locate(tag: str, chart: ChartId, point: Coords) -> FixedPointRecord:
    for record in _chart_data(tag)[3]:
        for lift in record.lifts(chart):
            if all(_is_zero(a - b) for a, b in zip(lift, point)):
                return record
    raise ValueError(f"{tuple(point)} in chart {chart.value} is not a movable-pole fixed point of {tag}")


def _configured_points(tag: str) -> List[Tuple[str, ChartId, Coords]]:
    system = load_builtin_system(tag)
    if not system.blowup_points:
        raise ValueError(f"{system.name} has no blowup_points in its configuration")
    return [(label, chart_id(chart), tuple(sp.sympify(c) for c in point))
            for label, chart, point in system.blowup_points]


def _build_map(ode: PlanarODE, w: Weights, label: str, idx: CharacteristicIndex,
               boutroux: bool = False) -> BlowupChartMap:
    J = idx.jacobian
    lams = _integer_weights([J[i, i] for i in range(3)])
    if lams[1] != w.r or lams[2] != w.s:
        raise ValueError(f"index {lams} does not keep the independent variable: "
                         f"need lambda2 = r = {w.r} and lambda3 = s = {w.s}")
    a_shift, b_shift = _linear_shifts(J)
    chart = idx.chart
    k = UNIT_SLOT[chart]
    lead_slot = next(s for s in slot_variables(chart) if s not in (2, 3))
    hw = w.homogeneous()
    lead0 = idx.coords[0]

    source_names = BOUTROUX_BASE if boutroux else ORIGINAL_BASE
    target_names = BOUTROUX_VARIABLES if boutroux else PAINLEVE_VARIABLES
    a, t, s = _syms(target_names)
    # 부트루 좌표에서는 z 대신 e3 가 독립변수, z 슬롯은 1
    z_factor, e_factor = (sp.Integer(1), s) if boutroux else (s, sp.Integer(1))
    lead = lead0 + a * t ** lams[0] + a_shift * z_factor * t ** w.r + b_shift * e_factor * t ** w.s
    forward = {
        source_names[lead_slot]: sp.expand(lead * t ** (-hw[lead_slot])),
        source_names[k]: t ** (-hw[k]),
        source_names[2]: s,
    }

    src = _syms(source_names)
    root = src[k] ** sp.Rational(-1, hw[k])
    z_back, e_back = (sp.Integer(1), src[2]) if boutroux else (src[2], sp.Integer(1))
    u_back = (src[lead_slot] * root ** hw[lead_slot] - lead0 - a_shift * z_back * root ** w.r
              - b_shift * e_back * root ** w.s) * root ** (-lams[0])
    inverse = {target_names[0]: sp.expand(u_back), target_names[1]: root, target_names[2]: src[2]}

    return BlowupChartMap(
        tag=ode.name, label=label, sign_branch=SIGN_BRANCHES.get(label, 0), chart=chart,
        point=idx.coords, source_variables=source_names, target_variables=target_names,
        lead_variable=source_names[lead_slot], forward=forward, inverse=inverse,
        blowup_weights=lams, shifts=(a_shift, b_shift), cover_order=hw[k],
        parameters=tuple(sorted(ode.parameters)),
    )


def _blowup_maps(tag: str, boutroux: bool) -> List[BlowupChartMap]:
    ode, w, charts, _ = _chart_data(normalize_tag(tag))
    maps = []
    for label, chart, point in _configured_points(tag):
        _locate(normalize_tag(tag), chart, point)
        idx = characteristic_index(charts[chart], point)
        maps.append(_build_map(ode, w, label, idx, boutroux))
    return maps


def painleve_coordinates(tag: str) -> List[BlowupChartMap]:
    """설정된 가동 극 고정점마다 (x, y, z) <-> (u, w, z) 합성 좌표"""
    maps = _blowup_maps(tag, boutroux=False)
    logger.info(f"📐 {maps[0].tag} 파인레베 좌표 {len(maps)}개 유도")
    return maps


def boutroux_coordinates(tag: str) -> List[BlowupChartMap]:
    """(X3, Y3, e3) <-> (u2, v2, w2); 독립변수 e3 는 바뀌지 않음"""
    return _blowup_maps(tag, boutroux=True)


def deck_action(m: BlowupChartMap) -> Dict[sp.Symbol, sp.Expr]:
    """피복 변수의 회전과 그에 맞춘 선행 좌표의 변화 (위수 1 이면 빈 사전)"""
    if m.cover_order == 1:
        return {}
    a, t, s = m.symbols()
    zeta = sp.exp(2 * sp.pi * sp.I / m.cover_order)
    moved = sp.Dummy("moved")
    lead = m.forward[m.lead_variable]
    image = sp.solve(sp.Eq(lead.subs({a: moved, t: zeta * t}, simultaneous=True), lead), moved)
    if len(image) != 1:
        raise ValueError(f"deck action on {m.lead_variable} is not single valued: {image}")
    return {a: sp.expand(image[0]), t: zeta * t}


# ---- transported systems and symplectic structure ------------------------------

@dataclass(frozen=True)
class SymplecticFactor:
    """dx^dy = factor * du^dw (독립변수 고정)"""
    factor: sp.Expr
    orientation: str = "dx^dy"

    def in_orientation(self, orientation: str) -> sp.Expr:
        if orientation == self.orientation:
            return self.factor
        if orientation == "dy^dx":
            return -self.factor
        raise ValueError(f"unknown orientation {orientation!r}")


@dataclass(frozen=True)
class ExtendedFormCheck:
    """dx^dy - dH^dz 와 c (du^dw - dH~^dz) 비교 결과"""
    holds: bool
    factor: sp.Expr
    residuals: Dict[str, sp.Expr] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds


def symplectic_factor(m: BlowupChartMap) -> SymplecticFactor:
    det = sp.simplify(sp.expand(m.jacobian().det()))
    a, t, _ = m.symbols()
    if det.free_symbols & {a, t}:
        raise SymplecticFactorError(det)
    return SymplecticFactor(det)


def _transport(m: BlowupChartMap, F: Any, G: Any) -> Dict[str, sp.Expr]:
    """[X_a X_t; Y_a Y_t] [a'; t'] = [F - X_s; G - Y_s] 를 크라메르 공식으로"""
    a, t, s = m.symbols()
    images = m.images()
    X = m.forward[m.source_variables[0]]
    Y = m.forward[m.source_variables[1]]
    rx = sp.sympify(F).subs(images, simultaneous=True) - sp.diff(X, s)
    ry = sp.sympify(G).subs(images, simultaneous=True) - sp.diff(Y, s)
    J = m.jacobian()
    det = sp.simplify(J.det())
    return {a.name: sp.expand((rx * J[1, 1] - J[0, 1] * ry) / det),
            t.name: sp.expand((J[0, 0] * ry - J[1, 0] * rx) / det)}


def chart_system(m: BlowupChartMap) -> Dict[str, sp.Expr]:
    """파인레베 좌표에서 d(u, w)/dz (다항식이어야 함)"""
    ode = builtin_ode(m.tag)
    raw = _transport(m, ode.f.to_expr(), ode.g.to_expr())
    where = f"{m.tag} chart {m.label}"
    return {name: _require_polynomial(expr, m.symbols(), where) for name, expr in raw.items()}


def _form_coefficients(m: BlowupChartMap, H: sp.Expr) -> Tuple[sp.Expr, sp.Expr, sp.Expr]:
    """dx^dy - dH^dz 의 (da^dt, da^ds, dt^ds) 계수"""
    a, t, s = m.symbols()
    X = m.forward[m.source_variables[0]]
    Y = m.forward[m.source_variables[1]]
    Hc = sp.sympify(H).subs(m.images(), simultaneous=True)
    at = sp.diff(X, a) * sp.diff(Y, t) - sp.diff(X, t) * sp.diff(Y, a)
    as_ = sp.diff(X, a) * sp.diff(Y, s) - sp.diff(X, s) * sp.diff(Y, a) - sp.diff(Hc, a)
    ts = sp.diff(X, t) * sp.diff(Y, s) - sp.diff(X, s) * sp.diff(Y, t) - sp.diff(Hc, t)
    return sp.expand(at), sp.expand(as_), sp.expand(ts)


def _default_hamiltonian(m: BlowupChartMap) -> sp.Expr:
    ode = builtin_ode(m.tag)
    if ode.hamiltonian is None:
        raise ValueError(f"{m.tag} has no Hamiltonian")
    return ode.hamiltonian.to_expr()


def transformed_hamiltonian(m: BlowupChartMap, H: Optional[Any] = None) -> sp.Expr:
    """당김과 닫힌 형식 보정으로 얻은 차트 해밀토니안 (z 만의 함수 차이는 무시)"""
    a, t, s = m.symbols()
    H = _default_hamiltonian(m) if H is None else sp.sympify(H)
    c = symplectic_factor(m).factor
    _, as_, ts = _form_coefficients(m, H)
    h_a = sp.expand(-as_ / c)
    h_t = sp.expand(-ts / c)
    partial = sp.integrate(h_a, a)
    rest = sp.expand(h_t - sp.diff(partial, t))
    if a in rest.free_symbols:
        raise ValueError(f"extended form of {m.tag} chart {m.label} is not closed: {rest}")
    if any(term.as_coeff_exponent(t)[1] == -1 for term in sp.Add.make_args(rest)):
        raise ValueError(f"chart Hamiltonian of {m.tag} chart {m.label} would need a logarithm")
    result = sp.expand(partial + sp.integrate(rest, t))
    return _require_polynomial(result, (a, t), f"{m.tag} chart {m.label} Hamiltonian")


def extended_symplectic_check(m: BlowupChartMap, H: Optional[Any] = None,
                              H_tilde: Optional[Any] = None) -> ExtendedFormCheck:
    a, t, s = m.symbols()
    H = _default_hamiltonian(m) if H is None else sp.sympify(H)
    H_tilde = transformed_hamiltonian(m, H) if H_tilde is None else sp.sympify(H_tilde)
    c = symplectic_factor(m).factor
    at, as_, ts = _form_coefficients(m, H)
    residuals = {
        f"d{a}^d{t}": sp.simplify(at - c),
        f"d{a}^d{s}": sp.simplify(as_ + c * sp.diff(H_tilde, a)),
        f"d{t}^d{s}": sp.simplify(ts + c * sp.diff(H_tilde, t)),
    }
    holds = all(r == 0 for r in residuals.values())
    if not holds:
        logger.warning(f"⚠️ {m.tag} 차트 {m.label} 확장 심플렉틱 항등식 불일치: {residuals}")
    return ExtendedFormCheck(holds, c, {k: v for k, v in residuals.items() if v != 0})


# ---- atlases -----------------------------------------------------------------

@dataclass
class AtlasChart:
    """아틀라스의 블로업 차트 하나"""
    chart_map: BlowupChartMap
    system: Dict[str, sp.Expr]
    hamiltonian: Optional[sp.Expr] = None
    symplectic: Optional[SymplecticFactor] = None
    pole_order: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "map": self.chart_map.to_dict(),
            "system": {k: str(v) for k, v in self.system.items()},
            "hamiltonian": None if self.hamiltonian is None else str(self.hamiltonian),
            "symplectic_factor": None if self.symplectic is None else str(self.symplectic.factor),
            "pole_order": self.pole_order,
        }


@dataclass
class SoicAtlas:
    """초기값 공간 아틀라스: 기저 차트와 블로업 차트들"""
    tag: str
    coordinates: str
    base_variables: Tuple[str, str, str]
    base_system: Dict[str, sp.Expr]
    base_hamiltonian: Optional[sp.Expr] = None
    charts: List[AtlasChart] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tag": self.tag,
            "coordinates": self.coordinates,
            "base_variables": list(self.base_variables),
            "base_system": {k: str(v) for k, v in self.base_system.items()},
            "base_hamiltonian": None if self.base_hamiltonian is None else str(self.base_hamiltonian),
            "charts": [c.to_dict() for c in self.charts],
        }


def soic_atlas(tag: str) -> SoicAtlas:
    """(x, y) 기저 차트와 파인레베 좌표 차트들로 된 아틀라스"""
    ode = builtin_ode(tag)
    atlas = SoicAtlas(ode.name, "painleve", ORIGINAL_BASE,
                      {"x": ode.f.to_expr(), "y": ode.g.to_expr()},
                      None if ode.hamiltonian is None else ode.hamiltonian.to_expr())
    for m in painleve_coordinates(tag):
        system = chart_system(m)
        H_tilde = transformed_hamiltonian(m) if ode.hamiltonian is not None else None
        atlas.charts.append(AtlasChart(m, system, H_tilde, symplectic_factor(m)))
    logger.info(f"🗺️ {ode.name} 초기값 공간 아틀라스: 블로업 차트 {len(atlas.charts)}개")
    return atlas


def _boutroux_base_system(tag: str) -> Dict[str, sp.Expr]:
    _, _, charts, _ = _chart_data(normalize_tag(tag))
    dX, dY = nonautonomous_rhs(charts[ChartId.C3])
    return {BOUTROUX_BASE[0]: dX.to_expr(), BOUTROUX_BASE[1]: dY.to_expr()}


def _pole_order(expr: sp.Expr, gens: Sequence[sp.Symbol], independent: sp.Symbol, where: str) -> int:
    num, den = sp.fraction(sp.cancel(sp.together(expr)))
    if den.free_symbols & (set(gens) - {independent}):
        raise NonPolynomialBlowupError(den, where)
    return sp.degree(den, independent) if independent in den.free_symbols else 0


def boutroux_soic_atlas(tag: str) -> SoicAtlas:
    """부트루 좌표 (X3, Y3) 기저 차트와 (u2, v2) 블로업 차트; e3 에서만 극을 허용"""
    ode = builtin_ode(tag)
    base = _boutroux_base_system(tag)
    atlas = SoicAtlas(ode.name, "boutroux", BOUTROUX_BASE, base)
    for m in boutroux_coordinates(tag):
        raw = _transport(m, base[BOUTROUX_BASE[0]], base[BOUTROUX_BASE[1]])
        gens = m.symbols()
        where = f"{ode.name} Boutroux chart {m.label}"
        order = max(_pole_order(expr, gens, gens[2], where) for expr in raw.values())
        system = {name: sp.expand(sp.cancel(expr)) for name, expr in raw.items()}
        for expr in system.values():
            _require_polynomial(expr * gens[2] ** order, gens, where)
        atlas.charts.append(AtlasChart(m, system, None, symplectic_factor(m), order))
    logger.info(f"🗺️ {ode.name} 부트루 아틀라스: 블로업 차트 {len(atlas.charts)}개")
    return atlas


# ---- the surface M(z) --------------------------------------------------------

@dataclass
class SurfaceModel:
    """Z2 몫 곡면의 불변 생성원과 정의 관계"""
    tag: str
    variables: Tuple[str, str, str]
    generators: Dict[str, sp.Expr]
    base_generators: Dict[str, sp.Expr]
    relation: sp.Expr
    action: Dict[str, sp.Expr]
    relation_holds: bool = False
    invariant: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tag": self.tag,
            "generators": {k: str(v) for k, v in self.generators.items()},
            "relation": f"{self.relation} = 0",
            "action": self.action,
            "relation_holds": self.relation_holds,
            "invariant": self.invariant,
        }


def _surface_key(tag: str) -> str:
    text = tag.strip()
    boutroux = text.lower().endswith("boutroux")
    if boutroux:
        text = text[: -len("boutroux")].rstrip("_- ")
    if normalize_tag(text) != "P1":
        raise ValueError(f"the quotient surface is built for P_I only, got {tag!r}")
    return "P_I_boutroux" if boutroux else "P_I"


def _surface_relation(surface: Dict[str, str]) -> Tuple[sp.Expr, Tuple[sp.Symbol, sp.Symbol, sp.Symbol]]:
    U, V, W = sp.symbols("U V W")
    R = LaurentPoly.parse(surface["relation"]).to_expr()
    return V ** 2 - R, (U, V, W)


def surface_invariants(tag: str = "P_I") -> SurfaceModel:
    key = _surface_key(tag)
    surface = SURFACE_MODELS[key]
    maps = boutroux_coordinates("P1") if surface["coordinates"] == "boutroux" else painleve_coordinates("P1")
    m = next(mp for mp in maps if mp.sign_branch == 1)
    relation, (U, V, W) = _surface_relation(surface)

    V_base = LaurentPoly.parse(surface["V"]).to_expr()
    W_base = LaurentPoly.parse(surface["W"]).to_expr()
    U_base = sp.solve(relation, U)[0].subs({V: V_base, W: W_base}, simultaneous=True)
    base_generators = {"U": sp.expand(U_base), "V": V_base, "W": W_base}

    gens = m.symbols()
    images = m.images()
    where = f"{key} invariant generators"
    generators = {name: _require_polynomial(expr.subs(images, simultaneous=True), gens[:2], where)
                  for name, expr in base_generators.items()}

    residual = relation.subs({U: generators["U"], V: generators["V"], W: generators["W"]}, simultaneous=True)
    action = deck_action(m)
    invariant = all(_is_zero(g.subs(action, simultaneous=True) - g) for g in generators.values())
    model = SurfaceModel(key, m.target_variables, generators, base_generators, relation,
                         {str(k): str(v) for k, v in action.items()}, _is_zero(residual), invariant)
    logger.info(f"🧩 {key} 곡면: 관계식 {'성립' if model.relation_holds else '불성립'}, "
                f"Z2 불변 {'예' if invariant else '아니오'}")
    return model


@dataclass(frozen=True)
class SurfaceRegularity:
    """(V, W) 시스템의 W = 0 정칙성"""
    tag: str
    regular: bool
    apparent_pole_order: int
    reduced: Dict[str, sp.Expr] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.regular


def surface_system_regularity(tag: str) -> SurfaceRegularity:
    """곡면 관계식으로 V^2 를 줄인 뒤 W = 0 에서 극이 없는지 확인"""
    try:
        key = _surface_key(tag)
    except ValueError:
        key = None
    if key is None:
        atlas = soic_atlas(tag)
        return SurfaceRegularity(atlas.tag, True, 0, {f"{c.chart_map.label}:{k}": v
                                                      for c in atlas.charts for k, v in c.system.items()})

    surface = SURFACE_MODELS[key]
    relation, (U, V, W) = _surface_relation(surface)
    if surface["coordinates"] == "boutroux":
        names = BOUTROUX_BASE
        base = _boutroux_base_system("P1")
        F, G = base[names[0]], base[names[1]]
    else:
        names = ORIGINAL_BASE
        ode = builtin_ode("P1")
        F, G = ode.f.to_expr(), ode.g.to_expr()
    X, Y, S = _syms(names)
    V_base = LaurentPoly.parse(surface["V"]).to_expr()
    W_base = LaurentPoly.parse(surface["W"]).to_expr()
    back = sp.solve([sp.Eq(V, V_base), sp.Eq(W, W_base)], [X, Y], dict=True)
    if len(back) != 1:
        raise ValueError(f"(V, W) do not determine the base point uniquely: {back}")
    back = back[0]

    apparent = 0
    reduced = {}
    for name, gen in (("V", V_base), ("W", W_base)):
        rate = sp.diff(gen, X) * F + sp.diff(gen, Y) * G + sp.diff(gen, S)
        rate = sp.cancel(sp.together(rate.subs(back, simultaneous=True)))
        num, den = sp.fraction(rate)
        if W in den.free_symbols:
            apparent = max(apparent, sp.degree(den, W))
        num = sp.rem(sp.expand(num), relation, V)
        reduced[name] = sp.cancel(num / den)
    regular = all(W not in sp.fraction(r)[1].free_symbols for r in reduced.values())
    logger.info(f"🔬 {key} (V, W) 시스템: 겉보기 극 차수 {apparent}, 관계식으로 줄인 뒤 "
                f"{'정칙' if regular else '특이'}")
    return SurfaceRegularity(key, regular, apparent, reduced)


# ---- rationality of the 2-forms -------------------------------------------------

@dataclass(frozen=True)
class TwoFormReport:
    """dx^dy, dH^dz 의 차트 유리성"""
    weights_divisible: bool
    index_ratio_integer: Optional[bool]
    charts: Dict[str, bool] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return (self.weights_divisible and self.index_ratio_integer is not False
                and all(self.charts.values()))

    def __bool__(self) -> bool:
        return self.holds


def _integral_exponents(expr: sp.Expr, var: sp.Symbol) -> bool:
    expr = sp.expand(sp.powsimp(sp.expand(expr), force=True))
    return all(term.as_coeff_exponent(var)[1].is_integer for term in sp.Add.make_args(expr) if term != 0)


def _minors(rows: Sequence[sp.Expr], gens: Sequence[sp.Symbol]) -> List[sp.Expr]:
    J = sp.Matrix(rows).jacobian(list(gens))
    return [J[0, i] * J[1, j] - J[0, j] * J[1, i] for i, j in combinations(range(len(gens)), 2)]


def rational_two_form_check(w: Weights, idx: Optional[CharacteristicIndex] = None,
                            hamiltonian: Optional[Any] = None) -> TwoFormReport:
    """각 차트 피복에서 dx^dy (와 dH^dz) 의 계수가 e 의 정수 거듭제곱만 갖는지"""
    hw = w.homogeneous()
    ratio_ok = None
    if idx is not None:
        l1, l2, l3 = idx.eigenvalues
        ratio_ok = bool(sp.simplify((l1 + l2) / l3).is_integer)
    H = None if hamiltonian is None else (
        hamiltonian.to_expr() if isinstance(hamiltonian, LaurentPoly) else sp.sympify(hamiltonian))

    charts = {}
    for chart in INFINITY_CHARTS:
        k = UNIT_SLOT[chart]
        names = slot_variables(chart)
        chart_syms = {slot: sp.Symbol(name, positive=True) for slot, name in names.items()}
        e = chart_syms[3]
        base = [e ** sp.Rational(-hw[slot], w.s) * (1 if slot == k else chart_syms[slot]) for slot in range(3)]
        gens = [chart_syms[slot] for slot in sorted(chart_syms)]
        forms = _minors(base[:2], gens)
        if H is not None:
            x, y, z = _syms(ORIGINAL_BASE)
            Hc = H.subs({x: base[0], y: base[1], z: base[2]}, simultaneous=True)
            forms += _minors([Hc, base[2]], gens)
        charts[chart.value] = all(_integral_exponents(f, e) for f in forms)

    report = TwoFormReport((w.p + w.q) % w.s == 0, ratio_ok, charts)
    logger.info(f"📏 2-형식 유리성 {w.as_tuple()}: {'성립' if report.holds else '불성립'}")
    return report


# ---- uniqueness of the polynomial system ---------------------------------------

@dataclass(frozen=True)
class UniquenessResult:
    """블로업 차트 다항성으로 결정되는 계수 족의 해"""
    tag: str
    unknowns: Tuple[str, ...]
    rank: int
    equations: int
    f: sp.Expr
    g: sp.Expr
    unique: bool
    matches_builtin: bool
    builtin_satisfies: bool


def _weighted_monomials(w: Weights, bound: int) -> List[Tuple[int, int, int]]:
    limit = [bound // wt if wt else 0 for wt in (w.p, w.q, w.r)]
    return [m for m in product(*(range(n + 1) for n in limit))
            if w.p * m[0] + w.q * m[1] + w.r * m[2] <= bound]


def _principal_equations(expr: sp.Expr, t: sp.Symbol, others: Sequence[sp.Symbol]) -> List[sp.Expr]:
    expr = sp.expand(expr)
    shift = -_min_exponent(expr, t)
    if shift <= 0:
        return []
    poly = sp.Poly(sp.expand(expr * t ** shift), t, *others)
    return [coeff for monom, coeff in poly.terms() if monom[0] < shift]


def polynomiality_uniqueness(tag: str) -> UniquenessResult:
    """가중 차수 이하 다항식 족에서 모든 블로업 차트가 다항식이 되는 (f, g) 를 정확히 풀기"""
    ode = builtin_ode(tag)
    w = builtin_weights(tag)
    x, y, z = _syms(ORIGINAL_BASE)
    f_monos = _weighted_monomials(w, w.p + w.s - w.r)
    g_monos = _weighted_monomials(w, w.q + w.s - w.r)
    a_syms = [sp.Symbol(f"a_{i}{j}{k}") for i, j, k in f_monos]
    b_syms = [sp.Symbol(f"b_{i}{j}{k}") for i, j, k in g_monos]
    F = sum(c * x ** i * y ** j * z ** k for c, (i, j, k) in zip(a_syms, f_monos))
    G = sum(c * x ** i * y ** j * z ** k for c, (i, j, k) in zip(b_syms, g_monos))
    unknowns = a_syms + b_syms

    equations = []
    for m in painleve_coordinates(tag):
        a, t, s = m.symbols()
        for expr in _transport(m, F, G).values():
            equations.extend(_principal_equations(expr, t, (a, s)))
    equations = [e for e in equations if e != 0]
    A, b = sp.linear_eq_to_matrix(equations, unknowns)
    solved = exact_linear_solve(A, b, square=False)
    values = dict(zip(unknowns, solved.solution))
    f_sol = sp.expand(F.subs(values, simultaneous=True))
    g_sol = sp.expand(G.subs(values, simultaneous=True))

    f_true, g_true = ode.f.to_expr(), ode.g.to_expr()
    truth = {}
    for syms_, monos, target in ((a_syms, f_monos, f_true), (b_syms, g_monos, g_true)):
        poly = sp.Poly(target, x, y, z)
        for c, mono in zip(syms_, monos):
            truth[c] = poly.coeff_monomial(x ** mono[0] * y ** mono[1] * z ** mono[2])
    satisfies = all(_is_zero(e.subs(truth, simultaneous=True)) for e in equations)

    result = UniquenessResult(
        tag=ode.name, unknowns=tuple(s.name for s in unknowns), rank=solved.rank,
        equations=len(equations), f=f_sol, g=g_sol, unique=not solved.singular,
        matches_builtin=_is_zero(f_sol - f_true) and _is_zero(g_sol - g_true),
        builtin_satisfies=satisfies,
    )
    logger.info(f"🎯 {ode.name} 다항성 유일성: 미지수 {len(unknowns)}개, 계수 {solved.rank}, "
                f"{'유일' if result.unique else '자유도 있음'}")
    return result
