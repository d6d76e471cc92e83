#!/usr/bin/env python3
"""
Orbifold Chart System
가중 사영공간 CP^3(p,q,r,s) 의 네 국소 차트, 전이 사상, 오비폴드 작용, 무한대 집합 제한
"""

import cmath
import logging
from fractions import Fraction
from enum import Enum
from dataclasses import dataclass
from typing import Dict, List, Optional, Any, Tuple, Mapping, Sequence

import mpmath
import sympy as sp

from laurent_algebra_system import (
    LaurentPoly, RationalFn, MonomialMap, FractionalMonomial, FractionalExponentError, substitute,
)
from newton_weight_system import PlanarODE, Weights, builtin_ode
from painleve_config import builtin_tags, load_builtin_system

logger = logging.getLogger('painleve.charts')

COVER_UNIFORMIZER = "_tau"
TRANSITION_UNIFORMIZER = "_sigma"
HOMOGENEOUS_SLOTS = ("x", "y", "z", "e")


class ChartId(Enum):
    ORIG = "orig"
    C1 = "c1"
    C2 = "c2"
    C3 = "c3"


CHART_VARIABLES: Dict[ChartId, Tuple[str, str, str]] = {
    ChartId.ORIG: ("x", "y", "z"),
    ChartId.C1: ("Y1", "Z1", "e1"),
    ChartId.C2: ("X2", "Z2", "e2"),
    ChartId.C3: ("X3", "Y3", "e3"),
}

# homogeneous slot fixed to one in each chart
UNIT_SLOT: Dict[ChartId, int] = {ChartId.C1: 0, ChartId.C2: 1, ChartId.C3: 2, ChartId.ORIG: 3}

INFINITY_CHARTS = (ChartId.C1, ChartId.C2, ChartId.C3)


class ChartDescentError(ValueError):
    """Z_s 불변성 실패로 차트 방정식이 내려오지 않음"""


def chart_id(value: Any) -> ChartId:
    return value if isinstance(value, ChartId) else ChartId(str(value).lower())


def slot_variables(chart: ChartId) -> Dict[int, str]:
    """동차 슬롯 인덱스 -> 차트 변수명"""
    names = CHART_VARIABLES[chart]
    free_slots = [i for i in range(4) if i != UNIT_SLOT[chart]]
    return dict(zip(free_slots, names))


@dataclass(frozen=True)
class OrbifoldAction:
    """순환군 작용 (지수 잉여로 표현)"""
    order: int
    residues: Tuple[Tuple[str, int], ...]

    def residue(self, name: str) -> int:
        return dict(self.residues).get(name, 0)

    def monomial_residue(self, mono) -> int:
        table = dict(self.residues)
        return sum(table.get(n, 0) * e for n, e in mono) % self.order

    def multipliers(self, power: int = 1) -> Dict[str, complex]:
        omega = cmath.exp(2j * cmath.pi / self.order)
        return {n: omega ** ((r * power) % self.order) for n, r in self.residues}

    def apply_numeric(self, point: Mapping[str, complex], power: int = 1) -> Dict[str, complex]:
        mult = self.multipliers(power)
        return {n: v * mult.get(n, 1) for n, v in point.items()}

    def as_map(self, power: int = 1) -> MonomialMap:
        """작용을 가우스 유리수 계수 맵으로 (위수 1, 2, 4 만 정확)"""
        if self.order not in (1, 2, 4):
            raise ValueError(f"order {self.order} action has no Gaussian-rational form")
        unit = {1: sp.Integer(1), 2: sp.Integer(-1), 4: sp.I}[self.order]
        return MonomialMap({n: LaurentPoly.from_expr(unit ** ((r * power) % self.order) * sp.Symbol(n))
                            for n, r in self.residues})


@dataclass(frozen=True)
class PlanarField:
    """무한대 집합 위 2 변수 다항식 벡터장"""
    variables: Tuple[str, str]
    components: Tuple[LaurentPoly, LaurentPoly]

    def evaluate(self, point: Mapping[str, complex]) -> Tuple[complex, complex]:
        return tuple(c.evaluate(point) for c in self.components)


@dataclass(frozen=True)
class ChartVectorField:
    """오비폴드 차트의 자율 다항식 벡터장"""
    chart: ChartId
    variables: Tuple[str, str, str]
    components: Tuple[LaurentPoly, LaurentPoly, LaurentPoly]
    weights: Weights
    orientation: int = 1
    name: str = "custom"

    @property
    def orbifold_order(self) -> int:
        return self.weights.homogeneous()[UNIT_SLOT[self.chart]]

    @property
    def orbifold_action(self) -> OrbifoldAction:
        w = self.weights.homogeneous()
        order = self.orbifold_order
        residues = tuple((name, w[slot] % order) for slot, name in slot_variables(self.chart).items())
        return OrbifoldAction(order, residues)

    @property
    def epsilon_variable(self) -> Optional[str]:
        return None if self.chart is ChartId.ORIG else self.variables[2]

    @property
    def parameters(self):
        return frozenset().union(*(c.parameters for c in self.components))

    def component(self, name: str) -> LaurentPoly:
        return self.components[self.variables.index(name)]

    def as_dict(self) -> Dict[str, LaurentPoly]:
        return dict(zip(self.variables, self.components))

    def evaluate(self, point: Mapping[str, complex]) -> Tuple[complex, complex, complex]:
        return tuple(c.evaluate(point) for c in self.components)

    def to_text(self) -> Dict[str, str]:
        return {name: comp.to_text() for name, comp in zip(self.variables, self.components)}

    def sympy_components(self) -> List[sp.Expr]:
        return [c.to_expr() for c in self.components]

    def jacobian(self) -> sp.Matrix:
        syms = [sp.Symbol(v) for v in self.variables]
        return sp.Matrix(self.sympy_components()).jacobian(syms)


def _matching_builtin(ode: PlanarODE, w: Weights) -> Optional[str]:
    """같은 가중치와 주요부를 갖는 내장 시스템 태그 (차트 부호는 주요부만으로 정해진다)"""
    principal = ode.principal_part(w)
    for tag in builtin_tags():
        known = load_builtin_system(tag)
        if tuple(known.weights) != w.as_tuple():
            continue
        top = builtin_ode(tag).principal_part(w)
        if (top.f, top.g) == (principal.f, principal.g):
            return tag
    return None


def _default_orientation(ode: PlanarODE, w: Weights, chart: ChartId) -> int:
    if chart is ChartId.ORIG:
        return 1
    try:
        system = load_builtin_system(ode.name)
    except ValueError:
        tag = _matching_builtin(ode, w)
        if tag is None:
            return 1
        system = load_builtin_system(tag)
        logger.debug(f"🧭 {ode.name}: 주요부가 {system.name} 과 같아 차트 부호를 따름")
    return int(system.chart_orientation.get(chart.value, 1))


def to_chart(ode: PlanarODE, w: Weights, chart: Any, orientation: Optional[int] = None) -> ChartVectorField:
    """순환 피복 매개화로 차트 방정식 유도 후 분모 제거"""
    chart = chart_id(chart)
    if chart is ChartId.ORIG:
        return ChartVectorField(chart, CHART_VARIABLES[chart],
                                (ode.f, ode.g, LaurentPoly.one()), w, 1, ode.name)

    weights = w.homogeneous()
    k = UNIT_SLOT[chart]
    wk = weights[k]
    tau = LaurentPoly.variable(COVER_UNIFORMIZER)
    names = slot_variables(chart)

    images = {}
    for slot in range(3):
        source = HOMOGENEOUS_SLOTS[slot]
        if slot == k:
            images[source] = tau ** -wk
        else:
            images[source] = LaurentPoly.variable(names[slot]) * tau ** -weights[slot]
    rhs = (ode.f, ode.g, LaurentPoly.one())
    pulled = [substitute(F, MonomialMap(images)) for F in rhs]

    raw = []
    for slot, name in names.items():
        if slot == 3:
            raw.append(-w.s * tau ** (w.s + wk) * pulled[k])
        else:
            var = LaurentPoly.variable(name)
            raw.append(wk * pulled[slot] * tau ** weights[slot] - weights[slot] * var * tau ** wk * pulled[k])

    shift = min(c.min_degree_in(COVER_UNIFORMIZER) for c in raw if not c.is_zero())
    eps_name = names[3]
    descend = MonomialMap({COVER_UNIFORMIZER: FractionalMonomial.of({eps_name: Fraction(1, w.s)})})
    if orientation is None:
        orientation = _default_orientation(ode, w, chart)
    components = []
    for comp in raw:
        cleared = comp.shift({COVER_UNIFORMIZER: -shift})
        try:
            components.append(orientation * substitute(cleared, descend, keep_unmapped=True))
        except FractionalExponentError as exc:
            raise ChartDescentError(f"not Z_{w.s}-invariant in chart {chart.value}: {exc}") from exc
    vf = ChartVectorField(chart, CHART_VARIABLES[chart], tuple(components), w, orientation, ode.name)
    logger.info(f"🗺️ {ode.name} 차트 {chart.value} 벡터장 유도 완료")
    return vf


def all_charts(ode: PlanarODE, w: Weights) -> Dict[ChartId, ChartVectorField]:
    return {c: to_chart(ode, w, c) for c in INFINITY_CHARTS}


def nonautonomous_rhs(vf: ChartVectorField) -> Tuple[RationalFn, RationalFn]:
    """(dV1/de, dV2/de) = (성분1/성분3, 성분2/성분3)"""
    if vf.chart is ChartId.ORIG:
        return (RationalFn(vf.components[0]), RationalFn(vf.components[1]))
    c1, c2, c3 = vf.components
    return (RationalFn(c1, c3), RationalFn(c2, c3))


def infinity_restriction(vf: ChartVectorField) -> PlanarField:
    if vf.chart is ChartId.ORIG:
        raise ValueError("the original chart does not meet the infinity set")
    eps = vf.epsilon_variable
    return PlanarField(vf.variables[:2], tuple(c.set_zero(eps) for c in vf.components[:2]))


def orbifold_character(vf: ChartVectorField) -> Optional[int]:
    """공통 지표 chi (성분 V 의 단항식 잉여 = res(V) + chi), 없으면 None"""
    action = vf.orbifold_action
    chi = None
    for name, comp in zip(vf.variables, vf.components):
        target = action.residue(name)
        for mono in comp.monomials():
            value = (action.monomial_residue(mono) - target) % action.order
            if chi is None:
                chi = value
            elif value != chi:
                return None
    return 0 if chi is None else chi


def orbifold_action_check(vf: ChartVectorField) -> bool:
    """시간 재매개화까지 포함한 순환 작용 동변성"""
    return orbifold_character(vf) is not None


# ---- transitions -----------------------------------------------------------

@dataclass(frozen=True)
class CoverTransition:
    """순환 피복 위 전이 사상: uniformizer^(-degree) = source 좌표"""
    source: ChartId
    target: ChartId
    images: MonomialMap
    uniformizer: Optional[str]
    coordinate: Optional[str]
    cover_degree: int

    def relation(self) -> Optional[Tuple[str, int, str]]:
        if self.uniformizer is None:
            return None
        return (self.uniformizer, -self.cover_degree, self.coordinate)


def homogeneous_coordinates(chart: ChartId) -> List[Optional[str]]:
    """차트 변수의 동차 좌표 슬롯 배치 (단위 슬롯은 None)"""
    names = slot_variables(chart)
    return [names.get(i) for i in range(4)]


def transition_map(w: Weights, source: Any, target: Any) -> CoverTransition:
    source, target = chart_id(source), chart_id(target)
    if source is target:
        return CoverTransition(source, target, MonomialMap.identity(CHART_VARIABLES[source]),
                               None, None, 1)
    weights = w.homogeneous()
    src = homogeneous_coordinates(source)
    k = UNIT_SLOT[target]
    coordinate = src[k]
    sigma = LaurentPoly.variable(TRANSITION_UNIFORMIZER)
    images = {}
    for slot, name in slot_variables(target).items():
        base = LaurentPoly.one() if src[slot] is None else LaurentPoly.variable(src[slot])
        images[name] = base * sigma ** weights[slot]
    return CoverTransition(source, target, MonomialMap(images), TRANSITION_UNIFORMIZER,
                           coordinate, weights[k])


def apply_transition_numeric(t: CoverTransition, point: Mapping[str, complex],
                             branch: int = 0) -> Dict[str, complex]:
    values = {n: complex(v) for n, v in point.items()}
    if t.uniformizer is not None:
        coord = values[t.coordinate]
        if coord == 0:
            raise ZeroDivisionError(f"{t.coordinate} = 0 lies outside chart {t.target.value}")
        root = coord ** (-1.0 / t.cover_degree)
        values[t.uniformizer] = root * cmath.exp(2j * cmath.pi * branch / t.cover_degree)
    return {n: img.evaluate(values) for n, img in t.images.images.items()}


def transported_field_parallel(source_vf: ChartVectorField, target_vf: ChartVectorField,
                               point: Mapping[str, complex], branch: int = 0,
                               step: float = 1e-6) -> float:
    """전이 사상으로 밀어낸 벡터와 대상 차트 벡터장의 평행도 (사인값)"""
    t = transition_map(source_vf.weights, source_vf.chart, target_vf.chart)
    direction = source_vf.evaluate(point)
    plus = {n: point[n] + step * d for n, d in zip(source_vf.variables, direction)}
    minus = {n: point[n] - step * d for n, d in zip(source_vf.variables, direction)}
    for extra in point:
        plus.setdefault(extra, point[extra])
        minus.setdefault(extra, point[extra])
    fp = apply_transition_numeric(t, plus, branch)
    fm = apply_transition_numeric(t, minus, branch)
    pushed = [(fp[n] - fm[n]) / (2 * step) for n in target_vf.variables]
    mapped = apply_transition_numeric(t, point, branch)
    mapped.update({n: point[n] for n in point if n not in source_vf.variables})
    field = target_vf.evaluate(mapped)
    cross = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            cross += abs(pushed[i] * field[j] - pushed[j] * field[i]) ** 2
    norm = sum(abs(v) ** 2 for v in pushed) ** 0.5 * sum(abs(v) ** 2 for v in field) ** 0.5
    return cross ** 0.5 / norm if norm else 0.0


def _bezout(values: Sequence[int]) -> Tuple[int, List[int]]:
    g, coeffs = values[0], [1] + [0] * (len(values) - 1)
    for idx in range(1, len(values)):
        a, b = g, values[idx]
        x0, x1, y0, y1 = 1, 0, 0, 1
        while b:
            q = a // b
            a, b = b, a - q * b
            x0, x1 = x1, x0 - q * x1
            y0, y1 = y1, y0 - q * y1
        coeffs = [c * x0 for c in coeffs]
        coeffs[idx] = y0
        g = a
    return g, coeffs


def _to_mpc(value: Any) -> mpmath.mpc:
    if isinstance(value, (int, float, complex)):
        return mpmath.mpc(value)
    re_part, im_part = sp.N(sp.sympify(value), 40).as_real_imag()
    return mpmath.mpc(mpmath.mpf(str(re_part)), mpmath.mpf(str(im_part)))


def weighted_equivalent(weights: Sequence[int], a: Sequence[Any], b: Sequence[Any],
                        tol: float = 1e-20) -> bool:
    """[a] = [b] in CP^3(weights): lambda^w_i a_i = b_i 인 lambda 존재"""
    with mpmath.workdps(40):
        va = [_to_mpc(v) for v in a]
        vb = [_to_mpc(v) for v in b]
        support = []
        for i, (x, y) in enumerate(zip(va, vb)):
            zero_a, zero_b = abs(x) < tol ** 0.5, abs(y) < tol ** 0.5
            if zero_a != zero_b:
                return False
            if not zero_a:
                support.append(i)
        if not support:
            return False
        ratios = [vb[i] / va[i] for i in support]
        exps = [weights[i] for i in support]
        g, coeffs = _bezout(exps)
        mu = mpmath.mpc(1)
        for ratio, c in zip(ratios, coeffs):
            mu *= ratio ** c
        base = mu ** (mpmath.mpf(1) / g)
        for j in range(g):
            lam = base * mpmath.exp(2j * mpmath.pi * j / g)
            if all(abs(lam ** e - r) < 1e-12 * max(1, abs(r)) for e, r in zip(exps, ratios)):
                return True
        return False


def chart_point_homogeneous(chart: ChartId, point: Sequence[Any]) -> List[Any]:
    """차트 점 -> 동차 4-벡터 (단위 슬롯 1)"""
    slots = homogeneous_coordinates(chart_id(chart))
    values = iter(point)
    return [1 if name is None else next(values) for name in slots]


def same_orbifold_point(w: Weights, chart_a: Any, point_a: Sequence[Any],
                        chart_b: Any, point_b: Sequence[Any]) -> bool:
    return weighted_equivalent(w.homogeneous(),
                               chart_point_homogeneous(chart_id(chart_a), point_a),
                               chart_point_homogeneous(chart_id(chart_b), point_b))
