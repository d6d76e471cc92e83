#!/usr/bin/env python3
"""
Weyl Symmetry System
확장 아핀 바일 군 생성원 (P_II, P_IV) 의 쌍유리 작용, 베클룬트 검증, 차트 확장, 무한대 집합 위 작용
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Any, Tuple, Union

import sympy as sp

from laurent_algebra_system import RationalFn, LaurentAlgebraError, parse_expression
from newton_weight_system import PlanarODE, Weights, builtin_ode, builtin_weights
from orbifold_chart_system import (
    ChartId, CHART_VARIABLES, INFINITY_CHARTS, UNIT_SLOT, chart_id, slot_variables, to_chart,
)
from painleve_config import load_builtin_system, load_system_config, normalize_tag

logger = logging.getLogger('painleve.weyl')

STATE_NAMES = ("x", "y", "z")
REFLECTION = "reflection"
AUTOMORPHISM = "automorphism"
MAX_ORDER = 12

_OMEGA = sp.Symbol("_omega")
_SIGMA = sp.Symbol("_sigma", positive=True)
_EPS = sp.Symbol("_eps", positive=True)


class BacklundMismatchError(ValueError):
    """베클룬트 항등식 불성립"""

    def __init__(self, name: str, residual: Dict[str, Any]):
        self.residual = residual
        shown = ", ".join(f"{k}: {v}" for k, v in residual.items())
        super().__init__(f"{name} does not map the system to itself: {shown}")


class NonRationalExtensionError(ValueError):
    """차트 확장이 차트 변수의 유리식으로 내려오지 않음"""


@dataclass(frozen=True)
class BirationalAction:
    """매개변수 사상과 변수 사상으로 주어진 쌍유리 작용"""
    name: str
    parameter_map: Tuple[Tuple[str, sp.Expr], ...]
    variable_map: Tuple[Tuple[str, sp.Expr], ...]
    kind: str = AUTOMORPHISM
    tag: str = "custom"

    @classmethod
    def build(cls, name: str, parameters: Dict[str, Any], variables: Dict[str, Any],
              kind: str = AUTOMORPHISM, tag: str = "custom") -> 'BirationalAction':
        def convert(value):
            return parse_expression(value) if isinstance(value, str) else sp.sympify(value)

        return cls(name,
                   tuple(sorted((k, convert(v)) for k, v in parameters.items())),
                   tuple(sorted((k, convert(v)) for k, v in variables.items())),
                   kind, tag)

    @classmethod
    def identity(cls, parameters: Tuple[str, ...] = (), tag: str = "custom") -> 'BirationalAction':
        return cls.build("id", {p: sp.Symbol(p) for p in parameters}, {}, AUTOMORPHISM, tag)

    @property
    def parameters(self) -> Tuple[str, ...]:
        return tuple(k for k, _ in self.parameter_map)

    def parameter_image(self, name: str) -> sp.Expr:
        return dict(self.parameter_map).get(name, sp.Symbol(name))

    def image(self, name: str) -> sp.Expr:
        """변수 상 (사상에 없으면 항등)"""
        return dict(self.variable_map).get(name, sp.Symbol(name))

    def substitution(self) -> Dict[sp.Symbol, sp.Expr]:
        subs = {sp.Symbol(n): self.image(n) for n in STATE_NAMES}
        subs.update({sp.Symbol(p): self.parameter_image(p) for p in self.parameters})
        return subs

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "parameters": {k: str(v) for k, v in self.parameter_map},
            "variables": {n: str(self.image(n)) for n in STATE_NAMES},
        }


def compose(a: BirationalAction, b: BirationalAction, name: Optional[str] = None) -> BirationalAction:
    """a∘b: b 를 먼저 적용"""
    subs = b.substitution()
    names = sorted(set(a.parameters) | set(b.parameters))
    params = {p: sp.cancel(a.parameter_image(p).subs(subs, simultaneous=True)) for p in names}
    variables = {n: sp.cancel(a.image(n).subs(subs, simultaneous=True)) for n in STATE_NAMES}
    return BirationalAction.build(name or f"{a.name}*{b.name}", params, variables, AUTOMORPHISM, a.tag)


def power(a: BirationalAction, n: int) -> BirationalAction:
    result = BirationalAction.identity(a.parameters, a.tag)
    for _ in range(n):
        result = compose(a, result)
    return BirationalAction(f"{a.name}^{n}", result.parameter_map, result.variable_map, a.kind, a.tag)


def builtin_group(tag: str) -> List[BirationalAction]:
    """설정 파일의 생성원 표 로드 (P_II: s1, pi / P_IV: s0, s1, s2, pi, sigma1, sigma2)"""
    key = normalize_tag(tag)
    entry = load_system_config()["systems"][key]
    table = entry.get("weyl")
    if not table:
        raise ValueError(f"no Weyl group table for {entry['name']} in scope")
    return [BirationalAction.build(name, row.get("parameters") or {}, row.get("variables") or {},
                                   row.get("kind", AUTOMORPHISM), key)
            for name, row in table.items()]


def generator(tag: str, name: str) -> BirationalAction:
    for a in builtin_group(tag):
        if a.name == name:
            return a
    raise KeyError(f"{tag} has no generator {name!r}")


# ---- Backlund identity ------------------------------------------------------

def _derivation(ode: PlanarODE):
    x, y, z = sp.symbols(STATE_NAMES)
    f, g = ode.f.to_expr(), ode.g.to_expr()
    return lambda expr: sp.diff(expr, z) + f * sp.diff(expr, x) + g * sp.diff(expr, y)


def _numerator(expr: sp.Expr) -> sp.Expr:
    return sp.expand(sp.numer(sp.cancel(sp.together(expr))))


def _vanishes(expr: sp.Expr) -> bool:
    try:
        return _numerator(expr) == 0
    except sp.PolynomialError:
        return sp.simplify(expr) == 0


def backlund_residuals(ode: PlanarODE, a: BirationalAction) -> Dict[str, sp.Expr]:
    """D(x~) - f~ D(z~), D(y~) - g~ D(z~) 의 분자"""
    D = _derivation(ode)
    subs = a.substitution()
    images = [a.image(n) for n in STATE_NAMES]
    dz = D(images[2])
    out = {}
    for name, target, rhs in (("x", images[0], ode.f), ("y", images[1], ode.g)):
        mapped = rhs.to_expr().subs(subs, simultaneous=True)
        out[name] = _numerator(D(target) - mapped * dz)
    return out


@dataclass(frozen=True)
class BacklundCheck:
    """베클룬트 검증 결과"""
    name: str
    holds: bool
    residuals: Dict[str, str] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds


def verify_backlund(ode: PlanarODE, a: BirationalAction, strict: bool = False) -> BacklundCheck:
    """형식 미분으로 a 가 시스템을 같은 형태의 시스템으로 보내는지 검증"""
    residuals = backlund_residuals(ode, a)
    bad = {k: v for k, v in residuals.items() if v != 0}
    check = BacklundCheck(a.name, not bad, {k: str(v) for k, v in bad.items()})
    if bad:
        logger.warning(f"⚠️ {ode.name} {a.name}: 베클룬트 항등식 불성립")
        if strict:
            raise BacklundMismatchError(a.name, check.residuals)
    else:
        logger.info(f"✅ {ode.name} {a.name}: 베클룬트 항등식 성립")
    return check


def solve_parameter_map(ode: PlanarODE, variables: Dict[str, Any]) -> Dict[str, sp.Expr]:
    """변수 사상만 주어졌을 때 베클룬트 항등식을 만족하는 매개변수 사상을 푼다"""
    names = sorted(ode.parameters)
    unknowns = {p: sp.Symbol(f"_new_{p}") for p in names}
    trial = BirationalAction.build("trial", unknowns, variables)
    eqs = []
    for residual in backlund_residuals(ode, trial).values():
        if residual != 0:
            eqs.extend(sp.Poly(residual, *sp.symbols(STATE_NAMES)).coeffs())
    solution = sp.solve(eqs, list(unknowns.values()), dict=True)
    if len(solution) != 1:
        raise ValueError(f"parameter map not determined: {len(solution)} solutions")
    return {p: sp.expand(solution[0].get(s, s)) for p, s in unknowns.items()}


# ---- group structure --------------------------------------------------------

def orbifold_generator(w: Weights, parameters: Tuple[str, ...] = (), omega: Any = _OMEGA,
                       tag: str = "custom") -> BirationalAction:
    """Z_s 생성원 (x, y, z) -> (w^p x, w^q y, w^r z)"""
    variables = {n: omega ** k * sp.Symbol(n) for n, k in zip(STATE_NAMES, (w.p, w.q, w.r))}
    return BirationalAction.build("orbifold", {p: sp.Symbol(p) for p in parameters}, variables,
                                  AUTOMORPHISM, tag)


def _reduce_root_of_unity(expr: sp.Expr, s: int) -> sp.Expr:
    if not expr.has(_OMEGA):
        return expr
    return sp.expand(sp.rem(sp.expand(expr), sp.cyclotomic_poly(s, _OMEGA), _OMEGA))


def actions_equal(a: BirationalAction, b: BirationalAction, s: Optional[int] = None) -> bool:
    """변수와 매개변수 위 유리 사상으로서의 동일성 (s 가 있으면 1 의 원시 s 제곱근을 약분)"""
    pairs = [(a.image(n), b.image(n)) for n in STATE_NAMES]
    pairs += [(a.parameter_image(p), b.parameter_image(p))
              for p in sorted(set(a.parameters) | set(b.parameters))]
    for lhs, rhs in pairs:
        num = _numerator(lhs - rhs)
        if s is not None:
            num = _reduce_root_of_unity(num, s)
        if num != 0:
            return False
    return True


def _is_identity(a: BirationalAction) -> bool:
    return actions_equal(a, BirationalAction.identity(a.parameters, a.tag))


def _orbifold_power(a: BirationalAction, w: Weights, n: int) -> Optional[int]:
    """a^n 이 Z_s 생성원의 거듭제곱이면 그 지수"""
    orb = orbifold_generator(w, a.parameters, tag=a.tag)
    target = power(a, n)
    for k in range(1, w.s):
        if actions_equal(target, power(orb, k), w.s):
            return k
    return None


@dataclass
class GroupRelations:
    """생성원 위수와 관계식"""
    tag: str
    orders: Dict[str, Optional[int]]
    orbifold_powers: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    reflections_involutive: bool = False

    @property
    def holds(self) -> bool:
        return self.reflections_involutive and all(o is not None for o in self.orders.values())

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            "orders": self.orders,
            "orbifold_powers": {k: {"power": v[0], "orbifold_exponent": v[1]}
                                for k, v in self.orbifold_powers.items()},
            "reflections_involutive": self.reflections_involutive,
            "holds": self.holds,
        }


def group_relations(tag: str) -> GroupRelations:
    """반사의 대합성과 자기동형의 유한 위수 검증 (Z_s 작용과 일치하는 거듭제곱 기록)"""
    w = builtin_weights(tag)
    orders, orbifold_powers = {}, {}
    for a in builtin_group(tag):
        orders[a.name] = None
        current = a
        for n in range(1, MAX_ORDER + 1):
            if _is_identity(current):
                orders[a.name] = n
                break
            if a.name not in orbifold_powers:
                k = _orbifold_power(a, w, n)
                if k is not None:
                    orbifold_powers[a.name] = (n, k)
            current = compose(a, current)
    reflections = [a.name for a in builtin_group(tag) if a.kind == REFLECTION]
    report = GroupRelations(normalize_tag(tag), orders, orbifold_powers,
                            all(orders[n] == 2 for n in reflections))
    logger.info(f"🔁 {tag} 생성원 위수: {orders}")
    return report


def composition_table(tag: str) -> Dict[str, Dict[str, Optional[str]]]:
    """a∘b 를 항등, 생성원, Z_s 작용 중 무엇과 같은지로 분류 (일치 없으면 None)"""
    group = builtin_group(tag)
    w = builtin_weights(tag)
    params = group[0].parameters
    references = [("id", BirationalAction.identity(params, group[0].tag), None)]
    references += [(g.name, g, None) for g in group]
    orb = orbifold_generator(w, params, tag=group[0].tag)
    references += [(f"orbifold^{k}", power(orb, k), w.s) for k in range(1, w.s)]

    table: Dict[str, Dict[str, Optional[str]]] = {}
    for a in group:
        row = {}
        for b in group:
            product_ = compose(a, b)
            row[b.name] = next((label for label, ref, s in references
                                if actions_equal(product_, ref, s)), None)
        table[a.name] = row
    return table


def commutes_with_zs_action(a: BirationalAction, w: Weights) -> bool:
    """a 와 Z_s 작용 (1-의 원시 s 제곱근) 의 교환성"""
    orb = orbifold_generator(w, a.parameters, tag=a.tag)
    return actions_equal(compose(a, orb), compose(orb, a), w.s)


# ---- extension to the orbifold charts ----------------------------------------

@dataclass(frozen=True)
class ChartAction:
    """차트 변수로 쓴 작용"""
    name: str
    chart: ChartId
    variables: Tuple[str, str, str]
    images: Tuple[Tuple[str, sp.Expr], ...]
    parameter_map: Tuple[Tuple[str, sp.Expr], ...] = ()
    rational: bool = True
    equivariant: Optional[bool] = None

    def image(self, name: str) -> sp.Expr:
        return dict(self.images).get(name, sp.Symbol(name))

    def restrict_to_infinity(self) -> Dict[str, sp.Expr]:
        """eps -> 0 극한 (무한대 집합 위 작용)"""
        eps = sp.Symbol(self.variables[2])
        return {n: _limit_at_zero(self.image(n), eps) for n in self.variables[:2]}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "chart": self.chart.value,
            "images": {k: str(v) for k, v in self.images},
            "rational": self.rational,
            "equivariant": self.equivariant,
        }


def _limit_at_zero(expr: sp.Expr, eps: sp.Symbol) -> sp.Expr:
    value = sp.simplify(expr.subs(eps, 0))
    if value.has(sp.nan, sp.zoo, sp.oo, -sp.oo):
        value = sp.limit(expr, eps, 0, "+")
    return sp.simplify(value)


def _descend(expr: sp.Expr, s: int) -> sp.Expr:
    """덮개 좌표 sigma 를 eps = sigma^s 로 치환"""
    out = sp.powsimp(sp.expand_power_base(expr.subs(_SIGMA, _EPS ** sp.Rational(1, s)), force=True), force=True)
    return sp.cancel(sp.together(out))


def _is_rational(expr: sp.Expr) -> bool:
    if not expr.is_rational_function(*sorted(expr.free_symbols, key=lambda s: s.name)):
        return False
    try:
        RationalFn.from_expr(expr)
    except (LaurentAlgebraError, sp.PolynomialError, TypeError, ValueError):
        return False
    return True


def _chart_orbifold_images(w: Weights, chart: ChartId) -> Optional[Dict[sp.Symbol, sp.Expr]]:
    hw = w.homogeneous()
    order = hw[UNIT_SLOT[chart]]
    if order not in (1, 2, 4):
        return None
    unit = {1: sp.Integer(1), 2: sp.Integer(-1), 4: sp.I}[order]
    return {sp.Symbol(n): unit ** (hw[slot] % order) * sp.Symbol(n) for slot, n in slot_variables(chart).items()}


def _equivariant(images: Dict[str, sp.Expr], w: Weights, chart: ChartId) -> Optional[bool]:
    act = _chart_orbifold_images(w, chart)
    if act is None:
        return None
    for n, expr in images.items():
        lhs = expr.subs(act, simultaneous=True)
        rhs = act[sp.Symbol(n)].subs(sp.Symbol(n), expr)
        if _numerator(lhs - rhs) != 0:
            return False
    return True


def extend_to_chart(a: BirationalAction, w: Weights, chart: Any, require_rational: bool = False) -> ChartAction:
    """덮개 위 차트 전이로 켤레시켜 작용을 차트 변수로 옮긴다"""
    chart = chart_id(chart)
    if chart is ChartId.ORIG:
        return ChartAction(a.name, chart, CHART_VARIABLES[chart],
                           tuple((n, a.image(n)) for n in STATE_NAMES), a.parameter_map)
    if not commutes_with_zs_action(a, w):
        raise ValueError(f"{a.name} does not commute with the Z_{w.s} action")

    hw = w.homogeneous()
    unit = UNIT_SLOT[chart]
    names = slot_variables(chart)
    syms = {slot: sp.Symbol(n) for slot, n in names.items()}
    base = {}
    for slot, n in enumerate(STATE_NAMES):
        factor = sp.Integer(1) if slot == unit else syms[slot]
        base[sp.Symbol(n)] = factor * _SIGMA ** (-hw[slot])
    lifted = [sp.cancel(a.image(n).subs(base, simultaneous=True)) for n in STATE_NAMES]
    rho = sp.simplify(lifted[unit] * _SIGMA ** hw[unit])
    new_sigma = _SIGMA * rho ** sp.Rational(-1, hw[unit])

    images = {}
    eps_name = names[3]
    for slot, n in names.items():
        expr = new_sigma ** hw[3] if slot == 3 else lifted[slot] * new_sigma ** hw[slot]
        images[n] = _descend(expr, hw[3]).subs(_EPS, sp.Symbol(eps_name))
    rational = all(_is_rational(e) for e in images.values())
    if require_rational and not rational:
        raise NonRationalExtensionError(f"{a.name} is not rational on chart {chart.value}")
    equivariant = _equivariant(images, w, chart) if rational else None
    result = ChartAction(a.name, chart, CHART_VARIABLES[chart],
                         tuple((n, images[n]) for n in CHART_VARIABLES[chart]), a.parameter_map,
                         rational, equivariant)
    logger.debug(f"🗺️ {a.name} -> {chart.value}: 유리 {rational}, 동변 {equivariant}")
    return result


def orbifold_chart_action(tag: str, chart: Any = ChartId.C3) -> ChartAction:
    """차트 덮개 순환군의 생성원 (예: P_I 의 c3 에서 Z4)"""
    chart = chart_id(chart)
    w = builtin_weights(tag)
    vf = to_chart(builtin_ode(tag), w, chart)
    mapping = vf.orbifold_action.as_map()
    images = tuple((n, mapping.images[n].to_expr() if n in mapping.images else sp.Symbol(n))
                   for n in vf.variables)
    return ChartAction(f"Z{vf.orbifold_order}", chart, vf.variables, images, (), True, True)


# ---- action on the infinity set ---------------------------------------------

def boutroux_hamiltonian(tag: str, chart: ChartId = ChartId.C3) -> sp.Expr:
    """부트루 해밀토니안을 차트 변수로"""
    X, Y = sp.symbols("X Y")
    names = CHART_VARIABLES[chart]
    H = parse_expression(load_builtin_system(tag).boutroux_text)
    return H.subs({X: sp.Symbol(names[0]), Y: sp.Symbol(names[1])}, simultaneous=True)


def hamiltonian_character(H: sp.Expr, images: Dict[str, sp.Expr]) -> Optional[sp.Expr]:
    """H∘g = c H 인 상수 c (없으면 None)"""
    mapped = H.subs({sp.Symbol(k): v for k, v in images.items()}, simultaneous=True)
    ratio = sp.cancel(sp.together(mapped / H))
    free = ratio.free_symbols & H.free_symbols
    return None if free else sp.simplify(ratio)


@dataclass(frozen=True)
class InfinityActionReport:
    """무한대 집합 위 작용 보고"""
    name: str
    trivial_on_infinity: bool
    foliation_character: Optional[sp.Expr]
    restriction: Dict[str, str] = field(default_factory=dict)
    charts_checked: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "trivial_on_infinity": self.trivial_on_infinity,
            "foliation_character": None if self.foliation_character is None else str(self.foliation_character),
            "restriction": self.restriction,
            "charts": list(self.charts_checked),
        }


def infinity_action_report(a: Union[BirationalAction, ChartAction], w: Optional[Weights] = None,
                           tag: Optional[str] = None) -> InfinityActionReport:
    """eps = 0 에서의 작용: 항등 여부와 부트루 해밀토니안의 상수 배 c_g"""
    if tag is None and isinstance(a, BirationalAction):
        tag = a.tag
    if isinstance(a, ChartAction):
        chart_actions = [a]
    else:
        w = w or builtin_weights(tag)
        chart_actions = [extend_to_chart(a, w, c) for c in INFINITY_CHARTS]

    trivial = True
    for ca in chart_actions:
        limit = ca.restrict_to_infinity()
        if not all(_vanishes(v - sp.Symbol(n)) for n, v in limit.items()):
            trivial = False
    c3 = next((ca for ca in chart_actions if ca.chart is ChartId.C3), chart_actions[0])
    restriction = c3.restrict_to_infinity()
    character = None
    if tag is not None and c3.chart is ChartId.C3:
        character = hamiltonian_character(boutroux_hamiltonian(tag), restriction)
    report = InfinityActionReport(a.name, trivial, character, {k: str(v) for k, v in restriction.items()},
                                  tuple(ca.chart.value for ca in chart_actions))
    logger.info(f"♾️ {a.name}: 무한대 위 {'자명' if trivial else '비자명'}, c = {character}")
    return report


@dataclass
class FoliationSymmetryReport:
    """부트루 엽층의 대칭군 (eps = 0 제한으로 생성)"""
    tag: str
    generators: Tuple[str, ...]
    elements: List[Dict[str, sp.Expr]]
    characters: List[Optional[sp.Expr]]

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def preserves_foliation(self) -> bool:
        return all(c is not None for c in self.characters)

    @property
    def abelian(self) -> bool:
        return all(_planar_equal(_planar_compose(a, b), _planar_compose(b, a))
                   for a in self.elements for b in self.elements)

    @property
    def symmetric_group_s3(self) -> bool:
        return self.order == 6 and not self.abelian

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tag": self.tag,
            "generators": list(self.generators),
            "order": self.order,
            "elements": [{k: str(v) for k, v in e.items()} for e in self.elements],
            "characters": [None if c is None else str(c) for c in self.characters],
            "preserves_foliation": self.preserves_foliation,
            "symmetric_group_s3": self.symmetric_group_s3,
        }


def _planar_compose(a: Dict[str, sp.Expr], b: Dict[str, sp.Expr]) -> Dict[str, sp.Expr]:
    subs = {sp.Symbol(k): v for k, v in b.items()}
    return {k: sp.expand(v.subs(subs, simultaneous=True)) for k, v in a.items()}


def _planar_equal(a: Dict[str, sp.Expr], b: Dict[str, sp.Expr]) -> bool:
    return all(_numerator(a[k] - b[k]) == 0 for k in a)


def foliation_symmetry_group(tag: str = "P_IV", generators: Tuple[str, ...] = ("sigma1", "sigma2")) -> FoliationSymmetryReport:
    """eps = 0 제한들이 생성하는 군을 닫고 각 원소가 부트루 해밀토니안을 보존하는지 확인"""
    w = builtin_weights(tag)
    gens = [extend_to_chart(generator(tag, n), w, ChartId.C3).restrict_to_infinity() for n in generators]
    names = CHART_VARIABLES[ChartId.C3][:2]
    elements = [{n: sp.Symbol(n) for n in names}]
    frontier = list(elements)
    while frontier and len(elements) <= MAX_ORDER:
        nxt = []
        for e in frontier:
            for g in gens:
                candidate = _planar_compose(g, e)
                if not any(_planar_equal(candidate, seen) for seen in elements):
                    elements.append(candidate)
                    nxt.append(candidate)
        frontier = nxt
    H = boutroux_hamiltonian(tag)
    characters = [hamiltonian_character(H, e) for e in elements]
    report = FoliationSymmetryReport(normalize_tag(tag), tuple(generators), elements, characters)
    logger.info(f"🍃 {tag} 엽층 대칭: 위수 {report.order}, 보존 {report.preserves_foliation}")
    return report


def weyl_report(tag: str) -> Dict[str, Any]:
    """CLI 용 검증 표"""
    ode = builtin_ode(tag)
    w = builtin_weights(tag)
    rows = []
    for a in builtin_group(tag):
        infinity = infinity_action_report(a, w, tag)
        rows.append({
            "generator": a.name,
            "kind": a.kind,
            "backlund": verify_backlund(ode, a).holds,
            "commutes_with_orbifold": commutes_with_zs_action(a, w),
            "trivial_on_infinity": infinity.trivial_on_infinity,
            "foliation_character": infinity.to_dict()["foliation_character"],
        })
    report = {"system": ode.name, "generators": rows, "relations": group_relations(tag).to_dict()}
    if normalize_tag(tag) == "P4":
        report["foliation_symmetry"] = foliation_symmetry_group(tag).to_dict()
    return report
