#!/usr/bin/env python3
"""
Infinity Analysis System
무한대 집합의 고정점, 특성 지수, 푸앵카레 선형화와 국소 적분, 특이 정규형, 계수 필터, 빠름-느림 극한
"""

import math
import cmath
import logging
from enum import Enum
from itertools import product
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Any, Tuple, Mapping, Sequence, Iterable, Union

import sympy as sp

from laurent_algebra_system import LaurentPoly, InconsistentSystemError, exact_linear_solve
from newton_weight_system import Weights, builtin_ode, builtin_weights
from orbifold_chart_system import (
    ChartId, ChartVectorField, INFINITY_CHARTS, UNIT_SLOT, TRANSITION_UNIFORMIZER,
    all_charts, chart_id, chart_point_homogeneous, same_orbifold_point, slot_variables,
    transition_map,
)
from laurent_series_system import leading_balances, laurent_solve, kovalevskaya_exponent

logger = logging.getLogger('painleve.local')

LOCAL_VARIABLES = ("xi1", "xi2", "xi3")
INTEGRAL_UNIFORMIZER = "w"
RESIDUAL_TOLERANCE = 1e-12

Coords = Tuple[sp.Expr, sp.Expr, sp.Expr]


class ResonanceObstructionError(ValueError):
    """공명 항에 의해 호몰로지 방정식이 풀리지 않음"""

    def __init__(self, degree: int, monomials: Sequence[str]):
        self.degree = degree
        self.monomials = tuple(monomials)
        named = ", ".join(self.monomials) if self.monomials else "unidentified monomial"
        super().__init__(f"resonant obstruction at degree {degree}: {named}")


class FixedPointKind(Enum):
    MOVABLE_POLE = "movable_pole"
    IRREGULAR_INFINITY = "irregular_infinity"


@dataclass(frozen=True)
class FixedPointRecord:
    """무한대 집합 위 고정점 (대표 차트 좌표와 동치 표현들)"""
    chart: ChartId
    coords: Coords
    classification: FixedPointKind
    exact: bool = True
    equivalents: Tuple[Tuple[ChartId, Coords], ...] = ()

    @property
    def is_movable(self) -> bool:
        return self.classification is FixedPointKind.MOVABLE_POLE

    def numeric(self) -> Tuple[complex, complex, complex]:
        return tuple(complex(sp.N(c, 30)) for c in self.coords)

    def lifts(self, chart: Any) -> List[Coords]:
        """주어진 차트에서의 모든 좌표 표현"""
        chart = chart_id(chart)
        found = [self.coords] if self.chart is chart else []
        for ch, c in self.equivalents:
            if ch is chart and c not in found:
                found.append(c)
        return found

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chart": self.chart.value,
            "coords": [sp.sstr(c) for c in self.coords],
            "classification": self.classification.value,
            "exact": self.exact,
            "equivalents": [{"chart": ch.value, "coords": [sp.sstr(c) for c in cs]}
                            for ch, cs in self.equivalents],
        }


@dataclass
class CharacteristicIndex:
    """고정점의 특성 지수와 시간 재척도 야코비 행렬"""
    chart: ChartId
    coords: Coords
    eigenvalues: Tuple[sp.Expr, sp.Expr, sp.Expr]
    jacobian: sp.Matrix
    time_factor: sp.Expr

    @property
    def lambdas(self) -> Tuple[sp.Expr, sp.Expr, sp.Expr]:
        return self.eigenvalues

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chart": self.chart.value,
            "coords": [sp.sstr(c) for c in self.coords],
            "eigenvalues": [sp.sstr(l) for l in self.eigenvalues],
            "jacobian": [[sp.sstr(e) for e in self.jacobian.row(i)] for i in range(3)],
        }


@dataclass(frozen=True)
class Resonance:
    """m1 λ1 + m2 λ2 + m3 λ3 = λ_j"""
    exponents: Tuple[int, int, int]
    target: int

    def monomial(self, variables: Sequence[str]) -> str:
        parts = [name if e == 1 else f"{name}^{e}"
                 for name, e in zip(variables, self.exponents) if e]
        return "*".join(parts)


@dataclass(frozen=True)
class PoincareReport:
    nonresonant: bool
    poincare_domain: bool
    resonances: Tuple[Resonance, ...]
    search_bound: int


@dataclass
class LinearizationData:
    """절단된 푸앵카레 선형화 결과 (u, v) = (xi1 + phi1, xi2 + xi3 * phi2)"""
    chart: ChartId
    variables: Tuple[str, str, str]
    coords: Coords
    weights: Weights
    jacobian: sp.Matrix
    phi1: LaurentPoly
    phi2: LaurentPoly
    order: int
    normalized_field: Tuple[sp.Expr, sp.Expr, sp.Expr]
    parameters: Tuple[str, ...] = ()

    def linear_system(self) -> Tuple[LaurentPoly, LaurentPoly, LaurentPoly]:
        u, v, e = (LaurentPoly.variable(n) for n in LOCAL_VARIABLES)
        J = self.jacobian
        rows = []
        for i in range(3):
            row = LaurentPoly.zero()
            for j, var in enumerate((u, v, e)):
                if J[i, j] != 0:
                    row = row + LaurentPoly.from_expr(J[i, j], self.parameters) * var
            rows.append(row)
        return tuple(rows)

    def u_expr(self) -> sp.Expr:
        return sp.Symbol(LOCAL_VARIABLES[0]) + self.phi1.to_expr()

    def v_expr(self) -> sp.Expr:
        return sp.Symbol(LOCAL_VARIABLES[1]) + sp.Symbol(LOCAL_VARIABLES[2]) * self.phi2.to_expr()


@dataclass
class LocalIntegrals:
    """국소 제1적분의 원래 변수 전개 (w 는 균일화 변수, w^(-unit_weight) = unit_variable)"""
    C1: LaurentPoly
    C2: LaurentPoly
    chart: ChartId
    coords: Coords
    weights: Weights
    unit_variable: str
    unit_weight: int
    order: int

    def evaluate(self, x: complex, y: complex, z: complex,
                 parameters: Optional[Mapping[str, complex]] = None) -> Tuple[complex, complex]:
        """고정점에 가장 가까운 가지의 w 로 두 적분값 계산"""
        values = {"x": complex(x), "y": complex(y), "z": complex(z)}
        values.update({k: complex(v) for k, v in (parameters or {}).items()})
        w = self.branch(values)
        values[INTEGRAL_UNIFORMIZER] = w
        return self.C1.evaluate(values), self.C2.evaluate(values)

    def branch(self, values: Mapping[str, complex]) -> complex:
        unit = values[self.unit_variable]
        root = unit ** (-1.0 / self.unit_weight)
        homogeneous = self.weights.homogeneous()
        names = slot_variables(self.chart)
        slot = next(s for s in names if s not in (2, 3))
        source = ("x", "y", "z")[slot]
        target = complex(sp.N(self.coords[0]))
        best, best_gap = root, math.inf
        for k in range(self.unit_weight):
            cand = root * cmath.exp(2j * cmath.pi * k / self.unit_weight)
            gap = abs(values[source] * cand ** homogeneous[slot] - target)
            if gap < best_gap:
                best, best_gap = cand, gap
        return best


@dataclass
class SingularNormalForm:
    """선형 시스템을 원래 차트 모양 좌표로 되돌린 가해 시스템"""
    tag: str
    chart: ChartId
    coords: Coords
    variables: Tuple[str, str, str]
    rhs: Dict[str, sp.Expr]
    unit_variable: str
    second_order: sp.Expr
    closed_unit_equation: bool

    def to_text(self) -> Dict[str, str]:
        return {name: sp.sstr(expr) for name, expr in self.rhs.items()}


@dataclass
class CoefficientFilterResult:
    """준동차 계수 필터 결과"""
    degree_bound: int
    survivors: Tuple[str, ...]
    f: sp.Expr
    g: sp.Expr
    family: Dict[str, sp.Expr]
    rejected_cases: Dict[str, str]
    excluded_cases: Dict[str, str]


@dataclass
class FastSlowLimit:
    """가중 블로우업 후 예외 인자 위의 방정식 dX/dZ"""
    kind: str
    weights: Tuple[int, ...]
    variables: Tuple[str, ...]
    rhs: Dict[str, sp.Expr]
    leading_power: int


@dataclass
class IndexProperties:
    tag: str
    weights: Tuple[int, int, int, int]
    eigenvalues: Tuple[sp.Expr, sp.Expr, sp.Expr]
    kovalevskaya: Optional[int]
    hamiltonian_degree: int
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(self.checks.values())


# ---- fixed points ----------------------------------------------------------

def _symbols(names: Sequence[str]) -> List[sp.Symbol]:
    return [sp.Symbol(n) for n in names]


def _is_exact_zero(expr: sp.Expr) -> bool:
    try:
        return sp.simplify(expr) == 0
    except (TypeError, ValueError):
        return False


def _certify(vf: ChartVectorField, coords: Coords) -> Optional[bool]:
    """정확히 0 이면 True, 수치 잔차만 작으면 False, 고정점이 아니면 None"""
    subs = dict(zip(_symbols(vf.variables), coords))
    values = [c.to_expr().subs(subs) for c in vf.components]
    if all(_is_exact_zero(v) for v in values):
        return True
    if all(abs(complex(sp.N(v, 30))) < RESIDUAL_TOLERANCE for v in values):
        return False
    return None


def _chart_candidates(vf: ChartVectorField) -> List[Tuple[ChartId, Coords, FixedPointKind, bool]]:
    eps = vf.epsilon_variable
    restricted = [c.set_zero(eps).to_expr() for c in vf.components[:2]]
    syms = _symbols(vf.variables[:2])
    found = []
    for sol in sp.solve(restricted, syms, dict=True):
        if any(s not in sol or sol[s].free_symbols & set(syms) for s in syms):
            logger.warning(f"⚠️ 차트 {vf.chart.value}: 고립되지 않은 영점 {sol} 제외")
            continue
        coords = (sp.simplify(sol[syms[0]]), sp.simplify(sol[syms[1]]), sp.Integer(0))
        exact = _certify(vf, coords)
        if exact is None:
            logger.warning(f"⚠️ 차트 {vf.chart.value}: 잔차 검증 실패 {coords}")
            continue
        z_value = chart_point_homogeneous(vf.chart, coords)[2]
        kind = FixedPointKind.MOVABLE_POLE if _is_exact_zero(z_value) else FixedPointKind.IRREGULAR_INFINITY
        found.append((vf.chart, coords, kind, exact))
    return found


_MOVABLE_PREFERENCE = {ChartId.C2: 0, ChartId.C1: 1, ChartId.C3: 2}
_IRREGULAR_PREFERENCE = {ChartId.C3: 0, ChartId.C2: 1, ChartId.C1: 2}


def _representative_key(candidate) -> Tuple:
    chart, coords, kind, exact = candidate
    table = _MOVABLE_PREFERENCE if kind is FixedPointKind.MOVABLE_POLE else _IRREGULAR_PREFERENCE
    rational = all(c.is_Rational for c in coords)
    return (table[chart], not exact, not rational,
            tuple(-complex(sp.N(c)).real for c in coords), tuple(sp.default_sort_key(c) for c in coords))


def find_fixed_points_at_infinity(vfs: Union[Mapping[ChartId, ChartVectorField],
                                             Iterable[ChartVectorField]]) -> List[FixedPointRecord]:
    """ε = 0 위의 공통 영점을 전이 사상과 오비폴드 작용으로 묶어 반환"""
    fields = list(vfs.values()) if isinstance(vfs, Mapping) else list(vfs)
    fields = [vf for vf in fields if vf.chart in INFINITY_CHARTS]
    if not fields:
        return []
    w = fields[0].weights

    candidates = [cand for vf in fields for cand in _chart_candidates(vf)]
    groups: List[List[Tuple]] = []
    for cand in candidates:
        for group in groups:
            head = group[0]
            if same_orbifold_point(w, head[0], head[1], cand[0], cand[1]):
                group.append(cand)
                break
        else:
            groups.append([cand])

    records = []
    for group in groups:
        group.sort(key=_representative_key)
        chart, coords, kind, exact = group[0]
        if any(c[2] is not kind for c in group):
            logger.warning(f"⚠️ 분류가 일치하지 않는 동치류: {[(c[0].value, c[1]) for c in group]}")
        equivalents = tuple((c[0], c[1]) for c in group[1:])
        records.append(FixedPointRecord(chart, coords, kind, exact and all(c[3] for c in group), equivalents))

    records.sort(key=lambda r: (not r.is_movable, _representative_key((r.chart, r.coords, r.classification, r.exact))))
    movable = sum(1 for r in records if r.is_movable)
    logger.info(f"🔍 {fields[0].name} 고정점 탐색 완료: 가동 극 {movable}개, 비정칙 {len(records) - movable}개")
    return records


# ---- characteristic index --------------------------------------------------

def _resolve_coords(vf: ChartVectorField, fp: Union[FixedPointRecord, Sequence[Any]]) -> Coords:
    if isinstance(fp, FixedPointRecord):
        lifts = fp.lifts(vf.chart)
        if not lifts:
            raise ValueError(f"fixed point {fp.coords} in chart {fp.chart.value} "
                             f"has no representative in chart {vf.chart.value}")
        return lifts[0]
    coords = tuple(sp.sympify(c) for c in fp)
    if len(coords) != 3:
        raise ValueError(f"expected three chart coordinates, got {coords}")
    return coords


def _time_divisor(vf: ChartVectorField) -> LaurentPoly:
    """ε 성분 = ε * D 의 D"""
    eps = vf.epsilon_variable
    divisor = vf.components[2].shift({eps: -1})
    if not divisor.is_polynomial():
        raise ValueError(f"epsilon component {vf.components[2]} is not divisible by {eps}")
    return divisor


def characteristic_index(vf: ChartVectorField, fp: Union[FixedPointRecord, Sequence[Any]]) -> CharacteristicIndex:
    coords = _resolve_coords(vf, fp)
    subs = dict(zip(_symbols(vf.variables), coords))
    d0 = sp.simplify(_time_divisor(vf).to_expr().subs(subs))
    if d0 == 0:
        raise ValueError(f"time rescaling degenerates at {coords} in chart {vf.chart.value}")
    factor = sp.Integer(vf.weights.s) / d0
    J = (factor * vf.jacobian().subs(subs)).applyfunc(sp.simplify)
    if J.is_upper:
        eigenvalues = tuple(J[i, i] for i in range(3))
    else:
        roots = sp.roots(J.charpoly(sp.Symbol("lam")).as_expr(), sp.Symbol("lam"))
        eigenvalues = tuple(root for root, mult in roots.items() for _ in range(mult))
        if len(eigenvalues) != 3:
            raise ValueError(f"could not certify the eigenvalues of {J}")
    logger.info(f"📊 특성 지수 {vf.chart.value}{tuple(coords)}: {eigenvalues}")
    return CharacteristicIndex(vf.chart, coords, eigenvalues, J, factor)


def _compositions(total: int, parts: int = 3) -> Iterable[Tuple[int, ...]]:
    for head in range(total, -1, -1):
        if parts == 1:
            if head == total:
                yield (head,)
            continue
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def _positive_rational(values: Sequence[sp.Expr]) -> bool:
    return all(v.is_Rational and v > 0 for v in values)


def _origin_in_hull(values: Sequence[complex]) -> bool:
    # largest circular gap between arguments exceeds pi iff all points sit in an open half-plane
    if any(abs(v) < RESIDUAL_TOLERANCE for v in values):
        return True
    angles = sorted(cmath.phase(v) for v in values)
    gaps = [b - a for a, b in zip(angles, angles[1:])]
    gaps.append(2 * math.pi - (angles[-1] - angles[0]))
    return max(gaps) <= math.pi + 1e-12


def check_poincare_conditions(idx: CharacteristicIndex, m_bound: Optional[int] = None) -> PoincareReport:
    lams = idx.eigenvalues
    if m_bound is None:
        if _positive_rational(lams):
            m_bound = int(math.ceil(max(lams) / min(lams))) + 1
        else:
            m_bound = 6
    m_bound = max(m_bound, 2)

    resonances = []
    for total in range(2, m_bound + 1):
        for m in _compositions(total):
            value = sum(mi * l for mi, l in zip(m, lams))
            for j, target in enumerate(lams):
                if _is_exact_zero(value - target):
                    resonances.append(Resonance(m, j))

    numeric = [complex(sp.N(l)) for l in lams]
    report = PoincareReport(not resonances, not _origin_in_hull(numeric), tuple(resonances), m_bound)
    logger.info(f"🧮 공명 검사 {tuple(lams)}: 공명 {len(resonances)}개, 푸앵카레 영역 {report.poincare_domain}")
    return report


# ---- Poincaré linearization ------------------------------------------------

def _monomial(gens: Sequence[sp.Symbol], exps: Sequence[int]) -> sp.Expr:
    return sp.Mul(*[g ** e for g, e in zip(gens, exps)])


def _truncate(expr: sp.Expr, gens: Sequence[sp.Symbol], order: int) -> sp.Expr:
    expr = sp.expand(expr)
    if expr == 0:
        return sp.Integer(0)
    poly = sp.Poly(expr, *gens)
    return sp.Add(*[c * _monomial(gens, m) for m, c in poly.terms() if sum(m) <= order])


def _homogeneous_coefficients(expr: sp.Expr, gens: Sequence[sp.Symbol], degree: int) -> List[sp.Expr]:
    expr = sp.expand(expr)
    if expr == 0:
        return []
    poly = sp.Poly(expr, *gens)
    return [c for m, c in poly.terms() if sum(m) == degree]


def _normalized_field(vf: ChartVectorField, coords: Coords, factor_s: int, order: int):
    """고정점 중심 국소 좌표에서 s F / D 의 차수 order 까지의 전개"""
    gens = _symbols(LOCAL_VARIABLES)
    shift = {sp.Symbol(v): g + c for v, g, c in zip(vf.variables, gens, coords)}
    comps = [sp.expand(c.to_expr().subs(shift, simultaneous=True)) for c in vf.components]
    divisor = sp.expand(_time_divisor(vf).to_expr().subs(shift, simultaneous=True))
    d0 = divisor.subs({g: 0 for g in gens})
    delta = sp.expand(divisor / d0 - 1)
    inverse, power = sp.Integer(1), sp.Integer(1)
    for _ in range(order):
        power = _truncate(-power * delta, gens, order)
        inverse += power
    scale = sp.Integer(factor_s) / d0
    return gens, tuple(_truncate(scale * c * inverse, gens, order) for c in comps)


def _flow_derivative(expr: sp.Expr, gens: Sequence[sp.Symbol], field_: Sequence[sp.Expr]) -> sp.Expr:
    return sp.Add(*[sp.diff(expr, g) * f for g, f in zip(gens, field_)])


def poincare_linearize(vf: ChartVectorField, fp: Union[FixedPointRecord, Sequence[Any]],
                       order: int) -> LinearizationData:
    """호몰로지 방정식을 차수별로 풀어 phi1, phi2 구성 (phi2 는 ε 을 포함하는 단항식만)"""
    if order < 1:
        raise ValueError(f"linearization order must be positive, got {order}")
    idx = characteristic_index(vf, fp)
    J = idx.jacobian
    if any(J[i, j] != 0 for i in range(3) for j in range(i)):
        raise ValueError(f"linear part at {idx.coords} is not upper triangular: {J}")
    gens, field_ = _normalized_field(vf, idx.coords, vf.weights.s, order)
    xi1, xi2, xi3 = gens

    phi1, phi2 = sp.Integer(0), sp.Integer(0)
    lams = idx.eigenvalues
    for degree in range(2, order + 1):
        monos = [m for m in _compositions(degree)]
        c_syms = [sp.Symbol(f"_c{degree}_{i}") for i in range(len(monos))]
        eps_monos = [m for m in monos if m[2] >= 1]
        d_syms = [sp.Symbol(f"_d{degree}_{i}") for i in range(len(eps_monos))]
        trial1 = phi1 + sp.Add(*[c * _monomial(gens, m) for c, m in zip(c_syms, monos)])
        trial2 = phi2 + sp.Add(*[d * _monomial(gens, m) for d, m in zip(d_syms, eps_monos)])
        U, V = xi1 + trial1, xi2 + trial2
        E1 = _flow_derivative(U, gens, field_) - (J[0, 0] * U + J[0, 1] * V + J[0, 2] * xi3)
        E2 = _flow_derivative(V, gens, field_) - (J[1, 1] * V + J[1, 2] * xi3)
        equations = (_homogeneous_coefficients(E1, gens, degree)
                     + _homogeneous_coefficients(E2, gens, degree))
        unknowns = c_syms + d_syms
        equations = [e for e in equations if e != 0]
        if equations:
            A, b = sp.linear_eq_to_matrix(equations, unknowns)
            try:
                result = exact_linear_solve(A, b, square=False)
            except InconsistentSystemError as exc:
                resonant = [m for m in monos
                            if any(_is_exact_zero(sum(mi * l for mi, l in zip(m, lams)) - lams[j])
                                   for j in range(2))]
                names = [Resonance(m, 0).monomial(vf.variables) for m in resonant]
                raise ResonanceObstructionError(degree, names) from exc
            zero_free = {t: 0 for t in result.free_parameters}
            values = dict(zip(unknowns, (sp.simplify(e.subs(zero_free)) for e in result.solution)))
        else:
            values = {u: 0 for u in unknowns}
        phi1 = sp.expand(trial1.subs(values))
        phi2 = sp.expand(trial2.subs(values))

    U, V = xi1 + phi1, xi2 + phi2
    residual = [
        _truncate(_flow_derivative(U, gens, field_) - (J[0, 0] * U + J[0, 1] * V + J[0, 2] * xi3), gens, order),
        _truncate(_flow_derivative(V, gens, field_) - (J[1, 1] * V + J[1, 2] * xi3), gens, order),
        _truncate(field_[2] - J[2, 2] * xi3, gens, order),
    ]
    if any(sp.simplify(r) != 0 for r in residual):
        raise RuntimeError(f"conjugacy residual does not vanish through degree {order}: {residual}")
    if sp.expand(phi2.subs(xi3, 0)) != 0:
        raise RuntimeError("phi2 must vanish on the infinity set")

    params = tuple(sorted(vf.parameters))
    data = LinearizationData(
        chart=vf.chart, variables=vf.variables, coords=idx.coords, weights=vf.weights,
        jacobian=J,
        phi1=LaurentPoly.from_expr(phi1, params),
        phi2=LaurentPoly.from_expr(sp.expand(sp.cancel(phi2 / xi3)), params),
        order=order, normalized_field=field_, parameters=params,
    )
    logger.info(f"🔧 {vf.name} {vf.chart.value}{tuple(idx.coords)} 선형화 완료 (차수 {order})")
    return data


def resonant_terms_present(vf: ChartVectorField, fp: Union[FixedPointRecord, Sequence[Any]],
                           resonances: Sequence[Resonance]) -> bool:
    """공명 차수까지 선형화를 시도해 방해 항이 있으면 True"""
    if not resonances:
        return False
    degree = max(sum(r.exponents) for r in resonances)
    try:
        poincare_linearize(vf, fp, degree)
    except ResonanceObstructionError as exc:
        logger.info(f"🚧 공명 항 존재: {exc}")
        return True
    return False


# ---- local integrals -------------------------------------------------------

def _integral_coefficients(J: sp.Matrix) -> Tuple[sp.Expr, sp.Expr, sp.Expr]:
    l1, l2, l3 = J[0, 0], J[1, 1], J[2, 2]
    c = J[1, 2] / (l3 - l2)
    beta = J[0, 1] / (l1 - l2)
    gamma = (J[0, 2] + beta * J[1, 2]) / (l1 - l3)
    return sp.simplify(c), sp.simplify(beta), sp.simplify(gamma)


def local_integrals(lin: LinearizationData) -> LocalIntegrals:
    """선형 시스템의 두 적분을 변환과 차트 사상으로 원래 변수 (x, y, z, w) 로 끌어옴"""
    J = lin.jacobian
    l1, l2, l3 = J[0, 0], J[1, 1], J[2, 2]
    if l3 != lin.weights.s or not (l1.is_Integer and l2.is_Integer):
        raise ValueError(f"integrals need integer indices with lambda3 = s, got {(l1, l2, l3)}")
    c, beta, gamma = _integral_coefficients(J)

    t = transition_map(lin.weights, ChartId.ORIG, lin.chart)
    sigma, w = sp.Symbol(TRANSITION_UNIFORMIZER), sp.Symbol(INTEGRAL_UNIFORMIZER)
    chart_values = {sp.Symbol(name): img.to_expr().subs(sigma, w) for name, img in t.images.images.items()}
    gens = _symbols(LOCAL_VARIABLES)
    local = {g: chart_values[sp.Symbol(v)] - c0
             for g, v, c0 in zip(gens, lin.variables, lin.coords)}

    u = lin.u_expr().subs(local, simultaneous=True)
    v = lin.v_expr().subs(local, simultaneous=True)
    eps = local[gens[2]]
    C1 = sp.expand(w ** (-l2) * (v - c * eps))
    C2 = sp.expand(w ** (-l1) * (u + beta * v + gamma * eps))

    unit_slot = UNIT_SLOT[lin.chart]
    result = LocalIntegrals(
        C1=LaurentPoly.from_expr(C1, lin.parameters),
        C2=LaurentPoly.from_expr(C2, lin.parameters),
        chart=lin.chart, coords=lin.coords, weights=lin.weights,
        unit_variable=("x", "y", "z")[unit_slot],
        unit_weight=lin.weights.homogeneous()[unit_slot],
        order=lin.order,
    )
    logger.info(f"∫ 국소 적분 구성: C1 항 {len(result.C1)}개, C2 항 {len(result.C2)}개")
    return result


# ---- singular normal form --------------------------------------------------

def _normal_form_from_index(tag: str, idx: CharacteristicIndex, w: Weights) -> SingularNormalForm:
    J = idx.jacobian
    homogeneous = w.homogeneous()
    chart = idx.chart
    k = UNIT_SLOT[chart]
    names = slot_variables(chart)
    lead_slot = next(s for s in names if s not in (2, 3))

    U, V = sp.symbols("U V")
    E = sp.Symbol("E", positive=True)
    rates = {
        U: J[0, 0] * (U - idx.coords[0]) + J[0, 1] * (V - idx.coords[1]) + J[0, 2] * E,
        V: J[1, 1] * (V - idx.coords[1]) + J[1, 2] * E,
        E: J[2, 2] * E,
    }
    s = sp.Integer(w.s)
    slots = ("x", "y", "z")
    tilde = {i: sp.Symbol(f"{slots[i]}t", positive=(i == k)) for i in range(3)}
    expressions = {
        k: E ** (-sp.Integer(homogeneous[k]) / s),
        lead_slot: U * E ** (-sp.Integer(homogeneous[lead_slot]) / s),
        2: V * E ** (-sp.Integer(w.r) / s),
    }
    rate = {i: sp.expand(sum(sp.diff(e, var) * r for var, r in rates.items()))
            for i, e in expressions.items()}
    back = {E: tilde[k] ** (-s / homogeneous[k])}
    back_uv = {U: tilde[lead_slot] * E ** (sp.Integer(homogeneous[lead_slot]) / s),
               V: tilde[2] * E ** (sp.Integer(w.r) / s)}

    def _to_tilde(expr):
        expr = sp.expand(expr.subs(back_uv, simultaneous=True))
        return sp.expand(sp.powsimp(sp.expand(expr.subs(back)), force=True))

    dz = rate[2]
    rhs = {}
    for i in (lead_slot, k):
        rhs[tilde[i].name] = sp.simplify(_to_tilde(rate[i] / dz))
    unit_rhs = rhs[tilde[k].name]
    second = sp.diff(unit_rhs, tilde[k]) * unit_rhs + sp.diff(unit_rhs, tilde[2])
    second += sp.diff(unit_rhs, tilde[lead_slot]) * rhs[tilde[lead_slot].name]
    second = sp.expand(sp.powsimp(sp.expand(second), force=True))
    closed = unit_rhs.free_symbols <= {tilde[k]}
    return SingularNormalForm(tag, chart, idx.coords, tuple(tilde[i].name for i in range(3)),
                              rhs, tilde[k].name, second, closed)


def singular_normal_form(tag: str, fixed_point: Optional[FixedPointRecord] = None,
                         parameter_values: Optional[Mapping[str, Any]] = None) -> SingularNormalForm:
    """가동 극 고정점의 선형 시스템을 원래 좌표 모양으로 되돌린 가해 시스템"""
    ode = builtin_ode(tag, parameter_values)
    w = builtin_weights(tag)
    charts = all_charts(ode, w)
    if fixed_point is None:
        movable = [p for p in find_fixed_points_at_infinity(charts) if p.is_movable]
        fixed_point = movable[0]
    idx = characteristic_index(charts[fixed_point.chart], fixed_point)
    nf = _normal_form_from_index(ode.name, idx, w)
    logger.info(f"✨ {ode.name} 특이 정규형: {nf.to_text()}")
    return nf


# ---- quasi-homogeneous coefficient filter ----------------------------------

def _levels(value: int) -> Tuple[int, int]:
    """value = 5 m + delta, delta in 0..4"""
    return value // 5, value % 5


def _epsilon_rate_derivative(a_shift: int, q_shift: int, a_present: bool = True) -> sp.Expr:
    """5 ε A Q 의 ε = 0 미분, A 와 Q 는 최저차 ε^a_shift, ε^q_shift 에서 시작"""
    e = sp.Symbol("e2")
    a0, a1, q0, q1 = sp.symbols("A0 A1 Q0 Q1")
    A = a0 * e ** a_shift + a1 * e ** (a_shift + 1) if a_present else sp.Integer(0)
    Q = q0 * e ** q_shift + q1 * e ** (q_shift + 1)
    return sp.expand(sp.diff(5 * e * A * Q, e)).subs(e, 0)


def _family_field(terms: Mapping[str, List[Tuple[sp.Expr, int]]]) -> Tuple[sp.Matrix, Tuple[sp.Symbol, ...]]:
    """(M, N) <= (M', N') 경우의 c2 차트 다항 벡터장"""
    X, Z, e = sp.symbols("X2 Z2 e2")
    total = {key: sp.Add(*[mono * e ** shift for mono, shift in items]) for key, items in terms.items()}
    A, B, P, Q = total["a"], total["b"], total["p"], total["q"]
    rates = sp.Matrix([3 * X * A * Q - 2 * P * A, 4 * Z * A * Q - 2 * B * Q, 5 * e * A * Q])
    return rates, (X, Z, e)


def _rejected_cases(a_constant_case: Sequence[Tuple[int, int, int]]) -> Dict[str, str]:
    rejected = {}
    # (I) and the mixed cases shift at least one factor of the epsilon equation by epsilon
    for case, shifts in (("I", (1, 1)), ("M>M', N<=N'", (0, 1)), ("M<=M', N>N'", (1, 0))):
        if _epsilon_rate_derivative(*shifts) == 0:
            rejected[case] = f"epsilon equation is O(eps^{1 + sum(shifts)}), zero eigenvalue"
    if _epsilon_rate_derivative(0, 0, a_present=bool(a_constant_case)) == 0:
        rejected["II-a"] = "all a_ijk vanish, so the epsilon equation is identically zero"
    return rejected


def coefficient_filter(degree_bound: int = 12) -> CoefficientFilterResult:
    """(3,2,4,5) 가중 차트의 유리성 합동 조건과 (2,3) 성분 조건으로 계수 결정"""
    if degree_bound < 5:
        raise ValueError(f"degree bound must be at least 5, got {degree_bound}")
    triples = [t for t in product(range(degree_bound + 1), repeat=3)
               if 3 * t[0] + 2 * t[1] + 4 * t[2] <= degree_bound]
    weight = lambda t: 3 * t[0] + 2 * t[1] + 4 * t[2]
    ks = range(degree_bound // 4 + 1)

    # constant term in the b-sum: -2 = 5 N' + delta'
    n_top, delta_b = _levels(-2)
    a_constant_case = [t for t in triples
                       if any(weight(t) == 5 * n + delta_b for n in range(0, n_top + 1))]
    rejected = _rejected_cases(a_constant_case)

    # epsilon monomial in the b-sum: -2 = 5 (N' - 1) + delta'
    n_prev, delta_b = _levels(-2)
    n_top = n_prev + 1
    b_keep = [k for k in ks if any(4 * k - 2 == 5 * n + delta_b for n in range(-1, n_top + 1))]
    a_keep = [t for t in triples if any(weight(t) == 5 * n + delta_b for n in range(0, n_top + 1))]

    # constant term of the q-sum with g = c X: 3 = 5 M' + delta
    m_top, delta_p = _levels(3)
    q_keep = [(1, 0, k) for k in ks
              if any(3 + 4 * k == 5 * m + delta_p for m in range(0, m_top + 1))]
    p_keep = [t for t in triples
              if any(weight(t) - 1 == 5 * m + delta_p for m in range(-1, m_top + 1))]

    X, Y, Z = sp.symbols("x y z")
    name = lambda prefix, t: prefix + "".join(str(e) for e in t)
    coeff = {}
    survivors = ([name("a", t) for t in a_keep] + [f"b{k}" for k in b_keep]
                 + [name("p", t) for t in p_keep] + [name("q", t) for t in q_keep])
    for n in survivors:
        coeff[n] = sp.Symbol(n)

    g = (sp.Add(*[coeff[name("a", t)] * X ** t[0] * Y ** t[1] * Z ** t[2] for t in a_keep])
         / sp.Add(*[coeff[f"b{k}"] * Z ** k for k in b_keep]))
    ratio = (sp.Add(*[coeff[name("p", t)] * X ** t[0] * Y ** t[1] * Z ** t[2] for t in p_keep])
             / sp.Add(*[coeff[name("q", t)] * X ** t[0] * Z ** t[2] for t in q_keep]))
    f = sp.expand(sp.cancel(g * ratio))
    g = sp.expand(sp.cancel(g))

    # the surviving family must still carry a fixed point (X*, 0, 0) with nonzero index
    X2, Z2 = sp.symbols("X2 Z2")
    mono = lambda t: X2 ** t[0] * Z2 ** t[2]
    terms = {
        "a": [(coeff[name("a", t)] * mono(t), n_top - _levels(weight(t))[0]) for t in a_keep],
        "b": [(coeff[f"b{k}"] * Z2 ** k, n_top - _levels(4 * k - 2)[0]) for k in b_keep],
        "p": [(coeff[name("p", t)] * mono(t), m_top - _levels(weight(t) - 1)[0]) for t in p_keep],
        "q": [(coeff[name("q", t)] * mono(t), m_top - _levels(weight(t))[0]) for t in q_keep],
    }
    excluded = {}
    rates, (Xs, Zs, es) = _family_field(terms)
    J = rates.jacobian([Xs, Zs, es])
    x_rate = sp.expand(rates[0].subs({Zs: 0, es: 0}))
    roots = [root for root in sp.solve(sp.cancel(x_rate / Xs), Xs) if root != 0]
    if not roots:
        excluded["II-b"] = "no fixed point (X*, 0, 0) off the origin"
    else:
        at = {Xs: roots[0], Zs: 0, es: 0}
        J0 = J.subs(at).applyfunc(sp.simplify)
        if any(J0[i, i] == 0 for i in range(3)):
            excluded["II-b"] = f"zero eigenvalue in {[J0[i, i] for i in range(3)]}"
        elif J0[1, 2] == 0:
            excluded["II-b"] = "(2,3) component of the Jacobian vanishes"

    family = {}
    if {"a100", "b0", "p020", "p001", "q100"} <= set(coeff):
        c = coeff["a100"] / coeff["b0"]
        family = {"a": c * coeff["p020"] / coeff["q100"],
                  "b": c * coeff["p001"] / coeff["q100"], "c": c}
    result = CoefficientFilterResult(
        degree_bound=degree_bound,
        survivors=tuple(sorted(survivors)),
        f=f, g=g, family=family, rejected_cases=rejected, excluded_cases=excluded,
    )
    logger.info(f"🧪 계수 필터 (차수 <= {degree_bound}): 생존 계수 {result.survivors}, 기각 {sorted(rejected)}")
    return result


# ---- fast-slow blow-up limits ----------------------------------------------

FAST_SLOW_MODELS = {
    "saddle-node": {"weights": (1, 2, 3), "fast": ("x",),
                    "rhs": ("x**2 + z + eps*alpha1",)},
    "transcritical": {"weights": (1, 1, 2), "fast": ("x",),
                      "rhs": ("x**2 + z*x + eps*alpha1",)},
    "BT": {"weights": (3, 2, 4, 5), "fast": ("x", "y"),
           "rhs": ("y**2 + x*y + z + eps*alpha1", "x + eps*alpha2")},
    "BT-Z2": {"weights": (2, 1, 2, 3), "fast": ("x", "y"),
              "rhs": ("y**3 - x*y**3 + z*y + eps*alpha", "x + eps*alpha2")},
    "BT-Z3": {"weights": (1, 1, 1, 2), "fast": ("x", "y"),
              "rhs": ("x**2 - y**2 - z*y + eps*alpha1", "-2*x*y + z*x + eps*alpha2")},
}

_KIND_ALIASES = {"saddle_node": "saddle-node", "bt": "BT", "bt-z2": "BT-Z2", "bt-z3": "BT-Z3",
                 "bt_z2": "BT-Z2", "bt_z3": "BT-Z3"}


def _fast_slow_kind(kind: str) -> str:
    if kind in FAST_SLOW_MODELS:
        return kind
    key = _KIND_ALIASES.get(kind.lower(), kind.lower())
    if key not in FAST_SLOW_MODELS:
        raise ValueError(f"unknown fast-slow model {kind!r}; known: {sorted(FAST_SLOW_MODELS)}")
    return key


def fastslow_blowup_limit(kind: str, weights: Optional[Sequence[int]] = None) -> FastSlowLimit:
    """ε 슬롯 차트로 가중 블로우업 후 r 의 최저차로 나누고 r = 0"""
    kind = _fast_slow_kind(kind)
    model = FAST_SLOW_MODELS[kind]
    weights = tuple(weights) if weights is not None else model["weights"]
    fast = model["fast"]
    names = fast + ("z", "eps")
    if len(weights) != len(names):
        raise ValueError(f"{kind} needs {len(names)} weights, got {weights}")

    r = sp.Symbol("r")
    syms = {n: sp.Symbol(n) for n in names}
    chart = {n: sp.Symbol(n.upper()) for n in fast + ("z",)}
    blowup = {syms[n]: r ** wt * (chart[n] if n in chart else 1) for n, wt in zip(names, weights)}
    # slow drift carries a generic first-order correction
    rhs = [sp.sympify(text, locals=syms) for text in model["rhs"]]
    rhs.append(syms["eps"] * (1 + syms[fast[0]]))

    scaled = []
    for n, wt, F in zip(fast + ("z",), weights, rhs):
        scaled.append(sp.expand(F.subs(blowup, simultaneous=True) * r ** (-wt)))
    try:
        polys = [sp.Poly(s, r) for s in scaled]
    except sp.PolynomialError as exc:
        raise ValueError(f"weights {weights} do not make {kind} polynomial in r: {exc}") from exc
    if any(p.is_zero for p in polys):
        raise ValueError(f"{kind} blow-up has a vanishing component: {scaled}")
    leading = min(p.monoms()[-1][0] for p in polys)
    # coefficient of r**leading, i.e. divide by r**leading and set r = 0
    limits = [sp.expand(p.nth(leading)) for p in polys]
    if limits[-1] == 0:
        raise ValueError(f"{kind} slow drift vanishes on the exceptional divisor")
    z_rate = limits[-1]
    rhs_map = {chart[n].name: sp.simplify(lim / z_rate) for n, lim in zip(fast, limits)}
    result = FastSlowLimit(kind, weights, tuple(chart[n].name for n in fast), rhs_map, leading)
    logger.info(f"🌀 {kind} 블로우업 극한: {rhs_map}")
    return result


def riccati_linearization(kind: str = "saddle-node") -> sp.Expr:
    """X = -u'/u 로 리카티 극한을 2 계 선형 방정식 (= 0) 으로 변환"""
    limit = fastslow_blowup_limit(kind)
    if len(limit.variables) != 1:
        raise ValueError(f"{kind} limit is not a scalar Riccati equation")
    X, Z = sp.Symbol(limit.variables[0]), sp.Symbol("Z")
    F = limit.rhs[limit.variables[0]]
    if sp.degree(F, X) != 2 or sp.Poly(F, X).LC() != 1:
        raise ValueError(f"{kind} limit {F} is not monic quadratic in {X}")
    u = sp.Function("u")(Z)
    substituted = -sp.diff(u, Z) / u
    residual = sp.diff(substituted, Z) - F.subs(X, substituted)
    linear = sp.expand(sp.simplify(-residual * u))
    logger.info(f"📈 {kind} 선형화: {linear} = 0")
    return linear


# ---- index properties ------------------------------------------------------

def index_properties(tag: str) -> IndexProperties:
    ode = builtin_ode(tag)
    w = builtin_weights(tag)
    charts = all_charts(ode, w)
    movable = [p for p in find_fixed_points_at_infinity(charts) if p.is_movable]
    idx = characteristic_index(charts[movable[0].chart], movable[0])
    l1, l2, l3 = idx.eigenvalues
    balance = leading_balances(ode, w)[0]
    kappa = kovalevskaya_exponent(laurent_solve(ode, w, balance))
    degree = ode.hamiltonian.weighted_degree(w.as_mapping())
    checks = {
        "r_equals_lambda2": l2 == w.r,
        "s_equals_lambda3": l3 == w.s,
        "lambda1_equals_s_plus_1": l1 == w.s + 1,
        "lambda1_equals_kovalevskaya": kappa is not None and l1 == kappa,
        "lambda1_equals_hamiltonian_degree": l1 == degree,
        "index_ratio_integer": ((l1 + l2) / l3).is_Integer,
        "p_plus_q_equals_s": w.p + w.q == w.s,
        "jacobian_23_nonzero": idx.jacobian[1, 2] != 0,
    }
    props = IndexProperties(ode.name, w.as_tuple(), idx.eigenvalues, kappa, degree, checks)
    logger.info(f"📋 {ode.name} 지수 성질: {checks}")
    return props
