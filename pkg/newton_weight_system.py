#!/usr/bin/env python3
"""
Newton Diagram Weight System
평면 상미분방정식의 뉴턴 다이어그램과 가중치 (p, q, r, s) 결정, 준동차성 및 Z_s 불변성 검사
"""

import logging
from math import gcd
from itertools import combinations
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Any, Tuple, FrozenSet, Iterable

from laurent_algebra_system import LaurentPoly
from painleve_config import load_builtin_system

logger = logging.getLogger('painleve.newton')

Point = Tuple[int, int, int]
STATE_VARIABLES = ("x", "y", "z")


class NewtonFaceError(ValueError):
    """뉴턴 다이어그램 컴팩트 면 개수 오류"""

    def __init__(self, faces: List[Tuple[Tuple[int, int, int], int]]):
        self.faces = faces
        if faces:
            described = ", ".join(f"{n[0]}i+{n[1]}j+{n[2]}k={s}" for n, s in faces)
            message = f"expected exactly one compact face, found {len(faces)}: {described}"
        else:
            message = "expected exactly one compact face, found none"
        super().__init__(message)


@dataclass(frozen=True)
class Weights:
    """가중치 (p, q, r, s)"""
    p: int
    q: int
    r: int
    s: int

    def __post_init__(self):
        values = (self.p, self.q, self.r, self.s)
        if any(v < 1 for v in values):
            raise ValueError(f"weights must be positive integers, got {values}")
        if any(v > self.s for v in values[:3]):
            raise ValueError(f"weights must satisfy 1 <= p, q, r <= s, got {values}")
        for triple in combinations(values, 3):
            if gcd(gcd(triple[0], triple[1]), triple[2]) != 1:
                raise ValueError(f"weights {values}: {triple} are not coprime")

    def as_mapping(self) -> Dict[str, int]:
        return {"x": self.p, "y": self.q, "z": self.r}

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.p, self.q, self.r, self.s)

    def homogeneous(self) -> Tuple[int, int, int, int]:
        """(x, y, z, eps) 슬롯 가중치"""
        return self.as_tuple()


@dataclass(frozen=True)
class PlanarODE:
    """평면 비자율 시스템 dx/dz = f, dy/dz = g"""
    f: LaurentPoly
    g: LaurentPoly
    name: str = "custom"
    hamiltonian: Optional[LaurentPoly] = None

    def __post_init__(self):
        for label, poly in (("f", self.f), ("g", self.g)):
            if not poly.is_polynomial():
                raise ValueError(f"{label} = {poly} has negative exponents")
            stray = poly.variables - set(STATE_VARIABLES) - poly.parameters
            if stray:
                raise ValueError(f"{label} uses unknown variables {sorted(stray)}")

    @property
    def parameters(self) -> FrozenSet[str]:
        return self.f.parameters | self.g.parameters

    def components(self) -> Tuple[LaurentPoly, LaurentPoly]:
        return (self.f, self.g)

    def principal_part(self, w: Optional[Weights] = None) -> 'PlanarODE':
        """주요부: 가중치가 있으면 최고 가중 차수, 없으면 매개변수 없는 단항식"""
        return PlanarODE(*self._split(w)[0], name=f"{self.name} principal")

    def perturbation(self, w: Optional[Weights] = None) -> Tuple[LaurentPoly, LaurentPoly]:
        return self._split(w)[1]

    def _split(self, w: Optional[Weights]):
        principal, rest = [], []
        for poly, pi in ((self.f, w.p if w else 0), (self.g, w.q if w else 0)):
            if w is None:
                keep = lambda exps: not any(n in poly.parameters for n in exps)
            else:
                target = w.s - w.r + pi
                weights = w.as_mapping()
                keep = lambda exps, target=target, weights=weights: \
                    sum(weights.get(n, 0) * e for n, e in exps.items()) == target
            principal.append(poly.filter_terms(keep))
            rest.append(poly - principal[-1])
        return tuple(principal), tuple(rest)

    def to_text(self) -> Dict[str, str]:
        return {"f": self.f.to_text(), "g": self.g.to_text()}


@dataclass(frozen=True)
class NewtonDiagramResult:
    """뉴턴 다이어그램 결과"""
    points: FrozenSet[Point]
    faces: Tuple[Tuple[Tuple[int, int, int], int], ...] = field(default_factory=tuple)

    @property
    def unique_face(self) -> bool:
        return len(self.faces) == 1

    @property
    def normal(self) -> Optional[Tuple[int, int, int]]:
        return self.faces[0][0] if self.unique_face else None

    @property
    def level(self) -> Optional[int]:
        return self.faces[0][1] if self.unique_face else None

    def face_points(self) -> FrozenSet[Point]:
        if not self.unique_face:
            return frozenset()
        n, s = self.faces[0]
        return frozenset(pt for pt in self.points if _dot(n, pt) == s)


def builtin_ode(tag: str, parameter_values: Optional[Dict[str, Any]] = None) -> PlanarODE:
    """내장 시스템 (P1, P2, P4) 을 PlanarODE 로 생성"""
    system = load_builtin_system(tag)
    f = LaurentPoly.parse(system.f_text, system.parameters)
    g = LaurentPoly.parse(system.g_text, system.parameters)
    h = LaurentPoly.parse(system.hamiltonian_text, system.parameters)
    if parameter_values:
        f, g, h = (p.partial_evaluate(parameter_values) for p in (f, g, h))
    return PlanarODE(f, g, name=system.name, hamiltonian=h)


def builtin_weights(tag: str) -> Weights:
    return Weights(*load_builtin_system(tag).weights)


def exponent_lattice(ode: PlanarODE) -> FrozenSet[Point]:
    """지수 격자점: f 의 x^i y^j z^k -> (i-1, j, k+1), g 의 -> (i, j-1, k+1)"""
    points = set()
    for poly, shift in ((ode.f, (-1, 0, 1)), (ode.g, (0, -1, 1))):
        for i, j, k in poly.exponent_vectors(STATE_VARIABLES):
            points.add((i + shift[0], j + shift[1], k + shift[2]))
    return frozenset(points)


def _dot(n: Tuple[int, int, int], pt: Point) -> int:
    return n[0] * pt[0] + n[1] * pt[1] + n[2] * pt[2]


def _cross(a: Point, b: Point) -> Tuple[int, int, int]:
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def newton_diagram(points: Iterable[Point]) -> NewtonDiagramResult:
    """양의 법선을 갖는 지지 평면(컴팩트 면) 열거"""
    pts = sorted(set(points))
    faces = set()
    for a, b, c in combinations(pts, 3):
        n = _cross(tuple(b[i] - a[i] for i in range(3)), tuple(c[i] - a[i] for i in range(3)))
        if n == (0, 0, 0):
            continue
        if all(v < 0 for v in n):
            n = tuple(-v for v in n)
        if not all(v > 0 for v in n):
            continue
        d = gcd(gcd(n[0], n[1]), n[2])
        n = tuple(v // d for v in n)
        level = _dot(n, a)
        if all(_dot(n, pt) <= level for pt in pts):
            faces.add((n, level))
    result = NewtonDiagramResult(frozenset(pts), tuple(sorted(faces)))
    logger.info(f"📐 뉴턴 다이어그램: 점 {len(pts)}개, 컴팩트 면 {len(faces)}개")
    return result


def newton_face_weights(points: Iterable[Point]) -> Weights:
    diagram = newton_diagram(points)
    if not diagram.unique_face:
        raise NewtonFaceError(list(diagram.faces))
    (p, q, r), s = diagram.faces[0]
    return Weights(p, q, r, s)


def _all_degrees_satisfy(poly: LaurentPoly, w: Weights, predicate) -> bool:
    return all(predicate(d) for d in poly.weighted_degrees(w.as_mapping()))


def check_quasi_homogeneous(ode: PlanarODE, w: Weights) -> bool:
    """(λ^p x, λ^q y, λ^r z) 치환 시 f 는 λ^(s-r+p), g 는 λ^(s-r+q) 배"""
    return (_all_degrees_satisfy(ode.f, w, lambda d: d == w.s - w.r + w.p)
            and _all_degrees_satisfy(ode.g, w, lambda d: d == w.s - w.r + w.q))


def check_perturbation_lower_order(g_part: Tuple[LaurentPoly, LaurentPoly], w: Weights) -> bool:
    g1, g2 = g_part
    return (_all_degrees_satisfy(g1, w, lambda d: d < w.s - w.r + w.p)
            and _all_degrees_satisfy(g2, w, lambda d: d < w.s - w.r + w.q))


def check_zs_invariance(ode: PlanarODE, w: Weights) -> bool:
    """Z_s 작용 불변성 (지수 합동식으로 정확히 검사)"""
    return (_all_degrees_satisfy(ode.f, w, lambda d: (d - (w.s - w.r + w.p)) % w.s == 0)
            and _all_degrees_satisfy(ode.g, w, lambda d: (d - (w.s - w.r + w.q)) % w.s == 0))


def detect_weights(ode: PlanarODE) -> Weights:
    weights = newton_face_weights(exponent_lattice(ode))
    logger.info(f"⚖️ {ode.name} 가중치 {weights.as_tuple()}")
    return weights
