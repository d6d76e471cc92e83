#!/usr/bin/env python3
"""
Laurent Series and Kovalevskaya Exponent System
가동 특이점에서의 형식 로랑 급수 해와 코발레프스카야 지수
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Any, Tuple, FrozenSet, Mapping

import sympy as sp

from laurent_algebra_system import (
    LaurentPoly, RationalFn, InconsistentSystemError, exact_linear_solve,
)
from newton_weight_system import PlanarODE, Weights
from painleve_config import load_system_config

logger = logging.getLogger('painleve.series')

Z0 = sp.Symbol("z0")
T = sp.Symbol("T")
_A, _B = sp.Symbol("_a"), sp.Symbol("_b")

Series = Dict[int, sp.Expr]


class SeriesObstructionError(ValueError):
    """특이-비일관 재귀 단계 (참 해의 극이 아님)"""

    def __init__(self, n: int):
        self.n = n
        super().__init__(f"series obstruction at n = {n}")


@dataclass(frozen=True)
class LaurentSeriesSolution:
    """형식 로랑 급수 해 x = sum A_n T^(n-p1), y = sum B_n T^(n-p2), T = z - z0"""
    leading_exponents: Tuple[int, int]
    balance: Tuple[sp.Expr, sp.Expr]
    A: Tuple[sp.Expr, ...]
    B: Tuple[sp.Expr, ...]
    free_indices: FrozenSet[int]
    n_max: int
    parameters: Tuple[str, ...] = ()
    name: str = "custom"
    kovalevskaya_matrix: Optional[sp.Matrix] = field(default=None, compare=False)

    @property
    def orders(self) -> Tuple[int, int]:
        return (-self.leading_exponents[0], -self.leading_exponents[1])

    @property
    def free_symbols(self) -> List[sp.Symbol]:
        names = []
        for n in sorted(self.free_indices):
            for label in ("A", "B"):
                sym = sp.Symbol(f"{label}{n}")
                if any(sym in c.free_symbols for c in self.A + self.B):
                    names.append(sym)
        return names

    def x_coefficient(self, power: int) -> sp.Expr:
        """T^power 의 x 계수"""
        n = power + self.orders[0]
        return self.A[n] if 0 <= n <= self.n_max else sp.Integer(0)

    def y_coefficient(self, power: int) -> sp.Expr:
        n = power + self.orders[1]
        return self.B[n] if 0 <= n <= self.n_max else sp.Integer(0)

    def coefficient_fn(self, side: str, n: int) -> RationalFn:
        values = self.A if side.upper() == "A" else self.B
        return RationalFn.from_expr(values[n], self.parameters)

    def series_exprs(self) -> Tuple[sp.Expr, sp.Expr]:
        p1, p2 = self.orders
        x = sp.Add(*[c * T ** (n - p1) for n, c in enumerate(self.A)])
        y = sp.Add(*[c * T ** (n - p2) for n, c in enumerate(self.B)])
        return x, y

    def numeric(self, values: Mapping[str, complex]) -> 'NumericLaurent':
        """z0, 매개변수, 자유 매개변수에 수치 대입"""
        subs = {sp.Symbol(k): v for k, v in values.items()}
        return NumericLaurent(self.orders,
                              tuple(complex(sp.N(c.subs(subs))) for c in self.A),
                              tuple(complex(sp.N(c.subs(subs))) for c in self.B))


@dataclass(frozen=True)
class NumericLaurent:
    """수치 계수 로랑 급수"""
    orders: Tuple[int, int]
    A: Tuple[complex, ...]
    B: Tuple[complex, ...]

    def evaluate(self, t: complex) -> Tuple[complex, complex]:
        p1, p2 = self.orders
        x = sum(c * t ** (n - p1) for n, c in enumerate(self.A))
        y = sum(c * t ** (n - p2) for n, c in enumerate(self.B))
        return x, y


# ---- truncated series arithmetic -------------------------------------------

def _valuation(s: Series) -> int:
    return min(s) if s else 0


def _mul(a: Series, b: Series, bound: int) -> Series:
    out: Series = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = ea + eb
            if e <= bound:
                out[e] = out.get(e, 0) + ca * cb
    return out


def _evaluate_on_series(poly: LaurentPoly, series: Mapping[str, Series], bound: int) -> Series:
    """다항식에 절단 급수 대입 (bound 이하 지수만 정확)"""
    total: Series = {}
    for mono, coeff in poly.items():
        constant = poly.domain.to_sympy(coeff)
        factors: List[Series] = []
        for name, exp in mono:
            if name in series:
                factors.extend([series[name]] * exp)
            else:
                constant *= sp.Symbol(name) ** exp
        product: Series = {0: constant}
        remaining = sum(_valuation(f) for f in factors)
        for f in factors:
            remaining -= _valuation(f)
            product = _mul(product, f, bound - remaining)
        for e, c in product.items():
            if e <= bound:
                total[e] = total.get(e, 0) + c
    return total


def _derivative(s: Series) -> Series:
    return {e - 1: e * c for e, c in s.items() if e != 0}


def _leading_orders(w: Weights) -> Tuple[int, int]:
    gap = w.s - w.r
    if gap <= 0 or w.p % gap or w.q % gap:
        raise ValueError(f"weights {w.as_tuple()} admit no Laurent balance with integer orders")
    return (w.p // gap, w.q // gap)


def _dominant_parts(ode: PlanarODE, w: Weights) -> Tuple[LaurentPoly, LaurentPoly]:
    weights = w.as_mapping()
    parts = []
    for poly, pi in ((ode.f, w.p), (ode.g, w.q)):
        target = w.s - w.r + pi
        parts.append(poly.filter_terms(
            lambda exps, target=target: exps.get("z", 0) == 0
            and sum(weights.get(n, 0) * e for n, e in exps.items()) == target))
    return tuple(parts)


def leading_balances(ode: PlanarODE, w: Weights) -> List[Tuple[sp.Expr, sp.Expr]]:
    """최저차 균형 (A0, B0) != (0, 0) 전부"""
    rho_x, rho_y = _leading_orders(w)
    f_dom, g_dom = _dominant_parts(ode, w)
    a0, b0 = sp.Symbol("A0"), sp.Symbol("B0")
    subs = {sp.Symbol("x"): a0, sp.Symbol("y"): b0}
    equations = [sp.expand(-rho_x * a0 - f_dom.to_expr().subs(subs)),
                 sp.expand(-rho_y * b0 - g_dom.to_expr().subs(subs))]
    balances = []
    for sol in sp.solve(equations, [a0, b0], dict=True):
        pair = (sp.nsimplify(sol.get(a0, a0)), sp.nsimplify(sol.get(b0, b0)))
        if any(v.free_symbols for v in pair):
            continue
        if pair == (0, 0):
            continue
        balances.append(pair)
    balances = sorted(set(balances), key=sp.default_sort_key)
    logger.info(f"🎯 {ode.name} 선도 균형 {len(balances)}개")
    return balances


def kovalevskaya_matrix(ode: PlanarODE, w: Weights, balance: Tuple[Any, Any]) -> sp.Matrix:
    """재귀 행렬이 n*I - K 가 되는 K"""
    rho_x, rho_y = _leading_orders(w)
    f_dom, g_dom = _dominant_parts(ode, w)
    x, y = sp.Symbol("x"), sp.Symbol("y")
    J = sp.Matrix([f_dom.to_expr(), g_dom.to_expr()]).jacobian([x, y])
    J = J.subs({x: sp.sympify(balance[0]), y: sp.sympify(balance[1])})
    return sp.diag(rho_x, rho_y) + J


def expected_kovalevskaya(ode: PlanarODE, w: Weights, balance: Tuple[Any, Any]) -> Optional[int]:
    K = kovalevskaya_matrix(ode, w, balance)
    roots = [r for r in K.eigenvals() if r.is_integer and r > 0]
    return int(min(roots)) if roots else None


def _default_order(ode: PlanarODE, w: Weights, balance) -> int:
    kappa = expected_kovalevskaya(ode, w, balance)
    if kappa is not None:
        return kappa + 4
    return int(load_system_config()["system_config"].get("default_series_order", 12))


def laurent_solve(ode: PlanarODE, w: Weights, balance: Tuple[Any, Any],
                  n_max: Optional[int] = None) -> LaurentSeriesSolution:
    """정확한 재귀로 A_n, B_n 계산; 특이-일관 단계는 자유 매개변수 도입"""
    if n_max is None:
        n_max = _default_order(ode, w, balance)
    rho_x, rho_y = _leading_orders(w)
    A: List[sp.Expr] = [sp.sympify(balance[0])]
    B: List[sp.Expr] = [sp.sympify(balance[1])]
    free = set()
    for n in range(1, n_max + 1):
        xs = {k - rho_x: c for k, c in enumerate(A)}
        ys = {k - rho_y: c for k, c in enumerate(B)}
        xs[n - rho_x] = _A
        ys[n - rho_y] = _B
        target_x, target_y = n - rho_x - 1, n - rho_y - 1
        bound = max(target_x, target_y)
        series = {"x": xs, "y": ys, "z": {0: Z0, 1: sp.Integer(1)}}
        fx = _evaluate_on_series(ode.f, series, bound)
        gy = _evaluate_on_series(ode.g, series, bound)
        ex = sp.expand(_derivative(xs).get(target_x, 0) - fx.get(target_x, 0))
        ey = sp.expand(_derivative(ys).get(target_y, 0) - gy.get(target_y, 0))
        for eq in (ex, ey):
            if sp.Poly(eq, _A, _B).total_degree() > 1:
                raise ValueError(f"recursion at n = {n} is not linear in the new coefficients")
        # unknown order (b, a): a becomes the free parameter when both could be
        M = [[sp.diff(ex, _B), sp.diff(ex, _A)], [sp.diff(ey, _B), sp.diff(ey, _A)]]
        rhs = [-ex.subs({_A: 0, _B: 0}), -ey.subs({_A: 0, _B: 0})]
        try:
            result = exact_linear_solve(M, rhs)
        except InconsistentSystemError as exc:
            raise SeriesObstructionError(n) from exc
        b_val, a_val = result.solution
        if result.singular:
            free.add(n)
            renames = {}
            for tau in result.free_parameters:
                if a_val == tau:
                    renames[tau] = sp.Symbol(f"A{n}")
                elif b_val == tau:
                    renames[tau] = sp.Symbol(f"B{n}")
            a_val, b_val = a_val.subs(renames), b_val.subs(renames)
            logger.info(f"🆓 {ode.name} n={n} 에서 자유 매개변수 {sorted(map(str, renames.values()))}")
        A.append(sp.expand(sp.cancel(a_val)))
        B.append(sp.expand(sp.cancel(b_val)))
    return LaurentSeriesSolution(
        leading_exponents=(-rho_x, -rho_y),
        balance=(A[0], B[0]),
        A=tuple(A), B=tuple(B),
        free_indices=frozenset(free),
        n_max=n_max,
        parameters=tuple(sorted(ode.parameters)),
        name=ode.name,
        kovalevskaya_matrix=kovalevskaya_matrix(ode, w, balance),
    )


def kovalevskaya_exponent(sol: LaurentSeriesSolution) -> Optional[int]:
    if not sol.free_indices:
        logger.warning(f"⚠️ {sol.name}: n_max={sol.n_max} 까지 자유 매개변수 없음")
        return None
    return min(sol.free_indices)


def residual_valuations(ode: PlanarODE, sol: LaurentSeriesSolution) -> Tuple[int, int]:
    """절단 급수 대입 잔차의 T 최저 차수 (x 식, y 식)"""
    rho_x, rho_y = sol.orders
    xs = {k - rho_x: c for k, c in enumerate(sol.A)}
    ys = {k - rho_y: c for k, c in enumerate(sol.B)}
    series = {"x": xs, "y": ys, "z": {0: Z0, 1: sp.Integer(1)}}
    bound = sol.n_max - min(rho_x, rho_y) + 1
    valuations = []
    for poly, s in ((ode.f, xs), (ode.g, ys)):
        rhs = _evaluate_on_series(poly, series, bound)
        lhs = _derivative(s)
        found = bound + 1
        for e in range(min(list(lhs) + list(rhs) + [0]), bound + 1):
            if sp.expand(lhs.get(e, 0) - rhs.get(e, 0)) != 0:
                found = e
                break
        valuations.append(found)
    return tuple(valuations)
