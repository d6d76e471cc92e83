#!/usr/bin/env python3
"""
Exact Laurent Polynomial Algebra
유리수(또는 가우스 유리수) 계수의 희소 다변수 로랑 다항식, 유리함수, 단항식 치환
"""

import re
import logging
from fractions import Fraction
from tokenize import TokenError
from dataclasses import dataclass
from typing import Dict, List, Optional, Any, Tuple, Iterable, Mapping, Union, FrozenSet

import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations, convert_xor
from sympy.polys.domains import QQ, QQ_I

from painleve_config import PARAMETER_NAMES

logger = logging.getLogger('painleve.algebra')

# sorted (name, exponent) pairs, zero exponents dropped
Monomial = Tuple[Tuple[str, int], ...]

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_PARSE_TRANSFORMS = standard_transformations + (convert_xor,)


class LaurentAlgebraError(ValueError):
    """대수 연산 오류"""


class NonMonomialPowerError(LaurentAlgebraError):
    """단항식이 아닌 다항식의 음의 거듭제곱"""


class FractionalExponentError(LaurentAlgebraError):
    """치환 결과 분수 지수 발생"""


class UndefinedDegreeError(LaurentAlgebraError):
    """영 다항식의 차수"""


class PolynomialParseError(LaurentAlgebraError):
    """다항식 텍스트 파싱 오류"""

    def __init__(self, text: str, position: Optional[int], reason: str):
        self.text = text
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"cannot parse {text!r}{where}: {reason}")


class InconsistentSystemError(LaurentAlgebraError):
    """특이하고 비일관적인 선형 시스템"""

    def __init__(self, rank: int, augmented_rank: int):
        self.rank = rank
        self.augmented_rank = augmented_rank
        super().__init__(
            f"inconsistent singular system: rank {rank}, augmented rank {augmented_rank}")


@dataclass(frozen=True)
class VarId:
    """변수 식별자"""
    name: str
    is_parameter: bool = False


def symbol(name: str) -> sp.Symbol:
    """공통 심볼 (가정 없음)"""
    return sp.Symbol(name)


def is_parameter_name(name: str) -> bool:
    return name in PARAMETER_NAMES


def _normalize_monomial(mono: Union[Monomial, Mapping[str, int]]) -> Monomial:
    items = mono.items() if isinstance(mono, Mapping) else mono
    merged: Dict[str, int] = {}
    for name, exp in items:
        merged[name] = merged.get(name, 0) + int(exp)
    return tuple(sorted((n, e) for n, e in merged.items() if e != 0))


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged = dict(a)
    for name, exp in b:
        merged[name] = merged.get(name, 0) + exp
    return tuple(sorted((n, e) for n, e in merged.items() if e != 0))


def _mono_pow(a: Monomial, k: int) -> Monomial:
    return tuple((n, e * k) for n, e in a) if k else ()


def _mono_key(mono: Monomial) -> Tuple:
    return (-sum(e for _, e in mono), tuple((n, -e) for n, e in mono))


def _to_domain(value: Any, domain) -> Any:
    if domain.of_type(value):
        return value
    if isinstance(value, Fraction):
        value = sp.Rational(value.numerator, value.denominator)
    return domain.from_sympy(sp.sympify(value))


def _coeff_pow(c: Any, k: int, domain) -> Any:
    if k < 0:
        return domain.quo(domain.one, _coeff_pow(c, -k, domain))
    result = domain.one
    base = c
    while k:
        if k & 1:
            result = result * base
        base = base * base
        k >>= 1
    return result


class LaurentPoly:
    """불변 희소 로랑 다항식"""

    __slots__ = ('_terms', 'domain', 'parameters', '_hash')

    def __init__(self, terms: Optional[Mapping[Any, Any]] = None, domain=QQ,
                 parameters: Iterable[str] = ()):
        clean: Dict[Monomial, Any] = {}
        for mono, coeff in (terms or {}).items():
            mono = _normalize_monomial(mono)
            c = _to_domain(coeff, domain)
            clean[mono] = clean[mono] + c if mono in clean else c
        clean = {m: c for m, c in clean.items() if not domain.is_zero(c)}
        self._init(clean, domain, parameters)

    def _init(self, terms: Dict[Monomial, Any], domain, parameters: Iterable[str]) -> None:
        params = set(parameters)
        for mono in terms:
            for name, exp in mono:
                if name in params or is_parameter_name(name):
                    if exp < 0:
                        raise LaurentAlgebraError(
                            f"parameter {name} carries negative exponent {exp}")
                    params.add(name)
        self._terms = terms
        self.domain = domain
        self.parameters: FrozenSet[str] = frozenset(params)
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Any], domain, parameters: Iterable[str]) -> 'LaurentPoly':
        poly = cls.__new__(cls)
        poly._init({m: c for m, c in terms.items() if not domain.is_zero(c)}, domain, parameters)
        return poly

    # ---- constructors -------------------------------------------------

    @classmethod
    def zero(cls, domain=QQ) -> 'LaurentPoly':
        return cls._raw({}, domain, ())

    @classmethod
    def one(cls, domain=QQ) -> 'LaurentPoly':
        return cls.constant(1, domain)

    @classmethod
    def constant(cls, value: Any, domain=QQ) -> 'LaurentPoly':
        return cls({(): value}, domain)

    @classmethod
    def variable(cls, name: str, is_parameter: bool = False) -> 'LaurentPoly':
        return cls({((name, 1),): 1}, QQ, (name,) if is_parameter else ())

    @classmethod
    def monomial(cls, exponents: Mapping[str, int], coeff: Any = 1, domain=QQ) -> 'LaurentPoly':
        return cls({_normalize_monomial(exponents): coeff}, domain)

    @classmethod
    def from_expr(cls, expr: Any, parameters: Iterable[str] = ()) -> 'LaurentPoly':
        """sympy 식에서 변환 (정수 지수, 유리/가우스 유리 계수만 허용)"""
        expr = sp.expand(sp.sympify(expr))
        domain = QQ_I if expr.has(sp.I) else QQ
        terms: Dict[Monomial, Any] = {}
        for term in sp.Add.make_args(expr):
            if term == 0:
                continue
            coeff = sp.Integer(1)
            exps: Dict[str, int] = {}
            for factor in sp.Mul.make_args(term):
                if factor.is_Rational or factor == sp.I:
                    coeff *= factor
                    continue
                base, exp = factor.as_base_exp()
                if not (base.is_Symbol and exp.is_Integer):
                    raise LaurentAlgebraError(f"term {term} is not a Laurent monomial")
                exps[base.name] = exps.get(base.name, 0) + int(exp)
            mono = _normalize_monomial(exps)
            c = domain.from_sympy(coeff)
            terms[mono] = terms[mono] + c if mono in terms else c
        return cls._raw(terms, domain, parameters)

    @classmethod
    def parse(cls, text: str, parameters: Iterable[str] = ()) -> 'LaurentPoly':
        """텍스트 파싱 ('6*y^2 + z', '-1/2*x*w^-3')"""
        expr = parse_expression(text)
        try:
            return cls.from_expr(expr, parameters)
        except LaurentAlgebraError as exc:
            raise PolynomialParseError(text, None, str(exc)) from exc

    # ---- inspection ---------------------------------------------------

    def items(self) -> List[Tuple[Monomial, Any]]:
        return sorted(self._terms.items(), key=lambda kv: _mono_key(kv[0]))

    def monomials(self) -> List[Monomial]:
        return [m for m, _ in self.items()]

    def coefficient(self, mono: Union[Monomial, Mapping[str, int]]) -> sp.Expr:
        c = self._terms.get(_normalize_monomial(mono))
        return sp.Integer(0) if c is None else self.domain.to_sympy(c)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def constant_term(self) -> sp.Expr:
        return self.coefficient(())

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    @property
    def variables(self) -> FrozenSet[str]:
        return frozenset(n for m in self._terms for n, _ in m)

    def var_ids(self) -> List[VarId]:
        return [VarId(n, n in self.parameters) for n in sorted(self.variables)]

    def exponent(self, mono: Monomial, name: str) -> int:
        return dict(mono).get(name, 0)

    def degree_in(self, name: str) -> int:
        if not self._terms:
            raise UndefinedDegreeError("degree of the zero polynomial")
        return max(dict(m).get(name, 0) for m in self._terms)

    def min_degree_in(self, name: str) -> int:
        if not self._terms:
            raise UndefinedDegreeError("order of the zero polynomial")
        return min(dict(m).get(name, 0) for m in self._terms)

    def total_degree(self, names: Iterable[str]) -> int:
        names = set(names)
        if not self._terms:
            raise UndefinedDegreeError("degree of the zero polynomial")
        return max(sum(e for n, e in m if n in names) for m in self._terms)

    def weighted_degrees(self, weights: Mapping[str, int]) -> List[int]:
        return [sum(weights.get(n, 0) * e for n, e in m) for m, _ in self.items()]

    def weighted_degree(self, weights: Mapping[str, int]) -> int:
        if not self._terms:
            raise UndefinedDegreeError("weighted degree of the zero polynomial is undefined")
        return max(self.weighted_degrees(weights))

    def weighted_order(self, weights: Mapping[str, int]) -> int:
        if not self._terms:
            raise UndefinedDegreeError("weighted order of the zero polynomial is undefined")
        return min(self.weighted_degrees(weights))

    def is_polynomial(self, names: Optional[Iterable[str]] = None) -> bool:
        names = None if names is None else set(names)
        return all(e >= 0 for m in self._terms for n, e in m if names is None or n in names)

    def exponent_vectors(self, names: Tuple[str, ...]) -> List[Tuple[int, ...]]:
        return [tuple(dict(m).get(n, 0) for n in names) for m, _ in self.items()]

    # ---- arithmetic ---------------------------------------------------

    def _lift(self, other: Any) -> 'LaurentPoly':
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, Fraction):
            other = sp.Rational(other.numerator, other.denominator)
        if isinstance(other, int):
            return LaurentPoly._raw({(): self.domain.convert(other)}, self.domain, ())
        if isinstance(other, sp.Basic):
            return LaurentPoly.from_expr(other, self.parameters)
        if self.domain.of_type(other):
            return LaurentPoly._raw({(): other}, self.domain, ())
        return NotImplemented

    def _unified(self, other: 'LaurentPoly'):
        if self.domain == other.domain:
            return self._terms, other._terms, self.domain
        dom = self.domain.unify(other.domain)
        conv = lambda poly: {m: dom.from_sympy(poly.domain.to_sympy(c)) for m, c in poly._terms.items()}
        return conv(self), conv(other), dom

    def with_domain(self, domain) -> 'LaurentPoly':
        if domain == self.domain:
            return self
        return LaurentPoly._raw(
            {m: domain.from_sympy(self.domain.to_sympy(c)) for m, c in self._terms.items()},
            domain, self.parameters)

    def __add__(self, other: Any) -> 'LaurentPoly':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        a, b, dom = self._unified(other)
        terms = dict(a)
        for m, c in b.items():
            terms[m] = terms[m] + c if m in terms else c
        return LaurentPoly._raw(terms, dom, self.parameters | other.parameters)

    __radd__ = __add__

    def __neg__(self) -> 'LaurentPoly':
        return LaurentPoly._raw({m: -c for m, c in self._terms.items()}, self.domain, self.parameters)

    def __sub__(self, other: Any) -> 'LaurentPoly':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other: Any) -> 'LaurentPoly':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other: Any) -> 'LaurentPoly':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        a, b, dom = self._unified(other)
        terms: Dict[Monomial, Any] = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = _mono_mul(m1, m2)
                c = c1 * c2
                terms[m] = terms[m] + c if m in terms else c
        return LaurentPoly._raw(terms, dom, self.parameters | other.parameters)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> 'LaurentPoly':
        if not isinstance(k, int):
            raise LaurentAlgebraError(f"exponent {k!r} is not an integer")
        if k < 0:
            if not self.is_monomial():
                raise NonMonomialPowerError(
                    f"negative power {k} of non-monomial {self.to_text()}")
            (mono, c), = self._terms.items()
            return LaurentPoly._raw({_mono_pow(mono, k): _coeff_pow(c, k, self.domain)},
                                    self.domain, self.parameters)
        result = LaurentPoly.one(self.domain)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __truediv__(self, other: Any) -> 'LaurentPoly':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self * other ** -1

    def __eq__(self, other: Any) -> bool:
        other = self._lift(other)
        if other is NotImplemented:
            return False
        a, b, _ = self._unified(other)
        return a == b

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset((m, self.domain.to_sympy(c)) for m, c in self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"LaurentPoly({self.to_text()!r})"

    def __str__(self) -> str:
        return self.to_text()

    # ---- calculus and restriction --------------------------------------

    def diff(self, name: str) -> 'LaurentPoly':
        terms: Dict[Monomial, Any] = {}
        for mono, c in self._terms.items():
            exps = dict(mono)
            e = exps.get(name, 0)
            if e == 0:
                continue
            exps[name] = e - 1
            terms[_normalize_monomial(exps)] = c * self.domain.convert(e)
        return LaurentPoly._raw(terms, self.domain, self.parameters)

    def coefficient_of(self, name: str, k: int) -> 'LaurentPoly':
        """name^k 의 계수 (name 제거)"""
        terms = {tuple((n, e) for n, e in m if n != name): c
                 for m, c in self._terms.items() if dict(m).get(name, 0) == k}
        return LaurentPoly._raw(terms, self.domain, self.parameters)

    def set_zero(self, name: str) -> 'LaurentPoly':
        if self._terms and self.min_degree_in(name) < 0:
            raise LaurentAlgebraError(f"{name} has negative exponents; cannot set it to zero")
        return self.coefficient_of(name, 0)

    def homogeneous_part(self, names: Iterable[str], degree: int) -> 'LaurentPoly':
        names = set(names)
        terms = {m: c for m, c in self._terms.items()
                 if sum(e for n, e in m if n in names) == degree}
        return LaurentPoly._raw(terms, self.domain, self.parameters)

    def truncate(self, names: Iterable[str], max_degree: int) -> 'LaurentPoly':
        names = set(names)
        terms = {m: c for m, c in self._terms.items()
                 if sum(e for n, e in m if n in names) <= max_degree}
        return LaurentPoly._raw(terms, self.domain, self.parameters)

    def filter_terms(self, keep) -> 'LaurentPoly':
        terms = {m: c for m, c in self._terms.items() if keep(dict(m))}
        return LaurentPoly._raw(terms, self.domain, self.parameters)

    def shift(self, exponents: Mapping[str, int]) -> 'LaurentPoly':
        mono = _normalize_monomial(exponents)
        return LaurentPoly._raw({_mono_mul(m, mono): c for m, c in self._terms.items()},
                                self.domain, self.parameters)

    def rename(self, mapping: Mapping[str, str]) -> 'LaurentPoly':
        terms: Dict[Monomial, Any] = {}
        for mono, c in self._terms.items():
            m = _normalize_monomial([(mapping.get(n, n), e) for n, e in mono])
            terms[m] = terms[m] + c if m in terms else c
        params = {mapping.get(n, n) for n in self.parameters}
        return LaurentPoly._raw(terms, self.domain, params)

    def map_coefficients(self, fn) -> 'LaurentPoly':
        return LaurentPoly({m: fn(self.domain.to_sympy(c)) for m, c in self._terms.items()},
                           self.domain, self.parameters)

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        """수치 평가 (모든 변수 값 필요)"""
        total = 0j
        for mono, c in self._terms.items():
            term = complex(self.domain.to_sympy(c))
            for name, exp in mono:
                if name not in values:
                    raise LaurentAlgebraError(f"no value supplied for {name}")
                term *= complex(values[name]) ** exp
            total += term
        return total

    def substitute(self, images: Union['MonomialMap', Mapping[str, Any]],
                   keep_unmapped: bool = False) -> 'LaurentPoly':
        mapping = images if isinstance(images, MonomialMap) else MonomialMap(images)
        return substitute(self, mapping, keep_unmapped=keep_unmapped)

    def partial_evaluate(self, values: Mapping[str, Any]) -> 'LaurentPoly':
        """정확한 상수를 일부 변수에 대입"""
        images = {n: LaurentPoly.from_expr(sp.sympify(v)) if not isinstance(v, LaurentPoly) else v
                  for n, v in values.items()}
        return substitute(self, MonomialMap(images), keep_unmapped=True)

    # ---- conversion ---------------------------------------------------

    def to_expr(self) -> sp.Expr:
        return sp.Add(*[self.domain.to_sympy(c) * sp.Mul(*[symbol(n) ** e for n, e in m])
                        for m, c in self.items()])

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.items():
            coeff = self.domain.to_sympy(c)
            mono_text = "*".join(n if e == 1 else f"{n}^{e}" for n, e in mono)
            if coeff.is_Rational:
                if not mono_text:
                    body = sp.sstr(coeff)
                elif coeff == 1:
                    body = mono_text
                elif coeff == -1:
                    body = "-" + mono_text
                else:
                    body = f"{sp.sstr(coeff)}*{mono_text}"
            else:
                body = f"({sp.sstr(coeff)})" + (f"*{mono_text}" if mono_text else "")
            parts.append(body)
        text = " + ".join(parts)
        return text.replace("+ -", "- ")


def parse_expression(text: str) -> sp.Expr:
    """유리식 텍스트를 sympy 식으로 ('x - 2*kappa/y', 'I*(x - y - 2*z)')"""
    names = {n for n in _IDENTIFIER.findall(text) if n != "I"}
    local_dict = {n: symbol(n) for n in names}
    try:
        return parse_expr(text, local_dict=local_dict, transformations=_PARSE_TRANSFORMS)
    except SyntaxError as exc:
        position = exc.offset - 1 if exc.offset else None
        raise PolynomialParseError(text, position, exc.msg or "syntax error") from exc
    except TokenError as exc:
        position = None
        if len(exc.args) > 1 and isinstance(exc.args[1], tuple):
            position = exc.args[1][1]
        raise PolynomialParseError(text, position, str(exc.args[0])) from exc
    except (TypeError, AttributeError) as exc:
        raise PolynomialParseError(text, None, str(exc)) from exc


def lp(text: str, parameters: Iterable[str] = ()) -> LaurentPoly:
    return LaurentPoly.parse(text, parameters)


def weighted_degree(p: LaurentPoly, w: Any) -> int:
    """가중 차수 (매개변수는 가중치 0)"""
    weights = w.as_mapping() if hasattr(w, "as_mapping") else dict(w)
    return p.weighted_degree(weights)


# ---- monomial maps ---------------------------------------------------------

@dataclass(frozen=True)
class FractionalMonomial:
    """분수 지수 단항식 (순환 피복 위의 중간 결과)"""
    coeff: sp.Expr
    exponents: Tuple[Tuple[str, Fraction], ...]

    @classmethod
    def of(cls, exponents: Mapping[str, Any], coeff: Any = 1) -> 'FractionalMonomial':
        exps = tuple(sorted((n, Fraction(e)) for n, e in exponents.items() if Fraction(e) != 0))
        return cls(sp.sympify(coeff), exps)

    @classmethod
    def from_laurent(cls, p: LaurentPoly) -> 'FractionalMonomial':
        if not p.is_monomial():
            raise NonMonomialPowerError(f"{p.to_text()} is not a monomial")
        (mono, c), = p.items()
        return cls(p.domain.to_sympy(c), tuple((n, Fraction(e)) for n, e in mono))

    def times(self, other: 'FractionalMonomial') -> 'FractionalMonomial':
        merged: Dict[str, Fraction] = dict(self.exponents)
        for n, e in other.exponents:
            merged[n] = merged.get(n, Fraction(0)) + e
        return FractionalMonomial.of(merged, self.coeff * other.coeff)

    def power(self, k: Any) -> 'FractionalMonomial':
        k = Fraction(k)
        if k.denominator != 1 and self.coeff != 1:
            raise FractionalExponentError(
                f"fractional power {k} of coefficient {self.coeff}")
        coeff = self.coeff ** int(k) if k.denominator == 1 else sp.Integer(1)
        return FractionalMonomial.of({n: e * k for n, e in self.exponents}, coeff)

    def is_integral(self) -> bool:
        return all(e.denominator == 1 for _, e in self.exponents)

    def to_laurent(self) -> LaurentPoly:
        if not self.is_integral():
            bad = [f"{n}^{e}" for n, e in self.exponents if e.denominator != 1]
            raise FractionalExponentError(f"fractional exponent in {', '.join(bad)}")
        return LaurentPoly.from_expr(self.coeff) * LaurentPoly.monomial(
            {n: int(e) for n, e in self.exponents})

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        total = complex(self.coeff)
        for n, e in self.exponents:
            total *= complex(values[n]) ** float(e)
        return total


Image = Union[LaurentPoly, FractionalMonomial]


def _as_image(value: Any) -> Image:
    if isinstance(value, (LaurentPoly, FractionalMonomial)):
        return value
    if isinstance(value, str):
        return LaurentPoly.parse(value)
    return LaurentPoly.from_expr(value)


class MonomialMap:
    """변수 치환 맵"""

    def __init__(self, images: Mapping[str, Any]):
        self.images: Dict[str, Image] = {n: _as_image(v) for n, v in images.items()}

    @classmethod
    def identity(cls, names: Iterable[str]) -> 'MonomialMap':
        return cls({n: LaurentPoly.variable(n) for n in names})

    def __getitem__(self, name: str) -> Image:
        return self.images[name]

    def __contains__(self, name: str) -> bool:
        return name in self.images

    def __repr__(self) -> str:
        body = ", ".join(f"{n} -> {v}" for n, v in sorted(self.images.items()))
        return f"MonomialMap({body})"

    def apply(self, p: LaurentPoly, keep_unmapped: bool = False) -> LaurentPoly:
        return substitute(p, self, keep_unmapped=keep_unmapped)

    def apply_image(self, image: Image, keep_unmapped: bool = True) -> Image:
        if isinstance(image, LaurentPoly):
            return substitute(image, self, keep_unmapped=keep_unmapped)
        monomial_part, poly_part = _substitute_term(
            image.exponents, image.coeff, self, keep_unmapped, QQ_I if image.coeff.has(sp.I) else QQ)
        if poly_part == 1:
            return monomial_part.to_laurent() if monomial_part.is_integral() else monomial_part
        return monomial_part.to_laurent() * poly_part

    def compose(self, other: 'MonomialMap') -> 'MonomialMap':
        """self 다음 other 적용: substitute(substitute(p, self), other)"""
        return MonomialMap({n: other.apply_image(img) for n, img in self.images.items()})


def _image_power(image: Image, exp: Fraction) -> Image:
    if isinstance(image, FractionalMonomial):
        return image.power(exp)
    if image.is_monomial():
        return FractionalMonomial.from_laurent(image).power(exp)
    if image.is_zero():
        if exp <= 0:
            raise ZeroDivisionError("zero image raised to a non-positive power")
        return image
    if exp.denominator != 1 or exp < 0:
        raise NonMonomialPowerError(f"power {exp} of non-monomial image {image.to_text()}")
    return image ** int(exp)


def _substitute_term(exponents, coeff, m: MonomialMap, keep_unmapped: bool, domain,
                     parameters: FrozenSet[str] = frozenset()):
    monomial_part = FractionalMonomial.of({}, coeff)
    poly_part = LaurentPoly.one(domain)
    for name, exp in exponents:
        if name in m.images:
            powered = _image_power(m.images[name], Fraction(exp))
        elif keep_unmapped or name in parameters or is_parameter_name(name):
            powered = FractionalMonomial.of({name: exp})
        else:
            raise LaurentAlgebraError(f"no image for variable {name}")
        if isinstance(powered, FractionalMonomial):
            monomial_part = monomial_part.times(powered)
        else:
            poly_part = poly_part * powered
    return monomial_part, poly_part


def substitute(p: LaurentPoly, m: MonomialMap, keep_unmapped: bool = False) -> LaurentPoly:
    """단항식 맵 치환 (매개변수는 그대로 통과)"""
    result = LaurentPoly.zero(p.domain)
    for mono, c in p.items():
        monomial_part, poly_part = _substitute_term(
            mono, p.domain.to_sympy(c), m, keep_unmapped, p.domain, p.parameters)
        if poly_part.is_zero():
            continue
        result = result + monomial_part.to_laurent() * poly_part
    kept = {n for n in p.parameters if n not in m.images}
    return LaurentPoly._raw(dict(result._terms), result.domain, kept | result.parameters)


# ---- rational functions ----------------------------------------------------

def _canonical_pair(numer: sp.Expr, denom: sp.Expr) -> Tuple[sp.Expr, sp.Expr]:
    if denom == 0:
        raise ZeroDivisionError("rational function with zero denominator")
    try:
        expr = sp.cancel(sp.together(numer / denom))
        num, den = sp.fraction(expr)
        gens = sorted(den.free_symbols, key=lambda s: s.name)
        lc = sp.Poly(den, *gens).LC(order='grlex') if gens else den
    except sp.PolynomialError as exc:
        raise LaurentAlgebraError(f"{numer}/({denom}) is not a rational function: {exc}") from exc
    return sp.expand(num / lc), sp.expand(den / lc)


class RationalFn:
    """정규형 유리함수 (분모 grlex 선도계수 1)"""

    __slots__ = ('numer', 'denom')

    def __init__(self, numer: Any, denom: Any = 1, parameters: Iterable[str] = ()):
        n_expr = numer.to_expr() if isinstance(numer, (LaurentPoly, RationalFn)) else sp.sympify(numer)
        d_expr = denom.to_expr() if isinstance(denom, (LaurentPoly, RationalFn)) else sp.sympify(denom)
        params = set(parameters)
        for part in (numer, denom):
            if isinstance(part, LaurentPoly):
                params |= part.parameters
            elif isinstance(part, RationalFn):
                params |= part.parameters
        num, den = _canonical_pair(n_expr, d_expr)
        self.numer = LaurentPoly.from_expr(num, params)
        self.denom = LaurentPoly.from_expr(den, params)

    @classmethod
    def from_expr(cls, expr: Any, parameters: Iterable[str] = ()) -> 'RationalFn':
        return cls(sp.sympify(expr), 1, parameters)

    @property
    def parameters(self) -> FrozenSet[str]:
        return self.numer.parameters | self.denom.parameters

    def to_expr(self) -> sp.Expr:
        return self.numer.to_expr() / self.denom.to_expr()

    def _lift(self, other: Any) -> 'RationalFn':
        if isinstance(other, RationalFn):
            return other
        if isinstance(other, LaurentPoly):
            return RationalFn(other)
        if isinstance(other, (int, Fraction, sp.Basic)):
            if isinstance(other, Fraction):
                other = sp.Rational(other.numerator, other.denominator)
            return RationalFn(sp.sympify(other))
        return NotImplemented

    def __add__(self, other: Any) -> 'RationalFn':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return RationalFn(self.numer * other.denom + other.numer * self.denom,
                          self.denom * other.denom)

    __radd__ = __add__

    def __neg__(self) -> 'RationalFn':
        return RationalFn(-self.numer, self.denom)

    def __sub__(self, other: Any) -> 'RationalFn':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other: Any) -> 'RationalFn':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other: Any) -> 'RationalFn':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return RationalFn(self.numer * other.numer, self.denom * other.denom)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> 'RationalFn':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if other.numer.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.numer * other.denom, self.denom * other.numer)

    def __rtruediv__(self, other: Any) -> 'RationalFn':
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, k: int) -> 'RationalFn':
        if k < 0:
            return RationalFn(self.denom ** -k, self.numer ** -k)
        return RationalFn(self.numer ** k, self.denom ** k)

    def __eq__(self, other: Any) -> bool:
        other = self._lift(other)
        if other is NotImplemented:
            return False
        return (self.numer * other.denom - other.numer * self.denom).is_zero()

    def __hash__(self) -> int:
        return hash((self.numer, self.denom))

    def __repr__(self) -> str:
        return f"RationalFn(({self.numer.to_text()}) / ({self.denom.to_text()}))"

    def diff(self, name: str) -> 'RationalFn':
        return RationalFn(self.numer.diff(name) * self.denom - self.numer * self.denom.diff(name),
                          self.denom * self.denom)

    def is_polynomial(self) -> bool:
        return self.denom.is_constant()

    def as_laurent(self) -> LaurentPoly:
        if not self.denom.is_monomial():
            raise LaurentAlgebraError(f"{self!r} is not a Laurent polynomial")
        return self.numer * self.denom ** -1

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        return self.numer.evaluate(values) / self.denom.evaluate(values)


# ---- exact linear algebra --------------------------------------------------

def as_expr(value: Any) -> sp.Expr:
    if isinstance(value, (LaurentPoly, RationalFn)):
        return value.to_expr()
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    return sp.sympify(value)


def _is_zero(expr: sp.Expr) -> bool:
    return sp.cancel(expr) == 0


@dataclass(frozen=True)
class LinearSolveResult:
    """정확한 선형 시스템 해"""
    solution: Tuple[sp.Expr, ...]
    free_parameters: Tuple[sp.Symbol, ...]
    rank: int

    @property
    def singular(self) -> bool:
        return bool(self.free_parameters)

    def as_rational_fns(self, parameters: Iterable[str] = ()) -> Tuple[RationalFn, ...]:
        return tuple(RationalFn.from_expr(e, parameters) for e in self.solution)


def _matrix_rows(A: Any) -> List[List[Any]]:
    """sympy 행렬이나 중첩 시퀀스를 행 목록으로"""
    if isinstance(A, sp.MatrixBase):
        return A.tolist()
    return [list(row) for row in A]


def exact_linear_solve(A: Any, b: Any, square: bool = True) -> LinearSolveResult:
    """정확한 가우스-조르당 풀이; 특이 시스템은 자유 매개변수로 보고"""
    M = sp.Matrix([[sp.cancel(as_expr(e)) for e in row] for row in _matrix_rows(A)])
    rhs = list(b) if isinstance(b, sp.MatrixBase) else b
    B = sp.Matrix([sp.cancel(as_expr(e)) for e in rhs])
    if (square and M.rows != M.cols) or B.rows != M.rows:
        raise LaurentAlgebraError(f"expected square system, got {M.rows}x{M.cols} with {B.rows} rhs")
    try:
        sol, params = M.gauss_jordan_solve(B)
    except ValueError:
        rank = fraction_free_rank(M.tolist())
        augmented = fraction_free_rank(M.row_join(B).tolist())
        raise InconsistentSystemError(rank, augmented)
    free = tuple(params)
    solution = tuple(sp.cancel(e) for e in sol)
    return LinearSolveResult(solution, free, M.cols - len(free))


def fraction_free_rank(A: Any) -> int:
    """Bareiss 분수 없는 소거에 의한 계수 (독립 검증용)"""
    rows_data = [[sp.cancel(as_expr(e)) for e in row] for row in _matrix_rows(A)]
    if not rows_data:
        return 0
    n_rows, n_cols = len(rows_data), len(rows_data[0])
    M = [list(r) for r in rows_data]
    rank = 0
    prev = sp.Integer(1)
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if not _is_zero(M[r][col])), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        for r in range(rank + 1, n_rows):
            for c in range(col + 1, n_cols):
                M[r][c] = sp.cancel((M[rank][col] * M[r][c] - M[r][col] * M[rank][c]) / prev)
            M[r][col] = sp.Integer(0)
        prev = M[rank][col]
        rank += 1
        if rank == n_rows:
            break
    return rank
