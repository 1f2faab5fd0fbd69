"""
厳密記号計算カーネル
Exact Symbolic Kernel

有理係数・有理指数を持つ多変数ローラン式（LaurentExpr）と、その分数（RatExpr）。
分数はモノミアル内容の抽出でのみ約分し、等価判定は交差乗算で行う。
分数冪は単項式にのみ許される（主値の根）。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import sympy
from sympy import integer_nthroot
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from app.models.verification import (
    DenominatorVanishes,
    DivisionByZero,
    FractionalPowerOfNonMonomial,
    NonEvaluableRoot,
    NonMonomialFractionalPower,
    VerificationError,
)

logger = logging.getLogger(__name__)

Exponent = Union[int, Fraction]
Exps = Tuple[Tuple[str, Exponent], ...]
Number = Union[int, Fraction]

_DIGITS = re.compile(r"(\d+)")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_RATIONAL_EXPONENT = re.compile(r"\^(-?\d+/\d+)")
_FUNCTIONS = {"sqrt"}
_TRANSFORMATIONS = standard_transformations + (convert_xor,)


# ---------------------------------------------------------------------------
# 指数ベクトル
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def generator_key(name: str) -> Tuple[Tuple[int, Any], ...]:
    """生成元名の自然順キー（y2 < y10）"""
    return tuple((0, int(part)) if part.isdigit() else (1, part)
                 for part in _DIGITS.split(name) if part)


def _exp(value: Exponent) -> Exponent:
    if type(value) is int:
        return value
    value = Fraction(value)
    return value.numerator if value.denominator == 1 else value


def canonical_exps(pairs: Iterable[Tuple[str, Exponent]]) -> Exps:
    """(生成元, 指数) の列を正準な指数ベクトルへ"""
    merged: Dict[str, Exponent] = {}
    for gen, exp in pairs:
        merged[gen] = merged.get(gen, 0) + exp
    return tuple(sorted(((g, _exp(e)) for g, e in merged.items() if e != 0),
                        key=lambda item: generator_key(item[0])))


def mul_exps(a: Exps, b: Exps) -> Exps:
    if not a:
        return b
    if not b:
        return a
    return canonical_exps(a + b)


def scale_exps(a: Exps, factor: Exponent) -> Exps:
    if factor == 0:
        return ()
    return tuple((g, _exp(e * factor)) for g, e in a)


def rational_root(value: Fraction, n: int) -> Fraction:
    """有理数の厳密な n 乗根（主値）。存在しなければ NonEvaluableRoot"""
    value = Fraction(value)
    if n == 1:
        return value
    if value < 0:
        if n % 2 == 0:
            raise NonEvaluableRoot(f"even root of negative value {value}")
        return -rational_root(-value, n)
    num_root, num_exact = integer_nthroot(value.numerator, n)
    den_root, den_exact = integer_nthroot(value.denominator, n)
    if not (num_exact and den_exact):
        raise NonEvaluableRoot(f"{value} is not a perfect {n}-th power")
    return Fraction(int(num_root), int(den_root))


def rational_power(value: Fraction, exp: Exponent) -> Fraction:
    exp = Fraction(exp)
    if exp.denominator == 1:
        if value == 0 and exp < 0:
            raise DenominatorVanishes("zero raised to a negative power")
        return Fraction(value) ** exp.numerator
    return rational_root(value, exp.denominator) ** exp.numerator


@dataclass(frozen=True)
class GeneratorSet:
    """順序付き生成元集合（単項式比較の基準）"""
    names: Tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise VerificationError(f"duplicate generator names in {self.names}")

    @classmethod
    def natural(cls, names: Iterable[str]) -> "GeneratorSet":
        return cls(tuple(sorted(set(names), key=generator_key)))

    @classmethod
    def of(cls, *exprs: "LaurentExpr") -> "GeneratorSet":
        names = set()
        for expr in exprs:
            names |= expr.generators()
        return cls.natural(names)

    def vector(self, exps: Exps) -> Tuple[Exponent, ...]:
        lookup = dict(exps)
        return tuple(lookup.get(name, 0) for name in self.names)


# ---------------------------------------------------------------------------
# 単項式
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monomial:
    """係数付き単項式 coeff * prod(g^e)"""
    coeff: Fraction
    exps: Exps = ()

    def __post_init__(self):
        if self.coeff == 0:
            raise VerificationError("monomial coefficient must be nonzero")

    @classmethod
    def of(cls, coeff: Number = 1, exps: Optional[Mapping[str, Exponent]] = None) -> "Monomial":
        return cls(Fraction(coeff), canonical_exps((exps or {}).items()))

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial(self.coeff * other.coeff, mul_exps(self.exps, other.exps))

    def __truediv__(self, other: "Monomial") -> "Monomial":
        return self * other.inverse()

    def inverse(self) -> "Monomial":
        return Monomial(1 / self.coeff, scale_exps(self.exps, -1))

    def __pow__(self, exp: Exponent) -> "Monomial":
        return Monomial(rational_power(self.coeff, exp), scale_exps(self.exps, Fraction(exp)))

    def degree(self, gen: str) -> Exponent:
        return dict(self.exps).get(gen, 0)

    def to_expr(self) -> "LaurentExpr":
        return LaurentExpr({self.exps: self.coeff})


# ---------------------------------------------------------------------------
# ローラン式
# ---------------------------------------------------------------------------

class LaurentExpr:
    """単項式の正準な有限和。キーは正準指数ベクトル、値は非零有理係数"""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Exps, Number]] = None):
        self._terms: Dict[Exps, Fraction] = {
            exps: Fraction(c) for exps, c in (terms or {}).items() if c != 0
        }

    # --- 構築 ---
    @classmethod
    def const(cls, value: Number) -> "LaurentExpr":
        return cls({(): value})

    @classmethod
    def gen(cls, name: str, exp: Exponent = 1) -> "LaurentExpr":
        return cls({canonical_exps([(name, exp)]): 1})

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[Number, Mapping[str, Exponent]]]) -> "LaurentExpr":
        acc: Dict[Exps, Fraction] = {}
        for coeff, exps in terms:
            key = canonical_exps(exps.items())
            acc[key] = acc.get(key, 0) + Fraction(coeff)
        return cls(acc)

    # --- 参照 ---
    @property
    def terms(self) -> Dict[Exps, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def is_constant(self) -> bool:
        return self.is_zero() or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def as_monomial(self) -> Monomial:
        if len(self._terms) != 1:
            raise NonMonomialFractionalPower(f"expression has {len(self._terms)} terms, expected one")
        ((exps, coeff),) = self._terms.items()
        return Monomial(coeff, exps)

    def monomials(self) -> List[Monomial]:
        return [Monomial(c, e) for e, c in self._terms.items()]

    def generators(self) -> set:
        return {g for exps in self._terms for g, _ in exps}

    def min_exps(self) -> Dict[str, Exponent]:
        gens = self.generators()
        mins: Dict[str, Exponent] = {}
        for g in gens:
            mins[g] = min(dict(exps).get(g, 0) for exps in self._terms)
        return mins

    def leading(self, gens: Optional[GeneratorSet] = None) -> Monomial:
        """辞書式順序（密ベクトル）での先頭項"""
        if self.is_zero():
            raise DivisionByZero("zero expression has no leading term")
        gens = gens or GeneratorSet.of(self)
        exps = max(self._terms, key=gens.vector)
        return Monomial(self._terms[exps], exps)

    # --- 演算 ---
    def __add__(self, other: "LaurentExpr") -> "LaurentExpr":
        if not _laurent_operand(other):
            return NotImplemented
        other = _as_laurent(other)
        acc = dict(self._terms)
        for exps, c in other._terms.items():
            acc[exps] = acc.get(exps, 0) + c
        return LaurentExpr(acc)

    __radd__ = __add__

    def __neg__(self) -> "LaurentExpr":
        return LaurentExpr({e: -c for e, c in self._terms.items()})

    def __sub__(self, other: "LaurentExpr") -> "LaurentExpr":
        if not _laurent_operand(other):
            return NotImplemented
        return self + (-_as_laurent(other))

    def __rsub__(self, other: "LaurentExpr") -> "LaurentExpr":
        if not _laurent_operand(other):
            return NotImplemented
        return _as_laurent(other) - self

    def __mul__(self, other: Union["LaurentExpr", Monomial, Number]) -> "LaurentExpr":
        if not _laurent_operand(other):
            return NotImplemented
        if isinstance(other, Monomial):
            return self.scale(other)
        other = _as_laurent(other)
        acc: Dict[Exps, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                key = mul_exps(e1, e2)
                acc[key] = acc.get(key, 0) + c1 * c2
        return LaurentExpr(acc)

    __rmul__ = __mul__

    def scale(self, m: Monomial) -> "LaurentExpr":
        return LaurentExpr({mul_exps(e, m.exps): c * m.coeff for e, c in self._terms.items()})

    def __pow__(self, n: int) -> "LaurentExpr":
        if isinstance(n, Fraction) and n.denominator == 1:
            n = n.numerator
        if not isinstance(n, int):
            if self.is_monomial():
                return (self.as_monomial() ** n).to_expr()
            raise NonMonomialFractionalPower(f"power {n} of a {len(self)}-term expression")
        if n < 0:
            if self.is_monomial():
                return (self.as_monomial() ** n).to_expr()
            raise DivisionByZero("negative power of a multi-term Laurent expression; use RatExpr")
        result = LaurentExpr.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = LaurentExpr.const(other)
        if not isinstance(other, LaurentExpr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"LaurentExpr({render_laurent(self)})"

    def __str__(self) -> str:
        return render_laurent(self)


def _as_laurent(value: Union[LaurentExpr, Monomial, Number]) -> LaurentExpr:
    if isinstance(value, LaurentExpr):
        return value
    if isinstance(value, Monomial):
        return value.to_expr()
    if isinstance(value, (int, Fraction)):
        return LaurentExpr.const(value)
    raise TypeError(f"cannot use {type(value).__name__} as a Laurent expression")


def _laurent_operand(value: object) -> bool:
    # これ以外の型は演算子で NotImplemented を返し、相手側の反射演算に任せる
    return isinstance(value, (LaurentExpr, Monomial, int, Fraction))


# ---------------------------------------------------------------------------
# 有理式
# ---------------------------------------------------------------------------

Operand = Union["RatExpr", LaurentExpr, Monomial, Number]


class RatExpr:
    """
    ローラン式の分数 num/den。

    正準化: 分母の各生成元の最小指数が 0 になるようモノミアル内容を抽出し、
    分母の先頭係数を 1 にする。分母が定数なら num はローラン式そのもの。
    多項式 GCD による約分は行わない。
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Union[LaurentExpr, Number], den: Union[LaurentExpr, Number, None] = None):
        num = _as_laurent(num)
        den = LaurentExpr.const(1) if den is None else _as_laurent(den)
        if den.is_zero():
            raise DivisionByZero("denominator is zero")
        if num.is_zero():
            self.num, self.den = LaurentExpr(), LaurentExpr.const(1)
            return
        if den.is_constant():
            self.num, self.den = num * (1 / den.constant_value()), LaurentExpr.const(1)
            return
        shift = Monomial(Fraction(1), canonical_exps((g, -e) for g, e in den.min_exps().items()))
        den = den.scale(shift)
        num = num.scale(shift)
        lead = den.leading().coeff
        if lead != 1:
            inv = Monomial(1 / lead)
            den, num = den.scale(inv), num.scale(inv)
        if den.is_constant():
            num, den = num * (1 / den.constant_value()), LaurentExpr.const(1)
        self.num, self.den = num, den

    # --- 構築 ---
    @classmethod
    def const(cls, value: Number) -> "RatExpr":
        return cls(LaurentExpr.const(Fraction(value)))

    @classmethod
    def gen(cls, name: str, exp: Exponent = 1) -> "RatExpr":
        return cls(LaurentExpr.gen(name, exp))

    @classmethod
    def monomial(cls, coeff: Number = 1, exps: Optional[Mapping[str, Exponent]] = None) -> "RatExpr":
        return cls(Monomial.of(coeff, exps).to_expr())

    # --- 参照 ---
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_laurent(self) -> bool:
        return self.den.is_constant()

    def is_monomial(self) -> bool:
        return self.is_laurent() and self.num.is_monomial()

    def as_monomial(self) -> Monomial:
        if not self.is_laurent():
            raise NonMonomialFractionalPower("expression has a non-monomial denominator")
        return self.num.as_monomial()

    def generators(self) -> set:
        return self.num.generators() | self.den.generators()

    # --- 演算 ---
    def __add__(self, other: Operand) -> "RatExpr":
        if not _rat_operand(other):
            return NotImplemented
        other = _as_rat(other)
        if self.den == other.den:
            return RatExpr(self.num + other.num, self.den)
        return RatExpr(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "RatExpr":
        return RatExpr(-self.num, self.den)

    def __sub__(self, other: Operand) -> "RatExpr":
        if not _rat_operand(other):
            return NotImplemented
        return self + (-_as_rat(other))

    def __rsub__(self, other: Operand) -> "RatExpr":
        if not _rat_operand(other):
            return NotImplemented
        return _as_rat(other) - self

    def __mul__(self, other: Operand) -> "RatExpr":
        if not _rat_operand(other):
            return NotImplemented
        other = _as_rat(other)
        if self.den == other.num and not self.den.is_constant():
            return RatExpr(self.num, other.den)
        if other.den == self.num and not other.den.is_constant():
            return RatExpr(other.num, self.den)
        return RatExpr(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatExpr":
        if self.is_zero():
            raise DivisionByZero("inverse of zero")
        return RatExpr(self.den, self.num)

    def __truediv__(self, other: Operand) -> "RatExpr":
        if not _rat_operand(other):
            return NotImplemented
        other = _as_rat(other)
        if other.is_zero():
            raise DivisionByZero("division by zero expression")
        return self * other.inverse()

    def __rtruediv__(self, other: Operand) -> "RatExpr":
        if not _rat_operand(other):
            return NotImplemented
        return _as_rat(other) / self

    def __pow__(self, exp: Exponent) -> "RatExpr":
        exp = _exp(exp)
        if isinstance(exp, int):
            if exp >= 0:
                return RatExpr(self.num ** exp, self.den ** exp)
            if self.is_zero():
                raise DivisionByZero("negative power of zero")
            return RatExpr(self.den ** (-exp), self.num ** (-exp))
        if not self.is_monomial():
            raise NonMonomialFractionalPower(f"rational power {exp} of a non-monomial expression")
        return RatExpr((self.as_monomial() ** exp).to_expr())

    def equals(self, other: Operand) -> bool:
        other = _as_rat(other)
        if self.den == other.den:
            return self.num == other.num
        return (self.num * other.den - other.num * self.den).is_zero()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, (RatExpr, LaurentExpr, Monomial, int, Fraction)):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    # --- 代入・評価 ---
    def substitute(self, gen: str, replacement: Operand) -> "RatExpr":
        if gen not in self.generators():
            return self
        replacement = _as_rat(replacement)
        num = substitute_laurent(self.num, gen, replacement)
        if self.den.is_constant():
            return num
        return num / substitute_laurent(self.den, gen, replacement)

    def substitute_many(self, mapping: Mapping[str, Operand]) -> "RatExpr":
        """逐次代入（置換先に置換元の生成元が現れない場合は同時代入と一致）"""
        result = self
        for gen, replacement in mapping.items():
            result = result.substitute(gen, replacement)
        return result

    def specialize(self, point: Mapping[str, Number]) -> Fraction:
        num = specialize_laurent(self.num, point)
        den = specialize_laurent(self.den, point)
        if den == 0:
            raise DenominatorVanishes(f"denominator vanishes at {dict(point)}")
        return num / den

    # --- 表示・変換 ---
    def render(self) -> str:
        if self.den.is_constant():
            return render_laurent(self.num)
        return f"({render_laurent(self.num)})/({render_laurent(self.den)})"

    __str__ = render

    def __repr__(self) -> str:
        return f"RatExpr({self.render()})"

    def to_json(self) -> Dict[str, List]:
        return {"num": _laurent_to_json(self.num), "den": _laurent_to_json(self.den)}

    @classmethod
    def from_json(cls, payload: Mapping[str, List]) -> "RatExpr":
        return cls(_laurent_from_json(payload["num"]), _laurent_from_json(payload["den"]))

    def to_sympy(self) -> sympy.Expr:
        return _laurent_to_sympy(self.num) / _laurent_to_sympy(self.den)


def _as_rat(value: Operand) -> RatExpr:
    if isinstance(value, RatExpr):
        return value
    return RatExpr(_as_laurent(value))


def _rat_operand(value: object) -> bool:
    return isinstance(value, RatExpr) or _laurent_operand(value)


# ---------------------------------------------------------------------------
# 代入と評価
# ---------------------------------------------------------------------------

def substitute_laurent(expr: LaurentExpr, gen: str, replacement: RatExpr) -> RatExpr:
    """gen <- replacement。gen の分数冪には単項式の置換のみ許す"""
    groups: Dict[Exponent, Dict[Exps, Fraction]] = {}
    for exps, coeff in expr.items():
        lookup = dict(exps)
        e = lookup.pop(gen, 0)
        rest = tuple((g, x) for g, x in exps if g != gen)
        bucket = groups.setdefault(e, {})
        bucket[rest] = bucket.get(rest, 0) + coeff
    if set(groups) == {0}:
        return RatExpr(expr)

    if replacement.is_monomial():
        m = replacement.as_monomial()
        acc = LaurentExpr()
        for e, rest in groups.items():
            part = LaurentExpr(rest)
            acc = acc + (part if e == 0 else part.scale(m ** e))
        return RatExpr(acc)

    fractional = [e for e in groups if not isinstance(e, int)]
    if fractional:
        raise FractionalPowerOfNonMonomial(
            f"{gen} occurs with exponent {fractional[0]} but its replacement is not a monomial")

    low = min(min(groups), 0)
    high = max(max(groups), 0)
    num_powers: Dict[int, LaurentExpr] = {}
    den_powers: Dict[int, LaurentExpr] = {}

    def power(cache: Dict[int, LaurentExpr], base: LaurentExpr, k: int) -> LaurentExpr:
        if k not in cache:
            cache[k] = base ** k
        return cache[k]

    top = LaurentExpr()
    for e, rest in groups.items():
        top = top + LaurentExpr(rest) * power(num_powers, replacement.num, e - low) \
            * power(den_powers, replacement.den, high - e)
    bottom = power(num_powers, replacement.num, -low) * power(den_powers, replacement.den, high)
    return RatExpr(top, bottom)


def specialize_laurent(expr: LaurentExpr, point: Mapping[str, Number]) -> Fraction:
    total = Fraction(0)
    for exps, coeff in expr.items():
        value = coeff
        for gen, e in exps:
            if gen not in point:
                raise NonEvaluableRoot(f"no value given for generator {gen}")
            base = Fraction(point[gen])
            if base == 0:
                raise DenominatorVanishes(f"generator {gen} specialized to zero")
            value *= rational_power(base, e)
        total += value
    return total


# ---------------------------------------------------------------------------
# テキスト表現
# ---------------------------------------------------------------------------

def _render_number(value: Fraction) -> str:
    value = Fraction(value)
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _render_factor(gen: str, exp: Exponent) -> str:
    exp = _exp(exp)
    if exp == 1:
        return gen
    if isinstance(exp, int):
        return f"{gen}^{exp}"
    return f"{gen}^{exp.numerator}/{exp.denominator}"


def render_laurent(expr: LaurentExpr, gens: Optional[GeneratorSet] = None) -> str:
    if expr.is_zero():
        return "0"
    gens = gens or GeneratorSet.of(expr)
    ordered = sorted(expr.items(), key=lambda item: gens.vector(item[0]), reverse=True)
    pieces: List[str] = []
    for index, (exps, coeff) in enumerate(ordered):
        sign = "-" if coeff < 0 else "+"
        magnitude = abs(coeff)
        factors = [_render_factor(g, e) for g, e in exps]
        if not factors:
            body = _render_number(magnitude)
        elif magnitude == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_render_number(magnitude)] + factors)
        if index == 0:
            pieces.append(("-" if sign == "-" else "") + body)
        else:
            pieces.append(f" {sign} {body}")
    return "".join(pieces)


def group_exponents(text: str) -> str:
    """正準形の x^p/q を x^(p/q) に（^ 直後の分数は指数として読む）"""
    return _RATIONAL_EXPONENT.sub(r"^(\1)", text)


def parse(text: str) -> RatExpr:
    """正準テキスト（および ^, sqrt を含む一般的な式）を RatExpr に変換"""
    text = group_exponents(text)
    names = set(_NAME.findall(text)) - _FUNCTIONS
    local_dict = {name: sympy.Symbol(name) for name in names}
    try:
        expr = parse_expr(text, local_dict=local_dict, transformations=_TRANSFORMATIONS)
    except (SyntaxError, TypeError, sympy.SympifyError) as e:
        raise VerificationError(f"cannot parse expression {text!r}: {e}") from e
    return from_sympy(expr)


def from_sympy(expr: sympy.Expr) -> RatExpr:
    if expr.is_Symbol:
        return RatExpr.gen(expr.name)
    if expr.is_Rational:
        return RatExpr.const(Fraction(int(expr.p), int(expr.q)))
    if expr.is_Add:
        return reduce(lambda a, b: a + b, (from_sympy(arg) for arg in expr.args))
    if expr.is_Mul:
        return reduce(lambda a, b: a * b, (from_sympy(arg) for arg in expr.args))
    if expr.is_Pow:
        base, exp = expr.args
        if not exp.is_Rational:
            raise VerificationError(f"non-rational exponent {exp}")
        return from_sympy(base) ** Fraction(int(exp.p), int(exp.q))
    raise VerificationError(f"unsupported expression node {expr.func.__name__}: {expr}")


def _laurent_to_sympy(expr: LaurentExpr) -> sympy.Expr:
    total = sympy.Integer(0)
    for exps, coeff in expr.items():
        term = sympy.Rational(coeff.numerator, coeff.denominator)
        for gen, e in exps:
            e = Fraction(e)
            term *= sympy.Symbol(gen) ** sympy.Rational(e.numerator, e.denominator)
        total += term
    return total


def _laurent_to_json(expr: LaurentExpr) -> List:
    gens = GeneratorSet.of(expr)
    ordered = sorted(expr.items(), key=lambda item: gens.vector(item[0]), reverse=True)
    return [[_render_number(c), {g: _render_number(Fraction(e)) for g, e in exps}] for exps, c in ordered]


def _laurent_from_json(payload: List) -> LaurentExpr:
    return LaurentExpr.from_terms(
        (Fraction(coeff), {g: _exp(Fraction(e)) for g, e in exps.items()}) for coeff, exps in payload)


# ---------------------------------------------------------------------------
# 仕様上の操作
# ---------------------------------------------------------------------------

def arith(a: Operand, b: Operand, kind: str) -> RatExpr:
    """add / sub / mul / div / pow（b は有理定数）"""
    a = _as_rat(a)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    if kind == "pow":
        if isinstance(b, RatExpr):
            if not (b.is_laurent() and b.num.is_constant()):
                raise VerificationError("exponent must be a rational constant")
            b = b.num.constant_value()
        return a ** b
    raise VerificationError(f"unknown arithmetic kind {kind}")


def equals(a: Operand, b: Operand) -> bool:
    return _as_rat(a).equals(b)


def substitute(expr: Operand, gen: str, replacement: Operand) -> RatExpr:
    return _as_rat(expr).substitute(gen, replacement)


def specialize(expr: Operand, point: Mapping[str, Number]) -> Fraction:
    return _as_rat(expr).specialize(point)


def render(expr: Operand) -> str:
    return _as_rat(expr).render()


def gens(*names: str) -> Tuple[RatExpr, ...]:
    """生成元の RatExpr をまとめて作成"""
    return tuple(RatExpr.gen(name) for name in names)


def monomial_ratio(a: RatExpr, b: RatExpr) -> Optional[Monomial]:
    """a = c*b となる単項式 c があれば返す（先頭項比で候補を作り交差乗算で確認）"""
    if a.is_zero() or b.is_zero():
        return None
    top = a.num * b.den
    bottom = a.den * b.num
    order = GeneratorSet.of(top, bottom)
    candidate = top.leading(order) / bottom.leading(order)
    if (top - bottom.scale(candidate)).is_zero():
        return candidate
    return None


def divide_exact(num: LaurentExpr, den: LaurentExpr, max_steps: int = 20000) -> Optional[LaurentExpr]:
    """
    ローラン式の厳密除算 num/den。割り切れなければ None。

    商の項は辞書式順序で降順に生成される。割り切れる場合、商の最小項は
    num の最小項 / den の最小項 に等しいので、それを下回った時点で打ち切る。
    """
    if den.is_zero():
        raise DivisionByZero("exact division by zero")
    if num.is_zero():
        return LaurentExpr()
    if den.is_monomial():
        return num.scale(den.as_monomial().inverse())
    order = GeneratorSet.of(num, den)
    lead = den.leading(order)
    lowest_num = min(num.items(), key=lambda item: order.vector(item[0]))[0]
    lowest_den = min(den.items(), key=lambda item: order.vector(item[0]))[0]
    bound = tuple(a - b for a, b in zip(order.vector(lowest_num), order.vector(lowest_den)))

    quotient: Dict[Exps, Fraction] = {}
    remainder = num
    for _ in range(max_steps):
        if remainder.is_zero():
            return LaurentExpr(quotient)
        term = remainder.leading(order) / lead
        if order.vector(term.exps) < bound:
            return None
        quotient[term.exps] = quotient.get(term.exps, 0) + term.coeff
        remainder = remainder - den.scale(term)
    logger.debug(f"exact division gave up after {max_steps} steps")
    return None


def reduce_laurent(expr: RatExpr) -> RatExpr:
    """分母で分子が割り切れればローラン式に簡約（割り切れなければそのまま）"""
    if expr.is_laurent():
        return expr
    quotient = divide_exact(expr.num, expr.den)
    return expr if quotient is None else RatExpr(quotient)
