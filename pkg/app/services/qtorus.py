"""
量子トーラス
Quantum Torus Algebras

中心元 p^(1/2) を持つ量子トーラス g_a g_b = p^{λ(a,b)} g_b g_a と、
その分数（分母は可換コアの関数に限る）。A7' の量子変異・量子戸田流・
量子 τ 代数と、その上の恒等式の検証。

正規形:
  可換コア生成元の有理関数（p を含む RatExpr）を左に、
  残り（外側）の生成元の単項式を文脈の順序で右に置く。
  SkewFraction.parts は {外側の指数ベクトル: コア関数}。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache, reduce
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr

from app.config.settings import QUANTUM_DATA_PATH
from app.models.verification import (
    FractionalPowerOfNonMonomial,
    IncompatiblePair,
    MismatchReport,
    NonCoreDenominator,
    StructuralMismatch,
    VerificationError,
)
from app.services.acluster import apply_tau_word, initial_tau_seed
from app.services.painleve_cases import get_case
from app.services.quiver import (
    Atom,
    ExtQuiver,
    GroupWord,
    Mut,
    Perm,
    Quiver,
    apply_atom_to_quiver,
    get_ext_quiver,
    permutation_tuple,
)
from app.services.symkernel import (
    _NAME,
    _TRANSFORMATIONS,
    LaurentExpr,
    RatExpr,
    canonical_exps,
    group_exponents,
    mul_exps,
    parse,
)
from app.services.xcluster import apply_word, initial_seed, y_name

logger = logging.getLogger(__name__)

P = "p"
OuterExps = Tuple[Fraction, ...]
Scalar = Union[int, Fraction, RatExpr]


@lru_cache(maxsize=1)
def load_quantum_data() -> Dict[str, Any]:
    """量子化データ（A7' の像・τ 写像・パラメータ関係・級数ブロック）"""
    with open(QUANTUM_DATA_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


# ---------------------------------------------------------------------------
# 文脈
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SkewContext:
    """生成元の順序、交換形式 λ、互いに可換なコア"""
    generators: Tuple[str, ...]
    form: Tuple[Tuple[Fraction, ...], ...]
    core: Tuple[str, ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = len(self.generators)
        if len(set(self.generators)) != n or P in self.generators:
            raise StructuralMismatch(f"invalid generator list {self.generators}")
        if len(self.form) != n or any(len(row) != n for row in self.form):
            raise StructuralMismatch(f"form of {self.name or 'context'} is not {n}x{n}")
        for a in range(n):
            for b in range(n):
                if self.form[a][b] != -self.form[b][a]:
                    raise StructuralMismatch(
                        f"form is not antisymmetric at ({self.generators[a]}, {self.generators[b]})")
        for c in self.core:
            if c not in self.generators:
                raise StructuralMismatch(f"core generator {c} is not a generator")
        for a in self.core:
            for b in self.core:
                if self.lam(a, b) != 0:
                    raise StructuralMismatch(f"core generators {a}, {b} do not commute")

    @classmethod
    def from_matrix(cls, generators: Sequence[str], matrix, core: Sequence[str] = (),
                    scale: Union[int, Fraction] = 1, name: str = "") -> "SkewContext":
        form = tuple(tuple(Fraction(int(v)) * Fraction(scale) for v in row) for row in np.asarray(matrix))
        return cls(tuple(generators), form, tuple(core), name)

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {g: i for i, g in enumerate(self.generators)}

    @cached_property
    def outer(self) -> Tuple[str, ...]:
        return tuple(g for g in self.generators if g not in self.core)

    def lam(self, a: str, b: str) -> Fraction:
        return self.form[self._index[a]][self._index[b]]

    def pairing(self, u: OuterExps, v: OuterExps) -> Fraction:
        """M(u) M(v) = p^{pairing(u,v)} M(u+v)（外側の正規順序）"""
        outer = self.outer
        total = Fraction(0)
        for i in range(len(outer)):
            if not u[i]:
                continue
            for j in range(i):
                if v[j]:
                    total += self.lam(outer[i], outer[j]) * u[i] * v[j]
        return total

    def core_shift(self, u: OuterExps) -> Dict[str, Fraction]:
        """M(u) x_c = p^{μ_c} x_c M(u) の μ"""
        shift = {}
        for c in self.core:
            mu = sum((u[i] * self.lam(a, c) for i, a in enumerate(self.outer) if u[i]), Fraction(0))
            if mu:
                shift[c] = mu
        return shift

    def zero_vector(self) -> OuterExps:
        return (Fraction(0),) * len(self.outer)


def commuting_core(generators: Sequence[str], form, preferred: Iterable[str], name: str = "") -> Tuple[str, ...]:
    """preferred の順に、既に選んだものと可換な生成元を貪欲に選ぶ"""
    index = {g: i for i, g in enumerate(generators)}
    chosen: List[str] = []
    for g in preferred:
        clash = [c for c in chosen if form[index[g]][index[c]] != 0]
        if clash:
            logger.info(f"{name or 'context'}: {g} left out of the commutative core (does not commute with {clash})")
            continue
        chosen.append(g)
    return tuple(chosen)


# ---------------------------------------------------------------------------
# 分数
# ---------------------------------------------------------------------------

def _rescale(expr: RatExpr, shift: Mapping[str, Fraction]) -> RatExpr:
    """コア生成元 x_c を p^{shift_c} x_c に置き換える"""
    if not shift or not (expr.generators() & set(shift)):
        return expr

    def laurent(poly: LaurentExpr) -> LaurentExpr:
        terms: Dict = {}
        for exps, coeff in poly.items():
            power = sum((shift.get(g, 0) * Fraction(e) for g, e in exps), Fraction(0))
            key = mul_exps(exps, canonical_exps([(P, power)]))
            terms[key] = terms.get(key, 0) + coeff
        return LaurentExpr(terms)

    return RatExpr(laurent(expr.num), laurent(expr.den))


def _p_power(exp: Fraction) -> RatExpr:
    return RatExpr.gen(P, exp) if exp else RatExpr.const(1)


class SkewFraction:
    """正規形の和  Σ f_u(core, p) · M(u)"""

    __slots__ = ("ctx", "parts")

    def __init__(self, ctx: SkewContext, parts: Optional[Mapping[OuterExps, RatExpr]] = None):
        self.ctx = ctx
        self.parts: Dict[OuterExps, RatExpr] = {
            key: f for key, f in (parts or {}).items() if not f.is_zero()
        }

    # --- 構築 ---
    @classmethod
    def scalar(cls, ctx: SkewContext, value: Scalar) -> "SkewFraction":
        value = value if isinstance(value, RatExpr) else RatExpr.const(value)
        extra = value.generators() - set(ctx.core) - {P}
        if extra:
            raise NonCoreDenominator(f"scalar part involves non-core generators {sorted(extra)}")
        return cls(ctx, {ctx.zero_vector(): value})

    @classmethod
    def gen(cls, ctx: SkewContext, name: str, exp: Union[int, Fraction] = 1) -> "SkewFraction":
        if name == P or name in ctx.core:
            return cls.scalar(ctx, RatExpr.gen(name, exp))
        if name not in ctx.outer:
            raise VerificationError(f"{name} is not a generator of {ctx.name or 'the context'}")
        key = tuple(Fraction(exp) if g == name else Fraction(0) for g in ctx.outer)
        return cls(ctx, {key: RatExpr.const(1)})

    @classmethod
    def monomial(cls, ctx: SkewContext, coeff: Scalar = 1,
                 exps: Optional[Mapping[str, Union[int, Fraction]]] = None) -> "SkewFraction":
        """正規順序の単項式 N(coeff, exps)"""
        exps = dict(exps or {})
        core = {g: e for g, e in exps.items() if g == P or g in ctx.core}
        key = tuple(Fraction(exps.get(g, 0)) for g in ctx.outer)
        value = coeff if isinstance(coeff, RatExpr) else RatExpr.const(coeff)
        return cls(ctx, {key: value * RatExpr.monomial(1, core)})

    def _lift(self, other: Union["SkewFraction", Scalar]) -> "SkewFraction":
        if isinstance(other, SkewFraction):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise StructuralMismatch("skew fractions from different contexts")
            return other
        return SkewFraction.scalar(self.ctx, other)

    # --- 参照 ---
    def is_zero(self) -> bool:
        return not self.parts

    def is_scalar(self) -> bool:
        return set(self.parts) <= {self.ctx.zero_vector()}

    def as_scalar(self) -> RatExpr:
        if not self.is_scalar():
            raise StructuralMismatch(f"{self.render()} is not a core function")
        return self.parts.get(self.ctx.zero_vector(), RatExpr.const(0))

    def is_laurent(self) -> bool:
        """分母のない要素（SkewElement）か"""
        return all(f.is_laurent() for f in self.parts.values())

    def is_monomial(self) -> bool:
        return len(self.parts) == 1 and next(iter(self.parts.values())).is_monomial()

    def generators(self) -> set:
        names = set()
        for key, f in self.parts.items():
            names |= f.generators() - {P}
            names |= {g for g, e in zip(self.ctx.outer, key) if e}
        return names

    # --- 演算 ---
    def __add__(self, other) -> "SkewFraction":
        other = self._lift(other)
        parts = dict(self.parts)
        for key, f in other.parts.items():
            parts[key] = parts[key] + f if key in parts else f
        return SkewFraction(self.ctx, parts)

    __radd__ = __add__

    def __neg__(self) -> "SkewFraction":
        return SkewFraction(self.ctx, {key: -f for key, f in self.parts.items()})

    def __sub__(self, other) -> "SkewFraction":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "SkewFraction":
        return self._lift(other) - self

    def __mul__(self, other) -> "SkewFraction":
        # (f M(u)) (g M(v)) = f g(p^μ x) p^{c(u,v)} M(u+v)
        other = self._lift(other)
        parts: Dict[OuterExps, RatExpr] = {}
        for u, f in self.parts.items():
            shift = self.ctx.core_shift(u)
            for v, g in other.parts.items():
                key = tuple(a + b for a, b in zip(u, v))
                term = f * _rescale(g, shift) * _p_power(self.ctx.pairing(u, v))
                parts[key] = parts[key] + term if key in parts else term
        return SkewFraction(self.ctx, parts)

    def __rmul__(self, other) -> "SkewFraction":
        return self._lift(other) * self

    def inverse(self) -> "SkewFraction":
        """単一項 f M(u) の逆元 p^{c(u,u)} f(p^{-μ}x)^{-1} M(-u)"""
        if self.is_zero():
            raise NonCoreDenominator("inverse of zero")
        if len(self.parts) != 1:
            raise NonCoreDenominator(f"{self.render()} has several outer monomials and cannot be inverted")
        (u, f), = self.parts.items()
        neg = tuple(-a for a in u)
        value = _rescale(f.inverse(), self.ctx.core_shift(neg)) * _p_power(self.ctx.pairing(u, u))
        return SkewFraction(self.ctx, {neg: value})

    def __truediv__(self, other) -> "SkewFraction":
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other) -> "SkewFraction":
        return self._lift(other) * self.inverse()

    def __pow__(self, exp: Union[int, Fraction]) -> "SkewFraction":
        exp = Fraction(exp)
        if exp.denominator == 1:
            k = exp.numerator
            base = self if k >= 0 else self.inverse()
            result = SkewFraction.scalar(self.ctx, 1)
            k = abs(k)
            while k:
                if k & 1:
                    result = result * base
                base = base * base if k > 1 else base
                k >>= 1
            return result
        return self._principal_power(exp)

    def _principal_power(self, exp: Fraction) -> "SkewFraction":
        # X = w M(u) 単項式:  X^e = p^{C e(e-1)/2} N(eX)
        if not self.is_monomial():
            raise FractionalPowerOfNonMonomial(f"power {exp} of non-monomial {self.render()}")
        (u, f), = self.parts.items()
        m = f.as_monomial()
        weights = {g: Fraction(m.degree(g)) for g in self.ctx.core}
        C = self.ctx.pairing(u, u) + sum(
            (self.ctx.lam(a, b) * u[i] * w for i, a in enumerate(self.ctx.outer) if u[i]
             for b, w in weights.items() if w), Fraction(0))
        core = RatExpr((m ** exp).to_expr()) * _p_power(C * exp * (exp - 1) / 2)
        return SkewFraction(self.ctx, {tuple(a * exp for a in u): core})

    def equals(self, other) -> bool:
        return (self - self._lift(other)).is_zero()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, (SkewFraction, RatExpr, int, Fraction)):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    def commutator_residual(self, other: "SkewFraction", power: Union[int, Fraction]) -> "SkewFraction":
        """self·other − p^{power} other·self"""
        other = self._lift(other)
        return self * other - SkewFraction.scalar(self.ctx, _p_power(Fraction(power))) * (other * self)

    # --- 準同型・極限 ---
    def substitute(self, images: Mapping[str, "SkewFraction"], degree: int = 1) -> "SkewFraction":
        """
        準同型による像。images[g] は g^{1/degree} の像（無いものは恒等）。

        コア関数の分母の像は単一の外側単項式でなければならない。
        """
        if not images:
            return self
        target = next(iter(images.values())).ctx

        def power_of(name: str, e: Fraction) -> SkewFraction:
            if name == P:
                return SkewFraction.scalar(target, RatExpr.gen(P, e))
            if name in images:
                return images[name] ** (Fraction(e) * degree)
            return SkewFraction.gen(target, name, e)

        def laurent(poly: LaurentExpr) -> SkewFraction:
            total = SkewFraction(target)
            for exps, coeff in poly.items():
                term = SkewFraction.scalar(target, coeff)
                for name, e in exps:
                    term = term * power_of(name, e)
                total = total + term
            return total

        result = SkewFraction(target)
        for u, f in self.parts.items():
            value = laurent(f.num)
            if not f.is_laurent():
                value = value * laurent(f.den).inverse()
            for name, e in zip(self.ctx.outer, u):
                if e:
                    value = value * power_of(name, e)
            result = result + value
        return result

    def eliminate(self, name: str, replacement: "SkewFraction") -> "SkewFraction":
        """最後の外側生成元 name の冪 name^e を replacement^e に置き換える（中心元の特殊化）"""
        if not self.ctx.outer or self.ctx.outer[-1] != name:
            raise StructuralMismatch(f"{name} must be the last outer generator to be eliminated")
        result = SkewFraction(self.ctx)
        for u, f in self.parts.items():
            head = SkewFraction(self.ctx, {u[:-1] + (Fraction(0),): f})
            result = result + (head * replacement ** u[-1] if u[-1] else head)
        return result

    def commutative_limit(self) -> RatExpr:
        """p = 1 での可換な像"""
        total = RatExpr.const(0)
        for u, f in self.parts.items():
            outer = RatExpr.monomial(1, {g: e for g, e in zip(self.ctx.outer, u) if e})
            total = total + f.substitute(P, RatExpr.const(1)) * outer
        return total

    # --- 表示 ---
    def render(self) -> str:
        if not self.parts:
            return "0"
        pieces = []
        for u, f in sorted(self.parts.items(), reverse=True):
            factors = []
            for g, e in zip(self.ctx.outer, u):
                if e == 1:
                    factors.append(g)
                elif e:
                    factors.append(f"{g}^{e.numerator}/{e.denominator}" if e.denominator != 1 else f"{g}^{e.numerator}")
            core = f.render()
            if not factors:
                pieces.append(f"({core})")
            elif core == "1":
                pieces.append("*".join(factors))
            else:
                pieces.append(f"({core})*" + "*".join(factors))
        return " + ".join(pieces)

    __str__ = render

    def __repr__(self) -> str:
        return f"SkewFraction({self.render()})"


SkewElement = SkewFraction


def skew_mul(a: SkewFraction, b: SkewFraction) -> SkewFraction:
    return a * b


def parse_skew(ctx: SkewContext, text: str,
               bindings: Optional[Mapping[str, SkewFraction]] = None) -> SkewFraction:
    """式テキストを書かれた順の積として解釈（p は中心、bindings の名前は既知の要素）"""
    text = group_exponents(text)
    bindings = dict(bindings or {})
    names = set(_NAME.findall(text))
    local_dict = {name: sympy.Symbol(name, commutative=(name == P)) for name in names}
    try:
        expr = parse_expr(text, local_dict=local_dict, transformations=_TRANSFORMATIONS)
    except (SyntaxError, TypeError, sympy.SympifyError) as e:
        raise VerificationError(f"cannot parse expression {text!r}: {e}") from e
    return _from_sympy(ctx, expr, bindings)


def _from_sympy(ctx: SkewContext, expr: sympy.Expr, bindings: Mapping[str, SkewFraction]) -> SkewFraction:
    if expr.is_Symbol:
        if expr.name in bindings:
            return bindings[expr.name]
        return SkewFraction.gen(ctx, expr.name)
    if expr.is_Rational:
        return SkewFraction.scalar(ctx, Fraction(int(expr.p), int(expr.q)))
    if expr.is_Add:
        return reduce(lambda a, b: a + b, (_from_sympy(ctx, arg, bindings) for arg in expr.args))
    if expr.is_Mul:
        return reduce(lambda a, b: a * b, (_from_sympy(ctx, arg, bindings) for arg in expr.args))
    if expr.is_Pow:
        base, exp = expr.args
        if not exp.is_Rational:
            raise VerificationError(f"non-rational exponent {exp}")
        return _from_sympy(ctx, base, bindings) ** Fraction(int(exp.p), int(exp.q))
    raise VerificationError(f"unsupported expression node {expr.func.__name__}: {expr}")


# ---------------------------------------------------------------------------
# 量子 y シード
# ---------------------------------------------------------------------------

def quantum_context(quiver: Quiver, core: Optional[Sequence[str]] = None) -> SkewContext:
    """y_i y_j = p^{-2 eps_ij} y_j y_i"""
    names = [y_name(i) for i in range(1, quiver.n + 1)]
    form = quiver.matrix() * -2
    if core is None:
        core = commuting_core(names, form, names, quiver.name)
    return SkewContext.from_matrix(names, form, core, name=f"{quiver.name}-y")


@dataclass(frozen=True)
class QuantumSeed:
    """クイバーと根 y_i^{1/degree} の像"""
    quiver: Quiver
    vars: Tuple[SkewFraction, ...]
    degree: int = 2

    def var(self, i: int) -> SkewFraction:
        self.quiver.check_vertex(i)
        return self.vars[i - 1]

    def y(self, i: int) -> SkewFraction:
        return self.var(i) ** self.degree

    def images(self) -> Dict[str, SkewFraction]:
        return {y_name(i): v for i, v in enumerate(self.vars, start=1)}

    def render(self) -> List[str]:
        return [v.render() for v in self.vars]


def initial_quantum_seed(ctx: SkewContext, quiver: Quiver, degree: int = 2) -> QuantumSeed:
    roots = tuple(SkewFraction.gen(ctx, y_name(i)) ** Fraction(1, degree) for i in range(1, quiver.n + 1))
    return QuantumSeed(quiver, roots, degree)


def _p_scalar(ctx: SkewContext) -> SkewFraction:
    return SkewFraction.scalar(ctx, RatExpr.gen(P))


def quantum_mutate(seed: QuantumSeed, j: int) -> QuantumSeed:
    """
    r_j -> r_j^{-1}、eps_ij != 0 なら r_i -> r_i (1 + p y_j^{s})^{s}（s = sgn eps_ij）。

    根の次数は |eps_ij| と一致しなければならない。
    """
    quiver = seed.quiver
    quiver.check_vertex(j)
    rj = seed.var(j)
    yj = rj ** seed.degree
    out = list(seed.vars)
    for i in range(1, quiver.n + 1):
        e = quiver.entry(i, j)
        if i == j or e == 0:
            continue
        if abs(e) != seed.degree:
            raise StructuralMismatch(
                f"|eps_{i}{j}| = {abs(e)} does not match root degree {seed.degree}")
        if e > 0:
            out[i - 1] = seed.vars[i - 1] * (1 + _p_scalar(yj.ctx) * yj)
        else:
            out[i - 1] = seed.vars[i - 1] * (1 + _p_scalar(yj.ctx) * yj.inverse()).inverse()
    out[j - 1] = rj.inverse()
    return QuantumSeed(apply_atom_to_quiver(quiver, Mut(j)), tuple(out), seed.degree)


def permute_quantum(seed: QuantumSeed, perm: Perm) -> QuantumSeed:
    images = permutation_tuple(perm, seed.quiver.n)
    out: List[Optional[SkewFraction]] = [None] * seed.quiver.n
    for i, target in enumerate(images):
        out[target - 1] = seed.vars[i]
    return QuantumSeed(apply_atom_to_quiver(seed.quiver, perm), tuple(out), seed.degree)


def apply_quantum_atom(seed: QuantumSeed, atom: Atom) -> QuantumSeed:
    if isinstance(atom, Mut):
        return quantum_mutate(seed, atom.vertex)
    if isinstance(atom, Perm):
        return permute_quantum(seed, atom)
    # 反転は反自己同型で、準同型として表せない
    raise StructuralMismatch("inversion has no quantum counterpart in this algebra")


def apply_quantum_word(seed: QuantumSeed, word: GroupWord) -> QuantumSeed:
    for atom in word.application_order():
        seed = apply_quantum_atom(seed, atom)
    return seed


def relation_residuals(seed: QuantumSeed) -> List[Dict[str, Any]]:
    """r_i r_k = p^{-2 eps_ik / degree^2} r_k r_i（変異後の eps）"""
    results = []
    n = seed.quiver.n
    for i in range(1, n + 1):
        for k in range(i + 1, n + 1):
            power = Fraction(-2 * seed.quiver.entry(i, k), seed.degree ** 2)
            residual = seed.var(i).commutator_residual(seed.var(k), power)
            results.append({"pair": [i, k], "holds": residual.is_zero()})
    return results


# ---------------------------------------------------------------------------
# A7' の量子流
# ---------------------------------------------------------------------------

def _x_setup(data: Optional[Mapping[str, Any]] = None):
    data = data or load_quantum_data()["x_torus"]
    case = get_case(data["case"])
    ctx = quantum_context(case.quiver, data["core"])
    start = initial_quantum_seed(ctx, case.quiver, data["degree"])
    image = apply_quantum_word(start, case.word(data["flow"]))
    return data, case, ctx, start, image


def _casimirs(ctx: SkewContext, data: Mapping[str, Any]) -> Dict[str, SkewFraction]:
    return {name: parse_skew(ctx, text) for name, text in data["casimirs"].items()}


def verify_quantum_flow(data: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """量子変異の合成による像、古典極限、交換関係の保存、半冪の像"""
    data, case, ctx, start, image = _x_setup(data)
    mismatches = []
    for i, (computed, text) in enumerate(zip(image.vars, data["images"]), start=1):
        if not computed.equals(parse_skew(ctx, text)):
            mismatches.append({"root": i, "expected": text, "computed": computed.render()})
    if mismatches:
        raise MismatchReport(f"{len(mismatches)} quantum image mismatches", mismatches)

    classical = apply_word(initial_seed(case.quiver), case.word(data["flow"]))
    limits = [(v.commutative_limit() ** image.degree).equals(classical.var(i))
              for i, v in enumerate(image.vars, start=1)]
    relations = relation_residuals(image)

    half = data["half_image"]
    expected_half = parse_skew(ctx, half["expr"], _casimirs(ctx, data))
    half_ok = image.var(half["root"]).equals(expected_half)
    holds = all(limits) and all(r["holds"] for r in relations) and half_ok
    return {"case": case.label, "flow": data["flow"], "images": image.render(),
            "classical_limit": limits, "relations": relations, "half_image": half_ok, "holds": holds}


def casimir_flow_check(data: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """カシミールの中心性と流れによる像（Z -> qZ, q -> q）"""
    data, case, ctx, start, image = _x_setup(data)
    casimirs = _casimirs(ctx, data)
    central = {}
    for name, value in casimirs.items():
        central[name] = all(value.commutator_residual(SkewFraction.gen(ctx, g), 0).is_zero()
                            for g in ctx.generators)
    images = {}
    for name, value in casimirs.items():
        computed = value.substitute(image.images(), image.degree)
        images[name] = computed.equals(parse_skew(ctx, data["casimir_images"][name], casimirs))
    return {"case": case.label, "central": central, "images": images,
            "holds": all(central.values()) and all(images.values())}


@dataclass
class QuantumTodaResult:
    """量子戸田ハミルトニアンの不変性"""
    residual: SkewFraction
    unconstrained: SkewFraction
    classical_limit: bool

    @property
    def holds(self) -> bool:
        return self.residual.is_zero() and not self.unconstrained.is_zero() and self.classical_limit

    def to_dict(self) -> Dict[str, Any]:
        return {
            "residual": self.residual.render(),
            "unconstrained_residual_nonzero": not self.unconstrained.is_zero(),
            "classical_limit": self.classical_limit,
            "holds": self.holds,
        }


def impose_casimir(expr: SkewFraction, casimir: SkewFraction, name: str) -> SkewFraction:
    """casimir = 1 を、その最後の外側生成元 name を消去して課す"""
    ctx = expr.ctx
    if len(casimir.parts) != 1:
        raise StructuralMismatch(f"casimir {casimir.render()} is not a monomial")
    (u, f), = casimir.parts.items()
    k = u[ctx.outer.index(name)]
    if not k:
        raise StructuralMismatch(f"casimir does not involve {name}")
    head = SkewFraction(ctx, {u[:-1] + (Fraction(0),): f})
    # casimir = head * name^k（name は正規順序の最後）
    replacement = head.inverse() if k == 1 else head.inverse() ** (1 / Fraction(k))
    return expr.eliminate(name, replacement)


def quantum_toda_check(data: Optional[Mapping[str, Any]] = None) -> QuantumTodaResult:
    """H∘T − H（q = 1 を課す）と、課さない場合の対照、p = 1 の古典極限"""
    data, case, ctx, start, image = _x_setup(data)
    casimirs = _casimirs(ctx, data)
    h = parse_skew(ctx, data["hamiltonian"], casimirs)
    hg = h.substitute(image.images(), image.degree)
    constraint = data["constraint"]
    q = casimirs[constraint["casimir"]]
    residual = impose_casimir(hg, q, constraint["eliminate"]) - impose_casimir(h, q, constraint["eliminate"])
    unconstrained = hg - h

    spec = case.hamiltonian()
    classical = h.commutative_limit().equals(case.expand(spec.expr, spec.coordinates))
    result = QuantumTodaResult(residual, unconstrained, classical)
    if not residual.is_zero():
        logger.warning(f"quantum Toda residual is nonzero: {residual.render()}")
    return result


# ---------------------------------------------------------------------------
# 両立性
# ---------------------------------------------------------------------------

def compat_check(ext: Union[str, ExtQuiver, None] = None, lam=None) -> Dict[str, Any]:
    """
    B^T Λ = c [I | 0] を両方の添字の向きで調べ、成り立つ向きを規約として返す。

    Λ B^T 側（転置）の値は符号が反転する。
    """
    data = load_quantum_data()["tau_torus"]
    if ext is None or isinstance(ext, str):
        ext = get_ext_quiver(ext or data["quiver"])
    lam = np.array(lam if lam is not None else ext.lam, dtype=int)
    if lam.shape != (ext.size, ext.size):
        raise IncompatiblePair(f"Lambda has shape {lam.shape}, expected {ext.size}x{ext.size}")
    if np.any(lam != -lam.T):
        raise IncompatiblePair("Lambda is not antisymmetric")
    B = ext.matrix()
    orientations = {"B^T Lambda": B.T @ lam, "(Lambda B)^T": (lam @ B).T}
    values = {}
    for label, product in orientations.items():
        c = int(product[0, 0])
        target = np.hstack([c * np.eye(ext.n, dtype=int), np.zeros((ext.n, ext.frozen_count), dtype=int)])
        values[label] = c if c and np.array_equal(product, target) else None
    convention = "B^T Lambda"
    value = values[convention]
    if value is None:
        raise IncompatiblePair(f"{ext.name}: B^T Lambda is not a multiple of [I | 0]")
    if ext.compatibility is not None and value != ext.compatibility:
        raise IncompatiblePair(f"{ext.name}: compatibility value {value}, catalog says {ext.compatibility}")
    logger.info(f"{ext.name}: compatibility orientation {convention} gives {value}, "
                f"transposed gives {values['(Lambda B)^T']}")
    # B^T Λ B / 2 は y の交換形式 -2 eps に一致する（c = -4 のとき）
    y_form = (B.T @ lam @ B) * Fraction(1, 2)
    y_ok = bool(np.all(y_form == np.array(ext.principal().matrix()) * Fraction(value, 2)))
    return {"quiver": ext.name, "convention": convention, "value": value,
            "transposed": values["(Lambda B)^T"], "y_form_consistent": y_ok, "holds": True}


# ---------------------------------------------------------------------------
# 量子 τ 代数
# ---------------------------------------------------------------------------

def tau_context(ext: Union[str, ExtQuiver, None] = None,
                preferred: Optional[Sequence[str]] = None) -> SkewContext:
    """τ_I τ_J = p^{Λ_IJ / 2} τ_J τ_I、コアは preferred から貪欲に選ぶ"""
    data = load_quantum_data()["tau_torus"]
    if ext is None or isinstance(ext, str):
        ext = get_ext_quiver(ext or data["quiver"])
    if ext.lam is None:
        raise IncompatiblePair(f"{ext.name} has no Lambda matrix")
    names = [f"tau{i}" for i in range(1, ext.size + 1)]
    lam = np.array(ext.lam, dtype=int)
    core = commuting_core(names, lam, preferred or data["core"], ext.name)
    return SkewContext.from_matrix(names, lam, core, Fraction(1, 2), name=f"{ext.name}-tau")


def tau_maps(ctx: SkewContext, data: Optional[Mapping[str, Any]] = None) -> Tuple[Dict[str, SkewFraction], Dict[str, SkewFraction]]:
    """上線（前進）と下線（後退）の τ 写像"""
    data = data or load_quantum_data()["tau_torus"]
    over = {g: parse_skew(ctx, text) for g, text in zip(ctx.generators, data["overline"])}
    under = {g: parse_skew(ctx, text) for g, text in zip(ctx.generators, data["underline"])}
    return over, under


def preserves_relations(ctx: SkewContext, images: Mapping[str, SkewFraction]) -> List[Dict[str, Any]]:
    results = []
    for i, a in enumerate(ctx.generators):
        for b in ctx.generators[i + 1:]:
            residual = images[a].commutator_residual(images[b], ctx.lam(a, b))
            results.append({"pair": [a, b], "holds": residual.is_zero()})
    return results


def quantum_tau_flow_and_prop(data: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """
    量子 τ 流の検証:
      関係式の保存、往復、双線形関係、古典極限、
      G の交換関係、半冪の積と全体の積（Z -> p^2 Z の置換込み）。
    """
    data = data or load_quantum_data()["tau_torus"]
    ctx = tau_context(data["quiver"], data["core"])
    over, under = tau_maps(ctx, data)
    aliases = {name: parse_skew(ctx, text) for name, text in data["aliases"].items()}
    checks: List[Dict[str, Any]] = []

    def record(name: str, ok: bool, **extra):
        checks.append({"check": name, "holds": bool(ok), **extra})

    record("overline preserves relations", all(r["holds"] for r in preserves_relations(ctx, over)))
    record("underline preserves relations", all(r["holds"] for r in preserves_relations(ctx, under)))
    round_trip = all(over[g].substitute(under).equals(SkewFraction.gen(ctx, g)) for g in ctx.generators)
    record("underline inverts overline", round_trip)

    for entry in data["bilinear"]:
        g = f"tau{entry['tau']}"
        residual = under[g] * over[g] - parse_skew(ctx, entry["rhs"])
        record(f"bilinear {g}", residual.is_zero())

    # p = 1 で古典の τ 流に一致
    case = get_case(load_quantum_data()["x_torus"]["case"])
    classical = apply_tau_word(initial_tau_seed(data["quiver"]), case.word(load_quantum_data()["x_torus"]["flow"]))
    ext = get_ext_quiver(data["quiver"])
    frozen = {f"tau{ext.n + k}": parse(text) for k, text in enumerate(ext.frozen_values, start=1)}
    limits = [over[f"tau{i}"].commutative_limit().substitute_many(frozen).equals(classical.taus[i - 1])
              for i in range(1, len(classical.taus) + 1)]
    record("classical limit of overline", all(limits))

    painleve = data["painleve"]
    G = parse_skew(ctx, painleve["G"])
    G_half = G ** Fraction(1, 2)
    G_over, G_under = G.substitute(over), G.substitute(under)
    half_over, half_under = G_half.substitute(over), G_half.substitute(under)
    record("bar half power", half_over.equals(parse_skew(ctx, painleve["bar_half"])))
    record("bar half squares to bar", (half_over ** 2).equals(G_over))
    record("G under-G commutation", G.commutator_residual(G_under, painleve["commutation"]).is_zero())

    rescaled = dict(aliases, G=G)
    rescaled["Z"] = parse_skew(ctx, painleve["rescale"], aliases)
    half_product = half_under * half_over
    record("half product", half_product.equals(parse_skew(ctx, painleve["half_product"], rescaled)))
    product = G_under * G_over
    record("product", product.equals(parse_skew(ctx, painleve["product"], rescaled)))
    classical_product = parse_skew(ctx, painleve["classical"], dict(aliases, G=G)).commutative_limit()
    record("classical product", product.commutative_limit().equals(classical_product))

    holds = all(c["holds"] for c in checks)
    if not holds:
        raise MismatchReport("quantum tau identities failed", [c for c in checks if not c["holds"]])
    return {"quiver": data["quiver"], "core": list(ctx.core), "checks": checks, "holds": holds}


# ---------------------------------------------------------------------------
# パラメータの量子流
# ---------------------------------------------------------------------------

def parameter_context(data: Optional[Mapping[str, Any]] = None) -> SkewContext:
    data = data or load_quantum_data()["parameters"]
    names = list(data["generators"])
    index = {g: i for i, g in enumerate(names)}
    form = np.zeros((len(names), len(names)), dtype=int)
    for a, b, k in data["relations"]:
        form[index[a], index[b]] = k
        form[index[b], index[a]] = -k
    return SkewContext.from_matrix(names, form, data["core"], name="parameters")


def a_conjugate(ctx: SkewContext, expr: SkewFraction, p_squared: SkewFraction) -> RatExpr:
    """a^{-1} X a（コア関数）を p^2 = q1 q2 で書き直す"""
    a = SkewFraction.gen(ctx, "a")
    result = (a.inverse() * expr * a).as_scalar()
    root = p_squared.as_scalar() ** Fraction(1, 2)
    return result.substitute(P, root)


def parameter_flow_check(data: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """(q1,q2,u,s,Z,a,b) の流れが交換関係を保つこと、a・s 共役の規則"""
    data = data or load_quantum_data()["parameters"]
    ctx = parameter_context(data)
    flow = {g: parse_skew(ctx, text) for g, text in data["flow"].items()}
    preserved = preserves_relations(ctx, flow)
    p_squared = parse_skew(ctx, data["p_squared"])
    conjugations = []
    for source, target in data["a_conjugation"].items():
        computed = a_conjugate(ctx, parse_skew(ctx, source), p_squared)
        conjugations.append({"source": source, "target": target,
                             "holds": computed.equals(parse_skew(ctx, target).as_scalar())})
    s = SkewFraction.gen(ctx, "s")
    u = SkewFraction.gen(ctx, "u")
    # s f(u) = f(p^{-4} u) s
    s_shift = (s * u * s.inverse()).equals(parse_skew(ctx, "p^-4*u"))
    holds = all(r["holds"] for r in preserved) and all(c["holds"] for c in conjugations) and s_shift
    return {"preserved": preserved, "a_conjugation": conjugations, "s_shift": s_shift, "holds": holds}
