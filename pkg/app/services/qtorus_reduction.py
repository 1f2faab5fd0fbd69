"""
量子 τ 関数の構造的簡約
Structural Reduction of Quantum Tau Series

𝒯_k = a b^B i^I Σ_{m ∈ offset+Z} s^m 𝖥^(2)(u q2^{4m} | Z q1^γ q2^δ) を不透明なブロックとして扱い、
積 X·Y を正規形 (係数) a^2 b^(..) s^N 𝖥^(1)(..) 𝖥^(2)(..) に並べ替える:

  - a の通過:     𝖥^(2) -> 𝖥^(1)、q1^α q2^β -> q1^{3α/2-β/2} q2^{α/2+β/2}
  - b の通過:     Z -> p^2 Z = q1 q2 Z
  - s^m の通過:   u -> p^{4m} u = (q1 q2)^{2m} u

s^N の係数を n = (ブロック間の u のずれ)/4 で書き直し、c_q の対数形から
u^{..n} (q1q2)^{..n^2} Z^{..n^2} の前因子を導く。得られた恒等式の形
（添字集合、前因子、Z のずれ）を登録データと照合する。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy

from app.models.verification import StructuralMismatch, UnknownCheck
from app.services.qtorus import load_quantum_data
from app.services.quiver import get_ext_quiver

logger = logging.getLogger(__name__)

RELATIONS = ("T1T3", "T1T2", "T1T4", "T1T1")

_m, _N, _n = sympy.symbols("m N n")
_l1, _l2, _L, _z = sympy.symbols("l1 l2 L z")
_p, _Z, _q1, _q2 = sympy.symbols("p Z q1 q2", positive=True)
_PREFACTOR_KEYS = ("u", "q1", "q2", "Z")


def _fraction(value) -> Fraction:
    value = sympy.nsimplify(value)
    if not value.is_Rational:
        raise StructuralMismatch(f"expected a rational number, got {value}")
    return Fraction(int(value.p), int(value.q))


def _same(a: sympy.Expr, b: sympy.Expr) -> bool:
    return sympy.simplify(sympy.sympify(a) - sympy.sympify(b)) == 0


# ---------------------------------------------------------------------------
# ブロックと級数
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Block:
    """𝖥^(kind)(u q1^{u[0]} q2^{u[1]} | Z q1^{z[0]} q2^{z[1]})"""
    kind: int
    u: Tuple[sympy.Expr, sympy.Expr]
    z: Tuple[sympy.Expr, sympy.Expr]

    def a_conjugate(self) -> "Block":
        # a^{-1} q1 a = p q1、a^{-1} q2 a = p^{-1} q2、p^2 = q1 q2
        if self.kind != 2:
            raise StructuralMismatch("a-conjugation is only defined on F^(2) blocks")

        def move(alpha, beta):
            return (sympy.Rational(3, 2) * alpha - beta / 2, alpha / 2 + beta / 2)

        return Block(1, move(*self.u), move(*self.z))

    def b_conjugate(self, power) -> "Block":
        return Block(self.kind, self.u, (self.z[0] + power, self.z[1] + power))

    def s_shift(self, power) -> "Block":
        return Block(self.kind, (self.u[0] + 2 * power, self.u[1] + 2 * power), self.z)


@dataclass(frozen=True)
class Series:
    """a^a b^b i^i Σ_{m ∈ offset+Z} s^m 𝖥^(2)(u q2^{4m} | Z q2^{z})"""
    name: str
    a: int
    b: int
    i: int
    offset: Fraction
    z_shift: Tuple[int, int]

    def block(self, m) -> Block:
        return Block(2, (sympy.Integer(0), 4 * m), tuple(sympy.Integer(v) for v in self.z_shift))

    def over(self) -> "Series":
        """(Z, a) -> (q2^2 Z, ab)"""
        return Series(f"over({self.name})", self.a, self.b + self.a, self.i, self.offset,
                      (self.z_shift[0], self.z_shift[1] + 2))

    def under(self) -> "Series":
        return Series(f"under({self.name})", self.a, self.b - self.a, self.i, self.offset,
                      (self.z_shift[0], self.z_shift[1] - 2))


def load_series(data: Optional[Mapping[str, Any]] = None) -> Dict[str, Series]:
    data = data or load_quantum_data()["tau_series"]
    return {name: Series(name, entry["a"], entry["b"], entry["i"], Fraction(entry["offset"]),
                         tuple(entry["z_shift"]))
            for name, entry in data.items()}


# ---------------------------------------------------------------------------
# 積の正規化
# ---------------------------------------------------------------------------

@dataclass
class ProductTerm:
    """coefficient · a^a b^b Σ s^N [X 側ブロック][Y 側ブロック]（X の和の添字 m、N = m + m_Y）"""
    label: str
    coefficient: sympy.Expr
    a: int
    b: int
    offsets: Tuple[Fraction, Fraction]
    first: Block
    second: Block


def series_product(coefficient: sympy.Expr, X: Series, Y: Series) -> ProductTerm:
    if Y.a not in (0, 1):
        raise StructuralMismatch(f"{Y.name} carries a^{Y.a}; only a single a can be moved")
    first = X.block(_m)
    if Y.a:
        first = first.a_conjugate()
    first = first.b_conjugate(Y.b).s_shift(_N - _m)
    second = Y.block(_N - _m)
    coefficient = sympy.sympify(coefficient) * sympy.I ** (X.i + Y.i)
    return ProductTerm(f"{X.name}*{Y.name}", coefficient, X.a + Y.a, X.b + Y.b,
                       (X.offset, Y.offset), first, second)


def cq_exponent(shift) -> sympy.Expr:
    """
    log c_q(ũq1^{4n}|Z'q1^k) + log c_q(ũq2^{4n}|Z'q2^k)（𝖥^(1), 𝖥^(2) の媒介変数）。

    l1 = log q1, l2 = log q2, L = log ũ, z = log Z'。
    """
    first = -(_z + shift * _l1) * (_L + 4 * _n * _l1) ** 2 / (8 * _l1 * (_l2 - _l1))
    second = -(_z + shift * _l2) * (_L + 4 * _n * _l2) ** 2 / (8 * _l2 * (_l1 - _l2))
    return first + second


def cq_prefactor(shift) -> Tuple[Dict[str, sympy.Expr], sympy.Expr]:
    """c_q の積を n の二次式に分け、前因子の指数と n に依らない部分を返す"""
    E = cq_exponent(shift)
    e0 = sympy.cancel(E.subs(_n, 0))
    e1 = sympy.cancel(sympy.diff(E, _n).subs(_n, 0))
    e2 = sympy.cancel(sympy.diff(E, _n, 2) / 2)
    u_power = sympy.cancel(e1 / _L)
    if u_power.free_symbols:
        raise StructuralMismatch(f"linear c_q term {e1} is not a power of u")
    powers = {"q1": sympy.diff(e2, _l1), "q2": sympy.diff(e2, _l2), "Z": sympy.diff(e2, _z)}
    rest = sympy.expand(e2 - powers["q1"] * _l1 - powers["q2"] * _l2 - powers["Z"] * _z)
    if rest != 0 or any(v.free_symbols for v in powers.values()):
        raise StructuralMismatch(f"quadratic c_q term {e2} is not a monomial exponent")
    prefactor = {"u": u_power * _n}
    prefactor.update({key: value * _n ** 2 for key, value in powers.items()})
    return prefactor, e0


@dataclass
class NormalTerm:
    """𝖥^(1)(ũq1^{4n}|Z'q1^k) 𝖥^(2)(ũq2^{4n}|Z'q2^k) の和に直した項"""
    label: str
    coefficient: sympy.Expr
    a: int
    b: int
    cosets: Tuple[Fraction, Fraction]
    base: Fraction
    prefactor: Dict[str, sympy.Expr]
    shift: int
    u_tilde: Tuple[sympy.Expr, sympy.Expr]
    z_prime: Tuple[sympy.Expr, sympy.Expr]
    e0: sympy.Expr

    def shape(self) -> Tuple:
        return tuple(sympy.srepr(sympy.expand(self.prefactor[k])) for k in _PREFACTOR_KEYS) + (self.shift,)

    def descriptor(self, index: Sequence[Fraction]) -> Dict[str, Any]:
        return {"index": [str(v) for v in sorted(set(index))],
                "prefactor": {k: str(sympy.expand(self.prefactor[k])) for k in _PREFACTOR_KEYS},
                "shift": self.shift}


def normalize(term: ProductTerm) -> NormalTerm:
    first, second = term.first, term.second
    if (first.kind, second.kind) != (1, 2):
        raise StructuralMismatch(f"{term.label}: blocks are F^({first.kind}) F^({second.kind}), expected F^(1) F^(2)")
    (a1, b1), (a2, b2) = first.u, second.u
    n = sympy.expand((a1 - a2) / 4)
    if not _same(n, (b2 - b1) / 4):
        raise StructuralMismatch(f"{term.label}: u shifts {first.u} and {second.u} have no common n")
    slope = sympy.diff(n, _m)
    if slope not in (1, -1):
        raise StructuralMismatch(f"{term.label}: dn/dm = {slope}")
    u_tilde = (sympy.expand(a2), sympy.expand(b1))
    if any(sympy.diff(v, _m) != 0 for v in u_tilde):
        raise StructuralMismatch(f"{term.label}: common argument u q1^{u_tilde[0]} q2^{u_tilde[1]} depends on m")

    (g1, d1), (g2, d2) = first.z, second.z
    shift = sympy.simplify(g1 - g2)
    if not _same(shift, d2 - d1) or not shift.is_integer:
        raise StructuralMismatch(f"{term.label}: Z shifts {first.z} and {second.z} are not q1^k, q2^k")
    z_prime = (sympy.simplify(g2), sympy.simplify(d1))

    prefactor, e0 = cq_prefactor(shift)
    # Z = Z' q1^{-γ2} q2^{-δ1}、p = (q1 q2)^{1/2}
    coefficient = term.coefficient.subs(_Z, _Z * _q1 ** (-z_prime[0]) * _q2 ** (-z_prime[1]))
    coefficient = sympy.simplify(coefficient.subs(_p, sympy.sqrt(_q1 * _q2)))

    offset_x = term.offsets[0]
    base = (term.offsets[0] + term.offsets[1]) % 1
    n0 = n.subs(_m, 0)
    cosets = tuple((_fraction(n0.subs(_N, sympy.Rational(str(base + k)))) + int(slope) * offset_x) % 1 for k in (0, 1))
    return NormalTerm(term.label, coefficient, term.a, term.b, cosets, base, prefactor, int(shift),
                      u_tilde, z_prime, e0)


# ---------------------------------------------------------------------------
# 関係式
# ---------------------------------------------------------------------------

def relation_products(relation: str, series: Optional[Mapping[str, Series]] = None,
                      lam=None) -> Tuple[List[ProductTerm], List[ProductTerm]]:
    """交換関係 X·Y = p^{Λ_XY/2} Y·X、または双線形関係 under(T1)·over(T1) = Σ c·T_k·T_k"""
    series = series or load_series()
    data = load_quantum_data()
    if relation not in data["identities"]:
        raise UnknownCheck(f"unknown reduction {relation!r}; choose from {', '.join(RELATIONS)}")
    kind = data["identities"][relation]["kind"]
    X, Y = series[relation[:2]], series[relation[2:]]
    if kind == "commutator":
        if lam is None:
            lam = get_ext_quiver(data["tau_torus"]["quiver"]).lam
        lam = np.array(lam, dtype=int)
        power = sympy.Rational(int(lam[int(X.name[1]) - 1, int(Y.name[1]) - 1]), 2)
        return [series_product(1, X, Y)], [series_product(_p ** power, Y, X)]
    return [series_product(1, X.under(), X.over())], _bilinear_rhs(relation, series, data)


def _bilinear_rhs(relation: str, series: Mapping[str, Series], data: Mapping[str, Any]) -> List[ProductTerm]:
    """τ の双線形関係の右辺（tau6 = Z^{1/4}, tau5 = q^{1/4} = q2^{1/2}）"""
    target = int(relation[1])
    entry = next(e for e in data["tau_torus"]["bilinear"] if e["tau"] == target)
    names = {f"tau{i}": sympy.Symbol(f"tau{i}") for i in range(1, 7)}
    frozen = {names["tau5"]: _q2 ** sympy.Rational(1, 2), names["tau6"]: _Z ** sympy.Rational(1, 4)}
    expr = sympy.expand(sympy.sympify(entry["rhs"].replace("^", "**"), locals=dict(names, p=_p)))
    terms = []
    for monomial in sympy.Add.make_args(expr):
        powers = monomial.as_powers_dict()
        mutable = [k for k in range(1, 5) if powers.get(names[f"tau{k}"], 0)]
        if len(mutable) != 1 or powers[names[f"tau{mutable[0]}"]] != 2:
            raise StructuralMismatch(f"bilinear term {monomial} is not c*tau_k^2")
        T = series[f"T{mutable[0]}"]
        coefficient = (monomial / names[f"tau{mutable[0]}"] ** 2).subs(frozen)
        terms.append(series_product(coefficient, T, T))
    return terms


# ---------------------------------------------------------------------------
# 照合
# ---------------------------------------------------------------------------

@dataclass
class ReductionResult:
    relation: str
    merged: bool
    identities: List[Dict[str, Any]] = field(default_factory=list)
    factor: sympy.Expr = sympy.Integer(1)
    display_factor: sympy.Expr = sympy.Integer(1)

    @property
    def factor_matches(self) -> bool:
        return _same(self.factor, self.display_factor)

    def to_dict(self) -> Dict[str, Any]:
        return {"relation": self.relation, "merged": self.merged, "identities": self.identities,
                "factor": str(self.factor), "display_factor": str(self.display_factor),
                "factor_matches": self.factor_matches}


def _check_common(terms: Sequence[NormalTerm]) -> None:
    head = terms[0]
    for t in terms[1:]:
        if (t.a, t.b, t.base) != (head.a, head.b, head.base):
            raise StructuralMismatch(f"{t.label}: prefix a^{t.a} b^{t.b} s^({t.base}+Z) differs from {head.label}")
        if not all(_same(x, y) for x, y in zip(t.u_tilde + t.z_prime, head.u_tilde + head.z_prime)):
            raise StructuralMismatch(f"{t.label}: arguments u, Z are normalized differently from {head.label}")
        if not _same(t.e0, head.e0):
            raise StructuralMismatch(f"{t.label}: n-independent c_q factor differs from {head.label}")
        if t.b and t.coefficient.has(_Z):
            raise StructuralMismatch(f"{t.label}: Z-dependent coefficient in front of b^{t.b}")


def _collect(terms: Sequence[NormalTerm], classes: Sequence[int]) -> List[Tuple[NormalTerm, frozenset, sympy.Expr]]:
    """同じ形・同じ添字集合の項の係数を足す"""
    groups: Dict[Tuple, Tuple[NormalTerm, frozenset, sympy.Expr]] = {}
    for t in terms:
        index = frozenset(t.cosets[c] for c in classes)
        key = (t.shape(), index)
        if key in groups:
            head, _, coeff = groups[key]
            groups[key] = (head, index, coeff + t.coefficient)
        else:
            groups[key] = (t, index, t.coefficient)
    return list(groups.values())


def _matches(descriptor: Dict[str, Any], expected: Mapping[str, Any], negate: bool) -> bool:
    if descriptor["shift"] != expected["shift"]:
        return False
    for key in _PREFACTOR_KEYS:
        if not _same(sympy.sympify(descriptor["prefactor"][key], locals={"n": _n}),
                     sympy.sympify(expected["prefactor"][key], locals={"n": _n})):
            return False
    sign = -1 if negate else 1
    wanted = {(sign * Fraction(v)) % 1 for v in expected["index"]}
    return {Fraction(v) for v in descriptor["index"]} == wanted


def quantum_tau_reduce(relation: str) -> ReductionResult:
    """
    関係式を Nekrasov ブロックの双線形恒等式に簡約し、登録された形と照合する。

    形が一致しない場合は StructuralMismatch。係数の比（factor）は表示値と並べて返す。
    """
    data = load_quantum_data()
    lhs_products, rhs_products = relation_products(relation)
    expected = data["identities"][relation]
    merge = bool(expected["merge"])
    lhs = [normalize(t) for t in lhs_products]
    rhs = [normalize(t) for t in rhs_products]
    _check_common(lhs + rhs)

    class_sets = [(0, 1)] if merge else [(0,), (1,)]
    result = ReductionResult(relation, merge)
    factors = []
    for classes in class_sets:
        sides = []
        for side_terms in (lhs, rhs):
            collected = [entry for entry in _collect(side_terms, classes) if sympy.simplify(entry[2]) != 0]
            if len(collected) != 1:
                raise StructuralMismatch(f"{relation}: one side does not reduce to a single series "
                                         f"({[entry[0].label for entry in collected]})")
            sides.append(collected[0])
        (lt, l_index, l_coeff), (rt, r_index, r_coeff) = sides
        descriptors = {"lhs": lt.descriptor(l_index), "rhs": rt.descriptor(r_index)}
        matched = any(
            _matches(descriptors["lhs"], expected["lhs"][0], negate)
            and _matches(descriptors["rhs"], expected["rhs"][0], negate)
            for negate in ((False,) if merge else (False, True))
        )
        if not matched:
            raise StructuralMismatch(f"{relation}: reduced identity {descriptors} does not match the registered form")
        factors.append(sympy.simplify(r_coeff / l_coeff))
        result.identities.append({"n_class": [str(lt.cosets[c]) for c in classes], **descriptors})

    if any(not _same(f, factors[0]) for f in factors[1:]):
        raise StructuralMismatch(f"{relation}: classes give different factors {factors}")
    result.factor = factors[0]
    result.display_factor = sympy.sympify(expected["factor"], locals={"q1": _q1, "q2": _q2, "Z": _Z})
    if not result.factor_matches:
        logger.warning(f"{relation}: derived factor {result.factor} differs from displayed {result.display_factor}")
    return result


def collapse_check(data: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """q1 q2 = 1 で 𝖥^(1) と 𝖥^(2) の媒介変数の組が一致する"""
    data = data or load_quantum_data()["parameters"]
    symbols = {"q1": _q1, "q2": _q2}
    results = []
    for source, target in data["a_conjugation"].items():
        a = sympy.sympify(source.replace("^", "**"), locals=symbols).subs(_q1, 1 / _q2)
        b = sympy.sympify(target.replace("^", "**"), locals=symbols).subs(_q1, 1 / _q2)
        results.append({"parameter": source, "image": target, "holds": _same(a, b)})
    return {"pairs": results, "holds": all(r["holds"] for r in results)}
