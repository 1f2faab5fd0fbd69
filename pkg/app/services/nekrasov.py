"""
5d Nekrasov 関数
5d Nekrasov Partition Functions

  - 分割（ヤング図形）、腕・脚の長さ、N_{λ,μ}(u; q1, q2) の厳密値
  - インスタントン級数 𝓕(u; q1, q2 | Z) の係数（厳密な有理数）
  - 多重 q-Pochhammer 記号と C_q, c_q, F^(1), F^(2) の任意精度評価（誤差上界つき）
  - Nekrasov ブロックの双線形関係と古典 τ 関数の双線形方程式の数値検証

級数係数は常に Fraction で厳密に計算し、浮動小数（mpmath）は組み立てにのみ使う。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import mpmath
import pandas as pd
import sympy
from sympy.utilities.iterables import partitions

from app.config.settings import (
    ERROR_BUDGET_FACTOR,
    GUARD_DIGITS,
    MAX_CONCURRENT_CHECKS,
    POCHHAMMER_MAX_TERMS,
    PRECISION_DIGITS,
)
from app.models.verification import (
    BaseOnUnitCircle,
    PoleAtPoint,
    StructuralMismatch,
    TruncationBudgetExceeded,
    UnknownCheck,
)
from app.services.qtorus import load_quantum_data
from app.services.qtorus_reduction import quantum_tau_reduce

logger = logging.getLogger(__name__)

Rational = Union[int, str, Fraction]
Box = Tuple[int, int]

# 関係式名 -> (簡約の関係式, 添字集合の符号反転)
CONJECTURES: Dict[str, Tuple[str, bool]] = {
    "FT1T3": ("T1T3", False),
    "FT1T4-plus": ("T1T4", False),
    "FT1T4-minus": ("T1T4", True),
    "FT1T2": ("T1T2", False),
    "FT1T1": ("T1T1", False),
}
FACTOR_MODES = ("derived", "display")

_q1s, _q2s, _Zs = sympy.symbols("q1 q2 Z", positive=True)
_ns = sympy.Symbol("n")


def _rational(value: Rational) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


# ---------------------------------------------------------------------------
# 分割
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """広義単調減少の正整数列"""
    parts: Tuple[int, ...] = ()

    def __post_init__(self):
        if any(p <= 0 for p in self.parts) or any(a < b for a, b in zip(self.parts, self.parts[1:])):
            raise StructuralMismatch(f"{list(self.parts)} is not a partition")

    @property
    def size(self) -> int:
        return sum(self.parts)

    def row(self, i: int) -> int:
        """λ_i（1 始まり、範囲外は 0）"""
        return self.parts[i - 1] if 1 <= i <= len(self.parts) else 0

    @cached_property
    def conjugate(self) -> "Partition":
        width = self.parts[0] if self.parts else 0
        return Partition(tuple(sum(1 for p in self.parts if p >= j) for j in range(1, width + 1)))

    def column(self, j: int) -> int:
        return self.conjugate.row(j)

    def boxes(self) -> Iterator[Box]:
        for i, p in enumerate(self.parts, start=1):
            for j in range(1, p + 1):
                yield (i, j)

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.parts)) + "]"


EMPTY = Partition()


@lru_cache(maxsize=None)
def partitions_of(n: int) -> Tuple[Partition, ...]:
    if n == 0:
        return (EMPTY,)
    out = []
    for mult in partitions(n):
        out.append(Partition(tuple(sorted((k for k, m in mult.items() for _ in range(m)), reverse=True))))
    return tuple(sorted(out, key=lambda p: p.parts, reverse=True))


def partition_pairs(total: int) -> Iterator[Tuple[Partition, Partition]]:
    for k in range(total + 1):
        for a in partitions_of(k):
            for b in partitions_of(total - k):
                yield a, b


def arm(p: Partition, s: Box) -> int:
    """a_p(s) = p_i − j（s が p の外なら負になりうる）"""
    return p.row(s[0]) - s[1]


def leg(p: Partition, s: Box) -> int:
    """ℓ_p(s) = p'_j − i"""
    return p.column(s[1]) - s[0]


def arm_leg(lam: Partition, mu: Partition, s: Box) -> Tuple[int, int]:
    """N_{λ,μ} の λ 側の因子で使う (a_μ(s), ℓ_λ(s))"""
    return arm(mu, s), leg(lam, s)


def nek_weight(lam: Partition, mu: Partition, u: Rational, q1: Rational, q2: Rational) -> Fraction:
    """
    N_{λ,μ}(u; q1, q2) = ∏_{s∈λ}(1 − u q2^{−a_μ(s)−1} q1^{ℓ_λ(s)})
                        · ∏_{s∈μ}(1 − u q2^{a_λ(s)} q1^{−ℓ_μ(s)−1})
    """
    u, q1, q2 = _rational(u), _rational(q1), _rational(q2)
    value = Fraction(1)
    for s in lam.boxes():
        value *= 1 - u * q2 ** (-arm(mu, s) - 1) * q1 ** leg(lam, s)
    for s in mu.boxes():
        value *= 1 - u * q2 ** arm(lam, s) * q1 ** (-leg(mu, s) - 1)
    return value


# ---------------------------------------------------------------------------
# インスタントン級数
# ---------------------------------------------------------------------------

@dataclass
class NekSeries:
    """𝓕(u; q1, q2 | Z) = Σ coeffs[k] Z^k"""
    point: Tuple[Fraction, Fraction, Fraction]
    coeffs: List[Fraction]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "order": range(len(self.coeffs)),
            "numerator": [c.numerator for c in self.coeffs],
            "denominator": [c.denominator for c in self.coeffs],
        })

    def to_dict(self) -> Dict[str, Any]:
        return {"u": str(self.point[0]), "q1": str(self.point[1]), "q2": str(self.point[2]),
                "coefficients": [str(c) for c in self.coeffs]}


def pair_weight(pair: Tuple[Partition, Partition], u: Fraction, q1: Fraction, q2: Fraction) -> Fraction:
    """1 / ∏_{i,j} N_{λ_i,λ_j}(u_i/u_j)、u_1/u_2 = u"""
    ratios = {(0, 0): Fraction(1), (0, 1): u, (1, 0): 1 / u, (1, 1): Fraction(1)}
    denominator = Fraction(1)
    for (i, j), ratio in ratios.items():
        denominator *= nek_weight(pair[i], pair[j], ratio, q1, q2)
    if denominator == 0:
        raise PoleAtPoint(f"N vanishes for the pair ({pair[0]}, {pair[1]}) at u={u}, q1={q1}, q2={q2}")
    return 1 / denominator


@lru_cache(maxsize=4096)
def _coefficient(u: Fraction, q1: Fraction, q2: Fraction, k: int) -> Fraction:
    return sum((pair_weight(pair, u, q1, q2) for pair in partition_pairs(k)), Fraction(0))


def inst_series(u: Rational, q1: Rational, q2: Rational, order: int,
                max_workers: Optional[int] = None) -> NekSeries:
    """Z^0..Z^order の係数（次数ごとに独立に計算、結果は実行順に依存しない）"""
    u, q1, q2 = _rational(u), _rational(q1), _rational(q2)
    if 0 in (u, q1, q2):
        raise PoleAtPoint("u, q1, q2 must be nonzero")
    workers = max_workers or MAX_CONCURRENT_CHECKS
    if workers > 1 and order > 2:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            coeffs = list(executor.map(lambda k: _coefficient(u, q1, q2, k), range(order + 1)))
    else:
        coeffs = [_coefficient(u, q1, q2, k) for k in range(order + 1)]
    return NekSeries((u, q1, q2), coeffs)


# ---------------------------------------------------------------------------
# 誤差つき実数
# ---------------------------------------------------------------------------

def _mp(value: Fraction):
    return mpmath.mpf(value.numerator) / value.denominator


def _ulp(value) -> mpmath.mpf:
    return abs(value) * mpmath.mpf(10) ** (GUARD_DIGITS // 3 - mpmath.mp.dps)


@dataclass(frozen=True)
class PrecisionReal:
    """値と絶対誤差上界 err（各演算で丸め誤差を加算）"""
    value: Any
    err: Any = field(default_factory=lambda: mpmath.mpf(0))

    @classmethod
    def exact(cls, value: Union[Rational, Any]) -> "PrecisionReal":
        if isinstance(value, (int, str, Fraction)):
            value = _rational(value)
            v = _mp(value)
            return cls(v, _ulp(v) if value.denominator != 1 else mpmath.mpf(0))
        return cls(value, _ulp(value))

    @classmethod
    def zero(cls) -> "PrecisionReal":
        return cls(mpmath.mpf(0))

    def __add__(self, other: "PrecisionReal") -> "PrecisionReal":
        other = _lift(other)
        value = self.value + other.value
        return PrecisionReal(value, self.err + other.err + _ulp(value))

    __radd__ = __add__

    def __neg__(self) -> "PrecisionReal":
        return PrecisionReal(-self.value, self.err)

    def __sub__(self, other: "PrecisionReal") -> "PrecisionReal":
        return self + (-_lift(other))

    def __mul__(self, other: "PrecisionReal") -> "PrecisionReal":
        other = _lift(other)
        value = self.value * other.value
        err = abs(self.value) * other.err + abs(other.value) * self.err + self.err * other.err
        return PrecisionReal(value, err + _ulp(value))

    __rmul__ = __mul__

    def inverse(self) -> "PrecisionReal":
        size = abs(self.value)
        if size <= self.err:
            raise TruncationBudgetExceeded("cannot invert a value indistinguishable from zero")
        value = 1 / self.value
        return PrecisionReal(value, self.err / (size * (size - self.err)) + _ulp(value))

    def __truediv__(self, other: "PrecisionReal") -> "PrecisionReal":
        return self * _lift(other).inverse()

    def exp(self) -> "PrecisionReal":
        value = mpmath.exp(self.value)
        return PrecisionReal(value, abs(value) * mpmath.expm1(self.err) + _ulp(value))

    def __abs__(self):
        return abs(self.value)

    def render(self, digits: int = 20) -> str:
        return f"{mpmath.nstr(self.value, digits)} ± {mpmath.nstr(self.err, 3)}"


def _lift(value) -> PrecisionReal:
    return value if isinstance(value, PrecisionReal) else PrecisionReal.exact(value)


def real_power(base: Fraction, exponent: Fraction) -> PrecisionReal:
    """base^exponent（主値、整数冪は厳密）"""
    if exponent.denominator == 1:
        return PrecisionReal.exact(base ** exponent.numerator)
    return PrecisionReal.exact(mpmath.power(_mp(base), _mp(exponent)))


# ---------------------------------------------------------------------------
# q-Pochhammer
# ---------------------------------------------------------------------------

def pochhammer(x: Union[Rational, Any], bases: Sequence[Union[Rational, Any]],
               digits: Optional[int] = None) -> PrecisionReal:
    """
    (x; t_1, ..., t_N)_∞。

    |t| > 1 の基底は (x; t^{-1}, ...) = (xt; t, ...)^{-1} で単位円の内側へ移す。
    内側では |x| ≤ 1/2 まで (x; t1, ...) = (x; t2, ...) (x t1; t1, ...) で x を縮め、
    指数和 −Σ x^m/m ∏ 1/(1 − t_k^m) を幾何級数の剰余評価つきで計算する。
    """
    digits = digits or PRECISION_DIGITS
    with mpmath.workdps(digits + GUARD_DIGITS):
        x = _lift(x).value
        values = [_lift(t).value for t in bases]
        return _poch(x, values, [0])


def _poch(x, bases: List[Any], budget: List[int]) -> PrecisionReal:
    if x == 0:
        return PrecisionReal(mpmath.mpf(1))
    for i, t in enumerate(bases):
        if abs(t) == 1:
            raise BaseOnUnitCircle(f"base {mpmath.nstr(t, 10)} lies on the unit circle")
        if abs(t) > 1:
            flipped = bases[:i] + [1 / t] + bases[i + 1:]
            return _poch(x / t, flipped, budget).inverse()
    if not bases:
        value = 1 - x
        return PrecisionReal(value, _ulp(value))

    bases = sorted(bases, key=abs)
    head, rest = bases[0], bases[1:]
    result = PrecisionReal(mpmath.mpf(1))
    while abs(x) > mpmath.mpf(1) / 2:
        budget[0] += 1
        if budget[0] > POCHHAMMER_MAX_TERMS:
            raise TruncationBudgetExceeded(f"q-Pochhammer reduction exceeded {POCHHAMMER_MAX_TERMS} steps")
        result = result * _poch(x, rest, budget)
        x = x * head
    return result * _exp_sum(x, bases, budget)


def _exp_sum(x, bases: List[Any], budget: List[int]) -> PrecisionReal:
    """exp(−Σ_{m≥1} x^m/m ∏ 1/(1 − t_k^m))、|x| ≤ 1/2, |t_k| < 1"""
    tol = mpmath.mpf(10) ** (GUARD_DIGITS // 3 - mpmath.mp.dps)
    size = abs(x)
    scale = mpmath.mpf(1)
    for t in bases:
        scale /= 1 - abs(t)
    total = mpmath.mpf(0)
    magnitude = mpmath.mpf(0)
    power = mpmath.mpf(1)
    m = 0
    while True:
        m += 1
        budget[0] += 1
        if budget[0] > POCHHAMMER_MAX_TERMS:
            raise TruncationBudgetExceeded(f"q-Pochhammer series exceeded {POCHHAMMER_MAX_TERMS} terms")
        power = power * x
        term = power / m
        for t in bases:
            term /= 1 - t ** m
        total -= term
        magnitude += abs(term)
        tail = size ** (m + 1) / ((m + 1) * (1 - size)) * scale
        if tail < tol * max(magnitude, 1):
            break
    err = tail + magnitude * tol * m
    return PrecisionReal(total, err).exp()


def block_parameters(kind: int, q1: Rational, q2: Rational) -> Tuple[Fraction, Fraction]:
    """F^(1): (q1^2, q1^{-1} q2)、F^(2): (q1 q2^{-1}, q2^2)"""
    q1, q2 = _rational(q1), _rational(q2)
    if kind == 1:
        return q1 ** 2, q2 / q1
    if kind == 2:
        return q1 / q2, q2 ** 2
    raise UnknownCheck(f"block kind must be 1 or 2, got {kind}")


@lru_cache(maxsize=2048)
def _c_big(u: Fraction, t1: Fraction, t2: Fraction, digits: int) -> PrecisionReal:
    return pochhammer(u, [t1, t2], digits) * pochhammer(1 / u, [t1, t2], digits)


def c_big(u: Rational, t1: Rational, t2: Rational, digits: Optional[int] = None) -> PrecisionReal:
    """C_q(u; t1, t2) = (u; t1, t2)_∞ (u^{-1}; t1, t2)_∞"""
    digits = digits or PRECISION_DIGITS
    with mpmath.workdps(digits + GUARD_DIGITS):
        return _c_big(_rational(u), _rational(t1), _rational(t2), digits)


def c_small(u, Z, t1, t2, digits: Optional[int] = None) -> PrecisionReal:
    """c_q(u|Z) = exp(−log Z (log u)^2 / (4 log t1 log t2))（主値の対数）"""
    digits = digits or PRECISION_DIGITS
    with mpmath.workdps(digits + GUARD_DIGITS):
        u, Z, t1, t2 = (_lift(v).value for v in (u, Z, t1, t2))
        exponent = -mpmath.log(Z) * mpmath.log(u) ** 2 / (4 * mpmath.log(t1) * mpmath.log(t2))
        return PrecisionReal.exact(exponent).exp()


def normalizations(u: Rational, Z: Rational, which: str, q1: Rational, q2: Rational,
                   digits: Optional[int] = None, order: int = 4) -> PrecisionReal:
    """
    Cq, cq は (q1, q2) を基底としてそのまま使う。F1, F2 は (q1, q2) を背景パラメータとして
    特殊化した組で C_q · Σ_{k ≤ order} 𝓕_k Z^k を返す（級数の打ち切り誤差は含まない）。
    """
    digits = digits or PRECISION_DIGITS
    if which == "Cq":
        return c_big(u, q1, q2, digits)
    if which == "cq":
        return c_small(u, Z, q1, q2, digits)
    if which not in ("F1", "F2"):
        raise UnknownCheck(f"unknown normalization {which!r}; choose from Cq, cq, F1, F2")
    t1, t2 = block_parameters(int(which[1]), q1, q2)
    series = inst_series(u, t1, t2, order)
    with mpmath.workdps(digits + GUARD_DIGITS):
        total = PrecisionReal.zero()
        z = _rational(Z)
        for k, coeff in enumerate(series.coeffs):
            total = total + PrecisionReal.exact(coeff * z ** k)
        return total * c_big(u, t1, t2, digits)


# ---------------------------------------------------------------------------
# Nekrasov ブロックの双線形関係
# ---------------------------------------------------------------------------

@dataclass
class BilinearReport:
    """Z の分数冪ごとの左右の値と残差、打ち切り情報"""
    relation: str
    point: Dict[str, str]
    factor_mode: str
    factor: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    truncation: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(row["holds"] for row in self.rows)

    def to_dict(self) -> Dict[str, Any]:
        return {"relation": self.relation, "point": self.point, "factor_mode": self.factor_mode,
                "factor": self.factor, "rows": self.rows, "truncation": self.truncation,
                "holds": self.holds}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


def _factor_terms(expr: sympy.Expr, q1: Fraction, q2: Fraction) -> List[Tuple[Fraction, PrecisionReal]]:
    """因子 Σ c(q1, q2) Z^e を (e, c) の列に"""
    terms = []
    for term in sympy.Add.make_args(sympy.expand(expr)):
        coeff, exponent = term.as_coeff_exponent(_Zs)
        if coeff.has(_Zs) or not exponent.is_Rational:
            raise StructuralMismatch(f"factor term {term} is not c*Z^e")
        value = coeff.subs({_q1s: sympy.Rational(q1.numerator, q1.denominator),
                            _q2s: sympy.Rational(q2.numerator, q2.denominator)})
        if value.is_Rational:
            number = PrecisionReal.exact(Fraction(int(value.p), int(value.q)))
        else:
            number = PrecisionReal.exact(mpmath.mpf(str(sympy.N(value, mpmath.mp.dps + 5))))
        terms.append((Fraction(int(exponent.p), int(exponent.q)), number))
    return terms


def _index_points(coset: Fraction, z_power, max_order: Fraction) -> List[Fraction]:
    """n ∈ coset + Z のうち Z の冪が max_order 以下のもの"""
    reach = int(math.isqrt(int(max_order) + 1)) + 2
    points = []
    for k in range(-reach - 1, reach + 2):
        n = coset + k
        if Fraction(str(z_power.subs(_ns, sympy.Rational(n.numerator, n.denominator)))) <= max_order:
            points.append(n)
    return points


def _side_coefficients(descriptor: Dict[str, Any], sign: int, u: Fraction, q1: Fraction, q2: Fraction,
                       max_order: Fraction, digits: int, info: Dict[str, Any]) -> Dict[Fraction, PrecisionReal]:
    prefactor = {k: sympy.sympify(v, locals={"n": _ns}) for k, v in descriptor["prefactor"].items()}
    shift = int(descriptor["shift"])
    pairs = {kind: block_parameters(kind, q1, q2) for kind in (1, 2)}
    out: Dict[Fraction, PrecisionReal] = {}
    cosets = sorted({(sign * Fraction(v)) % 1 for v in descriptor["index"]})
    for coset in cosets:
        for n in _index_points(coset, prefactor["Z"], max_order):
            if (4 * n).denominator != 1:
                raise StructuralMismatch(f"index {n} does not give an integral q-shift")
            info["max_abs_n"] = max(info.get("max_abs_n", Fraction(0)), abs(n))
            at = {_ns: sympy.Rational(n.numerator, n.denominator)}
            powers = {k: Fraction(str(v.subs(at))) for k, v in prefactor.items()}
            start = powers["Z"]
            room = int(max_order - start)
            info["f_order"] = max(info.get("f_order", 0), room)
            u1, u2 = u * q1 ** int(4 * n), u * q2 ** int(4 * n)
            f1 = inst_series(u1, *pairs[1], room).coeffs
            f2 = inst_series(u2, *pairs[2], room).coeffs
            constant = (real_power(u, powers["u"]) * real_power(q1, powers["q1"]) * real_power(q2, powers["q2"])
                        * c_big(u1, *pairs[1], digits) * c_big(u2, *pairs[2], digits))
            for j in range(room + 1):
                g = sum((f1[a] * q1 ** (shift * a) * f2[j - a] * q2 ** (shift * (j - a))
                         for a in range(j + 1)), Fraction(0))
                if g == 0:
                    continue
                key = start + j
                out[key] = out.get(key, PrecisionReal.zero()) + constant * PrecisionReal.exact(g)
    return out


def verify_conjecture(relation: str, u: Rational, q1: Rational, q2: Rational,
                      max_order: Rational = Fraction(1, 2), digits: Optional[int] = None,
                      factor_mode: str = "derived", corrupt_sign: bool = False) -> BilinearReport:
    """
    Nekrasov ブロックの双線形関係を Z の冪ごとに比較する。

    factor_mode="derived" は簡約で得た右辺の因子、"display" は登録された表示どおりの因子を使う。
    corrupt_sign=True は左辺の前因子の符号を反転する（陰性対照）。
    """
    if relation not in CONJECTURES:
        raise UnknownCheck(f"unknown relation {relation!r}; choose from {', '.join(CONJECTURES)}")
    if factor_mode not in FACTOR_MODES:
        raise UnknownCheck(f"factor mode must be one of {FACTOR_MODES}")
    digits = digits or PRECISION_DIGITS
    u, q1, q2, max_order = _rational(u), _rational(q1), _rational(q2), _rational(max_order)
    reduction, negate = CONJECTURES[relation]
    identity = load_quantum_data()["identities"][reduction]
    if factor_mode == "derived":
        factor = quantum_tau_reduce(reduction).factor
    else:
        factor = sympy.sympify(identity["factor"], locals={"q1": _q1s, "q2": _q2s, "Z": _Zs})
    sign = -1 if negate else 1
    info: Dict[str, Any] = {}

    with mpmath.workdps(digits + GUARD_DIGITS):
        lhs = _side_coefficients(identity["lhs"][0], sign, u, q1, q2, max_order, digits, info)
        rhs_raw = _side_coefficients(identity["rhs"][0], sign, u, q1, q2, max_order, digits, info)
        rhs: Dict[Fraction, PrecisionReal] = {}
        for exponent, coeff in _factor_terms(factor, q1, q2):
            for key, value in rhs_raw.items():
                if key + exponent <= max_order:
                    rhs[key + exponent] = rhs.get(key + exponent, PrecisionReal.zero()) + coeff * value
        if corrupt_sign:
            lhs = {key: -value for key, value in lhs.items()}

        rows = []
        floor = mpmath.mpf(10) ** (-digits)
        for key in sorted(set(lhs) | set(rhs)):
            left = lhs.get(key, PrecisionReal.zero())
            right = rhs.get(key, PrecisionReal.zero())
            residual = abs(left.value - right.value)
            budget = ERROR_BUDGET_FACTOR * (left.err + right.err) + floor * max(abs(left), abs(right))
            rows.append({
                "class": str(key % 1), "order": str(key),
                "lhs": mpmath.nstr(left.value, 20), "rhs": mpmath.nstr(right.value, 20),
                "residual": mpmath.nstr(residual, 5), "budget": mpmath.nstr(budget, 5),
                "holds": bool(residual <= budget),
            })

    report = BilinearReport(
        relation, {"u": str(u), "q1": str(q1), "q2": str(q2)}, factor_mode, str(factor), rows,
        {"max_order": str(max_order), "max_abs_n": str(info.get("max_abs_n", 0)),
         "f_order": info.get("f_order", 0), "digits": digits, "budget_kind": "certified"},
    )
    if not report.holds:
        logger.warning(f"{relation} ({factor_mode} factor) fails at orders "
                       f"{[r['order'] for r in rows if not r['holds']]}")
    return report


# ---------------------------------------------------------------------------
# 古典 τ 関数（q1 q2 = 1）
# ---------------------------------------------------------------------------

def tau_series(u: Fraction, s: Fraction, q: Fraction, Z, M: int, N: int, digits: int) -> PrecisionReal:
    """𝒯(u, s; q | Z) = Σ_{|m| ≤ M} s^m 𝖥(u q^{2m}; q, q^{-1} | Z)（𝓕 は Z^N まで）"""
    total = PrecisionReal.zero()
    Z = _lift(Z)
    for m in range(-M, M + 1):
        x = u * q ** (2 * m)
        series = inst_series(x, q, 1 / q, N).coeffs
        power = PrecisionReal(mpmath.mpf(1))
        value = PrecisionReal.zero()
        for coeff in series:
            value = value + PrecisionReal.exact(coeff) * power
            power = power * Z
        block = c_small(x, Z.value, q, 1 / q, digits) * c_big(x, q, 1 / q, digits) * value
        total = total + PrecisionReal.exact(s ** m) * block
    return total


def _bilinear_residual(u, s, q, Z: Fraction, M: int, N: int, digits: int) -> Tuple[PrecisionReal, PrecisionReal]:
    """τ1(q^{-1}Z) τ1(qZ) − τ1(Z)^2 − Z^{1/2} τ3(Z)^2、τ3 = i s^{1/2} 𝒯(uq, s)"""
    tau = lambda arg, shift: tau_series(u * q ** shift, s, q, arg, M, N, digits)
    under, over, here = tau(Z / q, 0), tau(Z * q, 0), tau(Z, 0)
    shifted = tau(Z, 1)
    tau3_sq = PrecisionReal.exact(-s) * shifted * shifted
    root = real_power(Z, Fraction(1, 2))
    residual = under * over - here * here - root * tau3_sq
    return residual, here * here


def classical_tau_check(u: Rational, s: Rational, q: Rational, Z_values: Sequence[Rational] = ("1/100", "1/50"),
                        M: int = 3, N: int = 4, digits: Optional[int] = None) -> Dict[str, Any]:
    """
    q1 q2 = 1 の双線形方程式を Z の標本点で評価する。

    打ち切り誤差は (M, N) と (M+1, N+1) の残差の差で見積もり、細かい側の残差と比べる。
    この予算は認証済みの上界ではなく見積もりで、レポートには budget_kind="estimated" と記録する。
    """
    digits = digits or PRECISION_DIGITS
    u, s, q = _rational(u), _rational(s), _rational(q)
    samples = []
    with mpmath.workdps(digits + GUARD_DIGITS):
        for Z in map(_rational, Z_values):
            sweep = []
            for m in range(1, M + 1):
                r, _ = _bilinear_residual(u, s, q, Z, m, N, digits)
                sweep.append(mpmath.nstr(abs(r), 5))
            coarse, scale = _bilinear_residual(u, s, q, Z, M, N, digits)
            fine, _ = _bilinear_residual(u, s, q, Z, M + 1, N + 1, digits)
            estimate = abs(coarse.value - fine.value)
            budget = ERROR_BUDGET_FACTOR * (estimate + fine.err) + mpmath.mpf(10) ** (-digits) * abs(scale)
            samples.append({
                "Z": str(Z), "residual": mpmath.nstr(abs(fine.value), 5),
                "relative": mpmath.nstr(abs(fine.value) / abs(scale), 5),
                "truncation_estimate": mpmath.nstr(estimate, 5), "budget": mpmath.nstr(budget, 5),
                "budget_kind": "estimated", "sweep": sweep, "holds": bool(abs(fine.value) <= budget),
            })
    holds = all(sample["holds"] for sample in samples)
    if not holds:
        logger.warning(f"classical tau bilinear equation fails at u={u}, s={s}, q={q}")
    return {"point": {"u": str(u), "s": str(s), "q": str(q)}, "M": M, "N": N, "digits": digits,
            "budget_kind": "estimated",
            "samples": samples, "holds": holds}
