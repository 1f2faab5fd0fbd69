"""
A クラスター（τ 変数）
A-Cluster Tau Seeds with Frozen Vertices

フローズン頂点付き τ シードの変異、y 変数との対応、A7' の τ 力学と双線形方程式。

フローズン τ の値は単項式（q^(1/4), Z^(1/4) など）で、変異では変わらない。
群語の後にフローズン行がカタログの行と整数変換でずれる場合は
rebase_frozen() でフローズン値を付け替えてカタログの行列に戻す。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from app.models.verification import (
    FrozenVertexMutation,
    IndexOutOfRange,
    StructuralMismatch,
)
from app.services.painleve_cases import PainleveCase, get_case
from app.services.quiver import (
    Atom,
    ExtQuiver,
    GroupWord,
    Mut,
    Perm,
    get_ext_quiver,
    invert_word,
    mutate_matrix,
    permutation_tuple,
    permute_rows_columns,
)
from app.services.symkernel import RatExpr, parse, reduce_laurent
from app.services.xcluster import XSeed, mutate_seed, specialization_points, y_name

logger = logging.getLogger(__name__)

DEFAULT_TAU_QUIVER = "A7p-ext6"
TAU_QUIVERS = {6: "A7p-ext6", 8: "A7p-ext8"}


def tau_name(i: int) -> str:
    return f"tau{i}"


# ---------------------------------------------------------------------------
# シード
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TauSeed:
    """拡大交換行列と τ の値（可変頂点は式、フローズン頂点は単項式）"""
    ext: ExtQuiver
    taus: Tuple[RatExpr, ...]
    frozen: Tuple[RatExpr, ...]

    def __post_init__(self):
        if len(self.taus) != self.ext.n or len(self.frozen) != self.ext.frozen_count:
            raise StructuralMismatch(
                f"tau seed has {len(self.taus)}+{len(self.frozen)} values for "
                f"{self.ext.n}+{self.ext.frozen_count} vertices"
            )
        for value in self.frozen:
            if not value.is_monomial():
                raise StructuralMismatch(f"frozen value {value.render()} is not a monomial")

    def tau(self, i: int) -> RatExpr:
        """頂点 i（1始まり、フローズン頂点も可）の値"""
        if not 1 <= i <= self.ext.size:
            raise IndexOutOfRange(f"vertex {i} out of range 1..{self.ext.size}")
        return self.values()[i - 1]

    def values(self) -> List[RatExpr]:
        return list(self.taus) + list(self.frozen)

    def render(self) -> Dict[str, str]:
        return {tau_name(i): v.render() for i, v in enumerate(self.values(), start=1)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "quiver": self.ext.name,
            "matrix": [list(row) for row in self.ext.exchange],
            "taus": [v.render() for v in self.taus],
            "frozen": [v.render() for v in self.frozen],
        }


def initial_tau_seed(ext: Union[str, ExtQuiver] = DEFAULT_TAU_QUIVER, specialized: bool = False) -> TauSeed:
    """
    初期 τ シード（τ1..τn は生成元、フローズン値はカタログの値）。

    specialized=True なら 8 行版の q0,z0,q1,z1 を q, Z の分数冪に置き換える。
    """
    if isinstance(ext, str):
        ext = get_ext_quiver(ext)
    frozen = [parse(text) for text in ext.frozen_values]
    if specialized and ext.specialization:
        mapping = {name: parse(text) for name, text in ext.specialization}
        frozen = [value.substitute_many(mapping) for value in frozen]
    taus = tuple(RatExpr.gen(tau_name(i)) for i in range(1, ext.n + 1))
    return TauSeed(ext, taus, tuple(frozen))


# ---------------------------------------------------------------------------
# 変異・置換
# ---------------------------------------------------------------------------

def exchange_binomial(seed: TauSeed, j: int) -> Tuple[RatExpr, RatExpr]:
    """(prod_{b_Ij>0} τ_I^{b_Ij}, prod_{b_Ij<0} τ_I^{-b_Ij})"""
    positive, negative = RatExpr.const(1), RatExpr.const(1)
    for value, row in zip(seed.values(), seed.ext.exchange):
        b = row[j - 1]
        if b > 0:
            positive = positive * value ** b
        elif b < 0:
            negative = negative * value ** (-b)
    return positive, negative


def mutate_tau(seed: TauSeed, j: int) -> TauSeed:
    """τ_j ↦ (P + N)/τ_j、交換行列はフローズン行ごと変異"""
    if not 1 <= j <= seed.ext.size:
        raise IndexOutOfRange(f"mutation index {j} out of range 1..{seed.ext.size}")
    if j > seed.ext.n:
        raise FrozenVertexMutation(f"vertex {j} of {seed.ext.name} is frozen")
    positive, negative = exchange_binomial(seed, j)
    taus = list(seed.taus)
    # ローラン現象により割り切れる
    taus[j - 1] = reduce_laurent((positive + negative) / seed.taus[j - 1])
    ext = seed.ext.with_matrix(mutate_matrix(seed.ext.matrix(), j - 1))
    return TauSeed(ext, tuple(taus), seed.frozen)


def permute_tau(seed: TauSeed, perm: Perm) -> TauSeed:
    """新しい τ[σ(i)] = 旧 τ[i]（フローズン頂点は動かさない）"""
    images = permutation_tuple(perm, seed.ext.n)
    taus: List[Optional[RatExpr]] = [None] * seed.ext.n
    for i, target in enumerate(images):
        taus[target - 1] = seed.taus[i]
    ext = seed.ext.with_matrix(permute_rows_columns(seed.ext.matrix(), images))
    return TauSeed(ext, tuple(taus), seed.frozen)


def apply_tau_atom(seed: TauSeed, atom: Atom) -> TauSeed:
    if isinstance(atom, Mut):
        return mutate_tau(seed, atom.vertex)
    if isinstance(atom, Perm):
        return permute_tau(seed, atom)
    raise StructuralMismatch("the inversion ς has no action on tau seeds")


def apply_tau_word(seed: TauSeed, word: GroupWord) -> TauSeed:
    for atom in word.application_order():
        seed = apply_tau_atom(seed, atom)
    return seed


# ---------------------------------------------------------------------------
# y 変数との対応
# ---------------------------------------------------------------------------

def y_from_tau(seed: TauSeed) -> List[RatExpr]:
    """y_j = prod_I τ_I^{b_Ij}（I はフローズン頂点を含む）"""
    ys = []
    for j in range(1, seed.ext.n + 1):
        value = RatExpr.const(1)
        for tau, row in zip(seed.values(), seed.ext.exchange):
            if row[j - 1]:
                value = value * tau ** row[j - 1]
        ys.append(value)
    return ys


def evaluate_on_tau(expr: RatExpr, seed: TauSeed) -> RatExpr:
    """y の式に y_from_tau を代入"""
    mapping = {y_name(i): y for i, y in enumerate(y_from_tau(seed), start=1)}
    return expr.substitute_many(mapping)


def intertwines(seed: TauSeed, j: int) -> bool:
    """y_from_tau∘mutate_tau = mutate_seed∘y_from_tau（頂点 j）"""
    upstairs = y_from_tau(mutate_tau(seed, j))
    downstairs = mutate_seed(XSeed(seed.ext.principal(), tuple(y_from_tau(seed))), j)
    return all(a.equals(b) for a, b in zip(upstairs, downstairs.vars))


def verify_intertwining(labels: Optional[Sequence[str]] = None) -> List[Dict[str, Any]]:
    """初期シードと 1 回変異したシードの各頂点で可換性を確認"""
    results = []
    for label in labels or list(TAU_QUIVERS.values()):
        start = initial_tau_seed(label)
        seeds = [("initial", start)] + [(f"mu{k}", mutate_tau(start, k)) for k in range(1, start.ext.n + 1)]
        for where, seed in seeds:
            for j in range(1, seed.ext.n + 1):
                results.append({"quiver": label, "seed": where, "vertex": j, "holds": intertwines(seed, j)})
    return results


def y_product(seed: TauSeed) -> RatExpr:
    """prod_j y_j（カタログ行列ではフローズン記号だけの単項式）"""
    product = RatExpr.const(1)
    for y in y_from_tau(seed):
        product = product * y
    return product


# ---------------------------------------------------------------------------
# フローズン行の付け替え
# ---------------------------------------------------------------------------

def frozen_transition(before: np.ndarray, after: np.ndarray, bound: int = 1) -> np.ndarray:
    """
    after = U·before となる整数行列 U。

    before の行が一次従属なら U は一意でない。各行について係数 {-bound..bound} の
    解のうち台が最小で自分の行の係数が 1 のものを選び、見つからなければ
    sympy の厳密解（自由パラメータ 0）に落とす。
    """
    before = np.asarray(before, dtype=int)
    after = np.asarray(after, dtype=int)
    k = before.shape[0]
    rows = []
    for f in range(k):
        candidates = []
        for coeffs in itertools.product(range(-bound, bound + 1), repeat=k):
            u = np.array(coeffs, dtype=int)
            if np.array_equal(u @ before, after[f]):
                support = int(np.count_nonzero(u))
                candidates.append(((support, bool(u[f] != 1), int(np.sum(u < 0))), coeffs))
        if candidates:
            rows.append(min(candidates)[1])
            continue
        rows.append(_rational_row(before, after[f]))
    return np.array(rows, dtype=object)


def _rational_row(before: np.ndarray, target: np.ndarray) -> Tuple[Fraction, ...]:
    A = sympy.Matrix(before.T.tolist())
    b = sympy.Matrix([int(v) for v in target])
    try:
        solution, params = A.gauss_jordan_solve(b)
    except ValueError as e:
        raise StructuralMismatch(f"frozen row {list(target)} is not in the span of {before.tolist()}") from e
    if params.shape[0]:
        logger.warning(f"frozen rows are dependent; choosing the particular solution for {list(target)}")
    solution = solution.subs({p: 0 for p in params})
    return tuple(Fraction(int(v.p), int(v.q)) for v in solution)


def rebase_frozen(seed: TauSeed, target: ExtQuiver) -> TauSeed:
    """
    シードの行列を target に揃える（可変部分は一致している必要がある）。

    フローズン行 R' = U·R なら新しいフローズン値は τ'_g = prod_f τ_f^{U_fg}。
    """
    current = seed.ext.matrix()
    reference = target.matrix()
    if not np.array_equal(current[: target.n], reference[: target.n]):
        raise StructuralMismatch(f"principal part differs from {target.name}; cannot rebase")
    U = frozen_transition(reference[target.n:], current[target.n:])
    frozen = []
    for g in range(target.frozen_count):
        value = RatExpr.const(1)
        for f in range(target.frozen_count):
            exponent = Fraction(U[f][g])
            if exponent:
                value = value * seed.frozen[f] ** (int(exponent) if exponent.denominator == 1 else exponent)
        frozen.append(value)
    logger.debug(f"rebased {target.name} frozen values: {[v.render() for v in frozen]}")
    return TauSeed(target, seed.taus, tuple(frozen))


def tau_translation(seed: TauSeed, word: GroupWord) -> TauSeed:
    """群語を適用してカタログ行列に付け替えた τ シード"""
    return rebase_frozen(apply_tau_word(seed, word), seed.ext)


def frozen_rows_after(ext: Union[str, ExtQuiver], word: GroupWord) -> List[List[int]]:
    if isinstance(ext, str):
        ext = get_ext_quiver(ext)
    seed = apply_tau_word(initial_tau_seed(ext), word)
    return [list(map(int, row)) for row in seed.ext.frozen_rows()]


def casimir_shift(case: PainleveCase, seed: TauSeed, word: Union[str, GroupWord]) -> Dict[str, RatExpr]:
    """ケースのカシミールを τ シードで評価し、群語の前後を比較（A7' の T では Z -> qZ）"""
    after = tau_translation(seed, case.word(word))
    return {name: evaluate_on_tau(case.expand(name), after) for name in case.casimirs}


# ---------------------------------------------------------------------------
# 軌道とローラン現象
# ---------------------------------------------------------------------------

def tau_orbit(ext: Union[str, ExtQuiver] = DEFAULT_TAU_QUIVER, word: Union[str, GroupWord] = "T",
              steps: int = 3, case: Optional[PainleveCase] = None) -> List[TauSeed]:
    case = case or get_case("A7p")
    word = case.word(word)
    seed = initial_tau_seed(ext)
    orbit = [seed]
    for step in range(steps):
        seed = tau_translation(seed, word)
        orbit.append(seed)
        logger.debug(f"tau orbit step {step + 1}: {[len(t.num) for t in seed.taus]} terms")
    return orbit


def laurent_check(orbit: Sequence[TauSeed]) -> Dict[str, Any]:
    """軌道上の τ がすべて初期 τ のローラン多項式（分母が単項式）か"""
    failures = []
    for step, seed in enumerate(orbit):
        for i, tau in enumerate(seed.taus, start=1):
            if not tau.is_laurent():
                failures.append({"step": step, "vertex": i})
    return {"steps": len(orbit) - 1, "holds": not failures, "non_laurent": failures}


# ---------------------------------------------------------------------------
# 双線形方程式
# ---------------------------------------------------------------------------

def _neighbours(seed: TauSeed, case: PainleveCase, flow: str) -> Tuple[TauSeed, TauSeed]:
    word = case.word(flow)
    return tau_translation(seed, word), tau_translation(seed, invert_word(word))


def bilinear_residuals(seed: Optional[TauSeed] = None, case: Optional[PainleveCase] = None,
                       flow: str = "T") -> Tuple[RatExpr, RatExpr]:
    """
    τ̲1 τ̄1 − τ1² − Z^(1/2) τ3² と τ̲3 τ̄3 − τ3² − Z^(1/2) τ1²。

    上線・下線は flow とその逆による像、Z はシード上で評価したカシミール。
    """
    case = case or get_case("A7p")
    seed = seed or initial_tau_seed(DEFAULT_TAU_QUIVER)
    forward, backward = _neighbours(seed, case, flow)
    z_half = evaluate_on_tau(case.expand("Z"), seed) ** Fraction(1, 2)
    t1, t3 = seed.tau(1), seed.tau(3)
    first = backward.tau(1) * forward.tau(1) - t1 ** 2 - z_half * t3 ** 2
    second = backward.tau(3) * forward.tau(3) - t3 ** 2 - z_half * t1 ** 2
    return first, second


def tau_scalar_residual(case: Optional[PainleveCase] = None, seed: Optional[TauSeed] = None) -> RatExpr:
    """スカラー方程式（A7' の G）を τ の像で組み立てた残差"""
    case = case or get_case("A7p")
    equation = case.scalar_equation
    if equation is None:
        raise StructuralMismatch(f"case {case.label} has no scalar equation")
    seed = seed or initial_tau_seed(DEFAULT_TAU_QUIVER)
    forward, backward = _neighbours(seed, case, equation.flow)
    variable = case.expand(equation.variable)
    # 座標を先に現在のシードで評価し、Gp, Gm は最後に代入する
    current = evaluate_on_tau(case.expand(equation.residual), seed)
    return current.substitute_many({
        "Gp": evaluate_on_tau(variable, forward),
        "Gm": evaluate_on_tau(variable, backward),
    })


def verify_bilinear(seed: Optional[TauSeed] = None, points: int = 3) -> Dict[str, Any]:
    """双線形残差・スカラー方程式残差が 0 か（有理点での抜き取り確認つき）"""
    seed = seed or initial_tau_seed(DEFAULT_TAU_QUIVER)
    residuals = list(bilinear_residuals(seed))
    scalar = tau_scalar_residual(seed=seed)
    spot = []
    names = [tau_name(i) for i in range(1, seed.ext.n + 1)]
    # q, Z は 4 乗数で取れば分数冪も有理数になる
    for point in specialization_points(len(names) + 2, trials=points):
        values = dict(zip(names, point))
        values["q"] = point[-2] ** 4
        values["Z"] = point[-1] ** 4
        spot.append(all(r.specialize(values) == 0 for r in residuals))
    return {
        "quiver": seed.ext.name,
        "bilinear": [r.render() for r in residuals],
        "scalar_equation": scalar.render(),
        "holds": all(r.is_zero() for r in residuals) and scalar.is_zero(),
        "spot_checks": spot,
    }
