"""
格子多角形
Lattice Polygons

内点を 1 つだけ持つ凸格子多角形（16 種）のカタログと、
  - 不変量（面積・境界点・内点、Pick の公式）と格子幅
  - SA(2,Z) = SL(2,Z) ⋉ Z^2 による同値判定（正規形の比較）と分類
  - スペクトル曲線の多項式 f_Δ(λ, μ) と Newton 多角形
  - 多角形からクイバーへの対応、4a から 4c への有理変換の検証
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import json
import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from app.config.settings import DATA_DIR, RANDOM_SEED, SHEAR_SEARCH_BOUND
from app.models.verification import DegeneratePolygon, SearchBudgetExceeded, UnknownLabel
from app.services.symkernel import RatExpr, from_sympy

logger = logging.getLogger(__name__)

POLYGON_DATA_PATH = DATA_DIR / "polygons.json"

Point = Tuple[int, int]
PolygonLike = Union["LatticePolygon", Iterable[Sequence[int]]]


def _cross(o: Point, a: Point, b: Point) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass(frozen=True)
class LatticePolygon:
    """反時計回り・狭義凸（連続 3 頂点が同一直線上にない）の頂点列"""
    vertices: Tuple[Point, ...]

    def __post_init__(self):
        n = len(self.vertices)
        if n < 3:
            raise DegeneratePolygon(f"a polygon needs at least 3 vertices, got {n}")
        for i in range(n):
            turn = _cross(self.vertices[i - 1], self.vertices[i], self.vertices[(i + 1) % n])
            if turn <= 0:
                raise DegeneratePolygon(
                    f"vertex {self.vertices[i]} is not a strictly convex counterclockwise corner"
                )

    @classmethod
    def from_points(cls, points: Iterable[Sequence[int]]) -> "LatticePolygon":
        """点集合の凸包（境界上の格子点は頂点から除く）"""
        pts = [sympy.Point2D(int(p[0]), int(p[1])) for p in points]
        hull = sympy.convex_hull(*pts) if len(pts) >= 3 else None
        if not isinstance(hull, sympy.Polygon):
            raise DegeneratePolygon(f"points {[tuple(map(int, p)) for p in pts]} do not span a polygon")
        vertices = [(int(v.x), int(v.y)) for v in hull.vertices]
        if sum(_cross(vertices[0], a, b) for a, b in zip(vertices[1:], vertices[2:])) < 0:
            vertices.reverse()
        start = vertices.index(min(vertices))
        return cls(tuple(vertices[start:] + vertices[:start]))

    @cached_property
    def edges(self) -> List[Point]:
        n = len(self.vertices)
        return [(self.vertices[(i + 1) % n][0] - v[0], self.vertices[(i + 1) % n][1] - v[1])
                for i, v in enumerate(self.vertices)]

    def transform(self, matrix, shift: Sequence[int] = (0, 0)) -> "LatticePolygon":
        m = np.asarray(matrix, dtype=object)
        if m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] != 1:
            raise DegeneratePolygon("only determinant-one integer matrices act on the catalog")
        return LatticePolygon.from_points(
            (m[0, 0] * x + m[0, 1] * y + shift[0], m[1, 0] * x + m[1, 1] * y + shift[1])
            for x, y in self.vertices
        )

    def lattice_points(self) -> List[Point]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        n = len(self.vertices)
        return [
            (x, y)
            for x, y in product(range(min(xs), max(xs) + 1), range(min(ys), max(ys) + 1))
            if all(_cross(self.vertices[i], self.vertices[(i + 1) % n], (x, y)) >= 0 for i in range(n))
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {"vertices": [list(v) for v in self.vertices]}


def as_polygon(polygon: PolygonLike) -> LatticePolygon:
    return polygon if isinstance(polygon, LatticePolygon) else LatticePolygon.from_points(polygon)


# ---------------------------------------------------------------------------
# 不変量
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolygonInvariants:
    twice_area: int
    boundary: int
    interior: int

    @property
    def area(self) -> sympy.Rational:
        return sympy.Rational(self.twice_area, 2)

    def to_dict(self) -> Dict[str, Any]:
        return {"twice_area": self.twice_area, "area": str(self.area),
                "boundary": self.boundary, "interior": self.interior}


def invariants(polygon: PolygonLike) -> PolygonInvariants:
    """靴紐公式の 2S、辺ベクトルの gcd の和 B、Pick の公式から g"""
    p = as_polygon(polygon)
    n = len(p.vertices)
    twice_area = sum(_cross((0, 0), p.vertices[i], p.vertices[(i + 1) % n]) for i in range(n))
    boundary = sum(math.gcd(dx, dy) for dx, dy in p.edges)
    # 2S = B + 2g - 2
    interior = (twice_area - boundary + 2) // 2
    return PolygonInvariants(twice_area, boundary, interior)


def lattice_width(polygon: PolygonLike) -> Tuple[int, Point]:
    """
    格子幅 min_d (max d·x − min d·x) とそれを与える原始方向 d。

    幅が w 以下の方向は独立な 2 本の頂点差 e1, e2 に対し |d·e_i| ≤ w を満たすので、
    その範囲が探索上限 SHEAR_SEARCH_BOUND に収まる場合だけ結果を確定する。
    """
    p = as_polygon(polygon)

    def width(d: Point) -> int:
        values = [d[0] * x + d[1] * y for x, y in p.vertices]
        return max(values) - min(values)

    best = min(((width(d), d) for d in [(1, 0), (0, 1), (1, 1), (1, -1)]), key=lambda t: t[0])
    origin = p.vertices[0]
    diffs = [(v[0] - origin[0], v[1] - origin[1]) for v in p.vertices[1:]]
    e1, e2 = max(((a, b) for a in diffs for b in diffs),
                 key=lambda pair: abs(pair[0][0] * pair[1][1] - pair[0][1] * pair[1][0]))
    det = abs(e1[0] * e2[1] - e1[1] * e2[0])
    reach = max(best[0] * (abs(e1[1]) + abs(e2[1])), best[0] * (abs(e1[0]) + abs(e2[0]))) // det
    if reach > SHEAR_SEARCH_BOUND:
        raise SearchBudgetExceeded(f"lattice width search needs directions up to {reach}, "
                                   f"bound is {SHEAR_SEARCH_BOUND}")
    for d in product(range(0, reach + 1), range(-reach, reach + 1)):
        if d == (0, 0) or math.gcd(*d) != 1 or (d[0] == 0 and d[1] < 0):
            continue
        w = width(d)
        if w < best[0] or (w == best[0] and d < best[1]):
            best = (w, d)
    return best


# ---------------------------------------------------------------------------
# SA(2, Z) 同値
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineMap:
    """x ↦ M x + v（M ∈ SL(2, Z)）"""
    matrix: Tuple[Tuple[int, int], Tuple[int, int]]
    shift: Point

    def apply(self, point: Sequence[int]) -> Point:
        (a, b), (c, d) = self.matrix
        return (a * point[0] + b * point[1] + self.shift[0], c * point[0] + d * point[1] + self.shift[1])

    def to_dict(self) -> Dict[str, Any]:
        return {"matrix": [list(r) for r in self.matrix], "shift": list(self.shift)}


def _to_axis(direction: Point) -> np.ndarray:
    """原始ベクトルを (1, 0) に送る SL(2, Z) の元"""
    a, b = direction
    if b == 0:
        return np.array([[a, 0], [0, a]], dtype=object)
    # a x + b y = 1
    x = pow(a, -1, abs(b))
    y = (1 - a * x) // b
    return np.array([[x, y], [-b, a]], dtype=object)


def _anchored(p: LatticePolygon, k: int) -> Tuple[Tuple[Point, ...], np.ndarray, np.ndarray]:
    """
    頂点 k を原点、辺 k → k+1 を正の x 軸へ送り、
    前の頂点 k−1 の x 座標を [0, y) に揃えるシアーで決まる像
    """
    n = len(p.vertices)
    base = np.array(p.vertices[k], dtype=object)
    edge = np.array(p.vertices[(k + 1) % n], dtype=object) - base
    g = math.gcd(int(edge[0]), int(edge[1]))
    m = _to_axis((int(edge[0]) // g, int(edge[1]) // g))
    prev = m.dot(np.array(p.vertices[k - 1], dtype=object) - base)
    # 反時計回りなので prev[1] > 0
    s = -(int(prev[0]) // int(prev[1]))
    m = np.array([[1, s], [0, 1]], dtype=object).dot(m)
    shift = -m.dot(base)
    image = tuple(
        tuple(int(c) for c in m.dot(np.array(p.vertices[(k + i) % n], dtype=object)) + shift)
        for i in range(n)
    )
    return image, m, shift


def normal_form(polygon: PolygonLike) -> Tuple[Tuple[Point, ...], np.ndarray, np.ndarray]:
    """全頂点を起点にした像のうち辞書式最小のもの（SA(2, Z) 軌道の完全不変量）"""
    p = as_polygon(polygon)
    return min((_anchored(p, k) for k in range(len(p.vertices))), key=lambda t: t[0])


def sa2z_equivalent(first: PolygonLike, second: PolygonLike) -> Optional[AffineMap]:
    """M·first + v = second となる (M, v)、なければ None"""
    p, q = as_polygon(first), as_polygon(second)
    if len(p.vertices) != len(q.vertices) or invariants(p) != invariants(q):
        return None
    form_p, m_p, t_p = normal_form(p)
    form_q, m_q, t_q = normal_form(q)
    if form_p != form_q:
        return None
    # m_q^{-1} (m_p x + t_p − t_q)
    (a, b), (c, d) = m_q.tolist()
    inverse = np.array([[d, -b], [-c, a]], dtype=object)
    matrix = inverse.dot(m_p)
    shift = inverse.dot(t_p - t_q)
    result = AffineMap(tuple(tuple(int(x) for x in row) for row in matrix.tolist()),
                       (int(shift[0]), int(shift[1])))
    return result


# ---------------------------------------------------------------------------
# カタログ
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def load_polygon_data() -> Dict[str, Any]:
    with open(POLYGON_DATA_PATH, "r", encoding="utf-8") as f:
        return json.load(f)


@lru_cache(maxsize=1)
def catalog() -> Dict[str, LatticePolygon]:
    data = load_polygon_data()["polygons"]
    return {label: LatticePolygon.from_points(entry["points"]) for label, entry in data.items()}


def get_polygon(label: str) -> LatticePolygon:
    polygons = catalog()
    if label not in polygons:
        raise UnknownLabel(f"unknown polygon {label!r}; known: {', '.join(polygons)}")
    return polygons[label]


@lru_cache(maxsize=1)
def _catalog_forms() -> Dict[Tuple[Point, ...], str]:
    return {normal_form(p)[0]: label for label, p in catalog().items()}


def classify(polygon: PolygonLike) -> Optional[str]:
    """カタログ中の SA(2, Z) 同値な多角形のラベル"""
    try:
        p = as_polygon(polygon)
    except DegeneratePolygon:
        return None
    if invariants(p).interior != 1:
        return None
    return _catalog_forms().get(normal_form(p)[0])


def quiver_for_polygon(label: str) -> str:
    """境界点 B の多角形は B 頂点のクイバー A_{11−B}（B = 4 は例外）"""
    polygon = get_polygon(label)
    exceptions = load_polygon_data()["quiver_exceptions"]
    if label in exceptions:
        return exceptions[label]
    return f"A{11 - invariants(polygon).boundary}"


def random_unimodular(rng: np.random.Generator, steps: int = 4, spread: int = 2) -> AffineMap:
    """基本シアーの積と平行移動"""
    m = np.identity(2, dtype=object)
    for _ in range(steps):
        k = int(rng.integers(-spread, spread + 1))
        elementary = [[1, k], [0, 1]] if rng.integers(2) else [[1, 0], [k, 1]]
        m = np.array(elementary, dtype=object).dot(m)
    shift = tuple(int(v) for v in rng.integers(-5, 6, size=2))
    return AffineMap(tuple(tuple(int(x) for x in row) for row in m.tolist()), shift)


def classification_trials(trials: int = 100, seed: Optional[int] = None) -> Dict[str, Any]:
    """各ラベルに乱択ユニモジュラ変換を施して分類が戻るか"""
    rng = np.random.default_rng(RANDOM_SEED if seed is None else seed)
    failures = []
    for label, polygon in catalog().items():
        for _ in range(trials):
            move = random_unimodular(rng)
            image = polygon.transform(move.matrix, move.shift)
            if classify(image) != label:
                failures.append({"label": label, "map": move.to_dict()})
    if failures:
        logger.warning(f"{len(failures)} classification trials did not return their label")
    return {"trials": trials, "seed": RANDOM_SEED if seed is None else seed,
            "failures": failures, "holds": not failures}


def catalog_check() -> Dict[str, Any]:
    """全 16 種が g = 1, S = B/2 を満たし、互いに同値でない"""
    rows = []
    for label, polygon in catalog().items():
        inv = invariants(polygon)
        rows.append({"label": label, **inv.to_dict(), "vertices": len(polygon.vertices),
                     "quiver": quiver_for_polygon(label),
                     "holds": inv.interior == 1 and inv.twice_area == inv.boundary})
    labels = list(catalog())
    clashes = [(a, b) for i, a in enumerate(labels) for b in labels[i + 1:]
               if sa2z_equivalent(catalog()[a], catalog()[b]) is not None]
    return {"polygons": rows, "equivalent_pairs": clashes,
            "holds": all(r["holds"] for r in rows) and not clashes}


# ---------------------------------------------------------------------------
# スペクトル曲線
# ---------------------------------------------------------------------------

def coefficient_name(a: int, b: int) -> str:
    """a_{a,b} の生成元名（負の添字は m を前置）"""
    fmt = lambda k: f"m{-k}" if k < 0 else str(k)
    return f"a_{fmt(a)}_{fmt(b)}"


def spectral_poly(polygon: Union[str, PolygonLike], lam: str = "lam", mu: str = "mu") -> RatExpr:
    """f_Δ(λ, μ) = Σ_{(a,b)∈Δ} λ^a μ^b a_{a,b}"""
    p = get_polygon(polygon) if isinstance(polygon, str) else as_polygon(polygon)
    total = RatExpr.const(0)
    for a, b in p.lattice_points():
        total = total + RatExpr.gen(coefficient_name(a, b)) * RatExpr.gen(lam, a) * RatExpr.gen(mu, b)
    return total


def newton_polygon(expr: Union[str, sympy.Expr], lam: str = "lam", mu: str = "mu") -> LatticePolygon:
    """ローラン多項式の λ, μ の指数の凸包"""
    expr = sympy.expand(sympy.sympify(expr))
    x, y = sympy.Symbol(lam), sympy.Symbol(mu)
    exponents = []
    for term in sympy.Add.make_args(expr):
        powers = term.as_powers_dict()
        a, b = powers.get(x, 0), powers.get(y, 0)
        if not (sympy.sympify(a).is_integer and sympy.sympify(b).is_integer):
            raise DegeneratePolygon(f"term {term} is not a Laurent monomial in {lam}, {mu}")
        exponents.append((int(a), int(b)))
    return LatticePolygon.from_points(exponents)


def verify_4a_to_4c() -> Dict[str, Any]:
    """
    f_4a に λ = λ̃(a_{-1,0} + a_{0,1} λ̃ μ̃)、μ = μ̃ / (a_{-1,0} + a_{0,1} λ̃ μ̃) を代入すると
    4c 型の多項式になる
    """
    g = RatExpr.gen
    f4a = spectral_poly("4a")
    shift = g(coefficient_name(-1, 0)) + g(coefficient_name(0, 1)) * g("lt") * g("mt")
    moved = f4a.substitute_many({"lam": g("lt") * shift, "mu": g("mt") / shift})
    expected = (
        g(coefficient_name(0, 1)) * g(coefficient_name(1, 0)) * g("lt", 2) * g("mt")
        + (g(coefficient_name(0, -1)) * g(coefficient_name(0, 1))
           + g(coefficient_name(-1, 0)) * g(coefficient_name(1, 0))) * g("lt")
        + g(coefficient_name(0, 0))
        + g(coefficient_name(-1, 0)) * g(coefficient_name(0, -1)) * g("mt", -1)
        + g("lt", -1)
    )
    reduced = sympy.expand(sympy.cancel(moved.to_sympy()))
    lt, mt = sympy.Symbol("lt"), sympy.Symbol("mt")
    coefficients = {
        "lt^2 mt": str(reduced.coeff(lt, 2).coeff(mt, 1)),
        "lt": str(reduced.coeff(lt, 1).coeff(mt, 0)),
    }
    shape = classify(newton_polygon(reduced, "lt", "mt"))
    holds = moved.equals(expected) and sympy.expand(reduced - expected.to_sympy()) == 0
    if not holds:
        logger.warning("4a polynomial does not map to the 4c shape")
    return {"holds": holds, "coefficients": coefficients, "shape": shape,
            "polynomial": str(from_sympy(reduced).render())}
