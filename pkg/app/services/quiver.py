"""
クイバーと交換行列
Quivers and Exchange Matrices

歪対称な交換行列、フローズン行付きの長方形行列、変異・置換・反転（ς）と
それらの合成である群語（GroupWord）、クイバー同型判定、カタログの読み込み。

群語の原子は合成順で保持する（"A∘B" は B を先に適用）。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.config.settings import DATA_DIR, ISOMORPHISM_MAX_VERTICES
from app.models.verification import (
    IndexOutOfRange,
    StructuralMismatch,
    TooLarge,
    UnknownLabel,
    VerificationError,
)

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[int, ...], ...]


def _freeze(matrix: Union[np.ndarray, Sequence[Sequence[int]]]) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in np.asarray(matrix, dtype=int))


# ---------------------------------------------------------------------------
# クイバー
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quiver:
    """歪対称交換行列 eps（eps[i][j] > 0 は i→j の矢印）"""
    eps: Matrix
    name: str = field(default="", compare=False)
    labels: Optional[Tuple[str, ...]] = field(default=None, compare=False)   # 頂点名
    weights: Optional[Tuple[int, ...]] = field(default=None, compare=False)  # カシミール重み

    def __post_init__(self):
        m = np.asarray(self.eps, dtype=int)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructuralMismatch(f"exchange matrix of {self.name or 'quiver'} is not square")
        if not np.array_equal(m, -m.T):
            raise StructuralMismatch(f"exchange matrix of {self.name or 'quiver'} is not skew-symmetric")

    @classmethod
    def from_matrix(cls, matrix, name: str = "", labels=None, weights=None) -> "Quiver":
        return cls(_freeze(matrix), name, tuple(labels) if labels else None,
                   tuple(weights) if weights else None)

    @classmethod
    def from_arrows(cls, vertices: Sequence[str], arrows: Iterable[Sequence[str]],
                    name: str = "", weights: Optional[Mapping[str, int]] = None) -> "Quiver":
        """矢印リスト（重複は多重辺）から交換行列を構成"""
        index = {v: i for i, v in enumerate(vertices)}
        m = np.zeros((len(vertices), len(vertices)), dtype=int)
        for source, target in arrows:
            if source not in index or target not in index:
                raise UnknownLabel(f"arrow {source}->{target} uses an undeclared vertex")
            m[index[source], index[target]] += 1
            m[index[target], index[source]] -= 1
        w = tuple(weights[v] for v in vertices) if weights else None
        return cls.from_matrix(m, name, vertices, w)

    @property
    def n(self) -> int:
        return len(self.eps)

    def matrix(self) -> np.ndarray:
        return np.array(self.eps, dtype=int)

    def entry(self, i: int, j: int) -> int:
        """1始まりの添字で eps_ij"""
        return self.eps[i - 1][j - 1]

    def check_vertex(self, j: int) -> None:
        if not 1 <= j <= self.n:
            raise IndexOutOfRange(f"vertex {j} is outside 1..{self.n}")

    def row_sums(self) -> Tuple[int, ...]:
        return tuple(int(s) for s in self.matrix().sum(axis=1))

    def arrows(self) -> List[Tuple[int, int, int]]:
        """(始点, 終点, 本数)、1始まり"""
        return [(i + 1, j + 1, v) for i, row in enumerate(self.eps) for j, v in enumerate(row) if v > 0]

    def to_dict(self) -> Dict:
        payload = {"name": self.name, "exchange": [list(row) for row in self.eps]}
        if self.labels:
            payload["labels"] = list(self.labels)
        if self.weights:
            payload["weights"] = list(self.weights)
        return payload


@dataclass(frozen=True)
class ExtQuiver:
    """
    フローズン頂点付き交換行列 B（N×n、上 n 行は歪対称）。

    lam は量子化用の Λ（N×N）、frozen_values はフローズン τ の初期値（式テキスト）。
    """
    exchange: Matrix
    n: int
    name: str = field(default="", compare=False)
    frozen_values: Tuple[str, ...] = field(default=(), compare=False)
    lam: Optional[Matrix] = field(default=None, compare=False)
    compatibility: Optional[int] = field(default=None, compare=False)
    specialization: Tuple[Tuple[str, str], ...] = field(default=(), compare=False)

    def __post_init__(self):
        m = np.asarray(self.exchange, dtype=int)
        if m.ndim != 2 or m.shape[1] != self.n or m.shape[0] < self.n:
            raise StructuralMismatch(f"extended matrix of {self.name or 'quiver'} has shape {m.shape}")
        Quiver(_freeze(m[: self.n]), self.name)

    @property
    def size(self) -> int:
        return len(self.exchange)

    @property
    def frozen_count(self) -> int:
        return self.size - self.n

    def matrix(self) -> np.ndarray:
        return np.array(self.exchange, dtype=int)

    def principal(self) -> Quiver:
        return Quiver(self.exchange[: self.n], self.name)

    def frozen_rows(self) -> np.ndarray:
        return self.matrix()[self.n:]

    def with_frozen_rows(self, rows) -> "ExtQuiver":
        m = np.vstack([self.matrix()[: self.n], np.asarray(rows, dtype=int).reshape(-1, self.n)])
        return ExtQuiver(_freeze(m), self.n, self.name, self.frozen_values, self.lam,
                         self.compatibility, self.specialization)

    def with_matrix(self, m: np.ndarray) -> "ExtQuiver":
        return ExtQuiver(_freeze(m), self.n, self.name, self.frozen_values, self.lam,
                         self.compatibility, self.specialization)


# ---------------------------------------------------------------------------
# 変異・置換・反転
# ---------------------------------------------------------------------------

def mutate_matrix(matrix: np.ndarray, k: int) -> np.ndarray:
    """
    交換行列（長方形可）の頂点 k（0始まり、k < 列数）での Fomin-Zelevinsky 変異。
    """
    B = np.array(matrix, dtype=int)
    rows, cols = B.shape
    if not 0 <= k < cols:
        raise IndexOutOfRange(f"mutation index {k + 1} out of bounds for {cols} mutable vertices")
    Bp = B.copy()
    for i in range(rows):
        for j in range(cols):
            if i == k or j == k:
                Bp[i, j] = -B[i, j]
            elif B[i, k] * B[k, j] > 0:
                sign = 1 if B[i, k] > 0 else -1
                Bp[i, j] = int(B[i, j] + sign * B[i, k] * B[k, j])
    return Bp


def mutate_quiver(q: Quiver, j: int) -> Quiver:
    """頂点 j（1始まり）での変異"""
    q.check_vertex(j)
    return Quiver(_freeze(mutate_matrix(q.matrix(), j - 1)), q.name, q.labels, q.weights)


def permutation_tuple(perm: "Perm", n: int) -> Tuple[int, ...]:
    """perm を長さ n の像の列（1始まり）に展開"""
    images = list(range(1, n + 1))
    for source, target in perm.mapping:
        if source > n or target > n:
            raise IndexOutOfRange(f"permutation moves {source}->{target} beyond {n} vertices")
        images[source - 1] = target
    return tuple(images)


def permute_rows_columns(m: np.ndarray, images: Sequence[int]) -> np.ndarray:
    """上 n 行の正方部分は行と列、フローズン行は列のみ置換"""
    out = np.zeros_like(m)
    n = len(images)
    target = [s - 1 for s in images]
    out[:n][np.ix_(target, target)] = m[:n][:, :n]
    out[n:][:, target] = m[n:][:, :n]
    return out


def permute_quiver(q: Quiver, perm: "Perm") -> Quiver:
    """新しい eps[σi][σj] = 旧 eps[i][j]"""
    images = permutation_tuple(perm, q.n)
    m = permute_rows_columns(q.matrix(), images)
    labels = weights = None
    if q.labels:
        moved = [""] * q.n
        for i, s in enumerate(images):
            moved[s - 1] = q.labels[i]
        labels = tuple(moved)
    if q.weights:
        moved_w = [0] * q.n
        for i, s in enumerate(images):
            moved_w[s - 1] = q.weights[i]
        weights = tuple(moved_w)
    return Quiver(_freeze(m), q.name, labels, weights)


def invert_quiver(q: Quiver) -> Quiver:
    """ς: eps -> -eps"""
    return Quiver(_freeze(-q.matrix()), q.name, q.labels, q.weights)


# ---------------------------------------------------------------------------
# 群語
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mut:
    """変異 μ_j"""
    vertex: int

    def inverse(self) -> "Mut":
        return self

    def __str__(self) -> str:
        return f"mu{self.vertex}"


@dataclass(frozen=True)
class Perm:
    """置換（動く点のみ (i, σ(i)) で保持）"""
    mapping: Tuple[Tuple[int, int], ...] = ()

    @classmethod
    def from_images(cls, images: Mapping[int, int]) -> "Perm":
        pairs = tuple(sorted((i, s) for i, s in images.items() if i != s))
        if sorted(i for i, _ in pairs) != sorted(s for _, s in pairs):
            raise VerificationError(f"not a permutation: {dict(images)}")
        return cls(pairs)

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence[int]]) -> "Perm":
        """巡回置換の積（右の巡回を先に適用）"""
        result = cls()
        for cycle in cycles:
            if len(set(cycle)) != len(cycle):
                raise VerificationError(f"cycle {tuple(cycle)} repeats a point")
            images = {a: b for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]])}
            result = result.compose(cls.from_images(images))
        return result

    def image(self, i: int) -> int:
        return dict(self.mapping).get(i, i)

    def preimage(self, i: int) -> int:
        for source, target in self.mapping:
            if target == i:
                return source
        return i

    def compose(self, other: "Perm") -> "Perm":
        """self∘other（other を先に適用）"""
        points = {i for pair in self.mapping + other.mapping for i in pair}
        return Perm.from_images({i: self.image(other.image(i)) for i in points})

    def inverse(self) -> "Perm":
        return Perm.from_images({s: i for i, s in self.mapping})

    def is_identity(self) -> bool:
        return not self.mapping

    def cycles(self) -> List[Tuple[int, ...]]:
        seen, out = set(), []
        for start, _ in self.mapping:
            if start in seen:
                continue
            cycle, i = [], start
            while i not in seen:
                seen.add(i)
                cycle.append(i)
                i = self.image(i)
            out.append(tuple(cycle))
        return out

    def __str__(self) -> str:
        return "".join("(" + ",".join(map(str, c)) + ")" for c in self.cycles()) or "()"


@dataclass(frozen=True)
class Inv:
    """ς: y -> 1/y, eps -> -eps"""

    def inverse(self) -> "Inv":
        return self

    def __str__(self) -> str:
        return "inv"


Atom = Union[Mut, Perm, Inv]


@dataclass(frozen=True)
class GroupWord:
    """原子の合成（合成順：末尾の原子を最初に適用）"""
    atoms: Tuple[Atom, ...] = ()

    @classmethod
    def identity(cls) -> "GroupWord":
        return cls()

    def application_order(self) -> Tuple[Atom, ...]:
        return tuple(reversed(self.atoms))

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return compose(self, other)

    def __pow__(self, k: int) -> "GroupWord":
        return power(self, k)

    def __len__(self) -> int:
        return len(self.atoms)

    def __str__(self) -> str:
        return "∘".join(str(a) for a in self.atoms) if self.atoms else "e"


def compose(a: GroupWord, b: GroupWord) -> GroupWord:
    """a∘b（b を先に適用）"""
    return GroupWord(a.atoms + b.atoms)


def power(w: GroupWord, k: int) -> GroupWord:
    if k < 0:
        return power(invert_word(w), -k)
    return GroupWord(w.atoms * k)


def normalize_word(w: GroupWord) -> GroupWord:
    """
    置換を左（最後に適用）へ寄せてまとめ、ς の対と隣接する同一変異を消去する。
    μ_j∘σ = σ∘μ_{σ^{-1}(j)}、ς は全原子と可換。
    """
    perm = Perm()
    inversions = 0
    muts: List[int] = []
    # 右（先に適用）から読み、置換はすべて左へ通す
    for atom in reversed(w.atoms):
        if isinstance(atom, Inv):
            inversions += 1
        elif isinstance(atom, Perm):
            perm = atom.compose(perm)
        else:
            vertex = perm.preimage(atom.vertex)
            if muts and muts[-1] == vertex:
                muts.pop()
            else:
                muts.append(vertex)
    atoms: List[Atom] = []
    if not perm.is_identity():
        atoms.append(perm)
    if inversions % 2:
        atoms.append(Inv())
    atoms.extend(Mut(v) for v in reversed(muts))
    return GroupWord(tuple(atoms))


def invert_word(w: GroupWord) -> GroupWord:
    """逆元（置換を先頭に寄せた正規形）"""
    return normalize_word(GroupWord(tuple(a.inverse() for a in reversed(w.atoms))))


# ---------------------------------------------------------------------------
# クイバーへの作用と同型
# ---------------------------------------------------------------------------

def apply_atom_to_quiver(q: Quiver, atom: Atom) -> Quiver:
    if isinstance(atom, Mut):
        return mutate_quiver(q, atom.vertex)
    if isinstance(atom, Perm):
        return permute_quiver(q, atom)
    return invert_quiver(q)


def apply_word_to_quiver(q: Quiver, w: GroupWord) -> Quiver:
    for atom in w.application_order():
        q = apply_atom_to_quiver(q, atom)
    return q


def stabilizes(q: Quiver, w: GroupWord) -> bool:
    return apply_word_to_quiver(q, w).eps == q.eps


def _signature(row: Sequence[int], column: Sequence[int]) -> Tuple:
    return tuple(sorted(zip(row, column)))


def quiver_isomorphic(a: Quiver, b: Quiver) -> Optional[Tuple[int, ...]]:
    """
    頂点の全単射 f で eps_a[i][j] = eps_b[f(i)][f(j)] となるものを探す。
    見つかれば f の像（1始まり）、なければ None。行の多重集合で枝刈りする。
    """
    if a.n != b.n:
        return None
    if a.n > ISOMORPHISM_MAX_VERTICES:
        raise TooLarge(f"isomorphism search is limited to {ISOMORPHISM_MAX_VERTICES} vertices")
    ea, eb = a.matrix(), b.matrix()
    sig_a = [tuple(sorted(ea[i])) for i in range(a.n)]
    sig_b = [tuple(sorted(eb[i])) for i in range(b.n)]
    if sorted(sig_a) != sorted(sig_b):
        return None
    candidates = [[j for j in range(b.n) if sig_b[j] == sig_a[i]] for i in range(a.n)]
    order = sorted(range(a.n), key=lambda i: len(candidates[i]))
    assignment: Dict[int, int] = {}
    used = set()

    def extend(depth: int) -> bool:
        if depth == len(order):
            return True
        i = order[depth]
        for j in candidates[i]:
            if j in used:
                continue
            if all(ea[i, k] == eb[j, fk] and ea[k, i] == eb[fk, j] for k, fk in assignment.items()):
                assignment[i] = j
                used.add(j)
                if extend(depth + 1):
                    return True
                del assignment[i]
                used.discard(j)
        return False

    if not extend(0):
        return None
    return tuple(assignment[i] + 1 for i in range(a.n))


# ---------------------------------------------------------------------------
# カタログ
# ---------------------------------------------------------------------------

QUIVER_CATALOG_PATH = DATA_DIR / "quivers.json"
_catalog: Optional[Dict[str, Dict]] = None


def _load_catalog() -> Dict[str, Dict]:
    global _catalog
    if _catalog is None:
        with open(QUIVER_CATALOG_PATH, "r", encoding="utf-8") as f:
            _catalog = json.load(f)
        logger.debug(f"Loaded {len(_catalog)} quiver entries from {QUIVER_CATALOG_PATH}")
    return _catalog


def catalog_labels(extended: bool = False) -> List[str]:
    return [label for label, entry in _load_catalog().items() if ("frozen" in entry) == extended]


def _entry(label: str) -> Dict:
    catalog = _load_catalog()
    if label not in catalog:
        raise UnknownLabel(f"unknown quiver label {label!r}; known: {', '.join(catalog)}")
    return catalog[label]


def get_quiver(label: str) -> Quiver:
    """カタログからクイバーを取得（A0/A1 は矢印リストから構成）"""
    entry = _entry(label)
    if "frozen" in entry:
        return get_ext_quiver(label).principal()
    if "arrows" in entry:
        return Quiver.from_arrows(entry["vertices"], entry["arrows"], label, entry.get("weights"))
    return Quiver.from_matrix(entry["exchange"], label)


def get_ext_quiver(label: str) -> ExtQuiver:
    entry = _entry(label)
    if "frozen" not in entry:
        raise UnknownLabel(f"quiver {label!r} has no frozen vertices")
    base = get_quiver(entry["base"])
    full = np.vstack([base.matrix(), np.array(entry["frozen"], dtype=int)])
    lam = _freeze(entry["lambda"]) if "lambda" in entry else None
    return ExtQuiver(_freeze(full), base.n, label, tuple(entry["frozen_values"]), lam,
                     entry.get("compatibility"), tuple(sorted(entry.get("specialization", {}).items())))


def casimir_weights_ok(q: Quiver, weights: Optional[Sequence[int]] = None) -> bool:
    """eps・w = 0（w 省略時は全 1、すなわち行和 0）"""
    w = np.array(weights if weights is not None else (q.weights or [1] * q.n), dtype=int)
    return not np.any(q.matrix() @ w)


def compatibility_ok(ext: ExtQuiver) -> bool:
    """B^T Λ = c [I | 0]（c は登録値）"""
    if ext.lam is None or ext.compatibility is None:
        return False
    product = ext.matrix().T @ np.array(ext.lam, dtype=int)
    expected = np.hstack([ext.compatibility * np.eye(ext.n, dtype=int),
                          np.zeros((ext.n, ext.frozen_count), dtype=int)])
    return np.array_equal(product, expected)
