"""
q-Painlevé ケースデータ
q-Painlevé Case Data

app/data/cases/<label>.json に転記したケースデータ（生成元の群語、閉形式、
座標、カシミール関係、ハミルトニアン、スカラー方程式）を読み込む。
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from app.config.settings import CASES_DIR
from app.models.verification import UnknownLabel, VerificationError
from app.services.quiver import GroupWord, Quiver, get_quiver
from app.services.symkernel import RatExpr, parse
from app.utils.word_parser import parse_word

logger = logging.getLogger(__name__)


@dataclass
class HamiltonianCheck:
    """ハミルトニアン不変性の期待値"""
    word: str
    expect: str = "exact"            # exact / projective / nonzero
    constrained: bool = True         # q=1 を課すか


@dataclass
class HamiltonianSpec:
    name: str
    expr: str
    coordinates: Dict[str, str] = field(default_factory=dict)   # ケース座標の上書き
    checks: List[HamiltonianCheck] = field(default_factory=list)


@dataclass
class ScalarEquation:
    """G(qZ) を Gp、G(q^{-1}Z) を Gm と書いた残差テンプレート"""
    variable: str
    flow: str
    residual: str


@dataclass
class PainleveCase:
    """q-Painlevé ケース"""
    label: str
    quiver: Quiver
    symmetry: str
    generators: Dict[str, GroupWord]
    generator_texts: Dict[str, str]
    relations: List[Tuple[str, str]] = field(default_factory=list)
    coxeter: List[Dict[str, Any]] = field(default_factory=list)
    commuting: List[Tuple[str, str]] = field(default_factory=list)
    closed_forms: Dict[str, List[str]] = field(default_factory=dict)
    coordinates: Dict[str, str] = field(default_factory=dict)
    casimirs: List[str] = field(default_factory=list)
    coordinate_images: Dict[str, Dict[str, str]] = field(default_factory=dict)
    identities: List[Tuple[str, str]] = field(default_factory=list)
    brackets: List[Tuple[str, str, int]] = field(default_factory=list)
    hamiltonians: List[HamiltonianSpec] = field(default_factory=list)
    scalar_equation: Optional[ScalarEquation] = None

    @property
    def n(self) -> int:
        return self.quiver.n

    @property
    def y_names(self) -> List[str]:
        return [f"y{i}" for i in range(1, self.n + 1)]

    def word(self, text: Union[str, GroupWord]) -> GroupWord:
        """生成元名を含む群語を解析"""
        if isinstance(text, GroupWord):
            return text
        return parse_word(text, self.generators)

    def expand(self, text: Union[str, RatExpr], overrides: Optional[Mapping[str, str]] = None) -> RatExpr:
        """座標名を y の式に展開"""
        expr = parse(text) if isinstance(text, str) else text
        definitions = dict(self.coordinates)
        definitions.update(overrides or {})
        mapping = {name: parse(body) for name, body in definitions.items() if name in expr.generators()}
        return expr.substitute_many(mapping)

    def coordinate(self, name: str) -> RatExpr:
        if name not in self.coordinates:
            raise UnknownLabel(f"case {self.label} has no coordinate {name!r}")
        return parse(self.coordinates[name])

    def hamiltonian(self, name: Optional[str] = None) -> HamiltonianSpec:
        if not self.hamiltonians:
            raise UnknownLabel(f"case {self.label} has no Hamiltonian")
        if name is None:
            return self.hamiltonians[0]
        for spec in self.hamiltonians:
            if spec.name == name:
                return spec
        raise UnknownLabel(f"case {self.label} has no Hamiltonian {name!r}")


def _resolve_generators(label: str, texts: Mapping[str, str]) -> Dict[str, GroupWord]:
    # 後の生成元は前の生成元を参照できる
    resolved: Dict[str, GroupWord] = {}
    for name, text in texts.items():
        try:
            resolved[name] = parse_word(text, resolved)
        except VerificationError as e:
            raise VerificationError(f"case {label}: generator {name} = {text!r}: {e}") from e
    return resolved


def load_case(path: Path) -> PainleveCase:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    label = data["label"]
    texts = data.get("generators", {})
    hamiltonians = [
        HamiltonianSpec(
            name=h["name"],
            expr=h["expr"],
            coordinates=h.get("coordinates", {}),
            checks=[HamiltonianCheck(**c) for c in h.get("checks", [])],
        )
        for h in data.get("hamiltonians", [])
    ]
    scalar = data.get("scalar_equation")
    return PainleveCase(
        label=label,
        quiver=get_quiver(data["quiver"]),
        symmetry=data.get("symmetry", ""),
        generators=_resolve_generators(label, texts),
        generator_texts=dict(texts),
        relations=[tuple(r) for r in data.get("relations", [])],
        coxeter=data.get("coxeter", []),
        commuting=[tuple(c) for c in data.get("commuting", [])],
        closed_forms=data.get("closed_forms", {}),
        coordinates=data.get("coordinates", {}),
        casimirs=data.get("casimirs", []),
        coordinate_images=data.get("coordinate_images", {}),
        identities=[tuple(i) for i in data.get("identities", [])],
        brackets=[tuple(b) for b in data.get("brackets", [])],
        hamiltonians=hamiltonians,
        scalar_equation=ScalarEquation(**scalar) if scalar else None,
    )


# シングルトンキャッシュ
_cases: Dict[str, PainleveCase] = {}


def case_labels() -> List[str]:
    return sorted(p.stem for p in CASES_DIR.glob("*.json"))


def get_case(label: str) -> PainleveCase:
    """ケースを取得（初回のみファイルを読む）"""
    if label not in _cases:
        path = CASES_DIR / f"{label}.json"
        if not path.exists():
            raise UnknownLabel(f"unknown case {label!r}; known: {', '.join(case_labels())}")
        _cases[label] = load_case(path)
        logger.debug(f"Loaded case {label} with {len(_cases[label].generators)} generators")
    return _cases[label]
