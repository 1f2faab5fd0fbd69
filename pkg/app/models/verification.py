"""
検証データモデル
Verification Data Models

検証項目・検証結果・バッチ・スイート設定、および検証エラーの定義
"""
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.config.settings import MIN_NUMERIC_DIGITS, PRECISION_DIGITS, RANDOM_SEED

NUMERIC_MODULES = {"nekrasov"}


# ---------------------------------------------------------------------------
# エラー定義
# ---------------------------------------------------------------------------

class VerificationError(ValueError):
    """検証エンジンの基底エラー"""


class DivisionByZero(VerificationError, ZeroDivisionError):
    pass


class NonMonomialFractionalPower(VerificationError):
    """多項式（非単項式）の分数冪"""


class FractionalPowerOfNonMonomial(VerificationError):
    """分数冪を持つ生成元への非単項式の代入"""


class NonEvaluableRoot(VerificationError):
    """有理数の範囲で根が取れない"""


class DenominatorVanishes(VerificationError):
    pass


class IndexOutOfRange(VerificationError, IndexError):
    pass


class TooLarge(VerificationError):
    pass


class UnknownLabel(VerificationError, KeyError):
    def __str__(self) -> str:
        return ValueError.__str__(self)


class FrozenVertexMutation(VerificationError):
    pass


class NonCoreDenominator(VerificationError):
    """可換コア外の分母"""


class IncompatiblePair(VerificationError):
    pass


class MismatchReport(VerificationError):
    """閉形式との不一致（不一致箇所のリストを保持）"""

    def __init__(self, message: str, mismatches: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.mismatches = mismatches or []


class StructuralMismatch(VerificationError):
    pass


class PoleAtPoint(VerificationError):
    pass


class BaseOnUnitCircle(VerificationError):
    pass


class TruncationBudgetExceeded(VerificationError):
    pass


class DegeneratePolygon(VerificationError):
    pass


class SearchBudgetExceeded(VerificationError):
    pass


class UnknownCheck(VerificationError):
    pass


class ConfigError(VerificationError):
    pass


class CheckFailure(VerificationError):
    pass


# ---------------------------------------------------------------------------
# 列挙型
# ---------------------------------------------------------------------------

class CheckStatus(Enum):
    """検証結果ステータス"""
    PASS = "pass"            # 合格
    FAIL = "fail"            # 不合格
    SKIPPED = "skipped"      # スキップ


class BatchStatus(Enum):
    """バッチ実行ステータス"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


# ---------------------------------------------------------------------------
# 検証項目・結果
# ---------------------------------------------------------------------------

@dataclass
class CheckItem:
    """検証項目"""
    module: str                                  # quiver, xcluster, ...
    check: str                                   # relations, forms, ...
    subject: Optional[str] = None                # ケース名・関係式名
    parameters: Dict[str, Any] = field(default_factory=dict)

    @property
    def id(self) -> str:
        parts = [self.module, self.check]
        if self.subject:
            parts.append(self.subject)
        tag = self.parameters.get("tag")
        # 同じ検証を別の点で走らせるときの区別
        return ".".join(parts) + (f"[{tag}]" if tag else "")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "module": self.module,
            "check": self.check,
            "subject": self.subject,
            "parameters": self.parameters,
        }


@dataclass
class CheckResult:
    """検証結果"""
    check_id: str
    status: CheckStatus
    details: str = ""
    residual: Optional[str] = None               # 残差（正準テキスト）
    data: Dict[str, Any] = field(default_factory=dict)
    execution_time: float = 0.0
    error_message: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASS

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        payload = {
            "check": self.check_id,
            "status": self.status.value,
            "details": self.details,
            "residual": self.residual,
            "data": self.data,
            "error_message": self.error_message,
        }
        # 実行時間は再実行で変わるため明示指定時のみ
        if include_timing:
            payload["timing"] = round(self.execution_time, 6)
        return payload


@dataclass
class VerificationBatch:
    """検証バッチ"""
    id: str
    name: str
    items: List[CheckItem]
    seed: int
    results: List[CheckResult] = field(default_factory=list)
    status: BatchStatus = BatchStatus.PENDING
    created_at: datetime = field(default_factory=datetime.now)
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None

    @classmethod
    def create(cls, items: List[CheckItem], seed: int, name: Optional[str] = None) -> "VerificationBatch":
        if not name:
            name = f"verification_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        return cls(id=str(uuid.uuid4()), name=name, items=items, seed=seed)

    @property
    def all_passed(self) -> bool:
        return bool(self.results) and all(r.status != CheckStatus.FAIL for r in self.results)

    def to_report(self, include_timing: bool = False) -> Dict[str, Any]:
        """レポート辞書（既定では時刻情報を含まない）"""
        return {
            "name": self.name,
            "seed": self.seed,
            "status": self.status.value,
            "results": [r.to_dict(include_timing) for r in self.results],
        }


# ---------------------------------------------------------------------------
# スイート設定
# ---------------------------------------------------------------------------

class SuiteEntry(BaseModel):
    """スイート内の1検証項目"""
    module: str
    check: str
    subject: Optional[str] = None
    parameters: Dict[str, Any] = Field(default_factory=dict)

    def to_item(self) -> CheckItem:
        return CheckItem(self.module, self.check, self.subject, dict(self.parameters))


class SuiteConfig(BaseModel):
    """検証スイート設定（JSON）"""
    suites: List[SuiteEntry]
    output: Optional[str] = None
    digits: int = PRECISION_DIGITS
    seed: int = RANDOM_SEED

    @field_validator("suites")
    @classmethod
    def _non_empty(cls, value: List[SuiteEntry]) -> List[SuiteEntry]:
        if not value:
            raise ValueError("suite list is empty")
        return value

    @model_validator(mode="after")
    def _numeric_precision(self) -> "SuiteConfig":
        numeric = any(entry.module in NUMERIC_MODULES for entry in self.suites)
        if numeric and self.digits < MIN_NUMERIC_DIGITS:
            raise ValueError(f"numeric suites need at least {MIN_NUMERIC_DIGITS} digits, got {self.digits}")
        return self
