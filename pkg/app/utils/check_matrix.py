"""
検証結果表ユーティリティ
Check Matrix Utility

バッチ結果を モジュール × 対象 の表（○ 合格 / × 不合格 / － スキップ）にまとめる
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import logging
from typing import Any, Dict, List, Union

import pandas as pd

from app.models.verification import CheckResult, CheckStatus

logger = logging.getLogger(__name__)

SYMBOLS = {
    CheckStatus.PASS: "○",
    CheckStatus.FAIL: "×",
    CheckStatus.SKIPPED: "－",
}


def convert_status_to_symbol(status: CheckStatus) -> str:
    return SYMBOLS.get(status, "－")


def _split_id(check_id: str) -> Dict[str, str]:
    """'module.check.subject[tag]' を列に分ける"""
    module, _, rest = check_id.partition(".")
    check, _, subject = rest.partition(".")
    if not subject and "[" in check:
        check, _, tag = check.partition("[")
        subject = f"[{tag}"
    return {"module": module, "check": check, "subject": subject or "-"}


def create_check_matrix(results: List[CheckResult]) -> pd.DataFrame:
    """
    行: モジュール.検証、列: 対象 の記号表

    対象を持たない検証は "-" 列に入る。
    """
    if not results:
        return pd.DataFrame()
    rows = []
    for result in results:
        parts = _split_id(result.check_id)
        rows.append({
            "check": f"{parts['module']}.{parts['check']}",
            "subject": parts["subject"],
            "symbol": convert_status_to_symbol(result.status),
        })
    frame = pd.DataFrame(rows).pivot_table(index="check", columns="subject", values="symbol",
                                           aggfunc="first", fill_value="")
    frame.columns.name = None
    logger.info(f"Check matrix created: {frame.shape}")
    return frame


def create_detailed_table(results: List[CheckResult]) -> pd.DataFrame:
    """結果ごとに 1 行（残差・実行時間・エラー）"""
    return pd.DataFrame([
        {
            **_split_id(r.check_id),
            "result": convert_status_to_symbol(r.status),
            "residual": r.residual or "-",
            "execution_time": round(r.execution_time, 3),
            "error_message": r.error_message or "-",
        }
        for r in results
    ])


def create_summary(results: List[CheckResult]) -> Dict[str, Any]:
    """モジュール別の件数"""
    if not results:
        return {}
    table = create_detailed_table(results)
    counts = table.groupby(["module", "result"]).size().unstack(fill_value=0)
    return {
        "total": len(results),
        "by_module": {module: {str(k): int(v) for k, v in row.items()} for module, row in counts.iterrows()},
    }


def export_to_csv(frame: pd.DataFrame, path: Union[str, Path], index: bool = True) -> Path:
    """表を CSV に書き出す（Excel で開けるよう BOM 付き UTF-8）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, encoding="utf-8-sig", index=index)
    logger.info(f"CSV exported: {path}")
    return path
