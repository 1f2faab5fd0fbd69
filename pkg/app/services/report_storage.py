"""
検証レポート永続化
Verification Report Storage

実行済みバッチのレポートを JSON で保存し、索引ファイルで一覧する
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from app.config.settings import REPORTS_DIR
from app.models.verification import UnknownLabel, VerificationBatch

logger = logging.getLogger(__name__)

INDEX_FILE_NAME = "index.json"


def write_report(batch: VerificationBatch, path: Union[str, Path], include_timing: bool = False) -> Path:
    """バッチのレポートを指定パスに書き出す"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(batch.to_report(include_timing), f, ensure_ascii=False, indent=2, default=str)
    logger.info(f"Report written: {path}")
    return path


class ReportStorageManager:
    """検証レポート永続化マネージャー"""

    def __init__(self, directory: Union[str, Path] = REPORTS_DIR):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.index_file = self.directory / INDEX_FILE_NAME
        self.index = self._load_index()

    def _load_index(self) -> List[Dict[str, Any]]:
        """索引を読み込み"""
        if self.index_file.exists():
            with open(self.index_file, 'r', encoding='utf-8') as f:
                return json.load(f)
        return []

    def _save_index(self):
        with open(self.index_file, 'w', encoding='utf-8') as f:
            json.dump(self.index, f, ensure_ascii=False, indent=2, default=str)

    def _report_path(self, batch_id: str) -> Path:
        return self.directory / f"{batch_id}.json"

    def save(self, batch: VerificationBatch) -> str:
        """レポートを保存（同じ ID は上書き）"""
        write_report(batch, self._report_path(batch.id), include_timing=True)
        entry = {
            'id': batch.id,
            'name': batch.name,
            'seed': batch.seed,
            'created_at': batch.created_at.strftime('%Y/%m/%d %H:%M:%S'),
            'completed_at': batch.completed_at.strftime('%Y/%m/%d %H:%M:%S') if batch.completed_at else None,
            'status': batch.status.value,
            'check_count': len(batch.results),
            'all_passed': batch.all_passed,
        }
        self.index = [e for e in self.index if e['id'] != batch.id] + [entry]
        self._save_index()
        return batch.id

    def list_reports(self) -> List[Dict[str, Any]]:
        """保存済みレポート（新しい順）"""
        return sorted(self.index, key=lambda e: e.get('created_at', ''), reverse=True)

    def load(self, batch_id: str) -> Dict[str, Any]:
        path = self._report_path(batch_id)
        if not path.exists():
            raise UnknownLabel(f"no stored report {batch_id!r}")
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def delete(self, batch_id: str) -> bool:
        """レポートを削除。存在しなければ False"""
        path = self._report_path(batch_id)
        existed = path.exists()
        if existed:
            path.unlink()
        self.index = [e for e in self.index if e['id'] != batch_id]
        self._save_index()
        return existed


# グローバルインスタンス
_report_storage: Optional[ReportStorageManager] = None


def get_report_storage() -> ReportStorageManager:
    """レポートストレージマネージャーを取得"""
    global _report_storage
    if _report_storage is None:
        _report_storage = ReportStorageManager()
    return _report_storage
