"""
レポート保存・検証結果表・説明のテスト
"""
import json

import pandas as pd
import pytest

from app.models.verification import (
    BatchStatus,
    CheckItem,
    CheckResult,
    CheckStatus,
    UnknownCheck,
    UnknownLabel,
    VerificationBatch,
)
from app.services.explain import explain, list_checks, resolve
from app.services.report_storage import ReportStorageManager, write_report
from app.services.verification_engine import CHECKS
from app.utils.check_matrix import create_check_matrix, create_summary, export_to_csv


def _batch(name="sample"):
    items = [CheckItem("quiver", "casimir", "A7p"), CheckItem("polygons", "4a4c")]
    batch = VerificationBatch.create(items, seed=4, name=name)
    batch.results = [
        CheckResult("polygons.4a4c", CheckStatus.PASS, residual="0", execution_time=0.5),
        CheckResult("quiver.casimir.A0", CheckStatus.FAIL, error_message="weights"),
        CheckResult("quiver.casimir.A7p", CheckStatus.PASS),
        CheckResult("quiver.compatibility.A7p-ext6", CheckStatus.SKIPPED),
    ]
    batch.status = BatchStatus.COMPLETED
    return batch


def test_save_list_load_delete(tmp_path):
    storage = ReportStorageManager(tmp_path)
    batch = _batch()
    assert storage.save(batch) == batch.id
    listed = storage.list_reports()
    assert [entry["id"] for entry in listed] == [batch.id]
    assert listed[0]["all_passed"] is False
    report = storage.load(batch.id)
    assert report["seed"] == 4
    assert report["results"][0]["timing"] == 0.5

    # 索引は再読込でも残る
    assert ReportStorageManager(tmp_path).list_reports()[0]["name"] == "sample"
    assert storage.delete(batch.id)
    assert not storage.delete(batch.id)
    with pytest.raises(UnknownLabel):
        storage.load(batch.id)


def test_saving_twice_keeps_one_entry(tmp_path):
    storage = ReportStorageManager(tmp_path)
    batch = _batch()
    storage.save(batch)
    storage.save(batch)
    assert len(storage.list_reports()) == 1


def test_write_report_without_timing(tmp_path):
    path = write_report(_batch(), tmp_path / "out" / "report.json")
    with open(path, encoding="utf-8") as f:
        report = json.load(f)
    assert [r["status"] for r in report["results"]] == ["pass", "fail", "pass", "skipped"]
    assert all("timing" not in r for r in report["results"])


def test_check_matrix(tmp_path):
    frame = create_check_matrix(_batch().results)
    assert frame.loc["quiver.casimir", "A7p"] == "○"
    assert frame.loc["quiver.casimir", "A0"] == "×"
    assert frame.loc["quiver.compatibility", "A7p-ext6"] == "－"
    assert frame.loc["polygons.4a4c", "-"] == "○"
    path = export_to_csv(frame, tmp_path / "matrix.csv")
    assert pd.read_csv(path, encoding="utf-8-sig", index_col=0).shape == frame.shape
    assert create_check_matrix([]).empty


def test_summary_counts():
    summary = create_summary(_batch().results)
    assert summary["total"] == 4
    assert summary["by_module"]["quiver"]["×"] == 1


def test_explain_aliases():
    assert explain("bilintau").startswith("acluster.bilinear:")
    assert "quantum q-Painleve" in explain("prop-quantP")
    assert resolve("nekrasov.verify.FT1T4-plus[p0]") == "nekrasov.verify"
    with pytest.raises(UnknownCheck):
        explain("bogus")


def test_every_registered_check_is_explained():
    explained = set(list_checks())
    assert {f"{module}.{check}" for module, check in CHECKS} <= explained
