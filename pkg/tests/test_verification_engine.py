"""
検証実行エンジンのテスト
"""
import pytest

from app.models.verification import (
    BatchStatus,
    CheckItem,
    CheckStatus,
    ConfigError,
    StructuralMismatch,
    SuiteConfig,
    VerificationBatch,
)
from app.services import verification_engine
from app.services.verification_engine import CHECKS, VerificationEngine, suite_items


@pytest.fixture
def fake_checks(monkeypatch):
    def passing(item, seed, digits):
        return {"holds": True, "residual": "0", "seed": seed}

    def failing(item, seed, digits):
        return {"holds": False, "residual": "y1 - 1"}

    def raising(item, seed, digits):
        raise StructuralMismatch("shapes differ")

    def skipped(item, seed, digits):
        return None

    for name, fn in (("pass", passing), ("fail", failing), ("raise", raising), ("skip", skipped)):
        monkeypatch.setitem(CHECKS, ("fake", name), fn)


def test_suite_items():
    ids = [item.id for item in suite_items("polygons")]
    assert ids == ["polygons.catalog", "polygons.classify", "polygons.4a4c"]
    quantum = [item.id for item in suite_items("quantum")]
    assert "qtorus.reduce.T1T4" in quantum
    with pytest.raises(ConfigError):
        suite_items("bogus")


def test_numeric_suite_ids_are_unique():
    ids = [item.id for item in suite_items("numeric")]
    assert len(ids) == len(set(ids))
    assert "nekrasov.verify.FT1T3[negative-control]" in ids
    assert "nekrasov.verify.FT1T4-minus[p1]" in ids


def test_every_suite_item_is_registered():
    for item in suite_items("all"):
        assert (item.module, item.check) in CHECKS


def test_validate_rejects_unknown_names():
    engine = VerificationEngine()
    engine.validate([CheckItem("xcluster", "relations", "A7p")])
    with pytest.raises(ConfigError):
        engine.validate([CheckItem("xcluster", "relations", "A9")])
    with pytest.raises(ConfigError):
        engine.validate([CheckItem("qtorus", "reduce", "T2T2")])
    with pytest.raises(ConfigError):
        engine.validate([CheckItem("nekrasov", "verify", "FT2T3")])
    with pytest.raises(ConfigError):
        engine.validate([CheckItem("xcluster", "wishes", "A7p")])


def test_execute_check_statuses(fake_checks):
    engine = VerificationEngine()
    assert engine.execute_check(CheckItem("fake", "pass"), 5).status == CheckStatus.PASS
    failed = engine.execute_check(CheckItem("fake", "fail"), 5)
    assert failed.status == CheckStatus.FAIL
    assert failed.residual == "y1 - 1"
    assert engine.execute_check(CheckItem("fake", "skip"), 5).status == CheckStatus.SKIPPED


def test_exception_becomes_failed_result(fake_checks):
    result = VerificationEngine().execute_check(CheckItem("fake", "raise", "x"), 5)
    assert result.status == CheckStatus.FAIL
    assert result.error_message == "shapes differ"
    assert result.check_id == "fake.raise.x"


def test_execute_batch_sorts_and_reports_progress(fake_checks):
    items = [CheckItem("fake", "pass", label) for label in ("c", "a", "b")] + [CheckItem("fake", "skip")]
    seen = []
    batch = VerificationEngine(max_workers=3).execute_batch(
        VerificationBatch.create(items, seed=9), lambda progress, result: seen.append(progress))
    assert [r.check_id for r in batch.results] == ["fake.pass.a", "fake.pass.b", "fake.pass.c", "fake.skip"]
    assert seen[-1] == 1.0 and len(seen) == 4
    assert batch.status == BatchStatus.COMPLETED
    assert batch.all_passed
    assert batch.results[0].data["seed"] == 9


def test_batch_with_failure(fake_checks):
    engine = VerificationEngine()
    batch = engine.execute_batch(VerificationBatch.create([CheckItem("fake", "pass"), CheckItem("fake", "fail")], 1))
    assert not batch.all_passed
    summary = engine.get_batch_summary(batch)
    assert (summary["pass"], summary["fail"], summary["skipped"]) == (1, 1, 0)


def test_reports_are_deterministic(fake_checks):
    engine = VerificationEngine()
    items = [CheckItem("fake", "pass", "a"), CheckItem("fake", "fail", "b")]
    first = engine.execute_batch(VerificationBatch.create(list(items), 3, name="run")).to_report()
    second = engine.execute_batch(VerificationBatch.create(list(items), 3, name="run")).to_report()
    assert first == second
    assert "timing" not in first["results"][0]


def test_run_config_on_real_checks():
    config = SuiteConfig(suites=[
        {"module": "quiver", "check": "casimir", "subject": "A7p"},
        {"module": "polygons", "check": "4a4c"},
        {"module": "polygons", "check": "classify", "parameters": {"trials": 2}},
    ])
    batch = VerificationEngine().run_config(config)
    assert [r.status for r in batch.results] == [CheckStatus.PASS] * 3


def test_relation_method_comes_from_parameters():
    config = SuiteConfig(suites=[
        {"module": "xcluster", "check": "relations", "subject": "A7p"},
        {"module": "xcluster", "check": "relations", "subject": "A8",
         "parameters": {"method": "numeric"}},
    ])
    by_id = {r.check_id: r for r in VerificationEngine().run_config(config).results}
    assert {row["method"] for row in by_id["xcluster.relations.A7p"].data["rows"]} == {"symbolic"}
    assert {row["method"] for row in by_id["xcluster.relations.A8"].data["rows"]} == {"numeric"}
    assert all(r.status == CheckStatus.PASS for r in by_id.values())


def test_run_config_unknown_case():
    config = SuiteConfig(suites=[{"module": "xcluster", "check": "relations", "subject": "A11"}])
    with pytest.raises(ConfigError):
        VerificationEngine().run_config(config)


def test_engine_factory():
    engine = verification_engine.get_verification_engine(digits=80)
    assert engine.digits == 80
