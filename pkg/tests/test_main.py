"""
コマンドラインのテスト
"""
import json

import pytest

from app.main import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_explain(capsys):
    assert main(["explain", "bilintau"]) == EXIT_OK
    assert "acluster.bilinear" in capsys.readouterr().out
    assert main(["explain", "bogus"]) == EXIT_CONFIG


def test_quiver_show(capsys):
    assert main(["quiver", "show", "A7p", "--json"]) == EXIT_OK
    payload = _json_out(capsys)
    assert payload["casimir_balanced"] is True
    assert main(["quiver", "show", "A99"]) == EXIT_CONFIG


def test_poly_commands(capsys):
    assert main(["poly", "classify", "--vertices", "0,1;1,0;-1,-1", "--json"]) == EXIT_OK
    assert _json_out(capsys) == {"label": "3", "quiver": "A8"}
    assert main(["poly", "quiver", "4b", "--json"]) == EXIT_OK
    assert _json_out(capsys)["quiver"] == "A7"
    assert main(["poly", "invariants", "9", "--json"]) == EXIT_OK
    assert _json_out(capsys)["interior"] == 1
    assert main(["poly", "quiver", "10a"]) == EXIT_CONFIG
    assert main(["poly", "classify", "--vertices", "0,0;1,1;2,2"]) == EXIT_FAILED


def test_nek_series_csv(tmp_path, capsys):
    path = tmp_path / "series.csv"
    assert main(["nek", "series", "--terms", "2", "--csv", str(path), "--json"]) == EXIT_OK
    assert len(_json_out(capsys)["coefficients"]) == 3
    assert path.read_text(encoding="utf-8-sig").splitlines()[0] == "order,numerator,denominator"


def test_bad_fraction_is_config_error():
    assert main(["nek", "series", "--u", "three"]) == EXIT_CONFIG


def test_qt_unknown_relation():
    assert main(["qt", "reduce", "T9T9"]) == EXIT_CONFIG


def test_verify_config(tmp_path, capsys):
    config = tmp_path / "suite.json"
    output = tmp_path / "report.json"
    config.write_text(json.dumps({
        "suites": [{"module": "polygons", "check": "4a4c"},
                   {"module": "quiver", "check": "casimir", "subject": "A7p"}],
        "output": str(output),
        "seed": 11,
    }), encoding="utf-8")
    assert main(["verify", "--config", str(config)]) == EXIT_OK
    report = json.loads(output.read_text(encoding="utf-8"))
    assert report["seed"] == 11
    assert [r["check"] for r in report["results"]] == ["polygons.4a4c", "quiver.casimir.A7p"]
    assert "2 passed" in capsys.readouterr().out


def test_verify_config_unknown_case(tmp_path):
    config = tmp_path / "suite.json"
    config.write_text(json.dumps({"suites": [{"module": "xcluster", "check": "relations", "subject": "A12"}]}),
                      encoding="utf-8")
    assert main(["verify", "--config", str(config)]) == EXIT_CONFIG


@pytest.mark.parametrize("payload", [
    {"suites": []},
    {"suites": [{"module": "nekrasov", "check": "verify", "subject": "FT1T3"}], "digits": 30},
    "not json",
])
def test_verify_invalid_config(tmp_path, payload):
    config = tmp_path / "suite.json"
    config.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
    assert main(["verify", "--config", str(config)]) == EXIT_CONFIG


def test_verify_failing_check_exits_one(tmp_path):
    config = tmp_path / "suite.json"
    config.write_text(json.dumps({"suites": [
        {"module": "nekrasov", "check": "verify", "subject": "FT1T4-plus",
         "parameters": {"factor": "display", "order": "1/8"}},
    ], "digits": 60}), encoding="utf-8")
    assert main(["verify", "--config", str(config)]) == EXIT_FAILED


def test_bundled_quick_suite_is_valid():
    from app.config.settings import DATA_DIR
    from app.main import load_suite_config
    from app.services.verification_engine import VerificationEngine

    config = load_suite_config(str(DATA_DIR / "suites" / "quick.json"))
    assert config.digits == 60
    VerificationEngine().validate([entry.to_item() for entry in config.suites])
