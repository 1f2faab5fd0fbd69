"""
検証実行エンジン
Verification Execution Engine

検証項目（モジュール・検証種別・対象）を登録済みの検証関数に振り分けて並列実行し、
結果をチェック ID 順に並べたバッチとして返す
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from datetime import datetime
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from app.config.settings import MAX_CONCURRENT_CHECKS, NEKRASOV_POINTS, NEKRASOV_SUITE_ORDER, PRECISION_DIGITS, RANDOM_SEED
from app.models.verification import (
    BatchStatus,
    CheckItem,
    CheckResult,
    CheckStatus,
    ConfigError,
    SuiteConfig,
    UnknownCheck,
    VerificationBatch,
    VerificationError,
)
from app.services import acluster, nekrasov, polygons, qtorus, qtorus_reduction, quiver, xcluster
from app.services.painleve_cases import case_labels, get_case

logger = logging.getLogger(__name__)

Payload = Optional[Dict[str, Any]]
CheckFn = Callable[[CheckItem, int, int], Payload]


def _rows(rows: List[Dict[str, Any]], **extra) -> Payload:
    """行ごとの holds をまとめる（行がなければスキップ）"""
    if not rows:
        return None
    return {"rows": rows, "holds": all(r["holds"] for r in rows), **extra}


# ---------------------------------------------------------------------------
# 検証関数
# ---------------------------------------------------------------------------

def _quiver_casimir(item: CheckItem, seed: int, digits: int) -> Payload:
    q = quiver.get_quiver(item.subject)
    return {"quiver": q.name, "weights": list(q.weights or [1] * q.n), "holds": quiver.casimir_weights_ok(q)}


def _quiver_compatibility(item: CheckItem, seed: int, digits: int) -> Payload:
    ext = quiver.get_ext_quiver(item.subject)
    if ext.lam is None:
        return None
    return {"quiver": ext.name, "compatibility": ext.compatibility, "holds": quiver.compatibility_ok(ext)}


def _case_check(fn: Callable[..., Any], needs: str = "", seeded: bool = False,
                forward: Tuple[str, ...] = ()) -> CheckFn:
    def run(item: CheckItem, seed: int, digits: int) -> Payload:
        case = get_case(item.subject)
        if needs and not getattr(case, needs):
            return None
        options = {key: item.parameters[key] for key in forward if key in item.parameters}
        outcome = fn(case, seed=seed, **options) if seeded else fn(case, **options)
        if isinstance(outcome, list):
            return _rows(outcome, case=case.label)
        if "holds" not in outcome:
            # 閉形式は不一致を例外で返す
            outcome = {**outcome, "holds": True}
        return outcome
    return run


def _tau_bilinear(item: CheckItem, seed: int, digits: int) -> Payload:
    result = acluster.verify_bilinear()
    return {**result, "residual": "; ".join(result["bilinear"] + [result["scalar_equation"]])}


def _tau_intertwining(item: CheckItem, seed: int, digits: int) -> Payload:
    return _rows(acluster.verify_intertwining())


def _tau_laurent(item: CheckItem, seed: int, digits: int) -> Payload:
    steps = int(item.parameters.get("steps", 3))
    return acluster.laurent_check(acluster.tau_orbit(steps=steps))


def _qt_toda(item: CheckItem, seed: int, digits: int) -> Payload:
    return qtorus.quantum_toda_check().to_dict()


def _qt_reduce(item: CheckItem, seed: int, digits: int) -> Payload:
    # 形の不一致は StructuralMismatch で失敗になる。係数の食い違いは記録のみ
    return {**qtorus_reduction.quantum_tau_reduce(item.subject).to_dict(), "holds": True}


def _nek_verify(item: CheckItem, seed: int, digits: int) -> Payload:
    params = item.parameters
    report = nekrasov.verify_conjecture(
        item.subject,
        u=Fraction(str(params.get("u", "3"))),
        q1=Fraction(str(params.get("q1", "2/5"))),
        q2=Fraction(str(params.get("q2", "3/7"))),
        max_order=Fraction(str(params.get("order", NEKRASOV_SUITE_ORDER))),
        digits=digits,
        factor_mode=params.get("factor", "derived"),
        corrupt_sign=bool(params.get("corrupt_sign", False)),
    )
    payload = report.to_dict()
    if payload["rows"]:
        payload["residual"] = max(payload["rows"], key=lambda r: float(r["residual"]))["residual"]
    if params.get("corrupt_sign"):
        # 陰性対照は失敗すれば合格
        payload["control"] = True
        payload["holds"] = not report.holds
    return payload


def _nek_symmetry(item: CheckItem, seed: int, digits: int) -> Payload:
    params = item.parameters
    u, q1, q2 = (Fraction(str(params.get(k, d))) for k, d in (("u", "3"), ("q1", "2/5"), ("q2", "3/7")))
    order = int(params.get("order", 3))
    forward = nekrasov.inst_series(u, q1, q2, order)
    backward = nekrasov.inst_series(1 / u, q1, q2, order)
    return {**forward.to_dict(), "holds": forward.coeffs == backward.coeffs}


def _nek_classical(item: CheckItem, seed: int, digits: int) -> Payload:
    params = item.parameters
    return nekrasov.classical_tau_check(
        Fraction(str(params.get("u", "3/2"))), Fraction(str(params.get("s", "1/2"))),
        Fraction(str(params.get("q", "1/3"))), M=int(params.get("M", 3)), N=int(params.get("N", 4)),
        digits=digits,
    )


def _poly_classify(item: CheckItem, seed: int, digits: int) -> Payload:
    return polygons.classification_trials(int(item.parameters.get("trials", 100)), seed)


CHECKS: Dict[Tuple[str, str], CheckFn] = {
    ("quiver", "casimir"): _quiver_casimir,
    ("quiver", "compatibility"): _quiver_compatibility,
    ("xcluster", "relations"): _case_check(xcluster.verify_relations, seeded=True, forward=("method",)),
    ("xcluster", "coxeter"): _case_check(xcluster.verify_coxeter, "coxeter", seeded=True, forward=("method",)),
    ("xcluster", "closed_forms"): _case_check(xcluster.verify_closed_forms, "closed_forms"),
    ("xcluster", "coordinate_images"): _case_check(xcluster.verify_coordinate_images, "coordinate_images"),
    ("xcluster", "identities"): _case_check(xcluster.verify_identities, "identities"),
    ("xcluster", "brackets"): _case_check(xcluster.verify_brackets, "brackets"),
    ("xcluster", "hamiltonians"): _case_check(xcluster.verify_hamiltonians, "hamiltonians"),
    ("xcluster", "scalar"): _case_check(xcluster.verify_scalar_equation, "scalar_equation", seeded=True),
    ("acluster", "bilinear"): _tau_bilinear,
    ("acluster", "intertwining"): _tau_intertwining,
    ("acluster", "laurent"): _tau_laurent,
    ("qtorus", "flow"): lambda item, seed, digits: qtorus.verify_quantum_flow(),
    ("qtorus", "casimir"): lambda item, seed, digits: qtorus.casimir_flow_check(),
    ("qtorus", "toda"): _qt_toda,
    ("qtorus", "compat"): lambda item, seed, digits: qtorus.compat_check(),
    ("qtorus", "prop"): lambda item, seed, digits: qtorus.quantum_tau_flow_and_prop(),
    ("qtorus", "parameters"): lambda item, seed, digits: qtorus.parameter_flow_check(),
    ("qtorus", "reduce"): _qt_reduce,
    ("qtorus", "collapse"): lambda item, seed, digits: qtorus_reduction.collapse_check(),
    ("nekrasov", "verify"): _nek_verify,
    ("nekrasov", "symmetry"): _nek_symmetry,
    ("nekrasov", "classical"): _nek_classical,
    ("polygons", "catalog"): lambda item, seed, digits: polygons.catalog_check(),
    ("polygons", "classify"): _poly_classify,
    ("polygons", "4a4c"): lambda item, seed, digits: polygons.verify_4a_to_4c(),
}

# 対象（subject）の妥当性確認
SUBJECTS: Dict[str, Callable[[str], Any]] = {
    "quiver.casimir": quiver.get_quiver,
    "quiver.compatibility": quiver.get_ext_quiver,
    "xcluster": get_case,
}


def _check_subject(item: CheckItem) -> None:
    key = f"{item.module}.{item.check}"
    if item.module == "qtorus" and item.check == "reduce":
        if item.subject not in qtorus_reduction.RELATIONS:
            raise UnknownCheck(f"unknown relation {item.subject!r}")
    elif item.module == "nekrasov" and item.check == "verify":
        if item.subject not in nekrasov.CONJECTURES:
            raise UnknownCheck(f"unknown relation {item.subject!r}")
    else:
        loader = SUBJECTS.get(key) or SUBJECTS.get(item.module)
        if loader is not None:
            loader(item.subject)


# ---------------------------------------------------------------------------
# スイート
# ---------------------------------------------------------------------------

def suite_items(name: str) -> List[CheckItem]:
    """名前付きスイートの検証項目"""
    items: List[CheckItem] = []
    if name in ("classical", "all"):
        items += [CheckItem("quiver", "casimir", label) for label in quiver.catalog_labels()]
        items += [CheckItem("quiver", "compatibility", label) for label in quiver.catalog_labels(extended=True)]
        checks = ("relations", "coxeter", "closed_forms", "coordinate_images",
                  "identities", "brackets", "hamiltonians", "scalar")
        items += [CheckItem("xcluster", check, label) for label in case_labels() for check in checks]
        items += [CheckItem("acluster", check) for check in ("bilinear", "intertwining", "laurent")]
    if name in ("quantum", "all"):
        items += [CheckItem("qtorus", check)
                  for check in ("flow", "casimir", "toda", "compat", "prop", "parameters", "collapse")]
        items += [CheckItem("qtorus", "reduce", relation) for relation in qtorus_reduction.RELATIONS]
    if name in ("numeric", "all"):
        for index, (u, q1, q2) in enumerate(NEKRASOV_POINTS):
            point = {"u": u, "q1": q1, "q2": q2, "tag": f"p{index}"}
            items += [CheckItem("nekrasov", "verify", relation, dict(point)) for relation in nekrasov.CONJECTURES]
            items.append(CheckItem("nekrasov", "symmetry", None, dict(point)))
        items.append(CheckItem("nekrasov", "verify", "FT1T3", {"corrupt_sign": True, "tag": "negative-control"}))
    if name in ("polygons", "all"):
        items += [CheckItem("polygons", check) for check in ("catalog", "classify", "4a4c")]
    if not items:
        raise ConfigError(f"unknown suite {name!r}; choose from classical, quantum, numeric, polygons, all")
    return items


# ---------------------------------------------------------------------------
# エンジン
# ---------------------------------------------------------------------------

class VerificationEngine:
    """検証実行エンジン"""

    def __init__(self, max_workers: int = MAX_CONCURRENT_CHECKS, digits: int = PRECISION_DIGITS):
        self.max_workers = max_workers
        self.digits = digits

    def validate(self, items: List[CheckItem]) -> None:
        """未登録の検証・存在しない対象を ConfigError として報告"""
        problems = []
        for item in items:
            if (item.module, item.check) not in CHECKS:
                problems.append(f"{item.id}: unknown check")
                continue
            try:
                _check_subject(item)
            except VerificationError as e:
                problems.append(f"{item.id}: {e}")
        if problems:
            raise ConfigError("; ".join(problems))

    def execute_check(self, item: CheckItem, seed: int) -> CheckResult:
        """単一の検証項目を実行"""
        start_time = time.time()
        logger.info(f"Executing check: {item.id}")
        try:
            payload = CHECKS[(item.module, item.check)](item, seed, self.digits)
            execution_time = time.time() - start_time
            if payload is None:
                return CheckResult(item.id, CheckStatus.SKIPPED, "nothing registered for this subject",
                                   execution_time=execution_time)
            status = CheckStatus.PASS if payload.get("holds") else CheckStatus.FAIL
            residual = payload.get("residual")
            return CheckResult(
                check_id=item.id,
                status=status,
                details=f"{item.id}: {status.value}",
                residual=None if residual is None else str(residual),
                data=payload,
                execution_time=execution_time,
            )
        except Exception as e:
            execution_time = time.time() - start_time
            logger.error(f"Check {item.id} failed: {e}")
            return CheckResult(
                check_id=item.id,
                status=CheckStatus.FAIL,
                details=f"検証実行中にエラーが発生しました: {type(e).__name__}",
                data=getattr(e, "mismatches", None) and {"mismatches": e.mismatches} or {},
                execution_time=execution_time,
                error_message=str(e),
            )

    def execute_batch(self, batch: VerificationBatch,
                      progress_callback: Optional[Callable[[float, CheckResult], None]] = None) -> VerificationBatch:
        """バッチ検証を実行"""
        logger.info(f"Starting batch execution: {batch.name}")
        batch.status = BatchStatus.RUNNING
        batch.started_at = datetime.now()
        total = len(batch.items)
        completed = 0
        results: List[CheckResult] = []
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = {executor.submit(self.execute_check, item, batch.seed): item for item in batch.items}
            for future in as_completed(futures):
                result = future.result()
                results.append(result)
                completed += 1
                if progress_callback:
                    progress_callback(completed / total, result)
                logger.info(f"Task completed: {completed}/{total}")
        # 実行順によらず同じレポートになるよう ID 順に並べる
        batch.results = sorted(results, key=lambda r: r.check_id)
        batch.status = BatchStatus.COMPLETED
        batch.completed_at = datetime.now()
        logger.info(f"Batch execution completed: {batch.name}")
        return batch

    def run_config(self, config: SuiteConfig, name: Optional[str] = None) -> VerificationBatch:
        items = [entry.to_item() for entry in config.suites]
        self.validate(items)
        self.digits = config.digits
        return self.execute_batch(VerificationBatch.create(items, config.seed, name))

    def run_suite(self, suite: str, seed: int = RANDOM_SEED, name: Optional[str] = None) -> VerificationBatch:
        items = suite_items(suite)
        self.validate(items)
        return self.execute_batch(VerificationBatch.create(items, seed, name or f"suite_{suite}"))

    @staticmethod
    def get_batch_summary(batch: VerificationBatch) -> Dict[str, Any]:
        """バッチサマリーを取得"""
        counts = {status.value: 0 for status in CheckStatus}
        for result in batch.results:
            counts[result.status.value] += 1
        return {
            "name": batch.name,
            "total_checks": len(batch.results),
            **counts,
            "status": batch.status.value,
            "all_passed": batch.all_passed,
        }


def get_verification_engine(digits: int = PRECISION_DIGITS) -> VerificationEngine:
    """検証エンジンインスタンスを取得"""
    return VerificationEngine(digits=digits)
