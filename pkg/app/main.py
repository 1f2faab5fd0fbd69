"""
クラスター q-Painlevé 検証エンジン - コマンドライン
Cluster q-Painlevé Verification Engine - Command Line

サブコマンド: quiver, xc, tau, qt, nek, poly, verify, explain
終了コード: 0 全検証合格 / 1 検証失敗 / 2 設定・名前の誤り
"""
import sys
from pathlib import Path

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import argparse
import json
import logging
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from app.config.settings import (
    APP_NAME,
    APP_VERSION,
    LOG_FORMAT,
    LOG_LEVEL,
    PRECISION_DIGITS,
    RANDOM_SEED,
    RELATION_METHOD,
)
from app.models.verification import (
    CheckFailure,
    CheckStatus,
    ConfigError,
    SuiteConfig,
    UnknownCheck,
    UnknownLabel,
    VerificationError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

QT_CHECKS = ("flow", "casimir", "toda", "compat", "prop", "parameters", "collapse")


def _emit(payload: Any, as_json: bool) -> None:
    if as_json:
        print(json.dumps(payload, ensure_ascii=False, indent=2, default=str))
    elif isinstance(payload, dict):
        for key, value in payload.items():
            print(f"{key}: {value}")
    elif isinstance(payload, list):
        for entry in payload:
            print(entry)
    else:
        print(payload)


def _exit_for(payload: Any) -> int:
    """holds を持つ結果は holds で、持たない結果は成功とみなす"""
    if isinstance(payload, dict) and "holds" in payload:
        return EXIT_OK if payload["holds"] else EXIT_FAILED
    if isinstance(payload, list) and payload and all(isinstance(p, dict) and "holds" in p for p in payload):
        return EXIT_OK if all(p["holds"] for p in payload) else EXIT_FAILED
    return EXIT_OK


def _parse_vertices(text: str) -> List[List[int]]:
    """'0,1;1,0;-1,-1' を点列に"""
    try:
        return [[int(c) for c in point.split(",")] for point in text.split(";") if point.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse vertices {text!r}; expected 'x,y;x,y;...'")


# ---------------------------------------------------------------------------
# quiver
# ---------------------------------------------------------------------------

def cmd_quiver(args: argparse.Namespace) -> Any:
    from app.services import quiver
    from app.utils.word_parser import parse_word

    if args.action == "list":
        return {"quivers": quiver.catalog_labels(), "extended": quiver.catalog_labels(extended=True)}
    if not args.label:
        raise ConfigError("quiver needs a label")
    if args.action == "show":
        if args.label in quiver.catalog_labels(extended=True):
            ext = quiver.get_ext_quiver(args.label)
            return {"name": ext.name, "n": ext.n, "exchange": [list(r) for r in ext.exchange],
                    "frozen_values": list(ext.frozen_values),
                    "compatibility": quiver.compatibility_ok(ext) if ext.lam is not None else None}
        q = quiver.get_quiver(args.label)
        return {**q.to_dict(), "casimir_balanced": quiver.casimir_weights_ok(q)}
    if args.action == "mutate":
        q = quiver.get_quiver(args.label)
        image = quiver.apply_word_to_quiver(q, parse_word(args.word))
        perm = quiver.quiver_isomorphic(image, q)
        return {**image.to_dict(), "returns_to_catalog": perm is not None,
                "permutation": list(perm) if perm else None}
    if args.action == "iso":
        perm = quiver.quiver_isomorphic(quiver.get_quiver(args.label), quiver.get_quiver(args.other))
        return {"isomorphic": perm is not None, "permutation": list(perm) if perm else None}
    raise UnknownCheck(f"unknown quiver action {args.action!r}")


# ---------------------------------------------------------------------------
# xc
# ---------------------------------------------------------------------------

def cmd_xc(args: argparse.Namespace) -> Any:
    from app.services import xcluster
    from app.services.painleve_cases import case_labels, get_case

    if args.action == "list":
        return {"cases": case_labels()}
    if not args.case:
        raise ConfigError("xc needs a case label")
    case = get_case(args.case)
    if args.action == "relations":
        rows = xcluster.verify_relations(case, method=args.method, seed=args.seed)
        return {"case": case.label, "relations": rows, "holds": all(r["holds"] for r in rows)}
    if args.action == "forms":
        return {**xcluster.verify_closed_forms(case), "holds": True}
    if args.action == "track":
        images = xcluster.casimir_track(case, args.word or "T", args.names)
        return {name: expr.render() for name, expr in images.items()}
    if args.action == "hamiltonian":
        return xcluster.verify_hamiltonian(case, args.word or "T", args.name).to_dict()
    if args.action == "scalar":
        return xcluster.verify_scalar_equation(case, seed=args.seed)
    if args.action == "evolve":
        point = [Fraction(v) for v in args.point.split(",")] if args.point else None
        return {"orbit": xcluster.evolve(case, args.word or "T", args.steps, point)}
    raise UnknownCheck(f"unknown xc action {args.action!r}")


# ---------------------------------------------------------------------------
# tau
# ---------------------------------------------------------------------------

def cmd_tau(args: argparse.Namespace) -> Any:
    from app.services import acluster

    if args.action == "bilinear":
        return acluster.verify_bilinear()
    if args.action == "intertwining":
        rows = acluster.verify_intertwining()
        return {"rows": rows, "holds": all(r["holds"] for r in rows)}
    if args.action == "orbit":
        orbit = acluster.tau_orbit(args.quiver, args.word, args.steps)
        return {"orbit": [seed.render() for seed in orbit], **acluster.laurent_check(orbit)}
    raise UnknownCheck(f"unknown tau action {args.action!r}")


# ---------------------------------------------------------------------------
# qt
# ---------------------------------------------------------------------------

def cmd_qt(args: argparse.Namespace) -> Any:
    from app.services import qtorus, qtorus_reduction

    if args.action == "reduce":
        if args.target not in qtorus_reduction.RELATIONS:
            raise UnknownCheck(f"unknown relation {args.target!r}")
        result = qtorus_reduction.quantum_tau_reduce(args.target)
        return {**result.to_dict(), "holds": True}
    if args.action == "verify":
        checks: Dict[str, Callable[[], Any]] = {
            "flow": qtorus.verify_quantum_flow,
            "casimir": qtorus.casimir_flow_check,
            "toda": lambda: qtorus.quantum_toda_check().to_dict(),
            "compat": qtorus.compat_check,
            "prop": qtorus.quantum_tau_flow_and_prop,
            "parameters": qtorus.parameter_flow_check,
            "collapse": qtorus_reduction.collapse_check,
        }
        if args.target not in checks:
            raise UnknownCheck(f"unknown quantum check {args.target!r}; choose from {', '.join(QT_CHECKS)}")
        return checks[args.target]()
    raise UnknownCheck(f"unknown qt action {args.action!r}")


# ---------------------------------------------------------------------------
# nek
# ---------------------------------------------------------------------------

def cmd_nek(args: argparse.Namespace) -> Any:
    from app.services import nekrasov
    from app.utils.check_matrix import export_to_csv

    u, q1, q2 = Fraction(args.u), Fraction(args.q1), Fraction(args.q2)
    if args.action == "series":
        series = nekrasov.inst_series(u, q1, q2, args.terms)
        if args.csv:
            export_to_csv(series.to_frame(), args.csv, index=False)
        return series.to_dict()
    if args.action == "verify":
        report = nekrasov.verify_conjecture(args.relation, u, q1, q2, max_order=Fraction(args.order),
                                            digits=args.digits, factor_mode=args.factor,
                                            corrupt_sign=args.corrupt_sign)
        return report.to_dict()
    if args.action == "classical":
        return nekrasov.classical_tau_check(u, Fraction(args.s), Fraction(args.q), M=args.M,
                                            N=args.N, digits=args.digits)
    raise UnknownCheck(f"unknown nek action {args.action!r}")


# ---------------------------------------------------------------------------
# poly
# ---------------------------------------------------------------------------

def cmd_poly(args: argparse.Namespace) -> Any:
    from app.services import polygons

    def target():
        if args.vertices:
            return polygons.as_polygon(_parse_vertices(args.vertices))
        if args.label:
            return polygons.get_polygon(args.label)
        raise ConfigError("give a catalog label or --vertices")

    if args.action == "classify":
        label = polygons.classify(target())
        return {"label": label, "quiver": polygons.quiver_for_polygon(label) if label else None}
    if args.action == "invariants":
        polygon = target()
        width, direction = polygons.lattice_width(polygon)
        return {**polygon.to_dict(), **polygons.invariants(polygon).to_dict(),
                "lattice_width": int(width), "width_direction": [int(c) for c in direction]}
    if args.action == "quiver":
        return {"polygon": args.label, "quiver": polygons.quiver_for_polygon(args.label)}
    if args.action == "catalog":
        return polygons.catalog_check()
    if args.action == "spectral":
        return {"polygon": args.label, "polynomial": polygons.spectral_poly(args.label).render()}
    if args.action == "4a4c":
        return polygons.verify_4a_to_4c()
    raise UnknownCheck(f"unknown poly action {args.action!r}")


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def load_suite_config(path: str) -> SuiteConfig:
    """JSON のスイート設定を読み込み（不正なら ConfigError）"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return SuiteConfig.model_validate(json.load(f))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"invalid suite config {path}: {e}")


def cmd_verify(args: argparse.Namespace) -> int:
    from app.services.report_storage import get_report_storage, write_report
    from app.services.verification_engine import get_verification_engine
    from app.utils.check_matrix import create_check_matrix, export_to_csv

    engine = get_verification_engine(digits=args.digits)
    if args.config:
        config = load_suite_config(args.config)
        batch = engine.run_config(config, name=Path(args.config).stem)
        output = args.output or config.output
    else:
        batch = engine.run_suite(args.suite, seed=args.seed)
        output = args.output

    if output:
        write_report(batch, output)
    if args.store:
        get_report_storage().save(batch)
    if args.matrix:
        export_to_csv(create_check_matrix(batch.results), args.matrix)

    if args.json:
        _emit(batch.to_report(), True)
    else:
        for result in batch.results:
            suffix = f" ({result.error_message})" if result.error_message else ""
            print(f"{result.status.value:8s} {result.check_id}{suffix}")
        summary = engine.get_batch_summary(batch)
        print(f"{summary['pass']} passed, {summary['fail']} failed, {summary['skipped']} skipped")

    if not batch.all_passed:
        raise CheckFailure(f"{sum(r.status == CheckStatus.FAIL for r in batch.results)} checks failed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------

def cmd_explain(args: argparse.Namespace) -> Any:
    from app.services.explain import explain, list_checks

    if args.check_id is None:
        return list_checks()
    return explain(args.check_id)


# ---------------------------------------------------------------------------
# 引数
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # 共通フラグはサブコマンドの後に置く
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print machine-readable JSON")
    common.add_argument("--seed", type=int, default=RANDOM_SEED, help="seed for specialization points")
    common.add_argument("--digits", type=int, default=PRECISION_DIGITS, help="working precision for numeric checks")
    common.add_argument("--log-level", default=LOG_LEVEL)

    parser = argparse.ArgumentParser(prog="qpainleve", description=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("--version", action="version", version=APP_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quiver", parents=[common], help="catalog quivers, words and isomorphism")
    p.add_argument("action", choices=["list", "show", "mutate", "iso"])
    p.add_argument("label", nargs="?")
    p.add_argument("other", nargs="?")
    p.add_argument("--word", default="e")
    p.set_defaults(handler=cmd_quiver)

    p = sub.add_parser("xc", parents=[common], help="X-cluster seeds of the q-Painlevé cases")
    p.add_argument("action", choices=["list", "relations", "forms", "track", "hamiltonian", "scalar", "evolve"])
    p.add_argument("case", nargs="?")
    p.add_argument("--word")
    p.add_argument("--names", nargs="*")
    p.add_argument("--name", help="Hamiltonian name")
    p.add_argument("--method", choices=["numeric", "symbolic"], default=RELATION_METHOD)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--point", help="comma separated rational values of y1..yn")
    p.set_defaults(handler=cmd_xc)

    p = sub.add_parser("tau", parents=[common], help="tau-variables of the A7' case")
    p.add_argument("action", choices=["bilinear", "intertwining", "orbit"])
    p.add_argument("--quiver", default="A7p-ext6")
    p.add_argument("--word", default="T")
    p.add_argument("--steps", type=int, default=3)
    p.set_defaults(handler=cmd_tau)

    p = sub.add_parser("qt", parents=[common], help="quantum torus checks")
    p.add_argument("action", choices=["verify", "reduce"])
    p.add_argument("target", help=f"check ({', '.join(QT_CHECKS)}) or relation (T1T1, T1T2, T1T3, T1T4)")
    p.set_defaults(handler=cmd_qt)

    p = sub.add_parser("nek", parents=[common], help="Nekrasov series and bilinear relations")
    p.add_argument("action", choices=["series", "verify", "classical"])
    p.add_argument("relation", nargs="?", default="FT1T3")
    p.add_argument("--u", default="3")
    p.add_argument("--q1", default="2/5")
    p.add_argument("--q2", default="3/7")
    p.add_argument("--order", default="1/2", help="maximal fractional Z order of the bilinear check")
    p.add_argument("--factor", choices=["derived", "display"], default="derived")
    p.add_argument("--corrupt-sign", action="store_true")
    p.add_argument("--s", default="1/2")
    p.add_argument("--q", default="1/3")
    p.add_argument("--M", type=int, default=3, help="cutoff of the Fourier sum")
    p.add_argument("--N", type=int, default=4, help="instanton order of each block")
    p.add_argument("--terms", type=int, default=5, help="number of series coefficients after the constant")
    p.add_argument("--csv", help="write the series to this CSV file")
    p.set_defaults(handler=cmd_nek)

    p = sub.add_parser("poly", parents=[common], help="lattice polygons with one interior point")
    p.add_argument("action", choices=["classify", "invariants", "quiver", "catalog", "spectral", "4a4c"])
    p.add_argument("label", nargs="?")
    p.add_argument("--vertices", help="'x,y;x,y;...'")
    p.set_defaults(handler=cmd_poly)

    p = sub.add_parser("verify", parents=[common], help="run a suite and write a report")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--suite", choices=["classical", "quantum", "numeric", "polygons", "all"])
    group.add_argument("--config", help="JSON suite config")
    p.add_argument("--output", help="report path")
    p.add_argument("--matrix", help="write the check matrix as CSV")
    p.add_argument("--store", action="store_true", help="keep the report in the report store")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("explain", parents=[common], help="describe a check")
    p.add_argument("check_id", nargs="?")
    p.set_defaults(handler=cmd_explain)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO), format=LOG_FORMAT)
    try:
        outcome = args.handler(args)
        if args.command == "verify":
            return outcome
        _emit(outcome, args.json)
        return _exit_for(outcome)
    except (ConfigError, UnknownLabel, UnknownCheck) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as e:
        # 分数などの引数の書式誤り
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
