"""
アプリケーション設定
Application Settings
"""
import os
from pathlib import Path
from dotenv import load_dotenv

# 環境変数を読み込み
load_dotenv()

# プロジェクトルート
PROJECT_ROOT = Path(__file__).parent.parent.parent

# アプリケーション基本設定
APP_NAME = os.getenv("APP_NAME", "クラスター q-Painlevé 検証エンジン")
APP_VERSION = os.getenv("APP_VERSION", "1.0.0")
DEBUG = os.getenv("DEBUG", "false").lower() == "true"
LOG_LEVEL = os.getenv("LOG_LEVEL", "DEBUG" if DEBUG else "INFO")

# 数値検証設定
PRECISION_DIGITS = int(os.getenv("PRECISION_DIGITS", "120"))
MIN_NUMERIC_DIGITS = int(os.getenv("MIN_NUMERIC_DIGITS", "60"))
RANDOM_SEED = int(os.getenv("RANDOM_SEED", "20190101"))
SPECIALIZATION_TRIALS = int(os.getenv("SPECIALIZATION_TRIALS", "3"))
# 群語の関係式の比較方法（symbolic: 厳密比較、numeric: 有理点での抜き取りのみ）
RELATION_METHOD = os.getenv("RELATION_METHOD", "symbolic")

# 探索上限
ISOMORPHISM_MAX_VERTICES = int(os.getenv("ISOMORPHISM_MAX_VERTICES", "11"))
SHEAR_SEARCH_BOUND = int(os.getenv("SHEAR_SEARCH_BOUND", "12"))
POCHHAMMER_MAX_TERMS = int(os.getenv("POCHHAMMER_MAX_TERMS", "20000"))

# 誤差予算（認証済み誤差評価に掛ける係数）
ERROR_BUDGET_FACTOR = int(os.getenv("ERROR_BUDGET_FACTOR", "10"))
GUARD_DIGITS = int(os.getenv("GUARD_DIGITS", "15"))

# Nekrasov 数値検証の標本点 (u, q1, q2) と打ち切り次数
NEKRASOV_POINTS = [("3", "2/5", "3/7"), ("5/2", "1/3", "2/7"), ("7/3", "3/8", "2/9")]
NEKRASOV_SUITE_ORDER = os.getenv("NEKRASOV_SUITE_ORDER", "5/2")

# 並列実行設定
MAX_CONCURRENT_CHECKS = int(os.getenv("MAX_CONCURRENT_CHECKS", "4"))

# ディレクトリパス
DATA_DIR = PROJECT_ROOT / "app" / "data"
CASES_DIR = DATA_DIR / "cases"
QUANTUM_DATA_PATH = DATA_DIR / "quantum.json"
OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", str(PROJECT_ROOT / "data")))
RESULTS_DIR = OUTPUT_DIR / "results"
REPORTS_DIR = OUTPUT_DIR / "reports"

# ディレクトリを作成
for dir_path in [OUTPUT_DIR, RESULTS_DIR, REPORTS_DIR]:
    dir_path.mkdir(parents=True, exist_ok=True)

# ログ書式
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
