"""
テスト共通設定
Shared test fixtures
"""
import sys
from pathlib import Path

import pytest

# プロジェクトルートをパスに追加
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.services.painleve_cases import get_case
from app.services.quiver import get_quiver


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long numeric runs")


@pytest.fixture
def a7p():
    return get_case("A7p")


@pytest.fixture
def a7():
    return get_case("A7")


@pytest.fixture
def a8():
    return get_case("A8")


@pytest.fixture
def a7p_quiver():
    return get_quiver("A7p")
