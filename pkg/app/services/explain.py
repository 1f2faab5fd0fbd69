"""
検証の説明
Check Explanations
"""
import json
import logging
from functools import lru_cache
from typing import Dict

from app.config.settings import DATA_DIR
from app.models.verification import UnknownCheck

logger = logging.getLogger(__name__)

CHECKS_PATH = DATA_DIR / "checks.json"


@lru_cache(maxsize=1)
def _load() -> Dict[str, Dict]:
    with open(CHECKS_PATH, 'r', encoding='utf-8') as f:
        return json.load(f)["checks"]


def _aliases() -> Dict[str, str]:
    table = {}
    for key, entry in _load().items():
        for alias in entry.get("aliases", []):
            table[alias] = key
    return table


def resolve(check_id: str) -> str:
    """別名・完全 ID（'module.check.subject[tag]'）を 'module.check' に"""
    checks = _load()
    if check_id in checks:
        return check_id
    if check_id in _aliases():
        return _aliases()[check_id]
    base = ".".join(check_id.split("[")[0].split(".")[:2])
    if base in checks:
        return base
    raise UnknownCheck(f"no check named {check_id!r}")


def explain(check_id: str) -> str:
    key = resolve(check_id)
    entry = _load()[key]
    return f"{key}: {entry['topic']}\n{entry['text']}"


def list_checks() -> Dict[str, str]:
    return {key: entry["topic"] for key, entry in _load().items()}
