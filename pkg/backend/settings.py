# backend/settings.py
import os
from pathlib import Path
from typing import Dict

from dotenv import load_dotenv

from .errors import ParseError

# Load env vars from .env if present
load_dotenv()

DEFAULT_BALL_CAP = 10**6
DEFAULT_SUBSET_BUDGET = 10**7
DEFAULT_ORACLE_WINDOW = 22
DEFAULT_ORACLE_CENTERS = 8
DEFAULT_EXACT_NODE_BUDGET = 5 * 10**6


def _clean_int(name: str, raw: str) -> int:
    s = raw.strip()
    try:
        value = int(float(s))
    except ValueError:
        raise ParseError(f"{name} must be an integer, got {raw!r}")
    if value < 1:
        raise ParseError(f"{name} must be positive, got {value}")
    return value


def get_budget(default: int) -> int:
    """
    Return an enumeration budget. IRELAB_BUDGET, when set, overrides
    every budget in the package (ball caps, oracle caps, search budgets).
    """
    raw = os.environ.get("IRELAB_BUDGET")
    if raw is None or not raw.strip():
        return default
    return _clean_int("IRELAB_BUDGET", raw)


def default_workers() -> int:
    raw = os.environ.get("IRELAB_WORKERS")
    if raw is None or not raw.strip():
        return 1
    return _clean_int("IRELAB_WORKERS", raw)


def load_config_file(path: str) -> Dict[str, str]:
    """
    Read a flat key=value config file. Keys are long flag names without the
    leading dashes; '-' and '_' are interchangeable. '#' starts a comment.
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ParseError(f"config file not found: {config_path}")

    values: Dict[str, str] = {}
    with config_path.open(encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{config_path}:{i}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            key = key.strip().lstrip("-").replace("-", "_")
            if not key:
                raise ParseError(f"{config_path}:{i}: empty key")
            values[key] = value.strip()
    return values
