import json
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "fixtures" / "data"
GOLDEN_DIR = TESTS_DIR / "goldens"

# so tests can import the frozen oracle implementations
sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


def load_fixture_json(name: str):
    return json.loads((DATA_DIR / name).read_text(encoding="utf-8"))
