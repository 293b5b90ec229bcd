import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qcompl.io import parse_facts, parse_model  # noqa: E402

DATA = resources.files("qcompl") / "data"


def data_text(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


def data_path(name: str) -> str:
    return str(DATA / name)


@pytest.fixture(scope="session")
def schools():
    return parse_model(data_text("schools.qats"))


@pytest.fixture(scope="session")
def secretary():
    return parse_model(data_text("secretary.qats"))


@pytest.fixture(scope="session")
def runtime_limit():
    return parse_model(data_text("runtime_limit.qats"))


@pytest.fixture(scope="session")
def dimension_model():
    return parse_model(data_text("dimension.qats"))


@pytest.fixture(scope="session")
def dimension_db():
    return parse_facts(data_text("dimension.facts"))
