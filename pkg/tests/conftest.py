from pathlib import Path

import pytest

from meadowprog.meadow import ModularMeadow, RationalMeadow, SignedRationalMeadow
from meadowprog.pga import parse_pga

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

# Filled by test_acceptance.py; one line per criterion.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def q():
    return RationalMeadow()


@pytest.fixture(scope="session")
def qs():
    return SignedRationalMeadow()


@pytest.fixture(scope="session")
def z6():
    return ModularMeadow(6)


@pytest.fixture(scope="session")
def z7():
    return ModularMeadow(7)


@pytest.fixture(scope="session")
def corpus():
    def load(name):
        return parse_pga((CORPUS / name).read_text(encoding="utf-8"))
    return load


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
