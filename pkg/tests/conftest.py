import pytest

from clpbn.fixtures import SCHOOL_DRIVERS, fixture_text
from clpbn.program import Program, parse_program


@pytest.fixture(scope="session")
def school() -> Program:
    return parse_program(fixture_text("school.clpbn"))


@pytest.fixture(scope="session")
def hmm() -> Program:
    return parse_program(fixture_text("hmm.clpbn"))


@pytest.fixture(scope="session")
def hmm_fixed() -> Program:
    return parse_program(fixture_text("hmm_fixed.clpbn"))


@pytest.fixture(scope="session")
def school_drivers() -> list[str]:
    return list(SCHOOL_DRIVERS)
