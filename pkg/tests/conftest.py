import pytest

from qubot import fixture_text
from qubot.beator.riscu import assemble
from qubot.btor2 import parse_btor2


@pytest.fixture
def load_model():
    return lambda name: parse_btor2(fixture_text(name))


@pytest.fixture
def load_program():
    return lambda name: assemble(fixture_text(name))


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
