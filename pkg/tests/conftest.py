import copy

import pytest

from agentecon.catalog import load_goods, load_skills
from agentecon.config import desk_config
from agentecon.engine import run
from agentecon.world import init_world


@pytest.fixture(scope="session")
def catalog():
    return load_goods()


@pytest.fixture(scope="session")
def skills():
    return load_skills()


@pytest.fixture(scope="session")
def _desk_world():
    return init_world(desk_config())


@pytest.fixture
def world(_desk_world):
    """A fresh copy of the initialized desk-scale economy."""
    return copy.deepcopy(_desk_world)


@pytest.fixture(scope="session")
def desk_run():
    """One 36-step heuristic desk run shared by read-only tests."""
    return run(desk_config())


# acceptance reporting ---------------------------------------------------------

_criteria = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        number, title = mark.args
        if call.excinfo is None:
            outcome = "PASS"
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            outcome = "SKIP"
        else:
            outcome = "FAIL"
        _criteria[(number, item.name)] = (outcome, title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (number, name), (outcome, title) in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {number:2d} {outcome}: {title} [{name}]")
