import pytest

from structured_harvest.grid import build_grid
from structured_harvest.model import ModelParams
from structured_harvest.policy import default_initial_state
from structured_harvest.steady import solve_steady_crowding

_acceptance = {}


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def grid(params):
    return build_grid(params.l0, params.lm, 400)


@pytest.fixture(scope="session")
def steady(params, grid):
    return solve_steady_crowding(params, None, grid)


@pytest.fixture(scope="session")
def initial(params, grid):
    return default_initial_state(params, grid)


@pytest.fixture(scope="session")
def report_dirs(tmp_path_factory):
    """Two independent default report runs (figures included)."""
    from structured_harvest.config import RunConfig
    from structured_harvest.runs import run_report

    dirs = []
    for name in ("report_a", "report_b"):
        out = tmp_path_factory.mktemp(name)
        run_report(RunConfig(), out, jobs=1, figures=True)
        dirs.append(out)
    return dirs


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance[report.nodeid] = report.outcome
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _acceptance.items():
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
