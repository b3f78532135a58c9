import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import shipped  # noqa: E402

from hems.formulation import build  # noqa: E402
from hems.schedule import extract_schedule  # noqa: E402
from hems.solver import solve_milp  # noqa: E402

_SOLVED = {}


def solved(name: str):
    """(config, model, solution, schedule) for a shipped scenario, cached per session."""
    if name not in _SOLVED:
        config = shipped(name)
        model = build(config)
        sol = solve_milp(model)
        _SOLVED[name] = (config, model, sol, extract_schedule(sol, model, config))
    return _SOLVED[name]


@pytest.fixture(scope="session")
def scenario1():
    return shipped("scenario1")


@pytest.fixture(scope="session")
def scenario2():
    return shipped("scenario2")
