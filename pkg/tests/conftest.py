import numpy as np
import pytest

from phtshell.cases import load_case
from phtshell.phtspace import PhtSpace, refine
from phtshell.shellgeom import builtin_surface
from phtshell.tmesh import HierTMesh


def random_space(rng, max_n=8, max_levels=3, frac=0.3):
    """A PHT space after a random sequence of local refinements."""
    nx, ny = (int(rng.integers(1, max_n + 1)) for _ in range(2))
    space = PhtSpace(HierTMesh(nx, ny))
    for _ in range(int(rng.integers(0, max_levels + 1))):
        act = space.elements
        k = max(1, int(frac * len(act)))
        space = refine(space, rng.choice(act, size=k, replace=False).tolist())
    return space


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def plate():
    return builtin_surface("flat_plate", 1, size=100.0)


@pytest.fixture(scope="session")
def case1():
    return load_case("case1")


ACCEPTANCE_LINES = []


def report(name, ok, detail=""):
    """Record one acceptance line; printed again in the terminal summary."""
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
