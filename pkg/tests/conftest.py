import numpy as np
import pytest

from orbital.ifs import IFS, Affine1D, CondensationSystem
from orbital.measure import DiscreteMeasure


def dirac(*x):
    return DiscreteMeasure([x], [1.0])


def exercise(p=0.5, mu0=None):
    mu0 = dirac(0.0) if mu0 is None else mu0
    return CondensationSystem(IFS((Affine1D(0.5, 0.5),), np.array([1.0])), mu0, p)


def halves(p=0.5, mu0=None):
    mu0 = dirac(0.0) if mu0 is None else mu0
    return CondensationSystem(IFS((Affine1D(0.5, 0.0), Affine1D(0.5, 0.5)), np.array([0.5, 0.5])), mu0, p)


@pytest.fixture
def exercise_sys():
    return exercise()


@pytest.fixture
def halves_sys():
    return halves()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
