import sys

import numpy as np
import pytest

from torsionkit.curve import SampledCurve, reparametrize_by_arclength
from torsionkit.manifold import euclidean


@pytest.fixture
def R3():
    return euclidean(3)


@pytest.fixture
def R4():
    return euclidean(4)


def unit_speed(M, f, a, b, n, closed=False):
    """Arclength-reparametrized curve through ``f`` sampled on ``[a, b]``."""
    raw = SampledCurve.from_function(f, a, b, n, closed=closed)
    return reparametrize_by_arclength(M, raw)


def fd5(f, t, h):
    """Five-point central difference of a vector-valued function."""
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
