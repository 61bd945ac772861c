import sys

import numpy as np
import pytest

from iterzeros.polycore import ComplexPoly


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def poly(*coeffs):
    return ComplexPoly(list(coeffs))


def pytest_terminal_summary(terminalreporter):
    # acceptance verdicts, one line per criterion that ran
    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
