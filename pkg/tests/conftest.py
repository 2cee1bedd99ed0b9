import math
import sys

import pytest

from germforge import (GeometrySetting, Setting, assemble, assemble_germ, lshape_background,
                       solve, torus_background)


@pytest.fixture(scope="session")
def lshape3():
    return lshape_background(refinement=3)


@pytest.fixture(scope="session")
def ads_lshape_germ(lshape3):
    mesh, hqd = lshape3
    prob = assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd, scale=1.0)
    return assemble_germ(solve(prob), prob), prob


@pytest.fixture(scope="session")
def hyp_lshape_germ(lshape3):
    mesh, hqd = lshape3
    prob = assemble(GeometrySetting(Setting.HYP_MINIMAL), mesh, hqd, scale=1.0)
    return assemble_germ(solve(prob), prob), prob


@pytest.fixture(scope="session")
def ads_torus_germ():
    mesh, hqd = torus_background(1j, 1.0, 3)
    prob = assemble(GeometrySetting(Setting.ADS_MAXIMAL), mesh, hqd)
    return assemble_germ(solve(prob), prob), prob


@pytest.fixture(scope="session")
def cone_torus():
    return torus_background(1j, 0.0, 3, marks=[(0j, math.pi), (0.5 + 0.5j, math.pi)])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
