import numpy as np
import pytest

from collrates.states import (ASYM_TOP, LINEAR_ROTOR, AsymTopState, LevelList, LinearRotorState,
                              linear_rotor_levels)
from collrates.synthetic import synthetic_xsec, water_levels
from collrates.xsec import DEFAULT_ENERGY_GRID, CrossSectionTable

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def grid():
    return np.array(DEFAULT_ENERGY_GRID)


@pytest.fixture
def h2_rigid():
    return linear_rotor_levels(59.322, 0.0, 10)


@pytest.fixture
def small_levels():
    """Two target states (j=0, j=1) and one projectile state (j=0)."""
    target = LevelList(ASYM_TOP, (AsymTopState(0, 0, 0, 0.0, 0), AsymTopState(1, 0, 1, 23.8, 1)))
    projectile = LevelList(LINEAR_ROTOR, (LinearRotorState(0, 0.0, 0),))
    return target, projectile


@pytest.fixture
def small_table(small_levels, grid):
    target, projectile = small_levels
    quench = 2.0 / (1 + grid / 500.0)
    excite = np.where(grid > 23.8, 0.6 * quench, np.nan)
    return CrossSectionTable(grid, {(1, 0, 0, 0): quench, (0, 0, 1, 0): excite}, target, projectile)


@pytest.fixture(scope="session")
def synthetic20():
    return synthetic_xsec(n_target=20, n_pairs=50, seed=11)


@pytest.fixture(scope="session")
def water20():
    return water_levels(20)


@pytest.fixture
def record():
    """Log one acceptance criterion's outcome for the terminal summary."""
    def _record(number, ok, detail):
        ACCEPTANCE_RESULTS.append((number, bool(ok), detail))
        return ok
    return _record
