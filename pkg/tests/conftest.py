import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hystdiff.profile import BOUNDED_NEUMANN, WHOLE_LINE, Grid, Profile, SimState


def demo_values(x, snap):
    vals = np.where(x > 0, 7.0 * x + 1.4, 2.0 * x - 0.6)
    vals[np.abs(x) <= snap] = 0.4
    return vals


def demo_state(kind=WHOLE_LINE, h=1.0 / 400.0):
    """The bundled depinning experiment's initial state."""
    grid = Grid.from_spacing(kind, -2.0, 2.0, h)
    vals = demo_values(grid.x, grid.h * 1e-9)
    u = Profile(grid, vals, jump_pos=0.0, left_limit=-0.6, right_limit=1.4)
    return SimState(u, 0.0, 7.0)


def sign_state(kind=WHOLE_LINE, h=1.0 / 100.0, xi=0.0):
    grid = Grid.from_spacing(kind, -2.0, 2.0, h)
    x = grid.x
    vals = np.sign(x - xi)
    vals[np.abs(x - xi) <= grid.h * 1e-9] = 0.0
    u = Profile(grid, vals, jump_pos=xi, left_limit=-1.0, right_limit=1.0)
    return SimState(u, xi, 1.0)


def barrier_state(alpha=7.0, xi=0.25, h=1.0 / 100.0, kind=WHOLE_LINE):
    """Admissible barrier data: 0 left of xi, alpha (x - xi) + 2 right."""
    grid = Grid.from_spacing(kind, -2.0, 2.0, h)
    x = grid.x
    vals = np.where(x > xi, alpha * (x - xi) + 2.0, 0.0)
    vals[np.abs(x - xi) <= grid.h * 1e-9] = 1.0
    u = Profile(grid, vals, jump_pos=xi, left_limit=0.0, right_limit=2.0)
    return SimState(u, xi, alpha)


@pytest.fixture(scope="session")
def demo_run_analytic():
    """Reference experiment on the exact whole-line backend, ledger attached."""
    from hystdiff.fluctuations import FluctuationLedger
    from hystdiff.scheme import run

    state = demo_state(WHOLE_LINE, 1.0 / 400.0)
    ledger = FluctuationLedger(25, record_pulses=True)
    result = run(state, 0.1, 0.25, ledger=ledger, snapshot_times=(0.05, 0.15, 0.25))
    return result.trajectory, ledger


@pytest.fixture(scope="session")
def demo_run_fd():
    from hystdiff.fluctuations import FluctuationLedger
    from hystdiff.scheme import run

    state = demo_state(BOUNDED_NEUMANN, 1.0 / 400.0)
    ledger = FluctuationLedger(25)
    result = run(state, 0.1, 0.25, ledger=ledger)
    return result.trajectory, ledger
