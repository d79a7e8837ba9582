import math

import numpy as np
import pytest

from qgeo.analysis import fit_damped_trajectory, track_extrema
from qgeo.geometry import scalar_curvature
from qgeo.models import ChainModel

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def chain_tracks():
    """Minimum of R[X, Bk] over Bk for t in [10, 20], fitted to the damped sine.

    Two-site chain with X = Y = Z = 1 and the other width at 1; the normal
    frequencies are 1 and sqrt(3).  Takes a couple of minutes.
    """
    ch = ChainModel([[2.0, -1.0], [-1.0, 2.0]])
    times = np.round(np.arange(10, 20.0001, 0.1), 10)
    out = {}
    for coord in ("B1", "B2"):
        base = ch.point(10.0, X=1, Y=1, Z=1, B1=1.0, B2=1.0)
        traj = track_extrema(lambda p, c=coord: scalar_curvature(ch, p, ("X", c)).R,
                             base, times, coord, (0.8, 1.25), samples=46, follow=0.03)
        ts, xs = traj.track("min")
        fit = fit_damped_trajectory(ts, xs, frequencies=(1.0, math.sqrt(3)))
        out[coord] = (traj, ts, xs, fit)
    return out
