"""
Tracking the minimum of the chain curvature
===========================================

For the two-site chain R[X, B1] has a minimum in B1 near 1 that oscillates
in time and slowly settles.  We follow it and fit
1 + c0 exp(-c3 t) sin(c1 + c2 t).  A short window keeps this quick; the
acceptance suite runs t in [10, 20].
"""

import math

import numpy as np

from qgeo import ChainModel, fit_damped_trajectory, scalar_curvature, track_extrema

ch = ChainModel([[2, -1], [-1, 2]])
times = np.round(np.arange(10, 13.0001, 0.1), 10)
base = ch.point(10.0, X=1, Y=1, Z=1, B1=1.0, B2=1.0)

traj = track_extrema(lambda p: scalar_curvature(ch, p, ("X", "B1")).R,
                     base, times, "B1", (0.8, 1.25), samples=46, follow=0.03)
ts, xs = traj.track("min")
for t, x in zip(ts[::5], xs[::5]):
    print(f"t={t:5.1f}  B1*={x:.5f}")

fit = fit_damped_trajectory(ts, xs, frequencies=(1.0, math.sqrt(3)))
print(fit)
