"""
Geometry of a squeezed oscillator packet
========================================

A Gaussian packet of width parameter B evolves under H = (W p^2 + X q^2)/2.
At B = 1 it is the ground state and nothing depends on time; away from it
the packet breathes and the time components of the tensor switch on.
"""

import math

import numpy as np

from qgeo import HOModel, IHOModel, OscillatorModel, extremal_b, scalar_curvature, tqgt

ho = HOModel()

# ground state: the (X, W) block is rank one
print(tqgt(ho, ho.point(0.3, X=1, W=1, B=1), ("X", "W")).g * 32)

# breathing packet: Q00 is the energy variance, constant in time
for t in (0.0, 0.5, 1.0):
    r = tqgt(ho, ho.point(t, X=1, W=1, B=2))
    print(f"t={t}  g00={r.g[0, 0]:.6f}  F01={r.F[0, 1]:+.6f}")

# F01 changes sign as B crosses 1
for b in (0.8, 1.0, 1.25):
    print(b, tqgt(ho, ho.point(0.9, X=1, W=1, B=b)).F[0, 1])

# widths where the (X, B) and (W, B) curvature components vanish
print("extremal widths at wt = pi/4:", extremal_b(math.pi / 4, 1.0))

# every nondegenerate 2D slice is a hyperbolic plane of curvature -16
iho = IHOModel()
for model, p, coords in [
    (ho, ho.point(1.0, X=1, W=1, B=2), ("t", "B")),
    (ho, ho.point(0.7, X=1.3, W=0.6, B=1.7), ("X", "B")),
    (iho, iho.point(0.4, X=-1.2, W=0.8, B=1.3), ("X", "W")),
]:
    print(type(model).__name__, coords, round(scalar_curvature(model, p, coords).R, 6))

# g11 blows up like 1/(32 X^2) on both sides of X = 0
osc = OscillatorModel()
for x in (1e-1, 1e-2, 1e-3, -1e-3, -1e-2, -1e-1):
    g11 = tqgt(osc, osc.point(1.0, X=x, W=1, B=1)).g[1, 1]
    print(f"X={x:+.0e}  g11*32X^2={g11 * 32 * x * x:.4f}")

print(np.round(tqgt(ho, ho.point(2.0, X=1, W=1, B=2)).g, 5))
