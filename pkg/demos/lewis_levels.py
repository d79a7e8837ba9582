"""
Oscillator with a growing frequency
===================================

omega(t)^2 = omega0^2 exp(2At) - A^2/4 admits exact Lewis eigenstates.  The
metric grows with the level as n^2 + n + 1 and the curvature as 2n + 1.
"""

import numpy as np

from qgeo import HOTDFModel, hotdf_closed_forms, palumbo_factor, palumbo_residual, scalar_curvature, tqgt

for n in range(4):
    h = HOTDFModel(n)
    p = h.point(0.5, A=0.4, omega0=1.3)
    r = tqgt(h, p)
    g, F = hotdf_closed_forms(p, n)
    print(f"n={n}  closed-form error {np.max(np.abs(r.g - g)):.1e}"
          f"  R(t,A)={scalar_curvature(h, p, ('t', 'A')).R:.4f}"
          f"  det/F^2 factor={palumbo_factor(h):.5f}"
          f"  residual={palumbo_residual(h, p, 't', 'A'):.1e}")

# curvature two-form dies off as exp(-At)
h = HOTDFModel(0)
for t in (0, 10, 20, 30):
    print(t, np.max(np.abs(tqgt(h, h.point(t, A=1, omega0=1)).F)))
