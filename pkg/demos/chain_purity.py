"""
Entanglement across the bifurcations of a two-site chain
========================================================

With X = Z = 1 and coupling matrix [[2, -1], [-1, 2]] the normal frequencies are
omega^2 = 1 + X - Y^2 and 3 + X - Y^2 (here Z = 1).  Each time one of them
crosses zero the reduced purity of one site drops to zero.
"""

import numpy as np

from qgeo import ChainModel, bifurcation_scan, purity

ch = ChainModel([[2, -1], [-1, 2]])

for y in np.linspace(0.15, 2.85, 28):
    p = ch.point(0.0, X=1, Y=y, Z=1, B1=1, B2=1)
    mu = purity(ch, p, [0]).mu
    print(f"Y={y:.2f}  region={ch.modes(p).region}  mu={mu:.4f}  " + "#" * int(40 * mu))

# approach the first boundary and extrapolate from both sides
path = [ch.point(2.0, X=w * w, Y=1, Z=1, B1=1.2, B2=0.9) for w in np.geomspace(1e-1, 1e-4, 4)]
scan = bifurcation_scan(ch, path, [0])
print("limits:", scan.limit, scan.mirror_limit, "continuous:", scan.continuous)
