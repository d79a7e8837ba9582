"""Covariance matrices and reduced purities of the chain's Gaussian states.

Particle positions are ``q = S Q`` with ``S`` the normal-mode basis and
``Q`` the normal coordinates.  The default covariance is the block form

    sigma = 1/2 [[D, -Y D], [-Y D, L + Y^2 D]],  D = S U^-1 S^T,  L = S U S^T,

which neglects the per-mode chirp of the packets (exact when every mode has
``V_a = Y``).  ``chirp=True`` uses the full second moments of the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BifurcationBoundary, InvalidPath, QGeoError, UnsupportedModel
from .models import ChainModel
from .params import ParameterPoint

CONTINUITY_TOL = 1e-3
ZERO_TOL = 1e-3


@dataclass(frozen=True)
class CovarianceMatrix:
    sigma: np.ndarray
    D: np.ndarray
    L: np.ndarray
    Y: float
    chirp: bool = False

    @property
    def n(self) -> int:
        return len(self.D)

    def reduced(self, subset: Sequence[int]) -> np.ndarray:
        """Rows and columns of both the position and momentum blocks."""
        idx = list(subset) + [k + self.n for k in subset]
        return self.sigma[np.ix_(idx, idx)]


def _moment_blocks(S, u, w):
    qq = S @ np.diag(1 / u) @ S.T
    qp = -S @ np.diag(w / u) @ S.T
    pp = S @ np.diag(u + w * w / u) @ S.T
    return 0.5 * np.block([[qq, qp], [qp.T, pp]])


def _chirps(pr, y, chirp):
    return pr.v if chirp else np.full_like(pr.u, y)


def covariance_matrix(model: ChainModel, p, chirp: bool = False) -> CovarianceMatrix:
    if not isinstance(model, ChainModel):
        raise UnsupportedModel("covariances are defined for the chain model")
    p = model.coerce(p)
    pr = model.profile(p)
    S, u = pr.basis, pr.u
    y = p["Y"]
    D = S @ np.diag(1 / u) @ S.T
    L = S @ np.diag(u) @ S.T
    sigma = _moment_blocks(S, u, _chirps(pr, y, chirp))
    return CovarianceMatrix(0.5 * (sigma + sigma.T), D, L, y, chirp)


def reduced_determinant(model: ChainModel, p: ParameterPoint, subset, chirp: bool) -> float:
    """``det sigma_k`` evaluated after the shear ``p -> p + Y q``.

    The shear has unit determinant on every particle subset, and removing it
    avoids the cancellation between ``Y^2 D`` and ``L`` when ``Y`` is large.
    """
    pr = model.profile(p)
    sigma = _moment_blocks(pr.basis, pr.u, _chirps(pr, p["Y"], chirp) - p["Y"])
    n = len(pr.u)
    idx = list(subset) + [k + n for k in subset]
    return float(np.linalg.det(sigma[np.ix_(idx, idx)]))


@dataclass(frozen=True)
class PurityResult:
    mu: float
    subset: tuple[int, ...]
    region: int
    t: float


def _check_subset(subset, n):
    subset = tuple(int(k) for k in subset)
    if not 1 <= len(subset) <= n or len(set(subset)) != len(subset):
        raise ValueError(f"subset must hold 1..{n} distinct particle indices")
    if min(subset) < 0 or max(subset) >= n:
        raise IndexError(f"particle index out of range 0..{n - 1}")
    return subset


def purity(model: ChainModel, p, subset: Sequence[int], chirp: bool = False) -> PurityResult:
    """``mu = 1/(2^k sqrt(det sigma_k))`` of the particles in ``subset``
    (zero-based indices)."""
    if not isinstance(model, ChainModel):
        raise UnsupportedModel("purity is defined for the chain model")
    p = model.coerce(p)
    subset = _check_subset(subset, model.N)
    det = reduced_determinant(model, p, subset, chirp)
    if not det > 0:
        raise QGeoError(f"reduced covariance has non-positive determinant {det}")
    mu = 1.0 / (2 ** len(subset) * math.sqrt(det))
    return PurityResult(mu, subset, model.region(p), p.t)


def block_purity(model: ChainModel, p, subset: Sequence[int]) -> float:
    """``1/sqrt(det L_k det D_k)`` from the sub-blocks of ``S U S^T`` and
    ``S U^-1 S^T``."""
    cov = covariance_matrix(model, p)
    subset = _check_subset(subset, cov.n)
    ix = np.ix_(subset, subset)
    return 1.0 / math.sqrt(np.linalg.det(cov.L[ix]) * np.linalg.det(cov.D[ix]))


def aitken_limit(values: Sequence[float]) -> float:
    """Delta-squared extrapolation from the last three terms of a sequence."""
    x0, x1, x2 = (float(v) for v in values[-3:])
    den = x2 - 2 * x1 + x0
    if den == 0 or not math.isfinite(den):
        return x2
    return x2 - (x2 - x1) ** 2 / den


@dataclass(frozen=True)
class BifurcationScan:
    results: tuple[PurityResult, ...]
    mirror_results: tuple[PurityResult, ...]
    limit: float
    mirror_limit: float
    mode: int
    continuous: bool
    zero_limit: bool


def mirror_point(model: ChainModel, p: ParameterPoint, mode: int) -> ParameterPoint:
    """Same point with the squared frequency of ``mode`` negated (via ``X``)."""
    nm = model.modes(p)
    return p.replace(X=p["X"] - 2 * nm.omega2[mode])


def bifurcation_scan(model: ChainModel, path: Sequence, subset: Sequence[int],
                     chirp: bool = False) -> BifurcationScan:
    """Purities along a path that approaches a region boundary, plus the
    mirrored path on the other side.

    The approaching mode is the one whose ``|omega^2|`` shrinks along the path.
    Both one-sided limits are extrapolated from the last three points.
    """
    path = [model.coerce(p) for p in path]
    if len(path) < 3:
        raise InvalidPath("a scan needs at least three points")
    try:
        modes = [model.modes(p) for p in path]
    except BifurcationBoundary as exc:
        raise InvalidPath(f"path touches the boundary: {exc}") from exc
    regions = {m.region for m in modes}
    if len(regions) != 1:
        raise InvalidPath(f"path crosses a region boundary (regions {sorted(regions)})")
    last = np.abs(modes[-1].omega2)
    mode = int(np.argmin(last))
    trail = [abs(m.omega2[mode]) for m in modes]
    if not all(b < a for a, b in zip(trail, trail[1:])):
        raise InvalidPath("the path does not approach a boundary monotonically")

    results = tuple(purity(model, p, subset, chirp) for p in path)
    mirrored = tuple(purity(model, mirror_point(model, p, mode), subset, chirp) for p in path)
    limit = aitken_limit([r.mu for r in results])
    mirror_limit = aitken_limit([r.mu for r in mirrored])
    return BifurcationScan(
        results, mirrored, limit, mirror_limit, mode,
        abs(limit - mirror_limit) < CONTINUITY_TOL,
        abs(limit) < ZERO_TOL and abs(mirror_limit) < ZERO_TOL,
    )
