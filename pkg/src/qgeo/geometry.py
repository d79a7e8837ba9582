"""Riemannian geometry of metric submatrices: determinants, the
determinant-curvature relation, Christoffel symbols and scalar curvature.

Curvature is computed from finite differences of a metric field.  Sign
convention: a sphere has positive scalar curvature, the hyperbolic plane
``(dx^2 + dy^2)/y^2`` has ``R = -2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateMetric, UnsupportedModel
from .models import HOTDFModel, OscillatorModel, StateFamily
from .params import (
    DEFAULT_DIFF,
    CoordinateSet,
    DiffConfig,
    ParameterPoint,
    derivative,
    second_derivative,
)
from .qgt import tqgt

DEGENERACY_TOL = 1e-10
RICHARDSON_TRIGGER = 1e-3

MetricField = Callable[[ParameterPoint], np.ndarray]


def relative_determinant(g: np.ndarray) -> float:
    """``|det g|`` divided by the geometric mean of the diagonal to the power
    ``dim`` (zero when a diagonal entry vanishes)."""
    d = np.abs(np.diag(g))
    if np.any(d == 0):
        return 0.0
    return abs(float(np.linalg.det(g))) / float(np.exp(np.sum(np.log(d))))


@dataclass(frozen=True)
class Submetric:
    labels: tuple[str, ...]
    values: np.ndarray
    det: float
    degenerate: bool


def submetric(model: StateFamily, p, coords: Sequence[str | int]) -> Submetric:
    res = tqgt(model, p, coords)
    g = res.g
    return Submetric(res.labels, g, float(np.linalg.det(g)),
                     relative_determinant(g) < DEGENERACY_TOL)


def palumbo_factor(model: StateFamily) -> float:
    """``k`` in ``det g[I1, I2] = k F_{I1 I2}^2``.

    ``1/4`` for Gaussian packets.  A Lewis level ``n`` scales the metric by
    ``n^2 + n + 1`` and the curvature by ``2n + 1``, so
    ``k = (n^2 + n + 1)^2 / (4 (2n + 1)^2)``.
    """
    return model.metric_scale**2 / (4 * model.curvature_scale**2)


def palumbo_residual(model: StateFamily, p, coord1: str | int, coord2: str | int,
                     factor: float | None = None) -> float:
    """Signed ``det g[I1, I2] - k F_{I1 I2}^2`` (single-mode families only)."""
    if not isinstance(model, (OscillatorModel, HOTDFModel)):
        raise UnsupportedModel("the two-coordinate relation holds for single-mode families")
    res = tqgt(model, p, (coord1, coord2))
    k = palumbo_factor(model) if factor is None else factor
    return float(np.linalg.det(res.g) - k * res.F[0, 1] ** 2)


def _local_point(p: ParameterPoint, idx: Sequence[int]):
    """Chart on the selected coordinates, embedded back into the full point."""
    names = ("t",) + tuple(f"_x{k}" for k in range(len(idx)))
    base = p.values

    def lift(x: ParameterPoint) -> ParameterPoint:
        vals = list(base)
        for k, i in enumerate(idx):
            vals[i] = x.values[k + 1]
        return ParameterPoint(p.names, tuple(vals))

    local = ParameterPoint(names, (0.0,) + tuple(base[i] for i in idx))
    return local, lift


def _metric_jets(metric: MetricField, p: ParameterPoint, idx, cfg: DiffConfig):
    """Metric, its first and second partial derivatives over ``idx``.

    Steps are taken in the original coordinates so that relative scaling uses
    the coordinate values themselves.
    """
    local, lift = _local_point(p, idx)

    def f(x):
        return metric(lift(x))

    n = len(idx)
    g = f(local)
    dg = np.empty((n, n, n))
    ddg = np.empty((n, n, n, n))
    degraded = False
    for a in range(n):
        r = derivative(f, local, a + 1, cfg)
        dg[a] = r.value
        degraded |= r.degraded
    for a in range(n):
        for b in range(a, n):
            r = second_derivative(f, local, a + 1, b + 1, cfg)
            ddg[a, b] = ddg[b, a] = r.value
            degraded |= r.degraded
    return g, dg, ddg, degraded


def _christoffel(ginv, dg):
    # dg[c, i, j] = d_c g_ij ; Gamma[k, i, j] = Gamma^k_ij
    lower = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    # lower[l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij)/2
    return np.einsum("kl,lij->kij", ginv, lower)


def _scalar_from_jets(g, dg, ddg):
    ginv = np.linalg.inv(g)
    gamma = _christoffel(ginv, dg)
    # d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    lower = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    # d_m of lower[l, i, j]
    dlower = 0.5 * (
        np.einsum("mijl->mlij", ddg) + np.einsum("mjil->mlij", ddg) - np.einsum("mlij->mlij", ddg)
    )
    dgamma = np.einsum("mkl,lij->mkij", dginv, lower) + np.einsum("kl,mlij->mkij", ginv, dlower)
    # Riemann R^r_{s m n} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}
    riem = (
        np.einsum("mrns->rsmn", dgamma)
        - np.einsum("nrms->rsmn", dgamma)
        + np.einsum("rml,lns->rsmn", gamma, gamma)
        - np.einsum("rnl,lms->rsmn", gamma, gamma)
    )
    ricci = np.einsum("rsrn->sn", riem)
    return float(np.einsum("sn,sn->", ginv, ricci))


def christoffel(metric: MetricField, p: ParameterPoint, coords: Sequence[str | int],
                cfg: DiffConfig = DEFAULT_DIFF) -> np.ndarray:
    """``Gamma[k, i, j] = Gamma^k_ij`` of ``metric`` (a field over ``coords``)."""
    cs = CoordinateSet.resolve(coords, p.names)
    local, lift = _local_point(p, cs.indices)
    g = metric(p)
    dg = np.array([derivative(lambda x: metric(lift(x)), local, a + 1, cfg).value
                   for a in range(len(cs))])
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetric(f"metric is singular at {p.as_dict()}") from exc
    return _christoffel(ginv, dg)


@dataclass(frozen=True)
class CurvatureReport:
    R: float
    step: float
    degraded: bool
    refined: bool
    method: str = "finite-difference"


def curvature_of_field(metric: MetricField, p: ParameterPoint, coords: Sequence[str | int],
                       cfg: DiffConfig = DEFAULT_DIFF) -> CurvatureReport:
    """Scalar curvature of an arbitrary metric field.

    Evaluates at step ``h`` and ``h/2``; if they disagree by more than
    ``1e-3`` relative, the Richardson combination of the two is returned.
    """
    cs = CoordinateSet.resolve(coords, p.names)
    # R is a scalar: evaluate in index order so relabelings give identical stencils
    order = np.argsort(cs.indices, kind="stable")
    if np.any(order != np.arange(len(order))):
        field = metric

        def metric(q):
            return field(q)[np.ix_(order, order)]

        cs = CoordinateSet.resolve([cs.indices[k] for k in order], p.names)
    g0 = metric(p)
    if relative_determinant(g0) < DEGENERACY_TOL:
        raise DegenerateMetric(
            f"submetric over {cs.labels} is degenerate at {p.as_dict()}"
        )
    base = cfg.base_step(2)
    coarse_cfg = DiffConfig(cfg.scheme, base, cfg.relative)
    fine_cfg = DiffConfig(cfg.scheme, base / 2, cfg.relative)
    g, dg, ddg, deg1 = _metric_jets(metric, p, cs.indices, coarse_cfg)
    r_coarse = _scalar_from_jets(g, dg, ddg)
    g, dg, ddg, deg2 = _metric_jets(metric, p, cs.indices, fine_cfg)
    r_fine = _scalar_from_jets(g, dg, ddg)
    if abs(r_coarse - r_fine) > RICHARDSON_TRIGGER * abs(r_fine):
        order = 4 if cfg.scheme == "central4" else 2
        r = (2**order * r_fine - r_coarse) / (2**order - 1)
        return CurvatureReport(r, base / 2, deg1 or deg2, True)
    return CurvatureReport(r_fine, base / 2, deg1 or deg2, False)


def scalar_curvature(model: StateFamily, p, coords: Sequence[str | int],
                     cfg: DiffConfig = DEFAULT_DIFF) -> CurvatureReport:
    """Scalar curvature of the submetric of ``model`` over ``coords`` at ``p``."""
    p = model.coerce(p)
    cs = CoordinateSet.resolve(coords, p.names)
    if len(cs) < 2:
        raise ValueError("curvature needs at least two coordinates")

    def field(q):
        return tqgt(model, q, cs.indices).g

    return curvature_of_field(field, p, cs.indices, cfg)


def independent_coords(model: StateFamily, p=None) -> tuple[str, ...]:
    """A default set of ``2N`` coordinates on which the metric has full rank.

    Each Gaussian mode contributes at most two directions.  Candidates are the
    Hamiltonian parameters in declaration order, then the widths, then time;
    the first ``2N`` are taken.  With ``p`` given, the choice is checked for
    nondegeneracy there.
    """
    names = model.names
    if isinstance(model, HOTDFModel):
        coords = ("t", "A")
    elif isinstance(model, OscillatorModel):
        coords = ("t", "B")
    else:
        widths = [n for n in names if n.startswith("B")]
        params = [n for n in names if n != "t" and n not in widths]
        coords = tuple((params + widths + ["t"])[: 2 * len(widths)])
    if p is not None:
        sub = submetric(model, p, coords)
        if sub.degenerate:
            raise DegenerateMetric(f"default coordinates {coords} are degenerate at {model.coerce(p).as_dict()}")
    return coords
