"""Quantum geometric tensor over time and parameters.

For Gaussian data ``(U_a, V_a)`` the tensor is assembled from mode sums

    g_IJ = sum_a (dU_I dU_J + dV_I dV_J) / (8 U_a^2)
    F_IJ = sum_a (dU_I dV_J - dV_I dU_J) / (4 U_a^2)

and stored as ``Q = g - i F/2`` so that ``F = -2 Im Q``.  In this sign
convention ``F_IJ = d_J A_I - d_I A_J`` for the connection
``A_I = -Im <psi|d_I psi>`` of the physical state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import UnsupportedModel
from .models import HOTDFModel, ModeProfile, StateFamily, hotdf_closed_forms
from .params import DEFAULT_DIFF, CoordinateSet, DiffConfig, ParameterPoint, derivative

MODES = ("analytic", "finite-diff")


@dataclass(frozen=True)
class QGTResult:
    g: np.ndarray
    F: np.ndarray
    labels: tuple[str, ...]
    indices: tuple[int, ...]
    mode: str = "analytic"
    flags: tuple[str, ...] = ()

    @property
    def Q(self) -> np.ndarray:
        return self.g - 0.5j * self.F

    def component(self, a: str, b: str, part: str = "g") -> float:
        i, j = self.labels.index(a), self.labels.index(b)
        return float((self.g if part == "g" else self.F)[i, j])


@dataclass(frozen=True)
class ConnectionVector:
    values: np.ndarray
    labels: tuple[str, ...]
    gauge: str


def mode_sums(u, du, dv) -> tuple[np.ndarray, np.ndarray]:
    """Metric and curvature from per-mode widths and gradients (rows = modes)."""
    w = 1.0 / np.asarray(u) ** 2
    g = (np.einsum("a,ai,aj->ij", w, du, du) + np.einsum("a,ai,aj->ij", w, dv, dv)) / 8
    cross = np.einsum("a,ai,aj->ij", w, du, dv)
    F = (cross - cross.T) / 4
    return 0.5 * (g + g.T), F


def _gradients_fd(model: StateFamily, p: ParameterPoint, idx, cfg):
    n = model.profile(p).modes

    def stacked(q):
        pr = model.profile(q)
        return np.concatenate([pr.u, pr.v])

    cols, degraded = [], False
    for i in idx:
        res = derivative(stacked, p, i, cfg)
        cols.append(res.value)
        degraded |= res.degraded
    d = np.array(cols).T
    return d[:n], d[n:], degraded


def tqgt(
    model: StateFamily,
    p,
    coords: Sequence[str | int] | None = None,
    mode: str = "analytic",
    cfg: DiffConfig = DEFAULT_DIFF,
) -> QGTResult:
    """Metric ``g`` and curvature ``F`` of ``model`` at ``p`` over ``coords``.

    ``mode="finite-diff"`` differentiates the profile numerically instead of
    using the closed-form partials.  Points close to a bifurcation are
    evaluated and flagged rather than rejected.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    p = model.coerce(p)
    cs = CoordinateSet.resolve(range(p.dim) if coords is None else coords, p.names)
    idx = list(cs.indices)
    flags = tuple(model.singular_flags(p))
    if mode == "analytic" and isinstance(model, HOTDFModel):
        g, F = hotdf_closed_forms(p, model.n)
        return QGTResult(g[np.ix_(idx, idx)], F[np.ix_(idx, idx)], cs.labels, cs.indices, mode, flags)
    pr = model.profile(p)
    if mode == "analytic":
        du, dv = pr.du[:, idx], pr.dv[:, idx]
    else:
        du, dv, degraded = _gradients_fd(model, p, idx, cfg)
        if degraded:
            flags += ("degraded-stencil",)
    g, F = mode_sums(pr.u, du, dv)
    return QGTResult(
        model.metric_scale * g, model.curvature_scale * F, cs.labels, cs.indices, mode, flags
    )


def connection_from_profile(pr: ModeProfile) -> np.ndarray:
    """``A_I = -Im d_I log C + sum_a d_I V_a / (4 U_a)``."""
    return -pr.dlogc.imag + np.sum(pr.dv / (4 * pr.u[:, None]), axis=0)


def berry_connection(model: StateFamily, p) -> ConnectionVector:
    """Connection ``A_I = -Im <psi|d_I psi>`` of the model's own wavefunction.

    The value depends on the phase convention of ``C``; see ``gauge`` for the
    representation used.
    """
    p = model.coerce(p)
    pr = model.profile(p)
    values = model.curvature_scale * connection_from_profile(pr)
    gauge = "closed-form wavefunction"
    if isinstance(model, HOTDFModel):
        gauge = "Lewis level with phase -(n + 1/2) h, h(0) = 0"
    return ConnectionVector(values, p.names, gauge)


def _moments(pr: ModeProfile, phase_grad: np.ndarray):
    """``<d log psi>`` and ``<conj(d_I log psi) d_J log psi>`` for a Gaussian.

    ``d_I log psi = c_I + sum_a k_Ia Q_a^2`` with ``<Q_a^2> = 1/(2 U_a)`` and
    ``<Q_a^2 Q_b^2> = m_a m_b + 2 delta_ab m_a^2``.
    """
    c = pr.dlogc + 1j * phase_grad
    k = -(pr.du + 1j * pr.dv) / 2  # (modes, dim)
    m = 1.0 / (2 * pr.u)
    first = c + k.T @ m
    quartic = np.outer(m, m) + 2 * np.diag(m * m)
    kc = k.conj()
    second = (
        np.outer(c.conj(), c)
        + np.outer(c.conj(), k.T @ m)
        + np.outer(kc.T @ m, c)
        + kc.T @ quartic @ k
    )
    return first, second


@dataclass(frozen=True)
class GaugeReport:
    max_dQ: float
    dA: np.ndarray
    expected_dA: np.ndarray
    Q: np.ndarray
    Q_gauged: np.ndarray

    @property
    def max_dA_error(self) -> float:
        return float(np.max(np.abs(self.dA - self.expected_dA)))


def moment_qgt(model: StateFamily, p, phase: Callable[[ParameterPoint], float] | None = None,
               cfg: DiffConfig = DEFAULT_DIFF):
    """Tensor and connection straight from the wavefunction moments.

    Independent of the mode-sum formulas; ``phase`` multiplies the state by
    ``exp(i phase)``.  Returns ``(Q, A)`` in the library convention.
    """
    if not model.gaussian:
        raise UnsupportedModel(f"{model!r} is not a Gaussian family")
    p = model.coerce(p)
    pr = model.profile(p)
    grad = np.zeros(p.dim)
    if phase is not None:
        grad = np.array([derivative(phase, p, i, cfg).value for i in range(p.dim)])
    first, second = _moments(pr, grad)
    q_phys = second - np.outer(first.conj(), first)
    return q_phys.conj(), -first.imag


def sampled_qgt(model: StateFamily, p, phase: Callable[[ParameterPoint], float] | None = None,
                nodes: int = 6, cfg: DiffConfig = DEFAULT_DIFF):
    """Tensor and connection by quadrature of the numerically differentiated
    log-wavefunction ``log psi(Q; p) + i phase(p)``.

    The normal coordinates ``Q`` are frozen at Gauss-Hermite nodes of
    ``|psi(p)|^2``; ``d_I log psi`` is a finite difference at each node.
    Uses neither the analytic partials nor the moment formulas.
    """
    if not model.gaussian:
        raise UnsupportedModel(f"{model!r} is not a Gaussian family")
    p = model.coerce(p)
    base = model.profile(p)
    x, w = np.polynomial.hermite.hermgauss(nodes)
    grids = np.meshgrid(*([x] * base.modes), indexing="ij")
    qq = np.stack([g.ravel() for g in grids]) / np.sqrt(base.u)[:, None]  # (modes, K)
    weight = np.prod(np.stack(np.meshgrid(*([w] * base.modes), indexing="ij")).reshape(base.modes, -1), axis=0)
    weight = weight / weight.sum()
    q2 = qq**2

    def log_psi(q: ParameterPoint):
        pr = model.profile(q)
        return pr.logc - 0.5 * ((pr.u + 1j * pr.v) @ q2)

    a = np.array([derivative(log_psi, p, i, cfg).value for i in range(p.dim)])  # (dim, K)
    if phase is not None:
        # the phase is uniform in Q, so its gradient adds to every node
        a = a + 1j * np.array([derivative(phase, p, i, cfg).value for i in range(p.dim)])[:, None]
    first = a @ weight
    second = (a.conj() * weight) @ a.T
    q_phys = second - np.outer(first.conj(), first)
    return q_phys.conj(), -first.imag


def gauge_check(model: StateFamily, p, alpha: Callable[[ParameterPoint], float],
                cfg: DiffConfig = DEFAULT_DIFF) -> GaugeReport:
    """Compare tensor and connection before and after ``psi -> exp(i alpha) psi``.

    Both states go through :func:`sampled_qgt`; ``expected_dA`` is ``-d alpha``.
    """
    p = model.coerce(p)
    q0, a0 = sampled_qgt(model, p, None, cfg=cfg)
    q1, a1 = sampled_qgt(model, p, alpha, cfg=cfg)
    expected = -np.array([derivative(alpha, p, i, cfg).value for i in range(p.dim)])
    return GaugeReport(float(np.max(np.abs(q1 - q0))), a1 - a0, expected, q0, q1)


def energy_dispersion(model: StateFamily, p) -> float:
    """``Q_00``: the energy variance of the state."""
    return float(tqgt(model, p, ("t",)).g[0, 0])
