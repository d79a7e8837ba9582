"""State families: Gaussian wave packets of the (inverted) oscillator, the
Lewis-invariant states of an oscillator with time-dependent frequency, and the
normal-mode product states of a chain of generalized oscillators.

Every family is described through its Gaussian data in normal coordinates,

    psi(Q) = C exp(-sum_a (U_a + i V_a) Q_a^2 / 2),

together with analytic partial derivatives of ``U_a``, ``V_a`` and ``log C``
over the coordinates ``(t, params...)``.  ``V`` is always the imaginary part
of the exponent of the wavefunction that solves the Schrodinger equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import _modes
from .errors import (
    BifurcationBoundary,
    DomainError,
    ErmakovResidualError,
    EvaluationRangeError,
    NoSolution,
    UnsupportedModel,
)
from .params import DEFAULT_DIFF, DiffConfig, ParameterPoint, partial, second_partial

SINGULAR_X = 1e-8
BOUNDARY_TOL = 1e-12
EIGEN_GAP = 1e-9


@dataclass(frozen=True)
class ModeProfile:
    """Gaussian data of a state at one point.

    ``du[a, I]`` is the derivative of ``u[a]`` along coordinate ``I``; the same
    layout is used for ``dv``.  ``dlogc[I]`` is the derivative of ``log C``.
    """

    names: tuple[str, ...]
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    logc: complex
    dlogc: np.ndarray
    flags: tuple[str, ...] = ()
    basis: np.ndarray | None = None

    @property
    def modes(self) -> int:
        return len(self.u)

    def norm_residual(self) -> float:
        """``|C|^2`` against ``pi^(-N/2) prod sqrt(U_a)``, as a log difference."""
        expected = -0.5 * self.modes * math.log(math.pi) + 0.5 * float(np.sum(np.log(self.u)))
        return abs(2.0 * self.logc.real - expected)


def _mode(block_fn, nu, dnu, kappa, dkappa, t, t_index, b, b_index, dim):
    """Assemble U, V, log C and their gradients for one mode.

    ``nu`` is the angular frequency (``phi = nu t``) and ``kappa`` the width
    scale (``U = kappa u``).
    """
    phi = nu * t
    if block_fn is _modes.inverted and abs(phi) > _modes.MAX_HYPERBOLIC_PHASE:
        raise EvaluationRangeError(
            f"alpha*t = {abs(phi):.6g} exceeds {_modes.MAX_HYPERBOLIC_PHASE}"
        )
    blk = block_fn(phi, b)
    e_b = np.zeros(dim)
    e_b[b_index] = 1.0
    dphi = t * dnu
    dphi[t_index] += nu
    u = kappa * blk.u
    v = kappa * blk.v
    du = dkappa * blk.u + kappa * (blk.u_phi * dphi + blk.u_b * e_b)
    dv = dkappa * blk.v + kappa * (blk.v_phi * dphi + blk.v_b * e_b)
    logc = 0.25 * math.log(b * kappa / math.pi) - 0.5 * blk.logz
    dlogc = 0.25 * (e_b / b + dkappa / kappa) - 0.5 * (blk.logz_phi * dphi + blk.logz_b * e_b)
    return u, v, du, dv, logc, dlogc


class StateFamily:
    """Base handle.  Handles are immutable and safe to share between threads."""

    kind: str = ""
    names: tuple[str, ...] = ()
    gaussian: bool = True
    # multipliers applied to the Gaussian mode sums (non-trivial for Lewis levels)
    metric_scale: float = 1.0
    curvature_scale: float = 1.0

    def point(self, t: float = 0.0, **params: float) -> ParameterPoint:
        return ParameterPoint.from_mapping({"t": t, **params}, self.names)

    def coerce(self, p: ParameterPoint | Mapping[str, float]) -> ParameterPoint:
        if isinstance(p, ParameterPoint):
            if p.names == self.names:
                return p
            p = p.as_dict()
        return ParameterPoint.from_mapping(p, self.names)

    def profile(self, p) -> ModeProfile:
        raise NotImplementedError

    def energy(self, p) -> float:
        raise NotImplementedError

    def singular_flags(self, p: ParameterPoint) -> tuple[str, ...]:
        return ()

    def __repr__(self):
        return f"{type(self).__name__}()"


# ---------------------------------------------------------------- oscillators


def _positive(p: ParameterPoint, name: str):
    if not p[name] > 0:
        raise DomainError(f"{name} = {p[name]!r} must be positive", f"{name} > 0")


class OscillatorModel(StateFamily):
    """Single oscillator ``H = (W p^2 + X q^2)/2`` evolved from a Gaussian of
    width ``B``; the region (harmonic or inverted) follows the sign of ``X``.

    ``HOModel`` and ``IHOModel`` restrict the sign.
    """

    kind = "oscillator"
    names = ("t", "X", "W", "B")
    sign: int | None = None

    def _check(self, p):
        p = self.coerce(p)
        x = p["X"]
        if not math.isfinite(x) or x == 0:
            raise DomainError(f"X = {x!r} sits on the bifurcation", "X != 0")
        if self.sign is not None and np.sign(x) != self.sign:
            raise DomainError(
                f"X = {x!r} has the wrong sign for {self.kind}",
                "X > 0" if self.sign > 0 else "X < 0",
            )
        _positive(p, "W")
        _positive(p, "B")
        return p

    def frequency(self, p) -> float:
        """``omega = sqrt(XW)`` (harmonic) or ``alpha = sqrt(-XW)`` (inverted)."""
        p = self._check(p)
        return math.sqrt(abs(p["X"]) * p["W"])

    def regime(self, p) -> str:
        return "harmonic" if self._check(p)["X"] > 0 else "inverted"

    def singular_flags(self, p):
        return ("near-bifurcation",) if abs(p["X"]) < SINGULAR_X else ()

    def profile(self, p) -> ModeProfile:
        p = self._check(p)
        x, w, b, t = p["X"], p["W"], p["B"], p.t
        dim = p.dim
        ix, iw = p.index("X"), p.index("W")
        nu = math.sqrt(abs(x) * w)
        kappa = math.sqrt(abs(x) / w)
        ex = np.zeros(dim)
        ex[ix] = 0.5 / x
        ew = np.zeros(dim)
        ew[iw] = 0.5 / w
        dnu = nu * (ex + ew)
        dkappa = kappa * (ex - ew)
        fn = _modes.harmonic if x > 0 else _modes.inverted
        u, v, du, dv, logc, dlogc = _mode(fn, nu, dnu, kappa, dkappa, t, 0, b, p.index("B"), dim)
        return ModeProfile(
            p.names, np.array([u]), np.array([v]), du[None, :], dv[None, :],
            complex(logc), dlogc, self.singular_flags(p),
        )

    def energy(self, p) -> float:
        p = self._check(p)
        b = p["B"]
        nu = math.sqrt(abs(p["X"]) * p["W"])
        if p["X"] > 0:
            return (1 + b * b) * nu / (4 * b)
        return (b * b - 1) * nu / (4 * b)


class HOModel(OscillatorModel):
    kind = "ho"
    sign = 1


class IHOModel(OscillatorModel):
    kind = "iho"
    sign = -1


# ---------------------------------------------------------------------- HOTDF


class HOTDFModel(StateFamily):
    """Lewis-invariant level ``n`` of ``H = (p^2 + omega(t)^2 q^2)/2`` with
    ``omega(t)^2 = omega0^2 exp(2At) - A^2/4``.

    The Ermakov width is ``gamma = exp(-At/2)/sqrt(omega0)`` and the phase
    integral ``h`` (with ``dh/dt = gamma^-2``) is fixed to vanish at ``t = 0``.
    ``profile`` returns the Gaussian envelope of level 0; for ``n > 0`` the
    metric and curvature are that envelope's mode sums scaled by
    ``n^2 + n + 1`` and ``2n + 1``.
    """

    kind = "hotdf"
    names = ("t", "A", "omega0")

    def __init__(self, n: int = 0):
        if int(n) != n or n < 0:
            raise DomainError(f"level n = {n!r} must be a non-negative integer", "n >= 0")
        self.n = int(n)
        self.gaussian = self.n == 0
        self.metric_scale = float(self.n * self.n + self.n + 1)
        self.curvature_scale = float(2 * self.n + 1)

    def __repr__(self):
        return f"HOTDFModel(n={self.n})"

    def _check(self, p):
        p = self.coerce(p)
        _positive(p, "omega0")
        w2 = self.frequency_squared(p)
        if not w2 > 0:
            raise DomainError(
                f"omega(t)^2 = {w2:.6g} is not positive", "omega0^2 exp(2At) > A^2/4"
            )
        return p

    @staticmethod
    def frequency_squared(p: ParameterPoint) -> float:
        a, w0 = p["A"], p["omega0"]
        return w0 * w0 * math.exp(2 * a * p.t) - a * a / 4

    @staticmethod
    def ermakov_width(p: ParameterPoint) -> float:
        return math.exp(-p["A"] * p.t / 2) / math.sqrt(p["omega0"])

    @staticmethod
    def phase_integral(p: ParameterPoint) -> tuple[float, float, float]:
        """``h = omega0 (exp(At) - 1)/A`` and its A- and omega0-derivatives."""
        a, w0, t = p["A"], p["omega0"], p.t
        x = a * t
        if abs(x) < 1e-4:
            h = w0 * t * (1 + x / 2 + x * x / 6 + x**3 / 24)
            h_a = w0 * t * t * (0.5 + x / 3 + x * x / 8)
        else:
            h = w0 * math.expm1(x) / a
            h_a = w0 * (x * math.exp(x) - math.expm1(x)) / (a * a)
        return h, h_a, h / w0

    def profile(self, p) -> ModeProfile:
        p = self._check(p)
        a, w0, t = p["A"], p["omega0"], p.t
        u = w0 * math.exp(a * t)
        du = np.array([a * u, t * u, u / w0])
        dv = np.array([0.0, 0.5, 0.0])
        h, h_a, h_w = self.phase_integral(p)
        logc = complex(0.25 * math.log(u / math.pi), -0.5 * h)
        dlogc = 0.25 * du / u - 0.5j * np.array([u, h_a, h_w])
        return ModeProfile(
            p.names, np.array([u]), np.array([a / 2]), du[None, :], dv[None, :], logc, dlogc
        )

    def energy(self, p) -> float:
        p = self._check(p)
        return (self.n + 0.5) * p["omega0"] * math.exp(p["A"] * p.t)


def hotdf_closed_forms(p: ParameterPoint, n: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Metric and curvature of level ``n`` over ``(t, A, omega0)`` in closed form."""
    p = HOTDFModel(n)._check(p)
    a, w0, t = p["A"], p["omega0"], p.t
    g = np.array([
        [a * a, a * t, a / w0],
        [a * t, math.exp(-2 * a * t) / (4 * w0 * w0) + t * t, t / w0],
        [a / w0, t / w0, 1 / w0**2],
    ]) * (n * n + n + 1) / 8
    f = np.array([
        [0.0, a * w0, 0.0],
        [-a * w0, 0.0, -1.0],
        [0.0, 1.0, 0.0],
    ]) * (2 * n + 1) * math.exp(-a * t) / (8 * w0 * w0)
    return g, f


class LewisTensors(NamedTuple):
    metric: np.ndarray
    curvature: np.ndarray
    ermakov_residual: float


def lewis_tensors(
    width: Callable[[ParameterPoint], float],
    frequency_squared: Callable[[ParameterPoint], float],
    p: ParameterPoint,
    n: int = 0,
    tol: float = 1e-6,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> LewisTensors:
    """Metric and curvature of a Lewis level from an arbitrary Ermakov width.

    ``width(p)`` must solve ``gamma'' + omega^2 gamma - gamma^-3 = 0`` in ``t``;
    the residual is checked by finite differences and
    :class:`ErmakovResidualError` is raised above ``tol``.
    All derivatives are numerical.
    """
    gam = width(p)
    gdot = partial(width, p, 0, cfg)
    gddot = second_partial(width, p, 0, 0, cfg)
    residual = abs(gddot + frequency_squared(p) * gam - gam**-3)
    if residual > tol:
        raise ErmakovResidualError(
            f"Ermakov residual {residual:.3g} exceeds {tol:g} at {p.as_dict()}"
        )
    dim = p.dim
    d_gam = np.array([partial(width, p, i, cfg) for i in range(dim)])
    d_gdot = np.array([
        gddot if i == 0 else second_partial(width, p, 0, i, cfg) for i in range(dim)
    ])
    d_ratio = d_gdot / gam - gdot * d_gam / gam**2  # d(gamma'/gamma)
    d_inv2 = -2.0 * d_gam / gam**3  # d(gamma^-2)
    g4 = gam**4
    metric = g4 * (n * n + n + 1) / 8 * (np.outer(d_ratio, d_ratio) + np.outer(d_inv2, d_inv2))
    curv = g4 * (2 * n + 1) / 4 * (np.outer(d_ratio, d_inv2) - np.outer(d_inv2, d_ratio))
    return LewisTensors(metric, curv, residual)


# ---------------------------------------------------------------------- chain


@dataclass(frozen=True)
class NormalModeData:
    """Normal modes of ``M = Z A + X - Y^2`` ordered by increasing ``omega^2``."""

    S: np.ndarray
    coupling: np.ndarray  # eigenvalues of A in mode order
    omega2: np.ndarray
    frequencies: np.ndarray  # omega_b or alpha_b
    inverted: np.ndarray
    region: int


def _fix_signs(S: np.ndarray) -> np.ndarray:
    S = np.array(S, dtype=float)
    for j in range(S.shape[1]):
        col = S[:, j]
        k = np.flatnonzero(np.abs(col) > 1e-12)[0]
        if col[k] < 0:
            S[:, j] = -col
    return S


def coupling_eigensystem(A, basis=None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of the coupling matrix.

    Degenerate spectra are rejected unless an orthogonal ``basis`` that
    diagonalizes ``A`` is supplied.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("A must be a square matrix", "A square")
    if not np.allclose(A, A.T, atol=1e-12, rtol=0):
        raise DomainError("A must be symmetric", "A symmetric")
    if basis is None:
        a, S = np.linalg.eigh(A)
        if len(a) > 1 and np.min(np.diff(a)) <= EIGEN_GAP:
            raise DomainError(
                f"A has degenerate eigenvalues {a}; pass an explicit eigenbasis",
                "distinct eigenvalues of A",
            )
    else:
        S = np.asarray(basis, dtype=float)
        if S.shape != A.shape or not np.allclose(S.T @ S, np.eye(len(A)), atol=1e-10):
            raise DomainError("basis must be an orthogonal matrix matching A", "S orthogonal")
        D = S.T @ A @ S
        scale = max(1.0, float(np.max(np.abs(A))))
        if np.max(np.abs(D - np.diag(np.diag(D)))) > 1e-10 * scale:
            raise DomainError("basis does not diagonalize A", "S^T A S diagonal")
        a = np.diag(D).copy()
        order = np.argsort(a, kind="stable")
        a, S = a[order], S[:, order]
    return a, _fix_signs(S)


def normal_mode_decomposition(A, X: float, Y: float, Z: float, basis=None) -> NormalModeData:
    a, S = coupling_eigensystem(A, basis)
    return _decompose(a, S, X, Y, Z)


def _decompose(a, S, X, Y, Z) -> NormalModeData:
    w2 = a * Z + X - Y * Y
    order = np.argsort(w2, kind="stable")
    a, S, w2 = a[order], S[:, order], w2[order]
    near = np.flatnonzero(np.abs(w2) < BOUNDARY_TOL)
    if near.size:
        b = int(near[0])
        raise BifurcationBoundary(
            f"omega_{b + 1}^2 = {w2[b]:.3g} is on the bifurcation boundary", b
        )
    inverted = w2 < 0
    return NormalModeData(
        S, a, w2, np.sqrt(np.abs(w2)), inverted, 1 + int(np.count_nonzero(inverted))
    )


class ChainModel(StateFamily):
    """``N`` coupled generalized oscillators with unit mass,

        H = p.p/2 + q.(Z A + X) q/2 + Y (q.p + p.q)/2,

    in the product state of normal-mode packets (harmonic modes evolve as
    oscillators, inverted ones as inverted oscillators).  Coordinates are
    ``(t, X, Y, Z, B1, ..., BN)``; ``B_a`` belongs to the ``a``-th mode in
    order of increasing ``omega^2``.
    """

    kind = "chain"

    def __init__(self, A, basis=None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self._a, self._S = coupling_eigensystem(self.A, basis)
        self.N = len(self._a)
        self.names = ("t", "X", "Y", "Z") + tuple(f"B{k + 1}" for k in range(self.N))

    def __repr__(self):
        return f"ChainModel(A={self.A.tolist()})"

    @property
    def coupling_eigenvalues(self) -> np.ndarray:
        return self._a.copy()

    def _check(self, p):
        p = self.coerce(p)
        for k in range(self.N):
            _positive(p, f"B{k + 1}")
        return p

    def modes(self, p) -> NormalModeData:
        p = self.coerce(p)
        return _decompose(self._a, self._S, p["X"], p["Y"], p["Z"])

    def region(self, p) -> int:
        return self.modes(p).region

    def profile(self, p) -> ModeProfile:
        p = self._check(p)
        nm = self.modes(p)
        dim, t, y = p.dim, p.t, p["Y"]
        ix, iy, iz = p.index("X"), p.index("Y"), p.index("Z")
        us, vs, dus, dvs = [], [], [], []
        logc, dlogc = 0j, np.zeros(dim, dtype=complex)
        for b in range(self.N):
            nu = nm.frequencies[b]
            s = -1.0 if nm.inverted[b] else 1.0
            dnu = np.zeros(dim)
            dnu[ix] = s / (2 * nu)
            dnu[iy] = -s * y / nu
            dnu[iz] = s * nm.coupling[b] / (2 * nu)
            fn = _modes.inverted if nm.inverted[b] else _modes.harmonic
            bi = p.index(f"B{b + 1}")
            u, v, du, dv, lc, dlc = _mode(fn, nu, dnu, nu, dnu.copy(), t, 0, p[f"B{b + 1}"], bi, dim)
            dv[iy] += 1.0
            us.append(u)
            vs.append(v + y)
            dus.append(du)
            dvs.append(dv)
            logc += lc
            dlogc = dlogc + dlc
        return ModeProfile(
            p.names, np.array(us), np.array(vs), np.array(dus), np.array(dvs),
            complex(logc), dlogc, (), nm.S,
        )

    def energy(self, p) -> float:
        p = self._check(p)
        nm = self.modes(p)
        total = 0.0
        for b in range(self.N):
            bb, nu = p[f"B{b + 1}"], nm.frequencies[b]
            sgn = -1.0 if nm.inverted[b] else 1.0
            total += (bb * bb + sgn) * nu / (4 * bb)
        return total


MODEL_KINDS = {
    "ho": "harmonic oscillator packet, coordinates (t, X, W, B), X > 0",
    "iho": "inverted oscillator packet, coordinates (t, X, W, B), X < 0",
    "oscillator": "either region by the sign of X, coordinates (t, X, W, B)",
    "hotdf": "Lewis level n of omega(t)^2 = omega0^2 exp(2At) - A^2/4, coordinates (t, A, omega0)",
    "chain": "N coupled generalized oscillators, coordinates (t, X, Y, Z, B1..BN)",
}


def build_model(kind: str, **options) -> StateFamily:
    """Construct a model handle by name (see ``MODEL_KINDS``)."""
    kind = kind.lower()
    if kind == "ho":
        model = HOModel()
    elif kind == "iho":
        model = IHOModel()
    elif kind == "oscillator":
        model = OscillatorModel()
    elif kind == "hotdf":
        model = HOTDFModel(options.pop("n", 0))
    elif kind == "chain":
        if "A" not in options:
            raise DomainError("chain model needs a coupling matrix A", "A given")
        model = ChainModel(options.pop("A"), options.pop("basis", None))
    else:
        raise UnsupportedModel(f"unknown model kind {kind!r}; choose from {sorted(MODEL_KINDS)}")
    if options:
        raise DomainError(f"unexpected options for {kind}: {sorted(options)}", "known options")
    return model


def expected_energy(model: StateFamily, p) -> float:
    return model.energy(p)


# ------------------------------------------------------- width-parameter roots


def b_solutions(energy: float, frequency: float, regime: str = "harmonic") -> tuple[float, ...]:
    """Widths ``B`` whose packet has mean energy ``energy``.

    Harmonic: both roots ``B+ >= B-`` (a single value for the ground state).
    Inverted: only the positive root.
    """
    if not frequency > 0:
        raise DomainError("frequency must be positive", "frequency > 0")
    if regime == "harmonic":
        disc = 4 * energy * energy - frequency * frequency
        if energy < frequency / 2 or disc < 0:
            raise NoSolution(f"mean energy {energy} is below the ground level {frequency / 2}")
        root = math.sqrt(disc)
        plus = (2 * energy + root) / frequency
        if root == 0:
            return (plus,)
        # the product of the roots is 1; use it for the small root
        return (plus, 1.0 / plus)
    if regime == "inverted":
        return ((2 * energy + math.hypot(frequency, 2 * energy)) / frequency,)
    raise ValueError(f"regime must be 'harmonic' or 'inverted', got {regime!r}")


def extremal_b(t: float, frequency: float, regime: str = "harmonic") -> tuple[float, float]:
    """Widths where ``g11`` (``B+``) and ``g22`` (``B-``) are extremal at time ``t``."""
    x = 2 * frequency * t
    if regime == "harmonic":
        s = math.sin(x)
        num, den = x + s, x - s
    elif regime == "inverted":
        if not t > 0:
            raise DomainError("inverted extremal widths need t > 0", "t > 0")
        s = math.sinh(x)
        num, den = s + x, s - x
    else:
        raise ValueError(f"regime must be 'harmonic' or 'inverted', got {regime!r}")
    if num == 0 or den == 0 or num / den < 0:
        raise DomainError(f"no extremal width at scaled time {x / 2}", "positive radicand")
    r = math.sqrt(num / den)
    return r, 1.0 / r


# ---------------------------------------------------------------- Fock series


@dataclass(frozen=True)
class FockExpansion:
    coefficients: np.ndarray
    mu_exp: complex
    gamma_scale: float
    norm: float
    truncated: bool
    energies: np.ndarray = field(repr=False)

    def energy_variance(self) -> float:
        w = np.abs(self.coefficients) ** 2
        w = w / w.sum()
        mean = float(np.dot(w, self.energies))
        return float(np.dot(w, (self.energies - mean) ** 2))


def _log_even_overlap(n: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """``log |I_n|`` and ``sign I_n`` of ``I_n = int exp(-p x^2) H_{2n}(x) dx``.

    Closed form ``sqrt(pi) (2n)!/n! (1-p)^n / p^(n+1/2)``.
    """
    base = 1 - p
    log_mag = (
        0.5 * math.log(math.pi) + np.array([math.lgamma(2 * k + 1) - math.lgamma(k + 1) for k in n])
        - (n + 0.5) * math.log(p)
    )
    if base == 0:
        log_mag = np.where(n == 0, log_mag, -np.inf)
        sign = np.ones_like(log_mag)
    else:
        log_mag = log_mag + n * math.log(abs(base))
        sign = np.where((n % 2 == 1) & (base < 0), -1.0, 1.0)
    return log_mag, sign


def fock_coefficients(p, n_max: int, model: OscillatorModel | None = None) -> FockExpansion:
    """Expansion of the harmonic packet in the even oscillator eigenstates.

    ``c_n = <u_2n | psi(0)> exp(-i E_2n t)``, from Gaussian-Hermite overlaps of
    the initial packet; coefficients are renormalized over the truncation and
    ``truncated`` is set when the raw weight falls below 0.999.
    """
    model = model or HOModel()
    p = model._check(p)
    if p["X"] <= 0:
        raise DomainError("the Fock expansion needs the harmonic region", "X > 0")
    if int(n_max) != n_max or n_max < 0:
        raise ValueError("n_max must be a non-negative integer")
    b, omega = p["B"], math.sqrt(p["X"] * p["W"])
    gamma_scale = math.sqrt(omega / p["W"])
    n = np.arange(int(n_max) + 1)
    log_i, sign = _log_even_overlap(n, (1 + b) / 2)
    # <u_2n|psi0> = B^(1/4) / (sqrt(pi) 2^n sqrt((2n)!)) * I_n
    log_c = (
        0.25 * math.log(b) - 0.5 * math.log(math.pi) - n * math.log(2.0)
        - 0.5 * np.array([math.lgamma(2 * k + 1) for k in n]) + log_i
    )
    energies = omega * (2 * n + 0.5)
    mags = np.exp(log_c)
    coeffs = sign * mags * np.exp(-1j * energies * p.t)
    norm = float(np.sum(mags**2))
    return FockExpansion(
        coeffs / math.sqrt(norm), complex(1 + b), gamma_scale, norm, norm < 0.999, energies
    )


# ---------------------------------------------------------------- density


@dataclass(frozen=True)
class DensityReport:
    critical_times: np.ndarray
    kinds: tuple[str, ...]
    peak_values: np.ndarray
    crossing_times: np.ndarray
    density: np.ndarray  # rho(q, t) with shape (len(t_grid), len(q_grid))


def _rho0(kappa, omega, b, t):
    return math.sqrt(kappa * _modes.harmonic(omega * t, b).u / math.pi)


def density_analysis(X: float, W: float, B: float, q_grid, t_grid) -> DensityReport:
    """Critical points of ``rho(0, t)`` and the crossings of the ``(B, 1/B)`` pair.

    Critical times are ``n pi/(2 omega)`` inside the span of ``t_grid``; their
    type follows the sign of the second time derivative at ``q = 0``.
    Crossings are located by bracketing between consecutive critical times.
    """
    model = HOModel()
    model._check(model.point(0.0, X=X, W=W, B=B))
    q_grid = np.asarray(q_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    omega, kappa = math.sqrt(X * W), math.sqrt(X / W)
    t_lo, t_hi = float(t_grid.min()), float(t_grid.max())
    step = math.pi / (2 * omega)
    ks = np.arange(math.ceil(t_lo / step - 1e-12), math.floor(t_hi / step + 1e-12) + 1)
    crit = ks * step
    scale = math.sqrt(B * omega**5 / (W * math.pi))
    kinds = []
    for k in ks:
        second = -(B * B - 1) * scale if k % 2 == 0 else (B * B - 1) / B**3 * scale
        kinds.append("max" if second < 0 else "min" if second > 0 else "flat")
    peaks = np.array([_rho0(kappa, omega, B, t) for t in crit])

    crossings = []
    if B != 1:
        def diff(t):
            return _rho0(kappa, omega, B, t) - _rho0(kappa, omega, 1 / B, t)

        for lo, hi in zip(crit[:-1], crit[1:]):
            if diff(lo) * diff(hi) < 0:
                crossings.append(brentq(diff, lo, hi, xtol=1e-14, rtol=1e-15))

    u = np.array([kappa * _modes.harmonic(omega * t, B).u for t in t_grid])
    density = np.sqrt(u / math.pi)[:, None] * np.exp(-np.outer(u, q_grid**2))
    return DensityReport(crit, tuple(kinds), peaks, np.array(crossings), density)


# ---------------------------------------------------------------- fidelity


def _aligned(pa: ModeProfile, pb: ModeProfile):
    """Mode arrays of ``pb`` re-ordered to match the eigenvectors of ``pa``."""
    if pa.basis is None or pb.basis is None:
        return pb.u, pb.v
    overlap = np.abs(pa.basis.T @ pb.basis)
    perm = np.argmax(overlap, axis=1)
    if len(set(perm)) != len(perm) or np.min(overlap[np.arange(len(perm)), perm]) < 1 - 1e-8:
        raise UnsupportedModel("the two points do not share a normal-mode basis")
    return pb.u[perm], pb.v[perm]


def log_fidelity(model: StateFamily, p, q) -> float:
    if not model.gaussian:
        raise UnsupportedModel(f"{model!r} is not a Gaussian family")
    pa, pb = model.profile(p), model.profile(q)
    ub, vb = _aligned(pa, pb)
    ua, va = pa.u, pa.v
    terms = np.log(2 * np.sqrt(ua * ub)) - np.log(np.abs(ua + ub + 1j * (vb - va)))
    return 0.5 * float(np.sum(terms))


def fidelity_overlap(model: StateFamily, p, q) -> float:
    """``|<psi(p)|psi(q)>|`` for Gaussian families."""
    return math.exp(log_fidelity(model, p, q))


def overlap_distance(model: StateFamily, p, q) -> float:
    """``1 - |<psi(p)|psi(q)>|^2`` without cancellation for nearby points."""
    return -math.expm1(2 * log_fidelity(model, p, q))
