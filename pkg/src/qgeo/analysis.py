"""Extremum tracking over sweeps, damped-oscillation fits and normalized
curvature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import DegenerateNormalization
from .geometry import scalar_curvature
from .params import ParameterPoint

FAMILIES = ("sin-damped", "sinh-damped")
KINDS = ("min", "max")


@dataclass(frozen=True)
class Extremum:
    t: float
    location: float
    kind: str
    value: float
    bracket: tuple[float, float]


@dataclass(frozen=True)
class Trajectory:
    samples: tuple[Extremum, ...]
    coord: str
    bracket: tuple[float, float]
    missing: tuple[float, ...] = ()
    description: str = ""

    def track(self, kind: str = "min") -> tuple[np.ndarray, np.ndarray]:
        """One extremum of ``kind`` per time: the most extreme one when a
        bracket holds several."""
        best: dict[float, Extremum] = {}
        sign = 1 if kind == "min" else -1
        for s in self.samples:
            if s.kind != kind:
                continue
            cur = best.get(s.t)
            if cur is None or sign * s.value < sign * cur.value:
                best[s.t] = s
        ts = np.array(sorted(best))
        return ts, np.array([best[t].location for t in ts])


def _refine(f, a, b, c, kind, xtol):
    sign = 1.0 if kind == "min" else -1.0
    res = minimize_scalar(lambda x: sign * f(x), bracket=(a, b, c), method="golden",
                          tol=xtol / max(abs(b), 1.0))
    x = float(np.clip(res.x, a, c))
    return x, sign * float(res.fun)


def _grid_extrema(xs, vals, kinds):
    found = []
    for i in range(1, len(xs) - 1):
        lo, mid, hi = vals[i - 1], vals[i], vals[i + 1]
        if "min" in kinds and mid < lo and mid <= hi:
            found.append((i, "min"))
        elif "max" in kinds and mid > lo and mid >= hi:
            found.append((i, "max"))
    return found


def track_extrema(
    quantity: Callable[[ParameterPoint], float],
    base: ParameterPoint,
    times: Sequence[float],
    coord: str,
    bracket: tuple[float, float],
    kinds: Sequence[str] = ("min",),
    samples: int = 46,
    follow: float | None = None,
    xtol: float = 1e-8,
) -> Trajectory:
    """Locate the extrema of ``quantity`` in ``coord`` at each time.

    Each time is scanned on a uniform grid over ``bracket``; every interior
    discrete extremum is refined by golden section.  With ``follow`` set,
    times after the first scan only a window of half-width ``follow`` around
    the previous location (on a grid of ``samples // 4 + 3`` points), which is
    much cheaper for slowly drifting extrema.  Times without any extremum are
    listed in ``missing``.
    """
    kinds = tuple(kinds)
    if not set(kinds) <= set(KINDS):
        raise ValueError(f"kinds must be drawn from {KINDS}")
    lo, hi = map(float, bracket)
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing")

    out, missing = [], []
    prev = None
    for t in times:
        def f(x, t=t):
            return float(quantity(base.replace(t=t, **{coord: x})))

        if follow is not None and prev is not None:
            a, b = max(lo, prev - follow), min(hi, prev + follow)
            xs = np.linspace(a, b, samples // 4 + 3)
        else:
            xs = np.linspace(lo, hi, samples)
        vals = np.array([f(x) for x in xs])
        found = _grid_extrema(xs, vals, kinds)
        if follow is not None and prev is not None and not found:
            xs = np.linspace(lo, hi, samples)
            vals = np.array([f(x) for x in xs])
            found = _grid_extrema(xs, vals, kinds)
        if not found:
            missing.append(t)
            continue
        for i, kind in found:
            x, v = _refine(f, xs[i - 1], xs[i], xs[i + 1], kind, xtol)
            out.append(Extremum(t, x, kind, v, (float(xs[i - 1]), float(xs[i + 1]))))
        mains = [e for e in out if e.t == t]
        prev = min(mains, key=lambda e: e.value if e.kind == "min" else -e.value).location
    return Trajectory(tuple(out), coord, (lo, hi), tuple(missing))


def damped_model(c, t, family: str = "sin-damped"):
    """``c0 * sin(c1 + c2 t) * exp(-c3 t) + 1`` (``sinh`` for the other family)."""
    osc = np.sin if family == "sin-damped" else np.sinh
    return c[0] * osc(c[1] + c[2] * t) * np.exp(-c[3] * t) + 1.0


@dataclass(frozen=True)
class FitResult:
    c0: float
    c1: float
    c2: float
    c3: float
    family: str
    r2: float
    converged: bool
    iterations: int
    gradient_ratio: float = field(default=float("nan"))

    @property
    def params(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2, self.c3])

    def __call__(self, t):
        return damped_model(self.params, np.asarray(t, dtype=float), self.family)


def _wrap_phase(c1: float) -> float:
    return math.remainder(c1, 2 * math.pi)


def fit_damped_trajectory(
    ts: Sequence[float],
    ys: Sequence[float],
    family: str = "sin-damped",
    frequencies: Sequence[float] = (1.0,),
    max_iter: int = 500,
    gtol: float = 1e-6,
) -> FitResult:
    """Least-squares fit of a damped oscillation about 1.

    Starts from ``c2 = -2w`` and ``+2w`` for every ``w`` in ``frequencies``
    and a few phases, keeping the fit with the largest R^2.  ``converged``
    means the solver stopped normally and the residual is orthogonal to the
    Jacobian columns to ``gtol`` (relative).
    """
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(ts) < 8:
        raise ValueError("need at least 8 samples")
    dev = ys - 1.0
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot == 0:
        raise ValueError("samples are constant")

    def residual(c):
        return damped_model(c, ts, family) - ys

    amp = float(np.max(np.abs(dev)))
    c3_0 = 0.1 if family == "sin-damped" else 0.0
    starts = []
    for w in frequencies:
        for c2 in (-2.0 * w, 2.0 * w):
            for c1 in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
                c0 = -amp * math.exp(c3_0 * ts[0])
                if family == "sinh-damped":
                    c0 = -amp / max(1.0, abs(math.sinh(c1 + c2 * ts[-1])))
                starts.append([c0, c1, c2, c3_0])

    best = None
    for x0 in starts:
        with np.errstate(over="ignore", invalid="ignore"):
            try:
                r = least_squares(residual, x0, method="lm", max_nfev=max_iter * 5,
                                  xtol=1e-15, ftol=1e-15, gtol=1e-15)
            except ValueError:
                continue
        if not np.all(np.isfinite(r.fun)):
            continue
        r2 = 1.0 - float(np.sum(r.fun**2)) / ss_tot
        if best is None or r2 > best[1] + 1e-14:
            best = (r, r2)
    if best is None:
        raise ValueError("no start produced a finite fit")
    r, r2 = best
    jtr = r.jac.T @ r.fun
    # floor on |r| so an exact fit does not read as a large relative gradient
    scale = np.linalg.norm(r.jac) * max(np.linalg.norm(r.fun), 1e-8 * np.linalg.norm(ys))
    ratio = float(np.linalg.norm(jtr) / scale) if scale > 0 else 0.0
    c = r.x.copy()
    if family == "sin-damped":
        c[1] = _wrap_phase(c[1])
    return FitResult(
        float(c[0]), float(c[1]), float(c[2]), float(c[3]), family, r2,
        bool(r.status > 0 and ratio < gtol), int(r.nfev), ratio,
    )


@dataclass(frozen=True)
class NormalizedCurvature:
    values: np.ndarray
    max: float
    min: float


def normalized_curvature(values: Sequence[float] | np.ndarray) -> NormalizedCurvature:
    """Divide ``values`` (curvature over a grid) by their range."""
    arr = np.asarray(values, dtype=float)
    hi, lo = float(np.max(arr)), float(np.min(arr))
    if hi == lo:
        raise DegenerateNormalization("values are constant over the domain")
    return NormalizedCurvature(arr / (hi - lo), hi, lo)


def curvature_grid(model, base: ParameterPoint, coords: Sequence[str], axis: str,
                   values: Sequence[float]) -> np.ndarray:
    """Scalar curvature of ``coords`` along ``axis`` at the given values."""
    return np.array([scalar_curvature(model, base.replace(**{axis: v}), coords).R
                     for v in values])
