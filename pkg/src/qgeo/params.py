"""Coordinates on the time-parameter manifold and finite-difference helpers.

A point is an ordered set of coordinates whose first entry is always the
time ``t``.  Derivatives are taken by central differences; when a stencil
would leave the model's validity domain the helpers fall back to one-sided
second-order formulas and mark the result as degraded.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DomainError

EPS = np.finfo(float).eps
FIRST_STEP = EPS ** (1.0 / 3.0)
SECOND_STEP = EPS ** 0.25
# a fourth-order stencil balances h^4 truncation against eps/h^2 roundoff
SECOND_STEP4 = EPS ** (1.0 / 6.0)

SCHEMES = ("central2", "central4")


@dataclass(frozen=True)
class ParameterPoint:
    """Coordinate tuple ``(t, lambda^1, ..., lambda^N)``.

    ``names[0]`` is always ``"t"``; the position of a name in ``names`` is its
    index on the manifold.
    """

    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.names or self.names[0] != "t":
            raise ValueError("the first coordinate must be 't'")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate coordinate names in {self.names}")
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def make(cls, t: float = 0.0, **params: float) -> "ParameterPoint":
        return cls(("t",) + tuple(params), (t,) + tuple(params.values()))

    @classmethod
    def from_mapping(
        cls, mapping: Mapping[str, float], order: Sequence[str] | None = None
    ) -> "ParameterPoint":
        mapping = dict(mapping)
        t = mapping.pop("t", 0.0)
        if order is None:
            order = list(mapping)
        else:
            order = [n for n in order if n != "t"]
            missing = [n for n in order if n not in mapping]
            if missing:
                raise DomainError(f"missing parameters {missing}", "required names")
            extra = sorted(set(mapping) - set(order))
            if extra:
                raise DomainError(f"unknown parameters {extra}", "known names")
        return cls(("t",) + tuple(order), (t,) + tuple(mapping[n] for n in order))

    @property
    def t(self) -> float:
        return self.values[0]

    @property
    def dim(self) -> int:
        return len(self.values)

    def index(self, coord: str | int) -> int:
        if isinstance(coord, (int, np.integer)):
            if not 0 <= coord < len(self.values):
                raise IndexError(f"coordinate index {coord} out of range")
            return int(coord)
        try:
            return self.names.index(coord)
        except ValueError:
            raise KeyError(f"unknown coordinate {coord!r}; have {self.names}") from None

    def __getitem__(self, coord: str | int) -> float:
        return self.values[self.index(coord)]

    def get(self, name: str, default: float | None = None) -> float | None:
        return self.values[self.names.index(name)] if name in self.names else default

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def array(self) -> np.ndarray:
        return np.array(self.values)

    def replace(self, **changes: float) -> "ParameterPoint":
        vals = list(self.values)
        for name, v in changes.items():
            vals[self.index(name)] = float(v)
        return ParameterPoint(self.names, tuple(vals))

    def shifted(self, coord: str | int, delta: float) -> "ParameterPoint":
        i = self.index(coord)
        vals = list(self.values)
        vals[i] += delta
        return ParameterPoint(self.names, tuple(vals))

    def moved(self, direction: Sequence[float]) -> "ParameterPoint":
        vals = np.asarray(self.values) + np.asarray(direction, dtype=float)
        return ParameterPoint(self.names, tuple(vals))


@dataclass(frozen=True)
class CoordinateSet:
    """Ordered, repeat-free subset of coordinate indices."""

    indices: tuple[int, ...]
    labels: tuple[str, ...]

    @classmethod
    def resolve(cls, coords: Iterable[str | int], names: Sequence[str]) -> "CoordinateSet":
        idx, labels = [], []
        for c in coords:
            if isinstance(c, (int, np.integer)):
                if not 0 <= c < len(names):
                    raise IndexError(f"coordinate index {c} out of range for {tuple(names)}")
                i = int(c)
            else:
                if c not in names:
                    raise KeyError(f"unknown coordinate {c!r}; model has {tuple(names)}")
                i = list(names).index(c)
            idx.append(i)
            labels.append(names[i])
        if len(set(idx)) != len(idx):
            raise ValueError(f"repeated coordinates in {labels}")
        return cls(tuple(idx), tuple(labels))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass(frozen=True)
class DiffConfig:
    scheme: str = "central4"
    step: float | None = None
    relative: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")

    def base_step(self, order: int = 1) -> float:
        if self.step is not None:
            return self.step
        if order == 1:
            return FIRST_STEP
        return SECOND_STEP4 if self.scheme == "central4" else SECOND_STEP

    def step_for(self, x: float, order: int = 1) -> float:
        base = self.base_step(order)
        return base * max(1.0, abs(x)) if self.relative else base


DEFAULT_DIFF = DiffConfig()


class DiffResult(NamedTuple):
    value: float | np.ndarray
    step: float
    degraded: bool


def make_grid(
    ranges: Mapping[str, Sequence],
    fixed: Mapping[str, float] | None = None,
    names: Sequence[str] | None = None,
) -> list[ParameterPoint]:
    """Cartesian grid over ``ranges``; the first declared name varies slowest.

    ``names``, when given, is the model's coordinate list: unknown names are
    rejected and the points use that ordering.  A missing ``t`` defaults to 0.
    A range is ``(lo, hi, count)`` with linear spacing, or
    ``(start, stop, count, "geometric")`` for same-sign end points in either
    order (paths that approach zero).
    """
    fixed = dict(fixed or {})
    known = None if names is None else set(names) | {"t"}
    axes = []
    for name, spec in ranges.items():
        if known is not None and name not in known:
            raise KeyError(f"unknown parameter {name!r}")
        lo, hi, count, *rest = spec
        spacing = rest[0] if rest else "linear"
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"non-finite bound for {name!r}")
        if int(count) < 1 or count != int(count):
            raise ValueError(f"count for {name!r} must be a positive integer")
        if spacing == "linear":
            if lo > hi:
                raise ValueError(f"lo > hi for {name!r}")
            values = np.linspace(lo, hi, int(count))
        elif spacing == "geometric":
            if lo * hi <= 0:
                raise ValueError(f"geometric range for {name!r} needs same-sign nonzero ends")
            values = np.geomspace(lo, hi, int(count))
        else:
            raise ValueError(f"unknown spacing {spacing!r} for {name!r}")
        axes.append((name, values if count > 1 else np.array([lo])))
    for name, v in fixed.items():
        if known is not None and name not in known:
            raise KeyError(f"unknown parameter {name!r}")
        if not math.isfinite(v):
            raise ValueError(f"non-finite fixed value for {name!r}")
    if names is None:
        order = [n for n in itertools.chain((a for a, _ in axes), fixed) if n != "t"]
    else:
        order = [n for n in names if n != "t"]
    points = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        values = dict(fixed)
        values.update({name: float(v) for (name, _), v in zip(axes, combo)})
        points.append(ParameterPoint.from_mapping(values, order))
    return points


def _evaluate(f, points):
    return [f(q) for q in points]


def derivative(
    f: Callable[[ParameterPoint], float | np.ndarray],
    p: ParameterPoint,
    coord: str | int,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> DiffResult:
    """First derivative of ``f`` along one coordinate.

    ``f`` may return arrays.  Raises :class:`DomainError` only when neither the
    central nor a one-sided stencil stays inside the domain.
    """
    i = p.index(coord)
    h = cfg.step_for(p.values[i], 1)
    # antisymmetric pairs f(+k) - f(-k), so constants differentiate to exactly 0
    pairs = ((1, 2 / 3), (2, -1 / 12)) if cfg.scheme == "central4" else ((1, 0.5),)
    try:
        vals = _evaluate(f, [p.shifted(i, s * k * h) for k, _ in pairs for s in (1, -1)])
        diffs = [vals[2 * n] - vals[2 * n + 1] for n in range(len(pairs))]
        return DiffResult(sum(w * d for (_, w), d in zip(pairs, diffs)) / h, h, False)
    except DomainError as exc:
        first_error = exc
    for sign in (1, -1):
        try:
            f0, f1, f2 = _evaluate(f, [p.shifted(i, sign * k * h) for k in (0, 1, 2)])
        except DomainError:
            continue
        return DiffResult(sign * (-3 * f0 + 4 * f1 - f2) / (2 * h), h, True)
    raise DomainError(
        f"stencil for d/d{p.names[i]} leaves the domain: {first_error}",
        getattr(first_error, "constraint", None),
    )


def partial(f, p: ParameterPoint, coord: str | int, cfg: DiffConfig = DEFAULT_DIFF):
    return derivative(f, p, coord, cfg).value


_MIXED4 = (
    (8.0, ((1, -2), (2, -1), (-2, 1), (-1, 2))),
    (-8.0, ((-1, -2), (-2, -1), (1, 2), (2, 1))),
    (-1.0, ((2, -2), (-2, 2))),
    (1.0, ((-2, -2), (2, 2))),
    (64.0, ((-1, -1), (1, 1))),
    (-64.0, ((1, -1), (-1, 1))),
)


def second_derivative(
    f: Callable[[ParameterPoint], float | np.ndarray],
    p: ParameterPoint,
    coord1: str | int,
    coord2: str | int,
    cfg: DiffConfig = DEFAULT_DIFF,
) -> DiffResult:
    i, j = sorted((p.index(coord1), p.index(coord2)))
    hi = cfg.step_for(p.values[i], 2)
    if i == j:
        if cfg.scheme == "central4":
            offsets, weights = (-2, -1, 0, 1, 2), (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12)
        else:
            offsets, weights = (-1, 0, 1), (1.0, -2.0, 1.0)
        try:
            vals = _evaluate(f, [p.shifted(i, k * hi) for k in offsets])
        except DomainError as exc:
            for sign in (1, -1):
                try:
                    vals = _evaluate(f, [p.shifted(i, sign * k * hi) for k in range(4)])
                except DomainError:
                    continue
                f0, f1, f2, f3 = vals
                return DiffResult((2 * f0 - 5 * f1 + 4 * f2 - f3) / hi**2, hi, True)
            raise DomainError(f"second-derivative stencil leaves the domain: {exc}",
                              exc.constraint) from exc
        return DiffResult(sum(w * v for w, v in zip(weights, vals)) / hi**2, hi, False)

    hj = cfg.step_for(p.values[j], 2)

    def at(a, b):
        return f(p.shifted(i, a * hi).shifted(j, b * hj))

    try:
        if cfg.scheme == "central4":
            total = 0.0
            for w, pairs in _MIXED4:
                total = total + w * sum(at(a, b) for a, b in pairs)
            return DiffResult(total / (144 * hi * hj), hi, False)
        val = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * hi * hj)
        return DiffResult(val, hi, False)
    except DomainError:
        pass
    # One-sided fallback: differentiate the first derivative along j.
    def d_i(q):
        return derivative(f, q, i, DiffConfig("central2", cfg.step, cfg.relative)).value

    res = derivative(d_i, p, j, DiffConfig("central2", hj, relative=False))
    return DiffResult(res.value, hi, True)


def second_partial(f, p: ParameterPoint, coord1, coord2, cfg: DiffConfig = DEFAULT_DIFF):
    return second_derivative(f, p, coord1, coord2, cfg).value
