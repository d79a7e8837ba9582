import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgeo.analysis import (
    damped_model,
    fit_damped_trajectory,
    normalized_curvature,
    track_extrema,
    curvature_grid,
)
from qgeo.errors import DegenerateNormalization
from qgeo.models import ChainModel, HOModel, extremal_b
from qgeo.params import ParameterPoint
from qgeo.qgt import tqgt

TRUE = (-0.1, 0.02, -2.0, 0.07)
TIMES = np.round(np.arange(10, 20.0001, 0.1), 10)


def planted(t):
    return 1 + 0.1 * math.sin(2 * t) * math.exp(-0.05 * t)


# ---------------------------------------------------------------- tracking


def test_planted_minimum_is_recovered():
    base = ParameterPoint.make(0.0, B=1.0)
    traj = track_extrema(lambda p: (p["B"] - planted(p.t)) ** 2, base, np.linspace(0, 3, 13), "B", (0.7, 1.3))
    ts, xs = traj.track("min")
    assert len(ts) == 13 and not traj.missing
    assert np.allclose(xs, [planted(t) for t in ts], atol=1e-8)
    assert np.all(np.diff(ts) > 0)
    for e in traj.samples:
        assert e.bracket[0] <= e.location <= e.bracket[1]
        assert 0.7 <= e.location <= 1.3


def test_following_gives_the_same_track():
    base = ParameterPoint.make(0.0, B=1.0)

    def q(p):
        return (p["B"] - planted(p.t)) ** 2

    times = np.linspace(0, 3, 31)
    a = track_extrema(q, base, times, "B", (0.7, 1.3)).track("min")[1]
    b = track_extrema(q, base, times, "B", (0.7, 1.3), follow=0.05).track("min")[1]
    assert np.allclose(a, b, atol=1e-8)


def test_oscillator_metric_minimum_sits_at_extremal_width():
    ho = HOModel()
    traj = track_extrema(lambda p: tqgt(ho, p, ("X",)).g[0, 0], ho.point(10.0, X=1, W=1, B=1),
                         [10.0], "B", (0.5, 1.8))
    (loc,) = traj.track("min")[1]
    assert loc == pytest.approx(extremal_b(10.0, 1.0)[0], abs=1e-6)


def test_maximum_between_two_minima_is_recorded():
    base = ParameterPoint.make(0.0, x=0.0)
    traj = track_extrema(lambda p: (p["x"] ** 2 - 1) ** 2, base, [0.0, 1.0], "x", (-2, 2),
                         kinds=("min", "max"), samples=41)
    kinds = [e.kind for e in traj.samples if e.t == 0.0]
    assert kinds == ["min", "max", "min"]
    locs = [e.location for e in traj.samples if e.t == 0.0]
    assert np.allclose(locs, [-1, 0, 1], atol=1e-7)


def test_flat_quantity_is_missing_not_fatal():
    traj = track_extrema(lambda p: 3.0, ParameterPoint.make(0.0, x=0.0), [0.0, 0.5], "x", (-1, 1))
    assert traj.missing == (0.0, 0.5) and not traj.samples


def test_tracking_rejects_bad_input():
    base = ParameterPoint.make(0.0, x=0.0)
    with pytest.raises(ValueError):
        track_extrema(lambda p: p["x"] ** 2, base, [1.0, 0.5], "x", (-1, 1))
    with pytest.raises(ValueError):
        track_extrema(lambda p: p["x"] ** 2, base, [0.0], "x", (-1, 1), kinds=("saddle",))


@settings(max_examples=15, deadline=None)
@given(a=st.floats(0.1, 50), b=st.floats(-100, 100))
def test_tracking_is_affine_invariant(a, b):
    base = ParameterPoint.make(0.0, B=1.0)
    times = [0.0, 0.7, 1.9]

    def q(p):
        x = p["B"] - planted(p.t)
        return x * x + 0.3 * x**3

    ref = track_extrema(q, base, times, "B", (0.7, 1.3)).track("min")[1]
    moved = track_extrema(lambda p: a * q(p) + b, base, times, "B", (0.7, 1.3)).track("min")[1]
    assert np.allclose(ref, moved, atol=1e-6)


# ---------------------------------------------------------------- fitting


def test_noise_free_round_trip():
    ys = damped_model(TRUE, TIMES)
    fit = fit_damped_trajectory(TIMES, ys, frequencies=(1.0,))
    assert np.allclose(fit.params, TRUE, atol=1e-6)
    assert fit.r2 > 1 - 1e-12
    assert fit.converged and fit.iterations > 0


def test_residual_is_orthogonal_to_jacobian():
    rng = np.random.default_rng(2)
    ys = damped_model(TRUE, TIMES) + rng.normal(scale=2e-3, size=len(TIMES))
    fit = fit_damped_trajectory(TIMES, ys, frequencies=(1.0,))
    assert fit.converged
    r = fit(TIMES) - ys
    h = 1e-7
    jac = np.array([(damped_model(fit.params + h * e, TIMES) - damped_model(fit.params - h * e, TIMES)) / (2 * h)
                    for e in np.eye(4)])
    assert np.linalg.norm(jac @ r) / (np.linalg.norm(jac) * np.linalg.norm(r)) < 1e-6
    assert 0.9 < fit.r2 < 1


def test_fit_tends_to_one():
    fit = fit_damped_trajectory(TIMES, damped_model(TRUE, TIMES))
    assert fit.c3 > 0
    assert fit(1e4) == pytest.approx(1, abs=1e-12)


def test_opposite_frequency_sign_is_found():
    c = (0.05, 1.0, 3.4, 0.02)
    fit = fit_damped_trajectory(TIMES, damped_model(c, TIMES), frequencies=(1.7,))
    assert fit.r2 > 1 - 1e-10
    # c0 sin(c1 + c2 t) is unchanged by (c0, c1, c2) -> (-c0, -c1, -c2)
    assert abs(fit.c2) == pytest.approx(3.4, abs=1e-6)


def test_hyperbolic_family():
    c = (0.02, 0.1, 0.15, 0.1)
    ys = damped_model(c, TIMES, "sinh-damped")
    fit = fit_damped_trajectory(TIMES, ys, "sinh-damped", frequencies=(0.1,))
    assert fit.family == "sinh-damped"
    assert fit.r2 > 1 - 1e-8


def test_fit_input_checks():
    with pytest.raises(ValueError):
        fit_damped_trajectory(TIMES[:7], np.ones(7) + TIMES[:7])
    with pytest.raises(ValueError):
        fit_damped_trajectory(TIMES, np.ones(len(TIMES)))
    with pytest.raises(ValueError):
        fit_damped_trajectory(TIMES, damped_model(TRUE, TIMES), family="cosh")


# ---------------------------------------------------------------- normalization


def test_unit_range():
    nc = normalized_curvature([2.5, 3.5])
    assert nc.values.max() - nc.values.min() == 1
    assert (nc.max, nc.min) == (3.5, 2.5)


def test_constant_values_cannot_be_normalized():
    with pytest.raises(DegenerateNormalization):
        normalized_curvature([-16.0, -16.0, -16.0])


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.01, 100), b=st.floats(-1e3, 1e3))
def test_normalization_is_affine_invariant(a, b):
    r = np.array([-31.0, -32.5, -30.2, -35.0, -29.9])
    x = normalized_curvature(r).values
    y = normalized_curvature(a * r + b).values
    shift = y - x
    assert np.allclose(shift, shift[0], atol=1e-12 * max(1, abs(b) / a))


def test_normalized_and_raw_extremum_coincide():
    ch = ChainModel([[2.0, -1.0], [-1.0, 2.0]])
    grid = np.linspace(0.9, 1.05, 31)
    raw = curvature_grid(ch, ch.point(12.0, X=1, Y=1, Z=1, B1=1, B2=1), ("X", "B2"), "B2", grid)
    nc = normalized_curvature(raw)
    assert np.argmax(nc.values) == np.argmax(raw)
    assert np.argmin(nc.values) == np.argmin(raw)
    assert nc.values.max() - nc.values.min() == pytest.approx(1, abs=1e-15)
