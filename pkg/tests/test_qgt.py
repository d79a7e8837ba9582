import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

import oracles
from qgeo.models import ChainModel, HOModel, HOTDFModel, IHOModel, b_solutions, extremal_b, overlap_distance
from qgeo.params import DiffConfig, partial
from qgeo.qgt import berry_connection, energy_dispersion, gauge_check, moment_qgt, sampled_qgt, tqgt

A2 = [[2.0, -1.0], [-1.0, 2.0]]
HO, IHO, CHAIN = HOModel(), IHOModel(), ChainModel(A2)


def random_points(rng, count):
    """Sample points of every model away from bifurcations."""
    pts = []
    for _ in range(count):
        t = rng.uniform(0, 4)
        pts.append((HO, HO.point(t, X=rng.uniform(0.3, 2), W=rng.uniform(0.3, 2), B=rng.uniform(0.3, 3))))
        pts.append((IHO, IHO.point(t, X=-rng.uniform(0.3, 2), W=rng.uniform(0.3, 2), B=rng.uniform(0.3, 3))))
        pts.append((HOTDFModel(rng.integers(0, 4)),
                    HOTDFModel().point(t, A=rng.uniform(0, 0.8), omega0=rng.uniform(0.6, 2))))
        y = rng.choice([rng.uniform(0, 1.2), rng.uniform(1.5, 1.6), rng.uniform(1.9, 2.5)])
        pts.append((CHAIN, CHAIN.point(t, X=1, Y=y, Z=1, B1=rng.uniform(0.3, 3), B2=rng.uniform(0.3, 3))))
    return pts


# ---------------------------------------------------------------- examples


def test_ground_state_metric():
    r = tqgt(HO, HO.point(0.0, X=1, W=1, B=1), ("X", "W"))
    assert np.allclose(r.g, np.array([[1, -1], [-1, 1]]) / 32, atol=1e-15)
    assert r.labels == ("X", "W")


def test_time_component_example():
    r = tqgt(HO, HO.point(0.37, X=1, W=1, B=2), ("t",))
    assert r.g[0, 0] == pytest.approx(9 / 32, abs=1e-14)


def test_vanishing_components():
    r = tqgt(HO, HO.point(1.1, X=1.3, W=0.7, B=1.8))
    assert abs(r.g[0, 3]) < 1e-14
    r = tqgt(CHAIN, CHAIN.point(1.1, X=1, Y=0.6, Z=1, B1=1.8, B2=0.5))
    assert abs(r.g[0, 4]) < 1e-14 and abs(r.g[0, 5]) < 1e-14


def test_energy_dispersion_examples():
    assert energy_dispersion(HO, HO.point(2.0, X=1, W=1, B=1)) == pytest.approx(0, abs=1e-15)
    assert energy_dispersion(IHO, IHO.point(0.8, X=-1, W=1, B=1)) == pytest.approx(0.5, abs=1e-12)
    for t in (0.0, 1.0, 3.0):
        val = energy_dispersion(HOTDFModel(0), HOTDFModel().point(t, A=1, omega0=1))
        assert val == pytest.approx(0.125, abs=1e-14)


def test_result_structure():
    r = tqgt(CHAIN, CHAIN.point(0.5, X=1, Y=0.4, Z=1, B1=1.2, B2=0.7))
    assert np.array_equal(r.g, r.g.T)
    assert np.array_equal(r.F, -r.F.T)
    assert np.all(np.diag(r.F) == 0)
    assert np.max(np.abs(r.Q - r.Q.conj().T)) < 1e-12
    assert r.component("X", "Y") == r.g[1, 2]


# ---------------------------------------------------------------- independent oracles


@pytest.mark.parametrize("args", [(0.7, 1.3, 0.8, 2.0), (0.4, -1.1, 0.9, 0.6), (1.9, 0.5, 1.7, 0.4)])
def test_oscillator_tensor_matches_quadrature(args):
    t, X, W, B = args
    model = HO if X > 0 else IHO
    g, F, A = oracles.oscillator_qgt(t, X, W, B)
    r = tqgt(model, model.point(t, X=X, W=W, B=B))
    assert np.allclose(r.g, g, atol=1e-8)
    assert np.allclose(r.F, F, atol=1e-8)
    assert np.allclose(berry_connection(model, model.point(t, X=X, W=W, B=B)).values, A, atol=1e-8)


def test_chain_tensor_matches_quadrature():
    t, X, Y, Z, Bs = 0.6, 1.0, 0.8, 1.0, (1.3, 0.7)
    p = CHAIN.point(t, X=X, Y=Y, Z=Z, B1=Bs[0], B2=Bs[1])
    u_min = float(np.min(CHAIN.profile(p).u))
    g, F, A = oracles.chain_qgt(t, X, Y, Z, Bs, A2, u_min)
    r = tqgt(CHAIN, p)
    assert np.allclose(r.g, g, atol=1e-6)
    assert np.allclose(r.F, F, atol=1e-6)


def test_moment_and_sampled_forms_agree_with_mode_sums():
    for model, p in random_points(np.random.default_rng(3), 3):
        if not model.gaussian:
            continue
        r = tqgt(model, p)
        for q, _ in (moment_qgt(model, p), sampled_qgt(model, p)):
            assert np.allclose(q.real, r.g, atol=1e-7, rtol=1e-6)
            assert np.allclose(-2 * q.imag, r.F, atol=1e-7, rtol=1e-6)


def test_analytic_and_finite_difference_modes_agree():
    worst = 0.0
    for model, p in random_points(np.random.default_rng(11), 50):
        a = tqgt(model, p)
        f = tqgt(model, p, mode="finite-diff")
        scale = max(np.max(np.abs(a.g)), np.max(np.abs(a.F)), 1e-300)
        worst = max(worst, np.max(np.abs(a.g - f.g)) / scale, np.max(np.abs(a.F - f.F)) / scale)
    assert worst < 1e-6


# ---------------------------------------------------------------- connection and gauge


def test_real_state_has_zero_connection():
    a = berry_connection(HO, HO.point(0.0, X=1, W=1, B=1)).values
    assert a[1:] == pytest.approx(np.zeros(3), abs=1e-15)


def test_ground_state_time_connection():
    a = berry_connection(HO, HO.point(0.8, X=1, W=1, B=1))
    assert a.values[0] == pytest.approx(0.5, abs=1e-14)
    # <psi|d_t psi> by quadrature of the wavefunction
    q, dq = oracles.grid_1d(1.0)
    h = 1e-5
    dpsi = (oracles.psi_oscillator(q, 0.8 + h, 1, 1, 1) - oracles.psi_oscillator(q, 0.8 - h, 1, 1, 1)) / (2 * h)
    inner = np.sum(oracles.psi_oscillator(q, 0.8, 1, 1, 1).conj() * dpsi) * dq
    assert -inner.imag == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("model, p", [
    (HO, HO.point(1.0, X=1, W=1, B=2)),
    (IHO, IHO.point(0.6, X=-0.9, W=1.2, B=0.7)),
    (CHAIN, CHAIN.point(0.6, X=1, Y=0.5, Z=1, B1=1.4, B2=0.8)),
])
def test_curvature_is_exterior_derivative_of_connection(model, p):
    F = tqgt(model, p).F

    def comp(i):
        return lambda q: berry_connection(model, q).values[i]

    for i in range(p.dim):
        for j in range(i + 1, p.dim):
            curl = partial(comp(i), p, j) - partial(comp(j), p, i)
            assert curl == pytest.approx(F[i, j], abs=1e-6)


def test_gauge_constant_and_linear_phases():
    p = HO.point(0.9, X=1.2, W=0.8, B=1.5)
    rep = gauge_check(HO, p, lambda q: 2.5)
    assert rep.max_dQ == 0 and np.all(rep.dA == 0)
    rep = gauge_check(HO, p, lambda q: 3 * q.t)
    assert rep.dA[0] == pytest.approx(-3, abs=1e-8)
    assert rep.max_dQ < 1e-8


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0, 3), x=st.floats(0.3, 2), b=st.floats(0.3, 3),
       a=st.floats(-2, 2), c=st.floats(-2, 2), k=st.floats(0.1, 2))
def test_gauge_invariance_under_random_phases(t, x, b, a, c, k):
    def alpha(q):
        b = q["B"] if "B" in q.names else q["B1"]
        return a * math.sin(k * q.t * q["X"]) + c * b**2 + q.t * q["X"]

    for model, p in [
        (HO, HO.point(t, X=x, W=1.1, B=b)),
        (IHO, IHO.point(t, X=-x, W=0.9, B=b)),
        (CHAIN, CHAIN.point(t, X=1, Y=0.3, Z=1, B1=b, B2=1 / b)),
    ]:
        rep = gauge_check(model, p, alpha)
        assert rep.max_dQ < 1e-7
        assert rep.max_dA_error < 1e-6


# ---------------------------------------------------------------- identities


@settings(max_examples=60, deadline=None)
@given(e_over_w=st.floats(0.51, 8.0), w=st.floats(0.2, 3.0), t=st.floats(0, 5))
def test_energy_pair_shares_dispersion(e_over_w, w, t):
    e = e_over_w * w
    bp, bm = b_solutions(e, w)
    target = 2 * e * e - w * w / 2
    g_p = energy_dispersion(HO, HO.point(t, X=w * w, W=1, B=bp))
    g_m = energy_dispersion(HO, HO.point(t, X=w * w, W=1, B=bm))
    assert abs(g_p - g_m) <= 1e-10 * max(1, target)
    assert g_p == pytest.approx(target, abs=1e-10 * max(1, target))


def test_unit_frequency_dispersion_value():
    bp, bm = b_solutions(1.25, 1.0)
    for b in (bp, bm):
        assert energy_dispersion(HO, HO.point(0.3, X=1, W=1, B=b)) == pytest.approx(2 * 1.25**2 - 0.5, abs=1e-12)


def test_unit_width_is_stationary():
    p0 = HO.point(0.1, X=1.4, W=0.6, B=1)
    block0 = tqgt(HO, p0, ("X", "W")).g
    for t in np.linspace(0.1, 10, 12):
        r = tqgt(HO, HO.point(t, X=1.4, W=0.6, B=1))
        assert np.max(np.abs(r.g[0])) < 1e-10 and np.max(np.abs(r.F[0])) < 1e-10
        assert np.allclose(r.g[1:3, 1:3], block0, atol=1e-10)


def test_curvature_signs_flip_across_unit_width():
    t = 0.9
    lo = tqgt(HO, HO.point(t, X=1, W=1, B=0.8)).F
    hi = tqgt(HO, HO.point(t, X=1, W=1, B=1.25)).F
    for i, j in [(0, 1), (0, 2), (0, 3), (1, 2)]:
        assert lo[i, j] * hi[i, j] < 0


@pytest.mark.parametrize("wt", [math.pi / 4, 1.0, 2.3, 5.0])
def test_parameter_width_curvature_vanishes_at_extremal_widths(wt):
    bp, bm = extremal_b(wt, 1.0)

    def f(b, j):
        return tqgt(HO, HO.point(wt, X=1, W=1, B=b)).F[j, 3]

    bs = np.geomspace(0.05, 20, 400)
    roots = {}
    for j in (1, 2):
        vals = np.array([f(b, j) for b in bs])
        (k,) = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
        roots[j] = brentq(f, bs[k], bs[k + 1], args=(j,), xtol=1e-12)
    assert roots[1] == pytest.approx(bp, abs=1e-6)
    assert roots[2] == pytest.approx(bm, abs=1e-6)


@pytest.mark.parametrize("model, p", [
    (HO, HO.point(0.9, X=1.1, W=0.9, B=1.4)),
    (IHO, IHO.point(0.5, X=-0.7, W=1.3, B=0.8)),
    (HOTDFModel(0), HOTDFModel().point(0.4, A=0.6, omega0=1.2)),
    (CHAIN, CHAIN.point(0.7, X=1, Y=0.5, Z=1, B1=1.2, B2=0.9)),
])
def test_infinitesimal_fidelity_matches_metric(model, p):
    rng = np.random.default_rng(5)
    g = tqgt(model, p).g
    for _ in range(5):
        d = rng.normal(size=p.dim)
        d *= 1e-3 / np.linalg.norm(d)
        dl2 = float(d @ g @ d)
        assert abs(overlap_distance(model, p, p.moved(d)) - dl2) / dl2 < 1e-2


def test_near_bifurcation_is_flagged_not_rejected():
    r = tqgt(HO, HO.point(1.0, X=1e-9, W=1, B=1))
    assert r.flags and np.all(np.isfinite(r.g))


def test_step_override():
    p = HO.point(0.7, X=1.2, W=0.8, B=1.3)
    a = tqgt(HO, p)
    f = tqgt(HO, p, mode="finite-diff", cfg=DiffConfig("central4", 1e-3))
    assert np.allclose(a.g, f.g, rtol=1e-6, atol=1e-10)
    with pytest.raises(ValueError):
        tqgt(HO, p, mode="symbolic")
