import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contact_mfg import AssumptionViolation
from contact_mfg.grid import GridMeasure, PeriodicGrid
from contact_mfg.model import (
    ContactModel,
    Coupling,
    Func1D,
    Theta,
    WrappedGaussian,
    action_bound,
    check_assumptions,
    compute_bounds,
    eval_H,
    eval_L,
    eval_partials,
    solve_a_m,
    theta_inverse,
)

from oracles import numeric_legendre, scalar_root_scan


def test_eval_H_examples(cosine):
    assert eval_H(cosine, 0.5, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert eval_H(cosine, 0.0, 0.0, 0.0) == 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(-50, 50), st.floats(-50, 50))
def test_evenness(x, u, p):
    a = Func1D(lambda x: 1.5 + 0.5 * np.sin(2 * np.pi * x), lambda x: np.pi * np.cos(2 * np.pi * x))
    m = ContactModel(Theta("sine", 1.0, 0.5), a, Func1D.cosine(2))
    assert eval_H(m, x, u, p) == eval_H(m, x, u, -p)
    assert eval_partials(m, x, u, 0.0)[2] == 0.0
    assert eval_L(m, x, u, 0.0) == pytest.approx(-eval_H(m, x, u, 0.0), abs=1e-12)


def test_partials_examples(cosine):
    hx, hu, hp = eval_partials(cosine, 0.5, 1.0, 0.0)
    assert abs(hx) < 1e-12 and hu == 1.0 and hp == 0.0
    assert eval_partials(cosine, 0.25, 0.0, 0.0)[0] == pytest.approx(-2 * np.pi)


def test_partials_match_finite_differences(rng):
    m = ContactModel(Theta("sine", 2.0, 0.7), Func1D(lambda x: 2 + np.cos(2 * np.pi * x), lambda x: -2 * np.pi * np.sin(2 * np.pi * x)), Func1D.cosine(3))
    for _ in range(20):
        x, u, p = rng.uniform(0, 1), rng.normal(), rng.normal()
        e = 1e-6
        hx, hu, hp = eval_partials(m, x, u, p)
        assert hx == pytest.approx((eval_H(m, x + e, u, p) - eval_H(m, x - e, u, p)) / (2 * e), rel=1e-6, abs=1e-6)
        assert hu == pytest.approx((eval_H(m, x, u + e, p) - eval_H(m, x, u - e, p)) / (2 * e), rel=1e-6)
        assert hp == pytest.approx((eval_H(m, x, u, p + e) - eval_H(m, x, u, p - e)) / (2 * e), rel=1e-6, abs=1e-8)


def test_eval_L(cosine, rng):
    assert eval_L(cosine, 0.0, 0.0, 0.0) == -1.0
    p_grid = np.linspace(-20, 20, 400001)
    for _ in range(10):
        x, u, v = rng.uniform(0, 1), rng.normal(), rng.uniform(-3, 3)
        num = numeric_legendre(lambda p: eval_H(cosine, x, u, p), v, p_grid)
        dp = p_grid[1] - p_grid[0]
        assert abs(num - eval_L(cosine, x, u, v)) <= dp**2


def test_theta_kinds():
    assert Theta().delta == Theta().lam == 1.0
    s = Theta("sine", 1.0, 0.5)
    assert (s.delta, s.lam) == (0.5, 1.5)
    assert Theta("arctan").delta == 0.0
    with pytest.raises(ValueError):
        Theta("sine", 1.0, 1.0)
    y = np.array([-3.0, 0.1, 7.0])
    assert np.allclose(s(theta_inverse(s, y)), y, atol=1e-12)
    with pytest.raises(AssumptionViolation):
        theta_inverse(Theta("arctan"), 2.0)


def test_kernel_is_a_density():
    k = WrappedGaussian(0.1)
    xs = np.arange(4096) / 4096
    assert np.sum(k(xs)) / 4096 == pytest.approx(1.0, abs=1e-12)
    e = 1e-6
    assert k.deriv(0.13) == pytest.approx((k(0.13 + e) - k(0.13 - e)) / (2 * e), rel=1e-6)
    assert k(0.9) == pytest.approx(k(0.1), abs=1e-14)


def test_coupling_grid_matches_pointwise(rng):
    g = PeriodicGrid(64)
    c = Coupling(Func1D.cosine(1, 0.2), 0.7, WrappedGaussian(0.08))
    m = GridMeasure.normalized(g, rng.random(64))
    direct = c.base(g.nodes) + 0.7 * np.array([np.dot(c.kernel(x - g.nodes), m.weights) for x in g.nodes])
    assert np.allclose(c.on_grid(g, m), direct, atol=1e-12)
    assert np.allclose(c.value(g.nodes, m), direct, atol=1e-12)


def test_coupling_constants_sampled(rng):
    g = PeriodicGrid(128)
    c = Coupling(Func1D.cosine(1, 0.2), 0.5, WrappedGaussian(0.1))
    for _ in range(50):
        w1, w2 = np.zeros(128), np.zeros(128)
        w1[rng.choice(128, 3, replace=False)] = rng.dirichlet(np.ones(3))
        w2[rng.choice(128, 2, replace=False)] = rng.dirichlet(np.ones(2))
        m1, m2 = GridMeasure.normalized(g, w1), GridMeasure.normalized(g, w2)
        F1 = c.on_grid(g, m1)
        assert np.max(np.abs(F1)) + np.max(np.abs(c.dx(g.nodes, m1))) <= c.f_infinity
        from contact_mfg.grid import d1_distance

        assert np.max(np.abs(F1 - c.on_grid(g, m2))) <= c.lip_in_m * d1_distance(m1, m2) + 1e-12


def test_check_assumptions(cosine, zero):
    rep = check_assumptions(cosine, zero, n_samples=50)
    assert rep.ok
    assert rep.estimates["delta"] == rep.estimates["lambda"] == 1.0
    assert rep.estimates["lip_in_m_sampled"] == 0.0
    bad = ContactModel(Theta("arctan"), cosine.kinetic, cosine.potential)
    rep = check_assumptions(bad, zero, n_samples=50)
    assert not rep.passed["H3"] and "u" in rep.witnesses["H3"]
    with pytest.raises(AssumptionViolation) as ei:
        check_assumptions(bad, zero, n_samples=50, strict=True)
    assert ei.value.assumption == "H3"
    neg = ContactModel(Theta(), Func1D.cosine(1), cosine.potential)
    rep = check_assumptions(neg, zero, n_samples=10)
    assert not rep.passed["H1"]
    with pytest.raises(ValueError):
        check_assumptions(cosine, zero, n_samples=0)


def test_solve_a_m_examples(cosine):
    g = PeriodicGrid(128)
    m = GridMeasure.uniform(g)
    assert solve_a_m(cosine, Coupling(), m) == pytest.approx(-1.0, abs=1e-12)
    assert solve_a_m(cosine, Coupling(Func1D.constant(0.3)), m) == pytest.approx(-0.7, abs=1e-12)


def test_solve_a_m_nonlinear_matches_scan():
    g = PeriodicGrid(128)
    m = GridMeasure.dirac(g, 0.3)
    model = ContactModel(Theta("sine", 1.0, 0.6), Func1D.constant(1.0), Func1D.cosine(1))
    c = Coupling(Func1D.cosine(2, 0.3), 0.4, WrappedGaussian(0.1))
    top = np.max(model.v_on(g) - c.on_grid(g, m))
    oracle = scalar_root_scan(lambda a: float(model.theta(a)) + top, -5, 5)
    assert solve_a_m(model, c, m, tol=1e-12) == pytest.approx(oracle, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 3))
def test_level_map_monotone(a1, gap):
    g = PeriodicGrid(64)
    model = ContactModel(Theta("sine", 1.0, 0.6), Func1D.constant(1.0), Func1D.cosine(1))
    F = np.zeros(64)
    s = lambda a: np.max(model.theta(a) + model.v_on(g) - F)
    assert s(a1 + gap) - s(a1) >= model.delta * gap - 1e-12


def test_bounds_cosine(cosine, zero):
    g = PeriodicGrid(128)
    b = compute_bounds(cosine, zero, g)
    assert b.d1_bound == pytest.approx(1.0)
    V = cosine.v_on(g)
    assert b.d2_lip == pytest.approx(0.5 + np.max(-float(cosine.theta(-1.0)) - V))
    # D_1 dominates the admissible levels of extreme couplings
    for c in (Coupling(Func1D.constant(0.0)), Coupling(Func1D.cosine(1, 0.4), 0.3, WrappedGaussian(0.1))):
        bb = compute_bounds(cosine, c, g)
        for x0 in (0.0, 0.25, 0.5):
            assert abs(solve_a_m(cosine, c, GridMeasure.dirac(g, x0))) <= bb.d1_bound


def test_e_tilde_monotone(cosine, zero):
    g = PeriodicGrid(128)
    ts = [0.25, 0.5, 1.0, 2.0]
    e_tilde = [action_bound(cosine, zero, g, t) / t for t in ts]
    assert all(x >= y for x, y in zip(e_tilde, e_tilde[1:]))
    assert compute_bounds(cosine, zero, g, 1.0).e_t == pytest.approx(1 / 8 + 2)
    with pytest.raises(ValueError):
        compute_bounds(cosine, zero, g, 0.0)
