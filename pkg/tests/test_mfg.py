import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contact_mfg.grid import GridFunction, GridMeasure, PeriodicGrid, d1_distance
from contact_mfg.mfg import (
    EquilibriumConfig,
    best_response,
    continuity_residual,
    hj_residual,
    iterate_equilibrium,
)
from contact_mfg.model import ContactModel, Coupling, WrappedGaussian
from contact_mfg.weak_kam import scheme_tolerance, solve_u_minus

from oracles import single_atom_consistency

G = PeriodicGrid(128)
U = GridMeasure.uniform(G)
COS = ContactModel.cosine()
ZERO = Coupling()


def fourier_kernel(d, eps, modes=60):
    k = np.arange(1, modes + 1)
    return 1.0 + 2.0 * np.sum(np.exp(-2 * np.pi**2 * k**2 * eps**2) * np.cos(2 * np.pi * np.multiply.outer(d, k)), axis=-1)


def test_config_validation():
    for bad in (dict(selection="x"), dict(damping=0.0), dict(damping=1.5), dict(tol_m=0.0), dict(tol_mass=-1.0), dict(max_outer=0)):
        with pytest.raises(ValueError):
            EquilibriumConfig(**bad)
    cfg = EquilibriumConfig()
    assert [cfg.alpha(k) for k in range(3)] == [1.0, 0.5, 1 / 3]
    assert EquilibriumConfig(damping=0.3).alpha(7) == 0.3
    assert cfg.tol_m_for(G) == pytest.approx(G.h / 10)
    assert cfg.tol_m_for(PeriodicGrid(2**20)) == 1e-6


def test_flat_model_uniform_fixed_point(flat):
    res = iterate_equilibrium(U, flat, ZERO)
    assert res.converged and res.iterations == 1
    assert res.d1_gap == 0.0 and res.support_leak == 0.0
    assert np.allclose(res.m.weights, 1 / 128)
    assert res.continuity_residual <= 1e-12


def test_cosine_no_coupling_dirac_at_zero():
    res = iterate_equilibrium(U, COS, ZERO)
    assert res.converged
    assert res.m.support.tolist() == [0]
    assert res.m.weights[0] == pytest.approx(1.0)
    assert res.hj_residual <= scheme_tolerance(COS, ZERO, G)
    assert res.continuity_residual <= 1e-10
    assert res.support_leak <= 1e-3


def test_best_response_is_idempotent_at_equilibrium():
    res = iterate_equilibrium(U, COS, ZERO)
    br = best_response(res.m, COS, ZERO)
    assert d1_distance(br.measure, res.m) <= EquilibriumConfig().tol_m_for(G)


def test_attractive_coupling_matches_graph_oracle():
    n, eps, beta = 256, 0.1, -0.5
    grid = PeriodicGrid(n)
    c = Coupling(None, beta, WrappedGaussian(eps))
    res = iterate_equilibrium(GridMeasure.uniform(grid), COS, c)
    assert res.converged
    x = grid.nodes
    V = np.cos(2 * np.pi * x)
    oracle = single_atom_consistency(V, lambda j: beta * fourier_kernel(x - x[j], eps), np.ones(n), n)
    atoms = res.m.support.tolist()
    assert len(atoms) == 1 and atoms[0] in oracle
    assert res.continuity_residual <= 1e-10
    assert res.support_leak <= 1e-3


def test_trace_and_nonconvergence_reporting():
    c = Coupling(None, 0.5, WrappedGaussian(0.1))
    res = iterate_equilibrium(U, COS, c, EquilibriumConfig(max_outer=5))
    assert not res.converged and res.iterations == 5 and len(res.trace) == 5
    assert [t["k"] for t in res.trace] == list(range(5))
    rep = json.loads(res.to_json())
    assert set(rep) >= {"converged", "iterations", "d1_gap", "support_leak", "hj_residual", "continuity_residual", "kset", "trace"}


def test_to_json_file(tmp_path):
    res = iterate_equilibrium(U, COS, ZERO)
    res.to_json(tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["kset"] == [0]


def test_residuals_detect_wrong_pair():
    good = solve_u_minus(COS, ZERO, U).u_minus
    bad = GridFunction(G, good.values + 0.1)
    assert hj_residual(bad, COS, ZERO, U) > 0.09
    assert hj_residual(good, COS, ZERO, U) <= scheme_tolerance(COS, ZERO, G)
    m = GridMeasure.dirac(G, 0.2)
    assert continuity_residual(good, m, COS, ZERO) > 0.1
    with pytest.raises(ValueError):
        continuity_residual(good, m, COS, modes=0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 127), st.floats(0.0, 1.0))
def test_continuity_vanishes_on_critical_points(j, w):
    # flux H_p = a*Du vanishes on a constant u whatever the measure
    m = U.mix(GridMeasure.dirac(G, G.nodes[j]), w)
    u = GridFunction(G, np.full(128, -1.0))
    assert continuity_residual(u, m, COS) == 0.0


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 1.0))
def test_equilibrium_stable_under_mixing(alpha):
    # a mixture of the equilibrium with the uniform measure still leads back to it
    eq = iterate_equilibrium(U, COS, ZERO).m
    m0 = eq.mix(U, alpha)
    res = iterate_equilibrium(m0, COS, ZERO)
    assert res.converged and res.kset.indices.tolist() == [0]
    assert res.m.weights[0] >= 1 - 1e-3
