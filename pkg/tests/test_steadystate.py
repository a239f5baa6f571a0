import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import integrate_covariance, integrate_covariance_ivp, random_config, two_mode_squeezer
from qmfs.dynamics import assemble_drift
from qmfs.errors import InstabilityError
from qmfs.model import collective, generalized, hz, load_preset, single
from qmfs.steadystate import (CovarianceMatrix, cross_correlation, duan_quantity, lyapunov,
                              parallel_map, quadrature_variance, solve_lyapunov, steady_state,
                              sweep, worker_count)

MECH = ("X1", "P1", "X2", "P2")


@pytest.mark.parametrize("gamma,n", [(1.0, 0.0), (0.3, 5.0), (2e3, 28.0)])
def test_single_damped_mode(gamma, n):
    A = -0.5 * gamma * np.eye(2)
    D = gamma * (n + 0.5) * np.eye(2)
    np.testing.assert_allclose(lyapunov(A, D), (n + 0.5) * np.eye(2), rtol=1e-13)


def test_uncoupled_device_thermal(device):
    V = steady_state(device)
    assert quadrature_variance(V, collective("+", "X")) == pytest.approx(28.5, rel=1e-12)
    assert quadrature_variance(V, single(1, "X")) == pytest.approx(32.5, rel=1e-12)


@pytest.mark.parametrize("n1,n2", [(0, 0), (2.7, 2.7), (32, 24), (53.5, 53.5)])
def test_thermal_collective_variance(device, n1, n2):
    mech = (dataclasses.replace(device.mech[0], n_thermal=n1),
            dataclasses.replace(device.mech[1], n_thermal=n2))
    V = steady_state(device.replace(mech=mech))
    for q in ("X+", "X-", "P+", "P-"):
        assert V.project(collective(q[1], q[0])) == pytest.approx((n1 + n2) / 2 + 0.5, rel=1e-12)
    assert cross_correlation(V, collective("+", "X"), collective("-", "P")) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_matches_time_integration(seed):
    rng = np.random.default_rng(seed)
    while True:
        model = assemble_drift(random_config(rng), check_stability=False)
        if np.max(model.eigenvalues().real) < -1e-6:
            break
    V = solve_lyapunov(model).values
    W = integrate_covariance(model.drift, model.diffusion)
    assert np.linalg.norm(V - W) / np.linalg.norm(V) < 1e-6


def test_propagator_oracle_against_ode():
    rng = np.random.default_rng(0)
    model = assemble_drift(random_config(rng))
    for t in (3.0, 40.0):
        a = integrate_covariance(model.drift, model.diffusion, t)
        b = integrate_covariance_ivp(model.drift, model.diffusion, t)
        assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-9


def test_marginal_stability_rejected(weak):
    slow = tuple(dataclasses.replace(m, gamma_intrinsic=hz(1.0), gamma_effective=hz(1.0))
                 for m in weak.mech)
    cfg = weak.replace(mech=slow, pump_tones=weak.pump_tones.scaled(0.0))
    with pytest.raises(InstabilityError, match="marginally stable"):
        solve_lyapunov(assemble_drift(cfg))


@pytest.mark.parametrize("preset", ["fig2_weak", "fig2_strong", "fig3_tomography", "fig4"])
def test_physical_state(preset):
    V = steady_state(load_preset(preset))
    assert V.uncertainty_min_eig() >= -1e-9
    assert np.all(V.symplectic_eigenvalues() >= 0.5 - 1e-9)


# -- composition ----------------------------------------------------------------

@pytest.mark.parametrize("phi", np.linspace(0, 2 * math.pi, 32, endpoint=False))
def test_generalized_composition_is_exact(tomo, phi):
    V = steady_state(tomo)
    for a, b in (("X+", "P-"), ("X+", "P+"), ("P+", "X-")):
        q = generalized(a, b, phi)
        direct = V.project(q.vector())
        assert quadrature_variance(V, q) == pytest.approx(direct, rel=1e-13, abs=1e-13)


def test_phi_zero_is_plain(tomo):
    V = steady_state(tomo)
    assert quadrature_variance(V, generalized("X+", "P-", 0.0)) == V.project(collective("+", "X"))


def test_cross_correlation_self_is_variance(tomo):
    V = steady_state(tomo)
    q = collective("-", "P")
    assert cross_correlation(V, q, q) == pytest.approx(quadrature_variance(V, q), rel=1e-14)


def test_bae_cross_correlation_negligible():
    V = steady_state(load_preset("fig3_tomography"))
    xp, pm = collective("+", "X"), collective("-", "P")
    assert abs(cross_correlation(V, xp, pm)) < 0.02 * quadrature_variance(V, xp)


# -- Duan ------------------------------------------------------------------------

def _mech_cov(M):
    return CovarianceMatrix(M, MECH)


def test_duan_vacuum_is_one():
    d = duan_quantity(_mech_cov(0.5 * np.eye(4)))
    assert d.value == 1.0
    assert d.margin_db == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=3.0))
def test_duan_two_mode_squeezed_vacuum(r):
    S = two_mode_squeezer(r)
    sigma = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])
    np.testing.assert_allclose(S @ sigma @ S.T, sigma, atol=1e-9 * math.cosh(r) ** 2)
    V = _mech_cov(0.5 * S @ S.T)
    assert duan_quantity(V).value == pytest.approx(math.exp(-2 * r), rel=1e-9)
    assert V.uncertainty_min_eig() >= -1e-9 * math.cosh(r) ** 2


# -- sweeps ------------------------------------------------------------------------

def test_sweep_measured_column_constant(bae):
    C = np.logspace(-1, math.log10(50), 12)
    rows = sweep([bae(c) for c in C], [collective("+", "X"), collective("+", "P")])
    x = np.array([r["X+"] for r in rows])
    np.testing.assert_allclose(x, 3.2, rtol=1e-10)
    p = np.array([r["P+"] for r in rows])
    assert np.all(np.diff(p) > 0)


def test_sweep_phi_interpolates(bae):
    C = 2.1
    phis = np.linspace(0, math.pi, 9)
    cfg = bae(C)
    rows = sweep([cfg] * len(phis), [generalized("X+", "P-", p) for p in phis])
    vals = [rows[k][str(generalized("X+", "P-", p))] for k, p in enumerate(phis)]
    V = steady_state(cfg)
    x, p = V.project(collective("+", "X")), V.project(collective("-", "P"))
    c2 = np.cos(phis / 2) ** 2
    np.testing.assert_allclose(vals, x * c2 + p * (1 - c2), rtol=1e-6)


def test_sweep_empty():
    assert sweep([], [collective("+", "X")]) == []


def test_sweep_reports_bad_rows(weak):
    bad = weak.replace(pump_tones=weak.pump_tones.with_phases((0, 0, 0, 0)).scaled(1.0))
    unstable = weak.replace(pump_tones=type(weak.pump_tones).uniform(hz(2e5), weak.detuning,
                                                                      blue_ratio=2.0))
    rows = sweep([bad, unstable], [collective("+", "X")])
    assert rows[0]["error"] == ""
    assert "unstable" in rows[1]["error"]
    assert math.isnan(rows[1]["X+"])


def test_parallel_map_order_and_threads(monkeypatch):
    assert parallel_map(lambda x: x * x, range(50), threads=4) == [x * x for x in range(50)]
    monkeypatch.setenv("QMFS_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("QMFS_THREADS", "0")
    assert worker_count() >= 1


def test_sweep_deterministic_across_threads(bae):
    cfgs = [bae(c) for c in (0.5, 2.0, 8.0, 20.0)]
    qs = [collective("+", "P"), generalized("X+", "P+", 1.0)]
    assert sweep(cfgs, qs, threads=1) == sweep(cfgs, qs, threads=4)


def test_residual_check_raises(monkeypatch, weak):
    from qmfs import steadystate
    from qmfs.errors import IllConditionedError
    model = assemble_drift(weak)
    monkeypatch.setattr(steadystate, "lyapunov", lambda A, D: np.eye(A.shape[0]))
    with pytest.raises(IllConditionedError, match="ill-conditioned"):
        steadystate.solve_lyapunov(model)


def test_refinement_recovers_perturbed_solve(monkeypatch, weak):
    from qmfs import steadystate
    model = assemble_drift(weak)
    exact = steadystate.solve_lyapunov(model).values
    real = steadystate.lyapunov
    calls = []

    def sloppy(A, D):
        calls.append(1)
        V = real(A, D)
        return V * (1 + 1e-6) if len(calls) == 1 else V

    monkeypatch.setattr(steadystate, "lyapunov", sloppy)
    V = steadystate.solve_lyapunov(model).values
    assert len(calls) == 2
    np.testing.assert_allclose(V, exact, rtol=1e-9, atol=1e-12 * np.max(np.abs(exact)))
