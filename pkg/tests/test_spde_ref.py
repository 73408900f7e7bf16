import math

import numpy as np
import pytest

from abcflux.model_core import Configuration, EngineState, ModelParams, make_rng
from abcflux.spde_ref import (HydroState, SBEIntegrator, SpectralField, hydro_solve, ou_covariance,
                              ou_vs_particle, sbe_run, two_time_covariance)


def test_heat_flow_is_exact_without_noise():
    st = SpectralField(np.array([0.3, 1 + 1j, 0.5, 0.2j]))
    integ = SBEIntegrator(3, 1e-3, 0.0, 0.0)
    s = st
    for _ in range(100):
        s = integ.step(s, np.random.default_rng(0))
    want = st.coeffs * np.exp(-4 * math.pi ** 2 * np.arange(4) ** 2 * 0.1)
    assert np.abs(s.coeffs - want).max() < 1e-14
    assert s.time == pytest.approx(0.1)


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_white_noise_is_stationary(lam):
    rng = make_rng(21, 0)
    _, _, rec = sbe_run(16, 2e-4, lam, 0.5, 6.0, rng, record_every=20, modes=(1, 3, 8))
    burn = rec.shape[0] // 10
    var = (np.abs(rec[burn:]) ** 2).mean(axis=0)
    assert np.allclose(var, 0.5, rtol=0.15)


def test_ou_two_time_covariance():
    rng = make_rng(22, 0)
    dt = 1e-3
    _, _, rec = sbe_run(2, dt, 0.0, 1.0, 150.0, rng, record_every=1, modes=(1,))
    lags = np.array([0, 5, 10, 20])
    cov = two_time_covariance(rec[:, 0], lags)
    assert np.allclose(cov, ou_covariance(1.0, 1, lags * dt), atol=0.05)
    rows = ou_vs_particle(1.0, 1, lags * dt, cov, np.full(4, 0.02))
    assert all(abs(r[4] - 1) < 0.1 for r in rows)


def test_mean_mode_is_conserved():
    rng = make_rng(23, 0)
    init = SpectralField.white_noise(4, 1.0, rng, mean=0.7)
    fin, _, _ = sbe_run(4, 1e-3, 1.0, 1.0, 30.0, rng, init=init)
    assert fin.coeffs[0] == 0.7


def test_reflection_reverses_nonlinearity():
    # x -> -x maps coefficients to their conjugates and lambda to -lambda
    rng = make_rng(24, 0)
    c = SpectralField.white_noise(12, 1.0, rng)
    fwd = SBEIntegrator(12, 1e-4, 2.0, 0.0)
    back = SBEIntegrator(12, 1e-4, -2.0, 0.0)
    a, b = c, SpectralField(np.conj(c.coeffs))
    for _ in range(500):
        a, b = fwd.step(a, rng), back.step(b, rng)
    assert np.allclose(a.coeffs, np.conj(b.coeffs), atol=1e-12)
    assert not np.allclose(a.coeffs, SBEIntegrator(12, 1e-4, 0.0, 0.0).step(c, rng).coeffs)


def test_nonlinear_term_matches_direct_convolution():
    rng = make_rng(25, 0)
    M = 6
    c = SpectralField.white_noise(M, 1.0, rng).coeffs
    integ = SBEIntegrator(M, 1e-5, 1.5, 0.0)
    full = {k: (c[k] if k >= 0 else np.conj(c[-k])) for k in range(-M, M + 1)}
    for k in range(M + 1):
        sq = sum(full[p] * full[k - p] for p in range(-M, M + 1) if abs(k - p) <= M)
        assert integ.nonlinear(c)[k] == pytest.approx(1.5 * 2j * math.pi * k * sq, abs=1e-10)


def test_blow_up_and_step_size_guards():
    with pytest.raises(ValueError):
        SBEIntegrator(64, 1e-2, 1.0, 1.0)
    integ = SBEIntegrator(4, 1e-3, 0.0, 1.0)
    bad = SpectralField(np.array([0, np.nan, 0, 0, 0], complex))
    with pytest.raises(FloatingPointError):
        integ.step(bad, make_rng(0))


def test_real_space_round_trip():
    f = SpectralField(np.array([0.2, 0.5 - 0.1j, 0.0, 0.3j]))
    x = np.arange(8) / 8
    want = 0.2 + 2 * np.real((0.5 - 0.1j) * np.exp(2j * math.pi * x) + 0.3j * np.exp(6j * math.pi * x))
    assert np.allclose(f.real_space(8), want)


def test_hydro_constant_state_is_fixed():
    n = 64
    s = HydroState(np.full(n, 0.2), np.full(n, 0.5), (3.0, -1.0))
    out = hydro_solve(s, 0.01, 1 / n, 1 / n ** 2 / 4)
    assert np.abs(out.rho_A - 0.2).max() < 1e-14 and np.abs(out.rho_B - 0.5).max() < 1e-14


def test_hydro_heat_mode_decay_and_mass():
    n = 256
    x = (np.arange(n) + 0.5) / n
    pert = 0.05 * np.cos(2 * math.pi * x)
    s = HydroState(1 / 3 + pert, 1 / 3 - pert, (0.0, 0.0))
    t = 0.01
    out = hydro_solve(s, t, 1 / n, 1 / n ** 2 / 4)
    assert np.abs(out.rho_A - (1 / 3 + pert * math.exp(-4 * math.pi ** 2 * t))).max() < 1e-4
    s2 = HydroState(1 / 3 + pert, 1 / 3 - pert * np.sin(2 * math.pi * x), (5.0, -2.0))
    out2 = hydro_solve(s2, t, 1 / n, 1 / n ** 2 / 4)
    assert np.allclose(out2.masses, s2.masses, atol=1e-10)


def test_hydro_guards():
    s = HydroState(np.full(16, 0.2), np.full(16, 0.5), (0.0, 0.0))
    with pytest.raises(ValueError, match="CFL"):
        hydro_solve(s, 0.1, 1 / 16, 1.0)
    with pytest.raises(ValueError):
        hydro_solve(s, 0.1, 1 / 8, 1e-4)
    with pytest.raises(ValueError):
        HydroState(np.full(4, 0.7), np.full(4, 0.5), (0, 0))


@pytest.mark.slow
def test_particle_profiles_follow_hydrodynamics():
    N, t, n_traj, bins = 2048, 0.05, 6, 16
    p = ModelParams(N=N, gamma=1.0, E_A=12.0, E_B=-12.0)
    x = (np.arange(N) + 0.5) / N
    ra, rb = np.where(x < 0.5, 0.6, 0.1), np.where(x < 0.5, 0.2, 0.5)
    acc = np.zeros((2, N))
    for i in range(n_traj):
        rng = make_rng(55, i)
        u = rng.random(N)
        sp = np.where(u < ra, 0, np.where(u < ra + rb, 1, 2)).astype(np.int8)
        st = EngineState(p, Configuration(sp), rng)
        st.advance(t)
        acc[0] += st.species == 0
        acc[1] += st.species == 1
    acc /= n_traj
    M = 256
    xs = (np.arange(M) + 0.5) / M
    init = HydroState(np.where(xs < 0.5, 0.6, 0.1), np.where(xs < 0.5, 0.2, 0.5), (12.0, -12.0))
    pred = hydro_solve(init, t, 1 / M, 1 / M ** 2 / 4)
    flat = hydro_solve(HydroState(init.rho_A, init.rho_B, (0.0, 0.0)), t, 1 / M, 1 / M ** 2 / 4)
    coarse = [a.reshape(bins, -1).mean(1) for a in (acc[0], acc[1], pred.rho_A, pred.rho_B, flat.rho_A)]
    err_a = np.abs(coarse[0] - coarse[2]).mean()
    err_b = np.abs(coarse[1] - coarse[3]).mean()
    err_flat = np.abs(coarse[0] - coarse[4]).mean()
    print(f"L1 error A {err_a:.4f}, B {err_b:.4f}, without drift {err_flat:.4f}")
    assert err_a < 0.03 and err_b < 0.03
    assert err_flat > 1.5 * err_a
