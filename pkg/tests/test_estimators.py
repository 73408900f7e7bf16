import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abcflux import estimators as est
from abcflux.fields import BlockAverageSpec, field_weights
from abcflux.mode_coupling import normal_mode_spec
from abcflux.model_core import ModelParams, make_rng, sample_product_measure, simulate


def _path_integral(log, init, t, integrand, breaks=()):
    """Exact time integral of integrand(species, s) along a piecewise-constant path.

    ``breaks`` lists extra times where the integrand changes (frame shifts).
    """
    cuts = np.union1d(np.concatenate([log.times[log.times < t], np.asarray(breaks, float)]), [0.0, t])
    cuts = cuts[(cuts >= 0) & (cuts <= t)]
    arr = np.array(init.species, copy=True)
    n = arr.size
    ev = 0
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        while ev < len(log) and log.times[ev] <= lo:
            x = log.bonds[ev]
            y = (x + 1) % n
            arr[x], arr[y] = arr[y], arr[x]
            ev += 1
        total = total + integrand(arr, 0.5 * (lo + hi)) * (hi - lo)
    return total


def _block(vals, offs, wt):
    n = vals.size
    return np.array([np.dot(wt, vals[(x + offs) % n]) for x in range(n)])


def test_batch_means():
    x = np.arange(10.0)
    m, e = est.batch_means(x)
    assert m == 4.5 and e == pytest.approx(np.std(x, ddof=1) / math.sqrt(10))
    m2, e2 = est.batch_means(x, n_batches=5)
    assert m2 == 4.5 and e2 == pytest.approx(np.std([0.5, 2.5, 4.5, 6.5, 8.5], ddof=1) / math.sqrt(5))
    with pytest.raises(ValueError):
        est.batch_means([1.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2 ** 31))
def test_dft_inverse_and_plancherel(N, seed):
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=N) + 1j * rng.normal(size=N)
    psi = rng.normal(size=N)
    assert np.allclose(est.idft(est.dft(phi)), phi)
    assert est.plancherel_gap(phi, psi) < 1e-12 * max(1.0, np.abs(phi).max() * np.abs(psi).max())
    x = np.arange(N)
    F = est.dft(phi)
    k = int(rng.integers(-N, N))
    assert F[k] == pytest.approx(np.mean(phi * np.exp(-2j * math.pi * k * x / N)))


def test_kernel_transform_matches_direct_sum():
    N = 60
    for spec in (BlockAverageSpec(side="left", width=7), BlockAverageSpec(side="right", eps=0.2, kernel="smooth")):
        offs, wt = spec.weights(N)
        ks = [-3, 0, 1, 5]
        want = [np.sum(wt * np.exp(-2j * math.pi * k * offs / N)) for k in ks]
        assert np.allclose(est.kernel_transform(spec, N, ks), want)
        assert est.kernel_transform(spec, N, [0])[0] == pytest.approx(1.0)


def test_smooth_kernel_transform_decays_fast():
    spec = BlockAverageSpec(side="right", eps=0.1, kernel="smooth")
    N = 4096
    lo, hi = np.arange(20, 60), np.arange(100, 200)
    smooth = [np.abs(est.kernel_transform(spec, N, k)).mean() for k in (lo, hi)]
    flat = [np.abs(est.kernel_transform(BlockAverageSpec(side="right", eps=0.1), N, k)).mean() for k in (lo, hi)]
    assert smooth[1] < 0.05 * flat[1]
    # cubic against linear decay of the envelope
    assert smooth[1] / smooth[0] < 0.5 * flat[1] / flat[0]


@pytest.mark.parametrize("alpha,beta", [("A", "B"), ("A", "A")])
def test_bg_residual_matches_path_oracle(alpha, beta):
    N, t = 24, 0.02
    p = ModelParams(N=N, gamma=0.5, E_A=2.0, E_B=2.0)
    al, be = "ABC".index(alpha), "ABC".index(beta)
    widths = [2, 5]
    weight = np.exp(2j * math.pi * np.arange(N) / N)
    res = est.bg_residual(p, alpha, beta, weight, widths, t, 2, seed=17)
    chi = 2 / 3 * (1 - 1 / 3)
    for i in range(2):
        rng = make_rng(17, i)
        init = sample_product_measure(1 / 3, 1 / 3, N, rng)
        log = simulate(p, init, t, rng=rng)
        vals = []
        for L in widths:
            r_off, r_wt = BlockAverageSpec(side="right", width=L).weights(N)
            l_off, l_wt = BlockAverageSpec(side="left", width=L).weights(N)

            def integrand(s, _):
                a = (s == al) - 1 / 3
                b = (s == be) - 1 / 3
                local = a * np.roll(b, -1)
                if al != be:
                    repl = _block(b, r_off, r_wt) * _block(a, l_off, l_wt)
                else:
                    repl = _block(a, r_off, r_wt) ** 2 - chi / L
                return np.sum(weight * (local - repl))

            vals.append(abs(_path_integral(log, init, t, integrand)) ** 2)
        if i == 0:
            first = vals
        else:
            second = vals
    expect = (np.array(first) + np.array(second)) / 2
    assert np.allclose(res.lhs, expect, rtol=1e-9)


def test_bg_residual_smooth_matches_path_oracle():
    N, t = 24, 0.02
    p = ModelParams(N=N, gamma=0.5, E_A=2.0, E_B=2.0)
    eps_list = [0.2, 0.125]
    res = est.bg_residual_smooth(p, "A", "B", eps_list, t, 2, seed=5, k_cut=1000)
    weight = np.exp(2j * math.pi * np.arange(N) / N)
    out = np.zeros(len(eps_list))
    for i in range(2):
        rng = make_rng(5, i)
        init = sample_product_measure(1 / 3, 1 / 3, N, rng)
        log = simulate(p, init, t, rng=rng)
        for g, eps in enumerate(eps_list):
            r_off, r_wt = BlockAverageSpec(side="right", eps=eps, kernel="smooth").weights(N)
            l_off, l_wt = BlockAverageSpec(side="left", eps=eps, kernel="smooth").weights(N)

            def integrand(s, _):
                a = (s == 0) - 1 / 3
                b = (s == 1) - 1 / 3
                return np.sum(weight * (a * np.roll(b, -1) - _block(b, r_off, r_wt) * _block(a, l_off, l_wt)))

            out[g] += abs(_path_integral(log, init, t, integrand)) ** 2 / 2
    assert np.allclose(res.lhs, out, rtol=1e-8)


def test_crossed_trajectory_matches_path_oracle():
    N, E, eps, t = 48, 4.0, 0.2, 0.01
    p = ModelParams(N=N, gamma=0.5, E_A=E, E_B=E)
    plus, minus = normal_mode_spec("I", p)
    cr, co = est.crossed_trajectory(p, eps, t, make_rng(3, 0), k_cut=1000)
    rng = make_rng(3, 0)
    init = sample_product_measure(1 / 3, 1 / 3, N, rng)
    log = simulate(p, init, t, rng=rng)
    left = BlockAverageSpec(side="left", eps=eps, kernel="smooth").weights(N)
    right = BlockAverageSpec(side="right", eps=eps, kernel="smooth").weights(N)
    grad = N * (np.exp(2j * math.pi * (np.arange(N) + 1) / N) - np.exp(2j * math.pi * np.arange(N) / N))
    vp, vm = plus.lattice_velocity(p), minus.lattice_velocity(p)
    breaks = [k / abs(v) for v in (vp, vm, vp - vm) for k in range(1, int(abs(v) * t) + 1)]
    x = np.arange(N)

    def integrand(s, time):
        mp, mm, w = math.floor(vp * time), math.floor(vm * time), math.floor((vp - vm) * time)
        up = field_weights(plus)[s]
        um = field_weights(minus)[s]
        up, um = up - up.mean(), um - um.mean()
        Lp, Rp = _block(up, *left), _block(up, *right)
        Lm, Rm = _block(um, *left), _block(um, *right)
        cross = E / 2 * np.sum(grad * (Lm[(x + w + mm) % N] * Rp[(x + mp) % N]
                                       + Lp[(x + mp) % N] * Rm[(x + w + mm) % N]))
        ctrl = E / 2 * np.sum(grad * Lm[(x + mm) % N] * Rm[(x + mm) % N])
        return np.array([cross, ctrl])

    ref = _path_integral(log, init, t, integrand, breaks)
    assert cr == pytest.approx(ref[0], rel=1e-8, abs=1e-12)
    assert co == pytest.approx(ref[1], rel=1e-8, abs=1e-12)


def test_crossed_integral_requires_increasing_sizes():
    with pytest.raises(ValueError):
        est.crossed_integral(4.0, 0.5, [128, 64], 0.001, 0.2, 2, 0)


def test_oscillatory_integral_brute_force():
    rng = np.random.default_rng(0)
    times = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, 30))])
    vals = rng.normal(size=31)
    N, k, vel, t = 50, 2, 37.3, 0.9
    fine = np.linspace(0, t, 400001)[:-1] + t / 800000
    a = vals[np.searchsorted(times, fine, side="right") - 1]
    brute = np.sum(a * np.exp(-2j * math.pi * k * np.floor(vel * fine) / N)) * (t / 400000)
    assert est.oscillatory_integral(times, vals, t, k, vel, N) == pytest.approx(brute, abs=5e-5)
    assert est.oscillatory_integral(times, vals, t, 0, vel, N) == pytest.approx(
        np.sum(a) * t / 400000, abs=5e-5)


def test_riemann_lebesgue_constant_process():
    table = est.riemann_lebesgue_check(est.constant_process, [0, 1], lambda N: N ** 1.5, 0.1,
                                       [64, 256, 1024], 1, 0)
    assert all(abs(m - 0.1) < 1e-12 for _, m, _ in table[0])
    decay = [m for _, m, _ in table[1]]
    assert decay[-1] < decay[0] / 4


def test_profile_width_and_exponent_fit():
    u = np.arange(-50, 51)
    prof = np.exp(-u ** 2 / (2 * 7.0 ** 2))
    assert est.profile_width(u, prof) == pytest.approx(7.0, rel=1e-6)
    t = np.array([0.1, 0.2, 0.4, 0.8, 1.6])
    z, err = est.exponent_fit(t, 3 * t ** (1 / 1.5))
    assert z == pytest.approx(1.5) and err < 1e-8
    with pytest.raises(ValueError):
        est.exponent_fit(t[:3], t[:3])
    with pytest.raises(ValueError):
        est.profile_width(u, -prof)


def test_brackets():
    assert est.balanced_width(1024, 0.2) == pytest.approx((0.2 * 1024 ** 2) ** (1 / 3))
    L = est.balanced_width(1024, 0.2)
    # the two terms of the bracket are equal at the balanced width
    assert L / 1024 == pytest.approx(0.2 * 1024 / L ** 2)
    assert est.bg_bracket_smooth(0.1, 4096, 0.2) == pytest.approx(0.2 * (0.1 + 0.2 / (4096 * 0.01)))


def test_structure_function_equal_time_is_static_covariance():
    p = ModelParams(N=128, gamma=0.5, E_A=2.0, E_B=2.0)
    R = np.eye(2)
    sf = est.structure_function(p, R, [0.0, 0.0], [0.0], 40, seed=1)
    zero = np.searchsorted(sf.u, 0)
    # product measure: var(xi^A) = 2/9, cov(xi^A, xi^B) = -1/9, no spatial correlation
    assert sf.S[0, 0, 0, zero] == pytest.approx(2 / 9, abs=4 * sf.stderr[0, 0, 0, zero] + 1e-3)
    assert sf.S[0, 0, 1, zero] == pytest.approx(-1 / 9, abs=4 * sf.stderr[0, 0, 1, zero] + 1e-3)
    assert abs(sf.S[0, 0, 0, zero + 1]) < 4 * sf.stderr[0, 0, 0, zero + 1] + 1e-3
