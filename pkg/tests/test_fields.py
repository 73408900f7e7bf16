import math

import numpy as np
import pytest

from abcflux.fields import (BlockAverageSpec, FieldTrajectory, TestFunction, accumulate_dynkin,
                            block_average, block_averages, block_test_function, density_field,
                            fourier_field_series, normal_field, reference_ledger, translate_frame)
from abcflux.mode_coupling import normal_mode_spec
from abcflux.model_core import ModelParams, Observer, make_rng, sample_product_measure, simulate


def _setup(N=24, E=2.0, seed=3):
    p = ModelParams(N=N, gamma=0.5, E_A=E, E_B=E)
    init = sample_product_measure(1 / 3, 1 / 3, N, make_rng(seed, 99))
    return p, init


def test_translate_frame_fourier_matches_sampled():
    N = 20
    f = TestFunction.fourier(3)
    g = TestFunction.sampled(f.evaluate(N))
    for shift in (0.0, 2.7, -4.2, 37.9):
        a = translate_frame(f, shift, N).evaluate(N)
        b = translate_frame(g, shift).evaluate(N)
        assert np.allclose(a, b)


def test_discrete_derivatives_of_fourier_mode():
    N, k = 64, 2
    f = TestFunction.fourier(k)
    lam = N * N * (2 * math.cos(2 * math.pi * k / N) - 2)
    assert np.allclose(f.laplacian(N), lam * f.evaluate(N))
    assert f.grad_norm2(N) == pytest.approx(abs(N * (np.exp(2j * math.pi * k / N) - 1)) ** 2)


def test_density_field_definition():
    p, cfg = _setup(N=30)
    f = TestFunction.fourier(1)
    occ = (cfg.species == 0) - cfg.counts[0] / 30
    assert density_field(cfg, "A", f) == pytest.approx(np.dot(occ, f.evaluate(30)) / math.sqrt(30))


@pytest.mark.parametrize("side", ["left", "right"])
@pytest.mark.parametrize("kernel", ["indicator", "smooth"])
def test_block_averages_fft_matches_direct(side, kernel):
    p, cfg = _setup(N=50)
    spec = BlockAverageSpec(side=side, eps=0.14, kernel=kernel)
    fast = block_averages(cfg, spec, "B")
    slow = [block_average(cfg, x, spec, "B") for x in range(50)]
    assert np.allclose(fast, slow, atol=1e-13)
    offs, wt = spec.weights(50)
    assert wt.sum() == pytest.approx(1.0) and np.all(wt >= 0)
    g = block_test_function(7, spec, 50)
    xi = (cfg.species == 1) - 1 / 3
    assert np.dot(xi, g.evaluate(50)) / math.sqrt(50) == pytest.approx(math.sqrt(50) * slow[7])


def test_block_spec_validation():
    with pytest.raises(ValueError):
        BlockAverageSpec(width=3, eps=0.1)
    with pytest.raises(ValueError):
        BlockAverageSpec(eps=0.01).lattice_width(50)
    with pytest.raises(ValueError):
        BlockAverageSpec(side="up", width=2)


@pytest.mark.parametrize("centering", ["exact", "third"])
def test_compiled_ledger_matches_reference(centering):
    p, init = _setup()
    specs = normal_mode_spec("I", p)
    f = TestFunction.fourier(1)
    times = np.linspace(0.002, 0.02, 5)
    led = accumulate_dynkin(p, init, specs, f, times, make_rng(3, 0), centering=centering)
    log = simulate(p, init, 0.02, rng=make_rng(3, 0))
    for j, spec in enumerate(specs):
        ref = reference_ledger(p, init, log, spec, f, times, centering=centering)
        for name in ("Z", "I", "B", "R", "M", "qv"):
            a, b = getattr(led[j], name), getattr(ref, name)
            scale = max(1.0, np.abs(b).max())
            assert np.abs(a - b).max() < 1e-9 * scale, name
        assert led[j].identity_error() < 1e-10


def test_ledger_identity_sampled_test_function():
    p, init = _setup(N=32, E=1.0)
    specs = normal_mode_spec("III", ModelParams(N=32, gamma=0.5, E_A=1.0, E_B=2.5))
    p = ModelParams(N=32, gamma=0.5, E_A=1.0, E_B=2.5)
    x = np.arange(32) / 32
    f = TestFunction.sampled(np.exp(-20 * (x - 0.5) ** 2))
    led = accumulate_dynkin(p, init, specs, f, [0.005, 0.01], make_rng(4, 0))
    for L in led:
        assert L.identity_error() < 1e-10
        assert L.explicit_mismatch() < 1e-8
        assert np.all(np.diff(L.qv) >= 0)


def test_fourier_series_matches_normal_field():
    p, init = _setup(N=40)
    specs = normal_mode_spec("I", p)
    times = [0.001, 0.004]
    ks = [1, 2, -3]
    series = fourier_field_series(p, init, specs, ks, times, make_rng(6, 0))
    seen = []
    simulate(p, init, 0.004, [Observer(times, lambda c, t: seen.append((c, t)))], rng=make_rng(6, 0),
             record=False)
    for i, (c, t) in enumerate(seen):
        for j, spec in enumerate(specs):
            for m, k in enumerate(ks):
                want = normal_field(c, t, spec, TestFunction.fourier(k), p)
                assert series[i, j, m] == pytest.approx(want, abs=1e-10)
    with pytest.raises(ValueError):
        fourier_field_series(p, init, specs, [40], times, make_rng(6, 0))


def test_field_trajectory_csv_round_trip(tmp_path):
    p, init = _setup()
    specs = normal_mode_spec("I", p)
    led = accumulate_dynkin(p, init, specs, TestFunction.fourier(1), [0.001, 0.002], make_rng(1, 0))
    path = tmp_path / "f.csv"
    FieldTrajectory(led).to_csv(path)
    back = FieldTrajectory.read_csv(path)
    assert back["mode_label"] == ["+", "+", "-", "-"]
    assert np.allclose(back["Z"], np.concatenate([led[0].Z, led[1].Z]))
    assert np.allclose(back["M_t"], np.concatenate([led[0].M, led[1].M]))
