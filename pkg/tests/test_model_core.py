import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abcflux.model_core import (A, B, C, Configuration, EngineState, EventLog, ModelParams, Observer,
                                all_configurations, apply_generator, config_index, currents,
                                final_configuration, generator_matrix, make_rng, mean_total_rate,
                                read_snapshot, sample_canonical, sample_product_measure, simulate,
                                step, swap_rate, write_snapshot)


def test_rates_follow_field_differences():
    p = ModelParams(N=16, gamma=0.5, E_A=2.0, E_B=-1.0, E_C=0.5)
    s = 2 * 16 ** 0.5
    assert swap_rate(p, "A", "B") == pytest.approx(1 + 3.0 / s)
    assert swap_rate(p, "B", "A") == pytest.approx(1 - 3.0 / s)
    assert swap_rate(p, "C", "A") == pytest.approx(1 - 1.5 / s)
    assert swap_rate(p, "A", "A") == 0.0
    rm = p.rate_matrix()
    assert np.allclose(rm + rm.T, 2 * (1 - np.eye(3)))


def test_negative_rate_rejected():
    with pytest.raises(ValueError, match="rate"):
        ModelParams(N=16, gamma=0.5, E_A=8.0, E_B=0.0)
    with pytest.raises(ValueError):
        ModelParams(N=2, gamma=0.5)
    with pytest.raises(ValueError):
        Configuration([0, 1, 3])


def test_all_one_species_is_absorbing():
    p = ModelParams(N=8, gamma=0.5, E_A=1.0)
    cfg = Configuration([A] * 8)
    new, dt = step(cfg, p, make_rng(0))
    assert math.isinf(dt) and new == cfg
    log = simulate(p, cfg, 1.0, rng=make_rng(1))
    assert len(log) == 0


def test_counts_conserved_and_log_replays():
    p = ModelParams(N=64, gamma=0.5, E_A=3.0, E_B=-2.0)
    rng = make_rng(5)
    init = sample_product_measure(0.3, 0.3, 64, rng)
    seen = []
    obs = Observer([0.0005, 0.001], lambda c, t: seen.append((t, c)))
    log = simulate(p, init, 0.002, [obs], rng=rng)
    assert len(log) > 100
    assert np.all(np.diff(log.times) >= 0) and log.times[-1] <= 0.002
    for _, c in seen:
        assert c.counts == init.counts
    # replaying the log from init reproduces the state seen by observers
    prefix = EventLog(times=log.times[log.times <= 0.001], bonds=log.bonds[log.times <= 0.001],
                      left=log.left[log.times <= 0.001], right=log.right[log.times <= 0.001])
    assert prefix.replay(init) == seen[1][1]


def test_sampling_schedule_does_not_change_path():
    p = ModelParams(N=32, gamma=0.5, E_A=1.0, E_B=1.0)
    init = sample_product_measure(1 / 3, 1 / 3, 32, make_rng(2))
    end_a = final_configuration(p, init, 0.003, make_rng(9))
    log = simulate(p, init, 0.003, [Observer(np.linspace(0, 0.003, 17))], rng=make_rng(9))
    assert log.replay(init) == end_a


def test_log_csv_round_trip():
    p = ModelParams(N=12, gamma=0.5, E_B=1.0)
    init = sample_product_measure(0.3, 0.3, 12, make_rng(3))
    log = simulate(p, init, 0.01, rng=make_rng(4))
    back = EventLog.from_csv(io.StringIO(log.to_csv()))
    assert np.array_equal(back.times, log.times)
    assert back.replay(init) == log.replay(init)


def test_current_of_uniform_c_background_vanishes():
    p = ModelParams(N=10, gamma=0.5, E_A=1.0, E_B=2.0)
    cfg = Configuration([C] * 10)
    assert np.allclose(currents(cfg, "A", p), 0)
    assert np.allclose(currents(cfg, "B", p), 0)


@pytest.mark.parametrize("species", ["A", "B"])
def test_generator_on_occupation_is_current_difference(species):
    p = ModelParams(N=4, gamma=0.5, E_A=1.3, E_B=-0.4, E_C=0.2)
    sp = "AB".index(species)
    for s in all_configurations(4):
        cfg = Configuration(s)
        j = currents(cfg, species, p)
        for x in range(4):
            lhs = apply_generator(p, lambda arr: float(arr[x] == sp), s)
            assert lhs == pytest.approx(p.speed * (j[x - 1] - j[x]), abs=1e-9)


def test_centred_current_differs_by_constant():
    p = ModelParams(N=4, gamma=0.5, E_A=1.3, E_B=-0.4, E_C=0.2)
    for species in ("A", "B"):
        diffs = []
        for s in all_configurations(4):
            cfg = Configuration(s)
            diffs.append(currents(cfg, species, p) - currents(cfg, species, p, centred=True))
        diffs = np.array(diffs)
        assert np.ptp(diffs) < 1e-12


def test_product_measure_is_invariant():
    p = ModelParams(N=5, gamma=0.5, E_A=0.7, E_B=-0.3, E_C=0.1)
    Q = generator_matrix(p)
    assert np.allclose(Q.sum(axis=1), 0)
    rho = np.array([0.2, 0.5, 0.3])
    confs = all_configurations(5)
    pi = np.prod(rho[confs], axis=1)
    assert np.abs(pi @ Q).max() < 1e-9 * p.speed


def test_uniform_law_invariant_in_each_sector():
    p = ModelParams(N=5, gamma=0.5, E_A=0.7, E_B=-0.3)
    Q = generator_matrix(p)
    confs = all_configurations(5)
    counts = np.stack([(confs == s).sum(1) for s in range(3)], 1)
    for key in {tuple(c) for c in counts}:
        mask = np.all(counts == key, axis=1).astype(float)
        assert np.abs(mask @ Q).max() < 1e-9 * p.speed


def test_engine_matches_generator_jump_law():
    # first-jump destination frequencies against the rate matrix row
    p = ModelParams(N=4, gamma=0.5, E_A=0.8, E_B=-0.5)
    Q = generator_matrix(p)
    cfg = Configuration([A, B, C, B])
    i = config_index(cfg.species)
    row = Q[i].copy()
    row[i] = 0
    probs = row / row.sum()
    rng = make_rng(11)
    n = 20000
    hits = np.zeros(Q.shape[0])
    waits = []
    for _ in range(n):
        new, dt = step(cfg, p, rng)
        hits[config_index(new.species)] += 1
        waits.append(dt)
    nz = probs > 0
    assert hits[~nz].sum() == 0
    chi2 = np.sum((hits[nz] - n * probs[nz]) ** 2 / (n * probs[nz]))
    assert chi2 < 25
    assert np.mean(waits) == pytest.approx(1 / row.sum(), rel=0.03)


def test_mean_total_rate():
    p = ModelParams(N=6, gamma=0.5, E_A=0.9, E_B=-0.6, E_C=0.2)
    confs = all_configurations(6)
    rho = np.array([0.25, 0.35, 0.4])
    w = np.prod(rho[confs], axis=1)
    rm = p.rate_matrix()
    tot = np.array([rm[s, np.roll(s, -1)].sum() for s in confs])
    assert mean_total_rate(p, 0.25, 0.35) == pytest.approx(float(w @ tot))


def test_canonical_sampler_is_uniform():
    rng = make_rng(7)
    seen = {}
    for _ in range(6000):
        c = sample_canonical(1, 1, 2, rng)
        key = tuple(c.species)
        seen[key] = seen.get(key, 0) + 1
    assert len(seen) == 12
    assert max(seen.values()) / min(seen.values()) < 1.4


def test_product_sampler_densities():
    c = sample_product_measure(0.2, 0.5, 200000, make_rng(8))
    n = np.array(c.counts) / 200000
    assert np.allclose(n, [0.2, 0.5, 0.3], atol=5e-3)


def test_streams_are_independent_and_reproducible():
    a = make_rng(1, 0).random(4)
    assert np.array_equal(a, make_rng(1, 0).random(4))
    assert not np.array_equal(a, make_rng(1, 1).random(4))
    assert not np.array_equal(a, make_rng(2, 0).random(4))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=3, max_size=70), st.booleans(),
       st.floats(0, 10, allow_nan=False))
def test_snapshot_round_trip(species, packed, t):
    cfg = Configuration(species)
    p = ModelParams(N=len(species), gamma=0.75, E_A=0.1, E_B=-0.2, seed=123)
    buf = io.BytesIO()
    write_snapshot(buf, cfg, p, t, packed=packed)
    buf.seek(0)
    back, p2, t2 = read_snapshot(buf)
    assert back == cfg and p2 == p and t2 == t


def test_snapshot_rejects_garbage():
    with pytest.raises(ValueError):
        read_snapshot(io.BytesIO(b"XXXX" + bytes(80)))


def test_engine_state_advance_counts_events():
    p = ModelParams(N=64, gamma=0.5)
    init = sample_product_measure(1 / 3, 1 / 3, 64, make_rng(0))
    st_ = EngineState(p, init, make_rng(1))
    n = st_.advance(0.001)
    # mean number of events: t N^a * E[total rate] per unit time
    expect = 0.001 * p.speed * mean_total_rate(p, 1 / 3, 1 / 3)
    assert abs(n - expect) < 6 * math.sqrt(expect)
    assert st_.time == 0.001
