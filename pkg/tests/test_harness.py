import csv
import json

import numpy as np
import pytest

from abcflux import cli, harness
from abcflux.harness import EstimatorSpec, ExperimentConfig
from abcflux.model_core import read_snapshot


def _small(**kw):
    base = dict(N=48, gamma=0.5, E_A=4.0, E_B=4.0, E_C=0.0, n_traj=3, t_max=0.004,
                sample_times=[0.002, 0.004], master_seed=3, modes=["+", "-"], k=1,
                estimators=[EstimatorSpec("field_moments"), EstimatorSpec("quadratic_variation")])
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_text_round_trip(tmp_path):
    cfg = _small(estimators=[EstimatorSpec("crossed_integral", {"N_sweep": "32, 64", "t": "0.001"}),
                             EstimatorSpec("bg_residual", {"widths": "2, 4"})])
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg
    cfg.save(tmp_path / "c.ini")
    assert ExperimentConfig.load(tmp_path / "c.ini") == cfg


def test_validate_flags_negative_rate():
    # E_A - E_B = 3 N^gamma makes the A|B -> B|A rate negative
    cfg = _small(E_A=4.0 + 3 * 48 ** 0.5, case="III")
    codes = [d.code for d in harness.validate(cfg)]
    assert "negative-rate" in codes
    assert all(d.source for d in harness.validate(cfg))


def test_validate_flags_case_constraint():
    diags = harness.validate(_small(E_B=1.0, case="I"))
    assert [d.code for d in diags] == ["case"]
    assert "E_A = E_B" in diags[0].message


def test_validate_accepts_valid_config_and_other_problems():
    assert harness.validate(_small()) == []
    assert harness.validate(_small(gamma=0.3))
    assert harness.validate(_small(modes=["x"]))
    assert harness.validate(_small(estimators=[EstimatorSpec("nonsense")]))
    assert harness.validate(_small(estimators=[EstimatorSpec("bg_residual_smooth", {"eps": "0.3"})]))


def test_sweep_must_increase():
    with pytest.raises(ValueError):
        _small(estimators=[EstimatorSpec("crossed_integral", {"N_sweep": "64, 32", "t": "0.001"})])


def test_run_is_deterministic_and_worker_independent(tmp_path):
    cfg = _small()
    m1 = harness.run_experiment(cfg, tmp_path / "a", workers=1)
    m2 = harness.run_experiment(cfg, tmp_path / "b", workers=2)
    assert m1.ok and m2.ok
    assert [f["sha256"] for f in m1.files] == [f["sha256"] for f in m2.files]
    assert m1.verify() == []
    kinds = {f["kind"] for f in m1.files}
    assert kinds == {"snapshot", "field_trajectory", "estimator"}
    conf, params, t = read_snapshot(tmp_path / "a" / "snapshot_00000.bin")
    assert conf.N == 48 and t == pytest.approx(0.004) and params.E_A == 4.0
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["status"] == "ok" and "numpy" in man["versions"]


def test_manifest_detects_tampering_and_repro(tmp_path):
    m = harness.run_experiment(_small(n_traj=2), tmp_path / "a")
    assert harness.repro(tmp_path / "a" / "manifest.json") == []
    target = tmp_path / "a" / "fields_00001.csv"
    target.write_text(target.read_text() + "\n")
    assert m.verify() == ["fields_00001.csv"]


def test_crossed_sweep_writes_one_row_per_size(tmp_path):
    cfg = _small(modes=[], n_traj=0, snapshots=False,
                 estimators=[EstimatorSpec("crossed_integral",
                                           {"N_sweep": "32, 48, 64", "t": "0.0005", "eps": "0.2",
                                            "n_traj": "3"})])
    m = harness.run_experiment(cfg, tmp_path)
    assert m.ok
    with open(tmp_path / "crossed_integral.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["N"]) for r in rows] == [32, 48, 64]
    assert all(float(r["stderr"]) > 0 for r in rows)


def test_empty_estimator_list(tmp_path):
    m = harness.run_experiment(_small(estimators=[], modes=[]), tmp_path)
    assert m.ok and all(f["kind"] == "snapshot" for f in m.files)


def test_estimator_seeds_are_distinct():
    seeds = {harness.estimator_seed(7, j) for j in range(50)}
    assert len(seeds) == 50
    assert harness.estimator_seed(7, 3) == harness.estimator_seed(7, 3)


def test_failed_estimator_is_recorded(tmp_path):
    cfg = _small(estimators=[EstimatorSpec("bg_residual", {"widths": "2"})], n_traj=1)
    m = harness.run_experiment(cfg, tmp_path)
    # one trajectory cannot give an error bar; the failure is recorded, not raised
    assert not m.ok and m.failed[0]["unit"] == "estimator:bg_residual"


# ---------------------------------------------------------------- CLI ------

def test_cli_modecoupling(capsys):
    assert cli.main(["modecoupling", "--ea", "1.5", "--eb", "1.5"]) == 0
    out = capsys.readouterr().out
    assert "class_plus = EW" in out and "class_minus = KPZ" in out
    assert cli.main(["modecoupling", "--ea", "1", "--eb", "2.5", "--csv"]) == 0
    assert capsys.readouterr().out.startswith("quantity,i,j,value")


def test_cli_validate_and_simulate(tmp_path, capsys):
    good = tmp_path / "good.ini"
    _small().save(good)
    assert cli.main(["validate", str(good)]) == 0
    bad = tmp_path / "bad.ini"
    _small(E_B=1.0).save(bad)
    assert cli.main(["validate", str(bad)]) == 1
    junk = tmp_path / "junk.ini"
    junk.write_text("not a config")
    assert cli.main(["validate", str(junk)]) == 2
    capsys.readouterr()
    out = tmp_path / "run"
    assert cli.main(["simulate", "--config", str(good), "--out", str(out)]) == 0
    assert (out / "manifest.json").exists()
    assert cli.main(["repro", str(out / "manifest.json")]) == 0
    assert cli.main(["analyze", str(out / "fields_00000.csv"), str(out / "snapshot_00000.bin")]) == 0
    text = capsys.readouterr().out
    assert "martingale_sq" in text and "snapshot_00000.bin" in text


def test_cli_simulate_flags_reject_bad_case(tmp_path):
    assert cli.main(["simulate", "--N", "32", "--ea", "1", "--eb", "2", "--case", "I",
                     "--out", str(tmp_path)]) == 2


def test_cli_sbe(tmp_path, capsys):
    assert cli.main(["sbe", "--modes", "8", "--dt", "1e-4", "--tmax", "0.01", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "sbe_modes.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {int(r["k"]) for r in rows} == set(range(1, 9))
    assert np.isfinite([float(r["re"]) for r in rows]).all()
    assert (tmp_path / "sbe_snapshots.csv").exists()


def test_cli_recipe_quick(capsys):
    assert cli.main(["recipe", "9", "--scale", "quick"]) == 0
    assert "criterion  9 PASS" in capsys.readouterr().out
