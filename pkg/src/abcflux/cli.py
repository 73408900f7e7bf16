"""Command-line entry point: ``abcflux <subcommand> ...``."""
from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np

from . import harness
from .model_core import ModelParams, make_rng


def _cmd_simulate(args) -> int:
    if args.config:
        cfg = harness.ExperimentConfig.load(args.config)
    else:
        cfg = harness.ExperimentConfig(N=args.N, gamma=args.gamma, E_A=args.ea, E_B=args.eb, E_C=args.ec,
                                       case=args.case, n_traj=args.n_traj, t_max=args.tmax,
                                       sample_times=[float(x) for x in args.times.split(",")] if args.times else [],
                                       master_seed=args.seed, output_dir=args.out or "out",
                                       modes=[m for m in args.modes.split(",") if m] if args.modes else [],
                                       k=args.k)
    problems = harness.validate(cfg)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 2
    man = harness.run_experiment(cfg, args.out or cfg.output_dir, workers=args.workers)
    for f in man.files:
        print(f"{f['sha256'][:16]}  {f['path']}")
    for f in man.failed:
        print(f"FAILED {f['unit']}: {f['error']}", file=sys.stderr)
    return 0 if man.ok else 1


def _analyze_csv(path: Path, w) -> None:
    from .fields import FieldTrajectory
    d = FieldTrajectory.read_csv(path)
    labels = d["mode_label"]
    for lab in dict.fromkeys(labels):
        sel = np.array([x == lab for x in labels])
        t = d["time"][sel]
        z = d["Z"][sel]
        for ti, zi, mi, qi in zip(t, z, d["M_t"][sel], d["qv_running"][sel]):
            w.writerow([path.name, lab, repr(float(ti)), repr(float(abs(zi) ** 2)), repr(float(abs(mi) ** 2)), repr(float(qi))])


def _analyze_snapshot(path: Path, w, kmax: int) -> None:
    from .fields import TestFunction, normal_field
    from .mode_coupling import normal_mode_spec
    from .model_core import read_snapshot
    config, params, t = read_snapshot(path)
    specs = ()
    for tag in ("I", "II", "III"):
        try:
            specs = normal_mode_spec(tag, params)
            break
        except (ValueError, ArithmeticError, ZeroDivisionError):
            continue
    counts = config.counts
    for s in specs:
        for k in range(1, kmax + 1):
            z = normal_field(config, t, s, TestFunction.fourier(k), params)
            w.writerow([path.name, s.label, repr(t), k, repr(float(abs(z) ** 2)), *counts])


def _cmd_analyze(args) -> int:
    w = csv.writer(sys.stdout, lineterminator="\n")
    csvs = [Path(p) for p in args.inputs if p.endswith(".csv")]
    snaps = [Path(p) for p in args.inputs if not p.endswith(".csv")]
    if csvs:
        w.writerow(["file", "mode_label", "time", "field_sq", "martingale_sq", "qv_running"])
        for p in csvs:
            _analyze_csv(p, w)
    if snaps:
        w.writerow(["file", "mode_label", "time", "k", "field_sq", "n_A", "n_B", "n_C"])
        for p in snaps:
            _analyze_snapshot(p, w, args.kmax)
    return 0


def _cmd_modecoupling(args) -> int:
    from .mode_coupling import DensityPoint, coupling_report
    params = ModelParams(N=args.N, gamma=args.gamma, E_A=args.ea, E_B=args.eb, E_C=args.ec)
    rep = coupling_report(params, DensityPoint(args.rho_a, args.rho_b))
    if args.csv:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["quantity", "i", "j", "value"])
        for r in rep.csv_rows():
            w.writerow([r[0], r[1], r[2], repr(float(r[3]))])
    else:
        sys.stdout.write(rep.as_text())
    return 0


def _cmd_sbe(args) -> int:
    from .spde_ref import SBEIntegrator, SpectralField
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = make_rng(args.seed, 0)
    integ = SBEIntegrator(args.modes, args.dt, args.lam, args.sigma2)
    st = SpectralField.white_noise(args.modes, args.sigma2, rng)
    n_steps = int(round(args.tmax / args.dt))
    every = max(1, args.record_every)
    kept = list(range(1, min(args.record_modes, args.modes) + 1))
    with open(out / "sbe_modes.csv", "w", newline="") as fm, open(out / "sbe_snapshots.csv", "w", newline="") as fs:
        wm = csv.writer(fm, lineterminator="\n")
        ws = csv.writer(fs, lineterminator="\n")
        wm.writerow(["time", "k", "re", "im"])
        ws.writerow(["time", "x", "value"])
        n_grid = 2 * args.modes + 2
        snap_every = max(1, n_steps // max(1, args.snapshots))
        for i in range(n_steps + 1):
            if i % every == 0:
                for k in kept:
                    c = st.coeffs[k]
                    wm.writerow([repr(st.time), k, repr(float(c.real)), repr(float(c.imag))])
            if i % snap_every == 0:
                vals = st.real_space(n_grid)
                for j, v in enumerate(vals):
                    ws.writerow([repr(st.time), repr(j / n_grid), repr(float(v))])
            if i < n_steps:
                st = integ.step(st, rng)
    mean_sq = float(np.mean(np.abs(st.coeffs[1:]) ** 2))
    print(f"t = {st.time:g}, mean |c_k|^2 over k >= 1: {mean_sq:.6g} (sigma2 = {args.sigma2:g})")
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = harness.ExperimentConfig.load(args.config)
    except (configparser.Error, KeyError, ValueError) as exc:
        print(f"unreadable config: {exc}")
        return 2
    problems = harness.validate(cfg)
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return 1 if problems else 0


def _cmd_repro(args) -> int:
    diffs = harness.repro(args.manifest, args.out)
    for d in diffs:
        print(f"MISMATCH {d}")
    if not diffs:
        print("reproduced: all checksums match")
    return 1 if diffs else 0


def _cmd_recipe(args) -> int:
    from . import recipes
    res = recipes.run_criterion(args.number, scale=args.scale, progress=lambda s: print(s, file=sys.stderr))
    print(res.report())
    return 0 if res.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abcflux", description="ABC exchange model fluctuation toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("simulate", help="run trajectories from a config file or flags")
    s.add_argument("--config")
    s.add_argument("--N", type=int, default=256)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--ea", type=float, default=0.0)
    s.add_argument("--eb", type=float, default=0.0)
    s.add_argument("--ec", type=float, default=0.0)
    s.add_argument("--case", default="I")
    s.add_argument("--n-traj", type=int, default=1)
    s.add_argument("--tmax", type=float, default=0.01)
    s.add_argument("--times", help="comma-separated sample times")
    s.add_argument("--modes", default="", help="comma-separated field labels, e.g. +,-")
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--workers", type=int)
    s.set_defaults(fn=_cmd_simulate)

    s = sub.add_parser("analyze", help="summarize field CSVs or snapshot files")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--kmax", type=int, default=3)
    s.set_defaults(fn=_cmd_analyze)

    s = sub.add_parser("modecoupling", help="Jacobian, normal modes and coupling matrices")
    s.add_argument("--ea", type=float, required=True)
    s.add_argument("--eb", type=float, required=True)
    s.add_argument("--ec", type=float, default=0.0)
    s.add_argument("--rho-a", type=float, default=1 / 3)
    s.add_argument("--rho-b", type=float, default=1 / 3)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--N", type=int, default=1024)
    s.add_argument("--csv", action="store_true")
    s.set_defaults(fn=_cmd_modecoupling)

    s = sub.add_parser("sbe", help="spectral stochastic Burgers / OU reference solver")
    s.add_argument("--modes", type=int, default=256)
    s.add_argument("--dt", type=float, default=1e-5)
    s.add_argument("--lambda", dest="lam", type=float, default=0.0)
    s.add_argument("--sigma2", type=float, default=1.0)
    s.add_argument("--tmax", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="sbe_out")
    s.add_argument("--record-every", type=int, default=10)
    s.add_argument("--record-modes", type=int, default=8)
    s.add_argument("--snapshots", type=int, default=4)
    s.set_defaults(fn=_cmd_sbe)

    s = sub.add_parser("validate", help="check a config against the model constraints")
    s.add_argument("config")
    s.set_defaults(fn=_cmd_validate)

    s = sub.add_parser("repro", help="re-run a manifest and compare checksums")
    s.add_argument("manifest")
    s.add_argument("--out")
    s.set_defaults(fn=_cmd_repro)

    s = sub.add_parser("recipe", help="run the canned experiment for one acceptance criterion")
    s.add_argument("number", type=int)
    s.add_argument("--scale", choices=("quick", "full"), default="quick")
    s.set_defaults(fn=_cmd_recipe)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
