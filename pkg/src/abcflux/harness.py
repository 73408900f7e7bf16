"""Experiment orchestration: config files, seed fan-out, workers and manifests.

Config files are INI-style (``configparser``)::

    [model]
    N = 1024
    gamma = 0.5
    E_A = 40
    E_B = 40
    E_C = 0
    case = I

    [run]
    n_traj = 4
    t_max = 0.01
    sample_times = 0.0025, 0.005, 0.01
    master_seed = 7
    output_dir = out
    snapshots = yes

    [fields]
    modes = +, -
    k = 1

    [estimator:crossed_integral]
    N_sweep = 512, 1024, 2048
    t = 0.001
    eps = 0.1
    n_traj = 8

Trajectory i always draws from ``make_rng(master_seed, i)``; estimator j
running its own ensemble uses ``estimator_seed(master_seed, j)``.  Outputs
are written by the coordinator in trajectory order, so results do not depend
on the number of workers (``ABCFLUX_WORKERS``).
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import platform
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .estimators import bg_residual, bg_residual_smooth, crossed_integral
from .fields import FieldTrajectory, TestFunction, accumulate_dynkin
from .mode_coupling import check_case, normal_mode_spec
from .model_core import EngineState, ModelParams, make_rng, sample_product_measure, write_snapshot

WORKERS_ENV = "ABCFLUX_WORKERS"
MANIFEST_NAME = "manifest.json"


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _ints(text: str) -> list:
    return [int(float(x)) for x in text.replace(";", ",").split(",") if x.strip()]


def _fmt_list(vals) -> str:
    return ", ".join(repr(v) for v in vals)


@dataclass
class EstimatorSpec:
    name: str
    options: dict = field(default_factory=dict)   # raw strings, parsed by the estimator


ESTIMATOR_NAMES = ("crossed_integral", "bg_residual", "bg_residual_smooth",
                   "field_moments", "quadratic_variation")


@dataclass
class ExperimentConfig:
    N: int
    gamma: float
    E_A: float = 0.0
    E_B: float = 0.0
    E_C: float = 0.0
    a: float = 2.0
    case: str = "I"
    n_traj: int = 1
    t_max: float = 0.01
    sample_times: list = field(default_factory=list)
    master_seed: int = 0
    output_dir: str = "out"
    snapshots: bool = True
    modes: list = field(default_factory=list)
    k: int = 1
    estimators: list = field(default_factory=list)

    def __post_init__(self):
        for est in self.estimators:
            sweep = est.options.get("N_sweep")
            if sweep is not None:
                Ns = _ints(sweep)
                if any(b <= a for a, b in zip(Ns, Ns[1:])):
                    raise ValueError(f"N_sweep of {est.name} must be strictly increasing")

    def params(self) -> ModelParams:
        return ModelParams(N=self.N, gamma=self.gamma, E_A=self.E_A, E_B=self.E_B, E_C=self.E_C,
                           a=self.a, seed=self.master_seed)

    def times(self) -> np.ndarray:
        return np.asarray(self.sample_times or [self.t_max], float)

    # -- serialization ------------------------------------------------------
    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp["model"] = {"N": str(self.N), "gamma": repr(self.gamma), "E_A": repr(self.E_A),
                       "E_B": repr(self.E_B), "E_C": repr(self.E_C), "a": repr(self.a),
                       "case": self.case}
        cp["run"] = {"n_traj": str(self.n_traj), "t_max": repr(self.t_max),
                     "sample_times": _fmt_list(self.sample_times), "master_seed": str(self.master_seed),
                     "output_dir": self.output_dir, "snapshots": "yes" if self.snapshots else "no"}
        cp["fields"] = {"modes": ", ".join(self.modes), "k": str(self.k)}
        for est in self.estimators:
            cp[f"estimator:{est.name}"] = dict(est.options)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        m, r = cp["model"], cp["run"] if cp.has_section("run") else {}
        f = cp["fields"] if cp.has_section("fields") else {}
        ests = [EstimatorSpec(sec.split(":", 1)[1].strip(), dict(cp[sec]))
                for sec in cp.sections() if sec.startswith("estimator:")]
        return cls(N=int(m["N"]), gamma=float(m["gamma"]), E_A=float(m.get("E_A", 0)),
                   E_B=float(m.get("E_B", 0)), E_C=float(m.get("E_C", 0)), a=float(m.get("a", 2)),
                   case=m.get("case", "I"), n_traj=int(r.get("n_traj", 1)),
                   t_max=float(r.get("t_max", 0.01)), sample_times=_floats(r.get("sample_times", "")),
                   master_seed=int(r.get("master_seed", 0)), output_dir=r.get("output_dir", "out"),
                   snapshots=str(r.get("snapshots", "yes")).lower() in ("1", "yes", "true", "on"),
                   modes=[s.strip() for s in f.get("modes", "").split(",") if s.strip()],
                   k=int(f.get("k", 1)), estimators=ests)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


# ------------------------------------------------------------ validation ---

@dataclass
class Diagnostic:
    code: str
    message: str
    source: str

    def __str__(self):
        return f"[{self.code}] {self.message} ({self.source})"


def validate(config: ExperimentConfig) -> list:
    """Constraint violations of a config; an empty list means it is runnable."""
    out = []
    scale = 2.0 * config.N ** config.gamma if config.N > 0 else float("nan")
    e = {"A": config.E_A, "B": config.E_B, "C": config.E_C}
    for x in "ABC":
        for y in "ABC":
            if x < y and abs(e[x] - e[y]) >= scale:
                out.append(Diagnostic("negative-rate",
                                      f"|E_{x} - E_{y}| = {abs(e[x] - e[y]):g} >= 2 N^gamma = {scale:g}",
                                      "swap rate c = 1 + (E_left - E_right) / (2 N^gamma) must stay positive"))
    if config.N < 3:
        out.append(Diagnostic("lattice", f"N = {config.N} < 3", "ring needs at least three sites"))
    if config.gamma < 0:
        out.append(Diagnostic("gamma", "gamma must be non-negative", "weak asymmetry N^-gamma"))
    probe = SimpleNamespace(E_A=config.E_A, E_B=config.E_B, E_C=config.E_C)
    for msg in check_case(config.case, probe):
        out.append(Diagnostic("case", msg, f"parameter constraint of case {config.case}"))
    if config.gamma < 0.5 and (config.modes or any(s.name in ("crossed_integral", "field_moments")
                                                   for s in config.estimators)):
        out.append(Diagnostic("gamma", f"gamma = {config.gamma:g} < 1/2",
                              "limiting coefficients are only available for gamma >= 1/2"))
    if config.n_traj < 0:
        out.append(Diagnostic("run", "n_traj must be >= 0", "run block"))
    if not config.t_max > 0:
        out.append(Diagnostic("run", "t_max must be positive", "run block"))
    st = config.sample_times
    if st and (any(b < a for a, b in zip(st, st[1:])) or st[0] < 0 or st[-1] > config.t_max):
        out.append(Diagnostic("run", "sample_times must be sorted within [0, t_max]", "run block"))
    for lab in config.modes:
        if lab not in ("+", "-"):
            out.append(Diagnostic("fields", f"unknown mode label {lab!r}", "fields block: + or -"))
    if config.modes and config.k % config.N == 0:
        out.append(Diagnostic("fields", "k must be nonzero modulo N", "fields block"))
    for est in config.estimators:
        if est.name not in ESTIMATOR_NAMES:
            out.append(Diagnostic("estimator", f"unknown estimator {est.name!r}",
                                  f"known: {', '.join(ESTIMATOR_NAMES)}"))
        if est.name in ("field_moments", "quadratic_variation") and not config.modes:
            out.append(Diagnostic("estimator", f"{est.name} needs at least one field mode", "fields block"))
        if "eps" in est.options:
            for eps in _floats(est.options["eps"]):
                if not 0 < eps < 0.25:
                    out.append(Diagnostic("estimator", f"eps = {eps:g} outside (0, 1/4)", est.name))
        if "widths" in est.options and any(w < 1 or w > config.N // 4 for w in _ints(est.options["widths"])):
            out.append(Diagnostic("estimator", "block widths must lie in 1..N/4", est.name))
    return out


# -------------------------------------------------------------- seeding ----

def estimator_seed(master_seed: int, index: int) -> int:
    """Seed of the ensemble run by estimator ``index``: a pure function of its inputs."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(2 ** 20 + int(index),))
    return int(ss.generate_state(1, np.uint32)[0])


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _parallel_map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ------------------------------------------------------------ execution ----

def _trajectory_unit(job):
    """Run trajectory i; return packed final-snapshot bytes and the field ledgers."""
    text, i = job
    cfg = ExperimentConfig.from_text(text)
    params = cfg.params()
    rng = make_rng(cfg.master_seed, i)
    init = sample_product_measure(1 / 3, 1 / 3, cfg.N, rng)
    times = cfg.times()
    st = EngineState(params, init, rng)
    ledgers = []
    if cfg.modes:
        plus, minus = normal_mode_spec(cfg.case, params)
        specs = [plus if lab == "+" else minus for lab in cfg.modes]
        ledgers = accumulate_dynkin(params, init, specs, TestFunction.fourier(cfg.k), times, rng, state=st)
    else:
        st.advance(float(times[-1]))
    buf = io.BytesIO()
    write_snapshot(buf, st.config(), params, float(times[-1]), packed=True)
    return buf.getvalue(), ledgers


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def _opt(est: EstimatorSpec, key: str, default=None, kind=float):
    if key not in est.options:
        if default is None:
            raise KeyError(f"estimator {est.name} needs option {key!r}")
        return default
    raw = est.options[key]
    return kind(float(raw)) if kind in (int, float) else kind(raw)


def _run_estimator(cfg: ExperimentConfig, idx: int, est: EstimatorSpec, ledgers_by_traj, out: Path):
    seed = estimator_seed(cfg.master_seed, idx)
    path = out / f"{est.name}.csv"
    params = cfg.params()
    if est.name == "crossed_integral":
        Ns = _ints(est.options.get("N_sweep", str(cfg.N)))
        n = _ints(est.options.get("n_traj", str(cfg.n_traj)))
        rows = crossed_integral(cfg.E_A - cfg.E_C, cfg.gamma, Ns, _opt(est, "t"), _opt(est, "eps", 0.1),
                                n[0] if len(n) == 1 else n, seed, cfg.case, _opt(est, "k_cut", 3.0))
        _write_rows(path, ["N", "estimate", "stderr", "n_samples", "control", "control_stderr"],
                    [(r.N, r.estimate, r.stderr, r.n_samples, r.control, r.control_stderr) for r in rows])
    elif est.name == "bg_residual":
        res = bg_residual(params, est.options.get("alpha", "A"), est.options.get("beta", "B"),
                          np.exp(2j * math.pi * np.arange(cfg.N) / cfg.N), _ints(est.options["widths"]),
                          _opt(est, "t", cfg.t_max), _opt(est, "n_traj", cfg.n_traj, int), seed)
        _write_rows(path, ["width", "estimate", "stderr", "bound", "n_samples"],
                    [(float(w), float(m), float(e), float(b), res.n_traj)
                     for w, m, e, b in zip(res.widths, res.lhs, res.stderr, res.bound)])
    elif est.name == "bg_residual_smooth":
        res = bg_residual_smooth(params, est.options.get("alpha", "A"), est.options.get("beta", "B"),
                                 _floats(est.options["eps"]), _opt(est, "t", cfg.t_max),
                                 _opt(est, "n_traj", cfg.n_traj, int), seed, k_cut=_opt(est, "k_cut", 5.0))
        _write_rows(path, ["eps", "estimate", "stderr", "bound", "n_samples"],
                    [(float(w), float(m), float(e), float(b), res.n_traj)
                     for w, m, e, b in zip(res.widths, res.lhs, res.stderr, res.bound)])
    elif est.name == "field_moments":
        rows = []
        for j, lab in enumerate(cfg.modes):
            Z = np.array([ls[j].Z for ls in ledgers_by_traj])       # (n_traj, n_times)
            for it, t in enumerate(cfg.times()):
                v = np.abs(Z[:, it]) ** 2
                err = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan")
                rows.append((float(t), lab, cfg.k, float(v.mean()), err, int(v.size)))
        _write_rows(path, ["time", "mode_label", "k", "second_moment", "stderr", "n_samples"], rows)
    elif est.name == "quadratic_variation":
        rows = []
        for j, lab in enumerate(cfg.modes):
            M = np.array([ls[j].M for ls in ledgers_by_traj])
            Q = np.array([ls[j].qv for ls in ledgers_by_traj])
            for it, t in enumerate(cfg.times()):
                m2 = np.abs(M[:, it]) ** 2
                rows.append((float(t), lab, cfg.k, float(m2.mean()), float(Q[:, it].mean()),
                             float(Q[:, it].var(ddof=1)) if Q.shape[0] > 1 else float("nan"), int(m2.size)))
        _write_rows(path, ["time", "mode_label", "k", "martingale_second_moment", "qv_mean", "qv_variance",
                           "n_samples"], rows)
    else:
        raise KeyError(f"unknown estimator {est.name!r}")
    return path


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "numba", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


@dataclass
class Manifest:
    config_text: str
    config_sha256: str
    versions: dict
    files: list          # dicts: path (relative), sha256, kind
    failed: list         # dicts: unit, error
    root: str = ""

    @property
    def ok(self) -> bool:
        return not self.failed

    def to_json(self) -> str:
        return json.dumps({"config": self.config_text, "config_sha256": self.config_sha256,
                           "versions": self.versions, "files": self.files, "failed": self.failed,
                           "status": "ok" if self.ok else "partial"}, indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        d = json.loads(path.read_text())
        return cls(d["config"], d["config_sha256"], d["versions"], d["files"], d["failed"],
                   root=str(path.parent))

    def verify(self, root=None) -> list:
        """Files whose checksum no longer matches (or that are missing)."""
        base = Path(root or self.root)
        bad = []
        for f in self.files:
            p = base / f["path"]
            if not p.exists() or _sha256(p) != f["sha256"]:
                bad.append(f["path"])
        return bad


def run_experiment(config: ExperimentConfig, output_dir=None, workers: int | None = None) -> Manifest:
    """Run all trajectories and estimators, write outputs and ``manifest.json``."""
    problems = validate(config)
    if problems:
        raise ValueError("invalid config:\n" + "\n".join(str(p) for p in problems))
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = config.to_text()
    workers = worker_count() if workers is None else workers
    files, failed = [], []

    def record(path: Path, kind: str):
        files.append({"path": path.relative_to(out).as_posix(), "sha256": _sha256(path), "kind": kind})

    jobs = [(text, i) for i in range(config.n_traj)]
    try:
        results = _parallel_map(_trajectory_unit, jobs, workers)
    except Exception as exc:        # a failed unit poisons the whole batch map
        results = []
        failed.append({"unit": "trajectories", "error": repr(exc)})
    ledgers_by_traj = []
    for i, (snap, ledgers) in enumerate(results):
        if config.snapshots:
            p = out / f"snapshot_{i:05d}.bin"
            p.write_bytes(snap)
            record(p, "snapshot")
        if ledgers:
            p = out / f"fields_{i:05d}.csv"
            FieldTrajectory(ledgers).to_csv(p)
            record(p, "field_trajectory")
            ledgers_by_traj.append(ledgers)
    for j, est in enumerate(config.estimators):
        try:
            p = _run_estimator(config, j, est, ledgers_by_traj, out)
            record(p, "estimator")
        except Exception as exc:
            failed.append({"unit": f"estimator:{est.name}", "error": repr(exc)})
    man = Manifest(text, hashlib.sha256(text.encode()).hexdigest(), _versions(), files, failed, root=str(out))
    (out / MANIFEST_NAME).write_text(man.to_json())
    return man


def repro(manifest_path, output_dir=None) -> list:
    """Re-run the config stored in a manifest and list files whose checksums differ."""
    man = Manifest.load(manifest_path)
    cfg = ExperimentConfig.from_text(man.config_text)
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(output_dir) if output_dir else Path(tmp)
        new = run_experiment(cfg, target)
        got = {f["path"]: f["sha256"] for f in new.files}
    diffs = [f["path"] for f in man.files if got.get(f["path"]) != f["sha256"]]
    diffs += [p for p in got if p not in {f["path"] for f in man.files}]
    return diffs
