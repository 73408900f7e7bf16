"""Fluctuation fields, moving frames, local averages and the Dynkin ledger.

Lattice conventions: a test function f is evaluated at x/N for x in
0..N-1; a frame moving with lattice velocity ``vel`` (sites per unit of
macroscopic time) sits at the integer offset m = floor(vel * t) and pairs
site y with f((y - m)/N).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _engine
from .mode_coupling import NormalModeSpec
from .model_core import A, B, C, Configuration, EngineState, EventLog, ModelParams, species_code

TWO_PI = 2.0 * math.pi


# ------------------------------------------------------- test functions ----

@dataclass(frozen=True)
class TestFunction:
    """Either a Fourier mode e_k (times a unit phase) or explicit lattice values.

    For Fourier modes ``phase`` is the complex factor picked up by frame
    translations; ``values`` is None.  Sampled functions carry an array of
    length N holding f(x/N).
    """
    __test__ = False

    k: int | None = None
    values: np.ndarray | None = field(default=None, compare=False)
    phase: complex = 1.0

    @classmethod
    def fourier(cls, k: int) -> "TestFunction":
        return cls(k=int(k))

    @classmethod
    def sampled(cls, values) -> "TestFunction":
        v = np.asarray(values)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("sampled test function needs a 1-d array")
        v = v.copy()
        v.flags.writeable = False
        return cls(values=v)

    @property
    def is_fourier(self) -> bool:
        return self.values is None

    def evaluate(self, N: int) -> np.ndarray:
        """f(x/N) for x = 0..N-1."""
        if self.is_fourier:
            x = np.arange(N)
            return self.phase * np.exp(1j * TWO_PI * ((self.k * x) % N) / N)
        if self.values.size != N:
            raise ValueError(f"sampled function has {self.values.size} points, ring has {N}")
        return self.values

    def grad(self, N: int) -> np.ndarray:
        """Forward difference N [f((x+1)/N) - f(x/N)]."""
        v = self.evaluate(N)
        return N * (np.roll(v, -1) - v)

    def laplacian(self, N: int) -> np.ndarray:
        """N^2 [f((x+1)/N) - 2 f(x/N) + f((x-1)/N)]."""
        v = self.evaluate(N)
        return N * N * (np.roll(v, -1) - 2 * v + np.roll(v, 1))

    def grad_norm2(self, N: int) -> float:
        """(1/N) sum_x |grad_N f(x/N)|^2."""
        g = self.grad(N)
        return float(np.mean(np.abs(g) ** 2))

    def norm2(self, N: int) -> float:
        return float(np.mean(np.abs(self.evaluate(N)) ** 2))


def translate_frame(f: TestFunction, shift: float, N: int | None = None) -> TestFunction:
    """T f(x/N) = f((x - floor(shift))/N).

    Fourier modes pick up the exact phase e_{-k}(floor(shift)/N); sampled
    functions are rolled by floor(shift) sites.
    """
    m = math.floor(shift)
    if f.is_fourier:
        if N is None:
            raise ValueError("N is required to translate a Fourier mode")
        ph = np.exp(-1j * TWO_PI * ((f.k * m) % N) / N)
        return TestFunction(k=f.k, phase=complex(f.phase * ph))
    return TestFunction.sampled(np.roll(f.values, m))


# --------------------------------------------------------------- fields ----

def density_field(config: Configuration, species, f: TestFunction, rho_ref: float | None = None):
    """N^{-1/2} sum_x (xi^alpha_x - rho_ref) f(x/N); rho_ref defaults to N_alpha/N."""
    sp = species_code(species)
    N = config.N
    if rho_ref is None:
        rho_ref = config.counts[sp] / N
    occ = (config.species == sp).astype(float) - rho_ref
    val = np.dot(occ, f.evaluate(N)) / math.sqrt(N)
    return val if np.iscomplexobj(val) else float(val)


def field_weights(spec: NormalModeSpec) -> np.ndarray:
    """Per-species weight u: (D1, D2, 0)."""
    return np.array([spec.D1, spec.D2, 0.0])


def field_center(spec: NormalModeSpec, config: Configuration, centering: str = "exact") -> float:
    if centering == "exact":
        N = config.N
        return (spec.D1 * config.counts[A] + spec.D2 * config.counts[B]) / N
    if centering == "third":
        return (spec.D1 + spec.D2) / 3.0
    raise ValueError(f"unknown centering {centering!r}")


def frame_offset(spec: NormalModeSpec, params: ModelParams, t: float) -> int:
    return math.floor(spec.lattice_velocity(params) * t)


def normal_field(config: Configuration, t: float, spec: NormalModeSpec, f: TestFunction,
                 params: ModelParams, centering: str = "exact"):
    """D1 Y^A(T f) + D2 Y^B(T f) in the frame of ``spec`` at time t."""
    N = config.N
    m = frame_offset(spec, params, t)
    tf = translate_frame(f, m, N).evaluate(N)
    u = field_weights(spec)[config.species] - field_center(spec, config, centering)
    val = np.dot(u, tf) / math.sqrt(N)
    return val if np.iscomplexobj(val) else float(val)


# -------------------------------------------------------- local averages ---

@dataclass(frozen=True)
class BlockAverageSpec:
    """One-sided local average of a centred occupation variable.

    ``width`` gives a lattice width; alternatively ``eps`` gives width
    floor(eps N).  ``kernel`` is "indicator" (flat weights 1/width) or
    "smooth" (raised cosine (1 - cos(2 pi u / eps)) / eps, renormalized on
    the lattice so the weights sum to one).  Right blocks use sites
    x+1..x+w, left blocks x-w..x-1.
    """
    side: str = "right"
    width: int | None = None
    eps: float | None = None
    kernel: str = "indicator"

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if self.kernel not in ("indicator", "smooth"):
            raise ValueError("kernel must be 'indicator' or 'smooth'")
        if (self.width is None) == (self.eps is None):
            raise ValueError("give exactly one of width, eps")
        if self.width is not None and self.width < 1:
            raise ValueError("width must be >= 1")
        if self.eps is not None and self.eps <= 0:
            raise ValueError("eps must be positive")

    def lattice_width(self, N: int) -> int:
        w = self.width if self.width is not None else math.floor(self.eps * N + 1e-9)
        if w < 1:
            raise ValueError(f"empty kernel support: eps*N = {self.eps * N:g} < 1")
        if w > N:
            raise ValueError(f"block width {w} exceeds ring size {N}")
        return w

    def weights(self, N: int) -> tuple:
        """(offsets, weights): the average is sum_j weights[j] * xibar[x + offsets[j]]."""
        w = self.lattice_width(N)
        d = np.arange(1, w + 1)
        if self.kernel == "indicator":
            wt = np.full(w, 1.0 / w)
        else:
            u = d / N
            span = w / N
            wt = (1.0 - np.cos(TWO_PI * u / span)) / span
            wt = wt / wt.sum()
        offs = d if self.side == "right" else -d
        return offs, wt

    def kernel_profile(self, N: int) -> np.ndarray:
        """Lattice values rho(d/N) with (1/N) sum_d rho(d/N) = 1."""
        _, wt = self.weights(N)
        return wt * N


def block_average(config: Configuration, x: int, spec: BlockAverageSpec, species,
                  rho: float = 1.0 / 3.0) -> float:
    sp = species_code(species)
    N = config.N
    offs, wt = spec.weights(N)
    occ = (config.species[(x + offs) % N] == sp).astype(float) - rho
    return float(np.dot(wt, occ))


def block_averages(config: Configuration, spec: BlockAverageSpec, species,
                   rho: float = 1.0 / 3.0) -> np.ndarray:
    """block_average at every site, via FFT circular correlation."""
    sp = species_code(species)
    N = config.N
    offs, wt = spec.weights(N)
    occ = (config.species == sp).astype(float) - rho
    kern = np.zeros(N)
    np.add.at(kern, offs % N, wt)
    # out[x] = sum_d kern[d] occ[x + d]
    return np.real(np.fft.ifft(np.conj(np.fft.fft(kern)) * np.fft.fft(occ)))


def block_test_function(x: int, spec: BlockAverageSpec, N: int) -> TestFunction:
    """Sampled test function g with N^{-1/2} sum_y xibar_y g(y/N) = sqrt(N) * block average at x."""
    offs, wt = spec.weights(N)
    vals = np.zeros(N)
    np.add.at(vals, (x + offs) % N, wt * N)
    return TestFunction.sampled(vals)


# --------------------------------------------------------- Dynkin ledger ---

@dataclass
class DynkinLedger:
    """Dynkin decomposition of one moving-frame field along one trajectory.

    Z_t - Z_0 = I_t + B_t - R_t + M_t holds exactly by construction, with
    R_t = I_t + B_t - (drift integral + frame jumps).  ``R_explicit`` is the
    same quantity rebuilt from the linear lower-order sums; its distance
    from ``R`` measures the consistency of the bookkeeping.
    """
    label: str
    k: int | None
    times: np.ndarray
    Z: np.ndarray
    Z0: complex
    I: np.ndarray
    B: np.ndarray
    R: np.ndarray
    R_explicit: np.ndarray
    M: np.ndarray
    qv: np.ndarray
    jumps: np.ndarray
    events: np.ndarray

    def identity_error(self) -> float:
        lhs = self.Z - self.Z0
        rhs = self.I + self.B - self.R + self.M
        ref = max(1.0, float(np.abs(lhs).max(initial=0.0)))
        return float(np.abs(lhs - rhs).max(initial=0.0) / ref)

    def explicit_mismatch(self) -> float:
        ref = max(1e-300, float(np.abs(self.R).max(initial=0.0)), float(np.abs(self.I).max(initial=0.0)))
        return float(np.abs(self.R - self.R_explicit).max(initial=0.0) / ref)


def _ledger_inputs(params: ModelParams, config: Configuration, specs: Sequence[NormalModeSpec],
                   f: TestFunction, centering: str):
    N = params.N
    fv = f.evaluate(N).astype(complex)
    gv = f.grad(N).astype(complex)
    lv = f.laplacian(N).astype(complex)
    m = len(specs)
    FV = np.tile(fv, (m, 1))
    GV = np.tile(gv, (m, 1))
    LV = np.tile(lv, (m, 1))
    uv = np.array([field_weights(s) for s in specs])
    cen = np.array([field_center(s, config, centering) for s in specs])
    vel = np.array([s.lattice_velocity(params) for s in specs])
    return FV, GV, LV, uv, cen, vel


def _b_coefficients(spec: NormalModeSpec, params: ModelParams):
    EA, EB, EC = params.E_A, params.E_B, params.E_C
    D1, D2 = spec.D1, spec.D2
    return (D1 * (EC - EA), D2 * (EC - EB), -(D1 * (EB - EC) + D2 * (EA - EC)) / 2)


def _linear_coefficients(spec: NormalModeSpec, params: ModelParams):
    EA, EB, EC = params.E_A, params.E_B, params.E_C
    D1, D2 = spec.D1, spec.D2
    coef_a = -(D1 * (EB - EA) + D2 * (EA - EC)) / 6
    coef_b = (-D1 * (EB - EC) + D2 * (EB - EA)) / 6
    return coef_a, coef_b


def _assemble(raw: np.ndarray, nev: np.ndarray, z0: complex, times: np.ndarray,
              spec: NormalModeSpec, params: ModelParams, k) -> DynkinLedger:
    L = _engine
    N = params.N
    a = params.a
    s = params.asymmetry
    rt = math.sqrt(N)
    Z = raw[:, L.L_Z] / rt
    drift = N ** (a - 0.5) * raw[:, L.L_DRIFT]
    jumps = raw[:, L.L_JUMP] / rt
    I = N ** (a - 2.5) * raw[:, L.L_LAP]
    baa, bbb, bx = _b_coefficients(spec, params)
    B = N ** (a - 1.5) * s * (baa * raw[:, L.L_QAA] + bbb * raw[:, L.L_QBB] + bx * raw[:, L.L_QX])
    comp = drift + jumps
    R = I + B - comp
    ca, cb = _linear_coefficients(spec, params)
    lin = (N ** (a - 1.5) * s * 2 * (ca * raw[:, L.L_GA] + cb * raw[:, L.L_GB])
           - N ** (a - 2.5) * s * (ca * raw[:, L.L_LA] + cb * raw[:, L.L_LB]))
    R_explicit = -lin - jumps
    M = Z - z0 - comp
    qv = N ** (a - 1) * raw[:, L.L_QV].real
    return DynkinLedger(label=spec.label, k=k, times=times.copy(), Z=Z, Z0=z0, I=I, B=B, R=R,
                        R_explicit=R_explicit, M=M, qv=qv, jumps=jumps, events=nev.copy())


def accumulate_dynkin(params: ModelParams, init: Configuration, specs: Sequence[NormalModeSpec],
                      f: TestFunction, sample_times, rng: np.random.Generator,
                      centering: str = "exact", state: EngineState | None = None) -> list:
    """Simulate from ``init`` and return one DynkinLedger per spec.

    All time integrals are exact sums over the piecewise-constant path; the
    compiled kernel updates the needed lattice sums in O(1) per event.
    Passing ``state`` continues an existing engine state instead.
    """
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0):
        raise ValueError("sample_times must be sorted")
    st = state if state is not None else EngineState(params, init, rng)
    config = st.config()
    FV, GV, LV, uv, cen, vel = _ledger_inputs(params, config, specs, f, centering)
    rq = np.array([1 / 3, 1 / 3])
    t0 = st.time
    z0 = []
    for j, spec in enumerate(specs):
        m = math.floor(vel[j] * t0)
        tf = np.roll(FV[j], m)
        u = uv[j][config.species] - cen[j]
        z0.append(complex(np.dot(u, tf)) / math.sqrt(params.N))
    raw, nev = _engine.run_ledger(st.species, st.cnt9, st.clock, st.rate9, st.acc9, params.speed,
                                  st.rng, FV, GV, LV, uv, cen, vel, rq, times)
    k = f.k if f.is_fourier else None
    return [_assemble(raw[:, j, :], nev, z0[j], times, spec, params, k)
            for j, spec in enumerate(specs)]


def reference_ledger(params: ModelParams, init: Configuration, log: EventLog, spec: NormalModeSpec,
                     f: TestFunction, sample_times, centering: str = "exact") -> DynkinLedger:
    """Slow, direct evaluation of the ledger from an event log (testing oracle).

    Every lattice sum is recomputed from scratch on each constant stretch of
    the path; frame shifts are found from the floor convention directly.
    """
    N = params.N
    a = params.a
    s = params.asymmetry
    times = np.asarray(sample_times, float)
    vel = spec.lattice_velocity(params)
    fv = f.evaluate(N).astype(complex)
    u_of = field_weights(spec)
    cen = field_center(spec, init, centering)
    rm = params.rate_matrix()
    baa, bbb, bx = _b_coefficients(spec, params)
    ca, cb = _linear_coefficients(spec, params)

    def frame_at(t):
        return math.floor(vel * t)

    def sums(species, m):
        tf = np.roll(fv, m)
        tf1 = np.roll(tf, -1)
        grad = N * (tf1 - tf)
        lap = N * N * (tf1 - 2 * tf + np.roll(tf, 1))
        u = u_of[species]
        u1 = np.roll(u, -1)
        sp1 = np.roll(species, -1)
        c = rm[species, sp1]
        ab = (species == A) - 1 / 3
        bb = (species == B) - 1 / 3
        ab1, bb1 = np.roll(ab, -1), np.roll(bb, -1)
        return dict(
            Z=np.dot(u - cen, tf) / math.sqrt(N),
            drift=N ** (a - 0.5) * np.sum(c * (u1 - u) * (tf - tf1)),
            I=N ** (a - 2.5) * np.dot(u - cen, lap),
            B=N ** (a - 1.5) * s * np.sum(grad * (baa * ab * ab1 + bbb * bb * bb1 + bx * (ab * bb1 + bb * ab1))),
            lin=(N ** (a - 1.5) * s * 2 * np.sum(grad * (ca * ab + cb * bb))
                 - N ** (a - 2.5) * s * np.sum(lap * (ca * ab + cb * bb))),
            qv=N ** (a - 1) * np.sum(c * (u1 - u) ** 2 * np.abs(tf - tf1) ** 2),
        )

    species = np.array(init.species, copy=True)
    # breakpoints: events and frame shifts
    t_end = float(times[-1]) if times.size else 0.0
    shifts = []
    if vel != 0:
        m0, m1 = frame_at(0.0), frame_at(t_end)
        step = 1 if vel > 0 else -1
        for m in range(m0 + step, m1 + step, step):
            shifts.append((m if vel > 0 else m + 1) / vel)
    pts = sorted([(t, 0, i) for i, t in enumerate(log.times) if t <= t_end]
                 + [(t, 1, -1) for t in shifts]
                 + [(t, 2, i) for i, t in enumerate(times)],
                 key=lambda p: (p[0], -p[1]))
    # samples first on ties (matches the compiled kernel)
    pts.sort(key=lambda p: (p[0], 0 if p[1] == 2 else 1))
    acc = dict(drift=0j, I=0j, B=0j, lin=0j, qv=0.0, J=0j)
    m = frame_at(0.0)
    cur = sums(species, m)
    z0 = cur["Z"]
    t = 0.0
    out = {key: np.zeros(times.size, complex) for key in ("Z", "I", "B", "lin", "qv", "J", "drift")}
    nev = np.zeros(times.size, np.int64)
    n_events = 0
    for tp, kind, idx in pts:
        dt = tp - t
        for key in ("drift", "I", "B", "lin", "qv"):
            acc[key] += cur[key] * dt
        t = tp
        if kind == 2:
            out["Z"][idx] = cur["Z"]
            for key in ("I", "B", "lin", "qv", "drift"):
                out[key][idx] = acc[key]
            out["J"][idx] = acc["J"]
            nev[idx] = n_events
        elif kind == 1:
            zold = cur["Z"]
            m += 1 if vel > 0 else -1
            cur = sums(species, m)
            acc["J"] += cur["Z"] - zold
        else:
            x = int(log.bonds[idx])
            y = (x + 1) % N
            species[x], species[y] = species[y], species[x]
            n_events += 1
            cur = sums(species, m)
    comp = out["drift"] + out["J"]
    R = out["I"] + out["B"] - comp
    return DynkinLedger(label=spec.label, k=f.k if f.is_fourier else None, times=times.copy(),
                        Z=out["Z"], Z0=z0, I=out["I"], B=out["B"], R=R, R_explicit=-out["lin"] - out["J"],
                        M=out["Z"] - z0 - comp, qv=out["qv"].real, jumps=out["J"], events=nev)


# ------------------------------------------------- Fourier field series ----

def fourier_field_series(params: ModelParams, init: Configuration, specs: Sequence[NormalModeSpec],
                         ks: Sequence[int], sample_times, rng: np.random.Generator,
                         state: EngineState | None = None) -> np.ndarray:
    """Z^spec_t(e_k) at the sample times, shape (n_times, n_specs, n_ks).

    Only lab-frame Fourier coefficients are tracked (O(#modes) per event);
    the frame phase e_{-k}(m_t / N) is applied afterwards.  Modes with
    k = 0 mod N are rejected since they only see the centering.
    """
    N = params.N
    ks = np.asarray(ks, dtype=np.int64)
    if np.any(ks % N == 0):
        raise ValueError("k must be nonzero modulo N")
    times = np.asarray(sample_times, float)
    st = state if state is not None else EngineState(params, init, rng)
    uv = np.array([field_weights(s) for s in specs])
    # track coefficient of e_{-(-k)}: hat zeta(-k) = (1/N) sum u e_k(y/N)
    track_k = np.tile(-ks, len(specs))
    field_of = np.repeat(np.arange(len(specs)), ks.size).astype(np.int64)
    tab = _engine.mode_table(track_k, N)
    raw = _engine.run_modes(st.species, st.cnt9, st.clock, st.rate9, st.acc9, params.speed, st.rng,
                            uv, field_of, tab, times)
    raw = raw.reshape(times.size, len(specs), ks.size)
    out = np.empty_like(raw)
    for j, spec in enumerate(specs):
        vel = spec.lattice_velocity(params)
        m = np.floor(vel * times).astype(np.int64)
        phase = np.exp(-1j * TWO_PI * ((ks[None, :] * m[:, None]) % N) / N)
        out[:, j, :] = math.sqrt(N) * phase * raw[:, j, :]
    return out


# ------------------------------------------------------ trajectory CSV -----

FIELD_COLUMNS = ["time", "mode_label", "k", "re", "im", "I_t", "B_t", "R_t", "M_t", "qv_running"]


def _cfmt(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return repr(z).strip("()")


@dataclass
class FieldTrajectory:
    """Sampled field values plus Dynkin terms, for one or more ledgers."""
    ledgers: list

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(FIELD_COLUMNS)
            for led in self.ledgers:
                kk = "" if led.k is None else led.k
                for i, t in enumerate(led.times):
                    z = complex(led.Z[i])
                    w.writerow([repr(float(t)), led.label, kk, repr(z.real), repr(z.imag),
                                _cfmt(led.I[i]), _cfmt(led.B[i]), _cfmt(led.R[i]),
                                _cfmt(led.M[i]), repr(float(led.qv[i]))])

    @staticmethod
    def read_csv(path) -> dict:
        """Columns keyed by name; complex-valued columns parsed with complex()."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        out = {"time": np.array([float(r["time"]) for r in rows]),
               "mode_label": [r["mode_label"] for r in rows],
               "k": [r["k"] for r in rows],
               "Z": np.array([complex(float(r["re"]), float(r["im"])) for r in rows])}
        for col in ("I_t", "B_t", "R_t", "M_t"):
            out[col] = np.array([complex(r[col]) for r in rows])
        out["qv_running"] = np.array([float(r["qv_running"]) for r in rows])
        return out
