"""Statistical estimators on top of the simulator.

Every Monte Carlo estimator works trajectory by trajectory: trajectory i of
an ensemble uses ``make_rng(seed, i)`` and contributes one summary value,
and errors are batch means over trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _engine
from .fields import BlockAverageSpec, TestFunction, field_weights
from .mode_coupling import NormalModeSpec, normal_mode_spec
from .model_core import (A, B, Configuration, EngineState, ModelParams, make_rng,
                         sample_product_measure, species_code)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------- error bars -----

def batch_means(values, n_batches: int | None = None, axis: int = 0):
    """Mean and standard error from independent per-trajectory values.

    With ``n_batches`` the values are grouped into that many consecutive
    batches first; by default each trajectory is its own batch.
    """
    x = np.asarray(values)
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two trajectories for an error bar")
    if n_batches is not None and n_batches < n:
        size = n // n_batches
        x = x[: size * n_batches].reshape((n_batches, size) + x.shape[1:]).mean(axis=1)
        n = n_batches
    mean = x.mean(axis=0)
    err = x.std(axis=0, ddof=1) / math.sqrt(n)
    return mean, err


# ------------------------------------------------------------------ DFT ----

@dataclass
class SpectralSeries:
    coeffs: np.ndarray

    @property
    def N(self) -> int:
        return self.coeffs.size

    def __getitem__(self, k):
        return self.coeffs[np.asarray(k) % self.N]


def dft(values) -> SpectralSeries:
    """F(k) = (1/N) sum_x phi(x/N) e_{-k}(x/N)."""
    v = np.asarray(values)
    return SpectralSeries(np.fft.fft(v) / v.size)


def idft(series: SpectralSeries | np.ndarray) -> np.ndarray:
    """phi(x/N) = sum_k F(k) e_k(x/N)."""
    c = series.coeffs if isinstance(series, SpectralSeries) else np.asarray(series)
    return np.fft.ifft(c) * c.size


def plancherel_gap(phi, psi) -> float:
    """|(1/N) sum phi psi - sum_k F phi(k) F psi(-k)|."""
    phi = np.asarray(phi)
    psi = np.asarray(psi)
    fp, fq = dft(phi).coeffs, dft(psi).coeffs
    lhs = np.mean(phi * psi)
    rhs = np.sum(fp * np.roll(fq[::-1], 1))
    return float(abs(lhs - rhs))


def kernel_transform(spec: BlockAverageSpec, N: int, ks) -> np.ndarray:
    """hat rho(j) = (1/N) sum_d rho_N(d) e_{-j}(d/N) for the lattice kernel of ``spec``."""
    offs, wt = spec.weights(N)
    ks = np.asarray(ks)
    return np.exp(-1j * TWO_PI * np.outer(ks, offs) / N) @ wt


# ------------------------------------------------ structure functions ------

@dataclass
class StructureFunctionEstimate:
    times: np.ndarray
    u: np.ndarray
    S: np.ndarray          # (n_times, n_modes, n_modes, n_u)
    stderr: np.ndarray
    velocities: np.ndarray  # frame velocity per mode (sites per unit time)
    n_samples: int


def mode_variables(config: Configuration, R: np.ndarray, rho=(1 / 3, 1 / 3)) -> np.ndarray:
    """Lattice normal-mode variables phi = R (xibar^A, xibar^B), shape (2, N)."""
    xa = (config.species == A) - rho[0]
    xb = (config.species == B) - rho[1]
    return R @ np.vstack([xa, xb])


def structure_function(params: ModelParams, R: np.ndarray, velocities, t_grid, n_traj: int,
                       seed: int, rho=(1 / 3, 1 / 3), n_origins: int = 1,
                       origin_spacing: float = 0.0) -> StructureFunctionEstimate:
    """S_ab(t, u) = <phi_a(t, u + shift_a) phi_b(0, 0)>, space- and ensemble-averaged.

    ``shift_a`` = floor(velocities[a] * t) puts mode a in its co-moving
    frame.  Several time origins per trajectory may be used (spaced by
    ``origin_spacing``); they are averaged within the trajectory before the
    batch-means error across trajectories.
    """
    from .model_core import Observer, simulate
    N = params.N
    t_grid = np.asarray(t_grid, float)
    vel = np.asarray(velocities, float)
    nm = R.shape[0]
    per_traj = []
    for i in range(n_traj):
        rng = make_rng(seed, i)
        init = sample_product_measure(rho[0], rho[1], N, rng)
        origins = [j * origin_spacing for j in range(n_origins)]
        times = sorted({o for o in origins} | {o + t for o in origins for t in t_grid})
        snaps = {}
        simulate(params, init, max(times), [Observer(times, lambda c, t: snaps.__setitem__(t, c))],
                 rng=rng, record=False)
        if 0.0 in times and 0.0 not in snaps:
            snaps[0.0] = init
        acc = np.zeros((t_grid.size, nm, nm, N))
        for o in origins:
            p0 = mode_variables(snaps[o], R, rho)
            f0 = np.fft.fft(p0, axis=1)
            for it, t in enumerate(t_grid):
                pt = mode_variables(snaps[o + t], R, rho)
                ft = np.fft.fft(pt, axis=1)
                # corr[a, b, u] = (1/N) sum_x phi_a(t, x + u) phi_b(0, x)
                corr = np.real(np.fft.ifft(ft[:, None, :] * np.conj(f0[None, :, :]), axis=2)) / N
                for a in range(nm):
                    sh = math.floor(vel[a] * t)
                    corr[a] = np.roll(corr[a], -sh, axis=-1)
                acc[it] += corr
        per_traj.append(acc / len(origins))
    mean, err = batch_means(np.array(per_traj))
    u = np.arange(N)
    u = np.where(u >= N // 2, u - N, u)
    order = np.argsort(u)
    return StructureFunctionEstimate(times=t_grid, u=u[order], S=mean[..., order], stderr=err[..., order],
                                     velocities=vel, n_samples=n_traj)


def profile_width(u, profile) -> float:
    """Standard deviation of u under the normalized non-negative profile."""
    w = np.clip(np.asarray(profile, float), 0, None)
    tot = w.sum()
    if tot <= 0:
        raise ValueError("profile has no positive mass")
    m = np.dot(u, w) / tot
    var = np.dot((u - m) ** 2, w) / tot
    if var <= 0:
        raise ValueError("non-positive width")
    return math.sqrt(var)


def exponent_fit(times, widths) -> tuple:
    """z from the slope of log width against log t: z = 1/slope, with its standard error."""
    t = np.asarray(times, float)
    w = np.asarray(widths, float)
    if t.size < 4:
        raise ValueError("need at least 4 time points")
    if np.any(w <= 0) or np.any(t <= 0):
        raise ValueError("non-positive widths or times")
    X = np.log(t)
    Y = np.log(w)
    slope, icpt = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + icpt)
    dof = max(t.size - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(((X - X.mean()) ** 2).sum())
    se_slope = math.sqrt(s2 / sxx) if sxx > 0 else float("inf")
    z = 1.0 / slope
    return z, se_slope / slope ** 2


# ------------------------------------------------- Boltzmann-Gibbs ---------

def occupation_variance(rho: float) -> float:
    """chi = E[(xi_x - xi_{x+1})^2] under the product measure: 2 rho (1 - rho)."""
    return 2.0 * rho * (1.0 - rho)


def bg_bracket(L: float, N: int, t: float, a: float = 2.0, vnorm2: float = 1.0) -> float:
    """t [L / N^{a-1} + t N / L^2] ||v||^2 (the constant is not identifiable)."""
    return t * (L / N ** (a - 1) + t * N / L ** 2) * vnorm2


def bg_bracket_smooth(eps: float, N: int, t: float, vnorm2: float = 1.0) -> float:
    return t * (eps + t / (N * eps ** 2)) * vnorm2


def balanced_width(N: int, t: float, a: float = 2.0) -> float:
    """Width L* = (t N^a)^{1/3} where the two terms of the bracket balance up to constants."""
    return (t * N ** a) ** (1.0 / 3.0)


@dataclass
class BGResult:
    widths: np.ndarray          # lattice widths (indicator) or eps values (smooth)
    lhs: np.ndarray             # E |integral|^2
    stderr: np.ndarray
    bound: np.ndarray           # bracket with unit constant
    n_traj: int


def _start(params: ModelParams, rng, rho):
    return sample_product_measure(rho[0], rho[1], params.N, rng)


def bg_residual(params: ModelParams, alpha, beta, weight, widths: Sequence[int], t: float,
                n_traj: int, seed: int, rho=(1 / 3, 1 / 3), chi: float | None = None) -> BGResult:
    """E |int_0^t sum_x v(x) {xibar^a_x xibar^b_{x+1} - block product (+ chi/L)} ds|^2.

    For alpha != beta the block product is (right beta block)(left alpha
    block); for alpha == beta it is (right alpha block)^2 and the counter
    term chi/L is added, chi defaulting to 2 rho (1 - rho).
    """
    al, be = species_code(alpha), species_code(beta)
    N = params.N
    widths = np.asarray(widths, dtype=np.int64)
    if np.any(widths > N // 4) or np.any(widths < 1):
        raise ValueError("block widths must lie in 1..N/4")
    w = np.asarray(weight, dtype=complex)
    dens = [rho[0], rho[1], 1 - rho[0] - rho[1]]
    if chi is None:
        chi = occupation_variance(dens[al])
    vals = []
    for i in range(n_traj):
        rng = make_rng(seed, i)
        st = EngineState(params, _start(params, rng, rho), rng)
        out = _engine.run_block_replacement(st.species, st.cnt9, st.clock, st.rate9, st.acc9,
                                            params.speed, rng, al, be, dens[al], dens[be], widths,
                                            float(chi), w, np.array([float(t)]))
        vals.append(np.abs(out[-1]) ** 2)
    mean, err = batch_means(np.array(vals))
    vn = float(np.mean(np.abs(w) ** 2))
    return BGResult(widths=widths.astype(float), lhs=mean, stderr=err,
                    bound=np.array([bg_bracket(L, N, t, params.a, vn) for L in widths]), n_traj=n_traj)


def _mode_range(kmax: int):
    return np.arange(-kmax - 1, kmax + 1)


def bg_residual_smooth(params: ModelParams, alpha, beta, eps_list: Sequence[float], t: float,
                       n_traj: int, seed: int, rho=(1 / 3, 1 / 3), k_cut: float = 5.0) -> BGResult:
    """Smooth-kernel version of bg_residual with weight v = e_1, alpha != beta.

    The kernel averages are handled in Fourier space: with v = e_1 the
    block product summed against v reduces to
    N sum_k hat b(k) hat a(-1-k) hat rho_r(-k) hat rho_l(1+k),
    truncated at |k| <= k_cut / eps_min (the smooth kernel transforms decay
    like |k eps|^-3).  All ε values share one trajectory.
    """
    al, be = species_code(alpha), species_code(beta)
    if al == be:
        raise ValueError("the smooth-kernel residual is implemented for alpha != beta")
    N = params.N
    for eps in eps_list:
        if not (0 < eps < 0.25):
            raise ValueError("eps must lie in (0, 1/4)")
        BlockAverageSpec(eps=eps).lattice_width(N)
    kmax = int(math.ceil(k_cut / min(eps_list)))
    kmax = min(kmax, N // 2)
    ks = _mode_range(kmax)
    nk = ks.size
    dens = [rho[0], rho[1], 1 - rho[0] - rho[1]]
    uv = np.zeros((2, 3))
    uv[0] = -dens[be]
    uv[0, be] += 1.0        # field 0: centred beta occupation
    uv[1] = -dens[al]
    uv[1, al] += 1.0        # field 1: centred alpha occupation
    track = np.concatenate([ks, ks]).astype(np.int64)
    field_of = np.repeat([0, 1], nk).astype(np.int64)
    tab = _engine.mode_table(track, N)
    idx = {(f, int(k)): f * nk + j for f in range(2) for j, k in enumerate(ks)}
    pi, pj, pc, pg = [], [], [], []
    for g, eps in enumerate(eps_list):
        rr = BlockAverageSpec(side="right", eps=eps, kernel="smooth")
        ll = BlockAverageSpec(side="left", eps=eps, kernel="smooth")
        for k in range(-kmax, kmax):
            q = -1 - k
            coef = -N * kernel_transform(rr, N, [-k])[0] * kernel_transform(ll, N, [-q])[0]
            pi.append(idx[(0, k)])
            pj.append(idx[(1, q)])
            pc.append(coef)
            pg.append(g)
    npairs = len(pi)
    ng = len(eps_list)
    loc_w = np.tile(np.exp(1j * TWO_PI * np.arange(N) / N), (ng, 1))
    loc_sp = np.tile([al, be, dens[al], dens[be]], (ng, 1)).astype(float)
    loc_grp = np.arange(ng, dtype=np.int64)
    neg = -np.ones((npairs, 1), np.int64)
    zero_k = np.zeros(npairs, np.int64)
    vals = []
    for i in range(n_traj):
        rng = make_rng(seed, i)
        st = EngineState(params, _start(params, rng, rho), rng)
        out, _ = _engine.run_pairs(st.species, st.cnt9, st.clock, st.rate9, st.acc9, params.speed, rng,
                                   uv, field_of, tab, np.array(pi, np.int64), np.array(pj, np.int64),
                                   np.array(pc, complex), np.array(pg, np.int64), neg, neg, zero_k, zero_k,
                                   np.zeros(0), ng, loc_w, loc_sp, loc_grp, ng, np.array([float(t)]))
        vals.append(np.abs(out[-1]) ** 2)
    mean, err = batch_means(np.array(vals))
    return BGResult(widths=np.asarray(eps_list, float), lhs=mean, stderr=err,
                    bound=np.array([bg_bracket_smooth(e, N, t) for e in eps_list]), n_traj=n_traj)


# ------------------------------------------------------- crossed term ------

@dataclass
class CrossedRow:
    N: int
    estimate: float
    stderr: float
    control: float
    control_stderr: float
    n_samples: int


def _crossed_setup(params: ModelParams, plus: NormalModeSpec, minus: NormalModeSpec, eps: float,
                   kmax: int, prefactor: float):
    """Pair tables for the crossed and same-frame quadratic integrals with f = e_1.

    Fields: 0 = plus, 1 = minus.  Clocks: 0 = plus frame, 1 = minus frame,
    2 = relative shift w = floor((vel_plus - vel_minus) s).  Group 0 is the
    crossed term (two summands), group 1 the same-frame minus-minus control.
    """
    N = params.N
    ks = _mode_range(kmax)
    nk = ks.size
    uv = np.array([field_weights(plus), field_weights(minus)])
    track = np.concatenate([ks, ks]).astype(np.int64)
    field_of = np.repeat([0, 1], nk).astype(np.int64)
    tab = _engine.mode_table(track, N)
    idx = {(f, int(k)): f * nk + j for f in range(2) for j, k in enumerate(ks)}
    left = BlockAverageSpec(side="left", eps=eps, kernel="smooth")
    right = BlockAverageSpec(side="right", eps=eps, kernel="smooth")
    ghat = N * (np.exp(1j * TWO_PI / N) - 1.0)     # DFT of grad_N e_1 at mode 1
    vel = np.array([plus.lattice_velocity(params), minus.lattice_velocity(params),
                    plus.lattice_velocity(params) - minus.lattice_velocity(params)])
    rows = []
    # (field1, kernel1, clocks1, field2, kernel2, clocks2, group)
    terms = [(1, left, (1, 2), 0, right, (0, -1), 0),
             (0, left, (0, -1), 1, right, (1, 2), 0),
             (1, left, (1, -1), 1, right, (1, -1), 1)]
    for f1, k1, c1, f2, k2, c2, g in terms:
        for k in range(-kmax, kmax):
            q = -1 - k
            coef = prefactor * N * ghat * kernel_transform(k1, N, [-k])[0] * kernel_transform(k2, N, [-q])[0]
            rows.append((idx[(f1, k)], idx[(f2, q)], coef, g, c1, c2, k, q))
    pi = np.array([r[0] for r in rows], np.int64)
    pj = np.array([r[1] for r in rows], np.int64)
    pc = np.array([r[2] for r in rows], complex)
    pg = np.array([r[3] for r in rows], np.int64)
    ci = np.array([r[4] for r in rows], np.int64)
    cj = np.array([r[5] for r in rows], np.int64)
    pki = np.array([r[6] for r in rows], np.int64)
    pkj = np.array([r[7] for r in rows], np.int64)
    return uv, field_of, tab, pi, pj, pc, pg, ci, cj, pki, pkj, vel


def crossed_trajectory(params: ModelParams, eps: float, t: float, rng: np.random.Generator,
                       case_tag: str = "I", k_cut: float = 5.0, sample_times=None):
    """One trajectory of the crossed-frame quadratic integral and the same-frame control.

    Returns (crossed integral, control integral) at time t, or arrays at
    ``sample_times`` if given.
    """
    plus, minus = normal_mode_spec(case_tag, params)
    E = params.E_A - params.E_C
    N = params.N
    kmax = min(int(math.ceil(k_cut / eps)), N // 2)
    setup = _crossed_setup(params, plus, minus, eps, kmax, E / 2)
    uv, field_of, tab, pi, pj, pc, pg, ci, cj, pki, pkj, vel = setup
    init = sample_product_measure(1 / 3, 1 / 3, N, rng)
    # exact-count centering removes the k = 0 mode of both fields
    uv = uv - (uv[:, init.species].mean(axis=1))[:, None]
    st = EngineState(params, init, rng)
    times = np.array([float(t)]) if sample_times is None else np.asarray(sample_times, float)
    out, _ = _engine.run_pairs(st.species, st.cnt9, st.clock, st.rate9, st.acc9, params.speed, rng,
                               uv, field_of, tab, pi, pj, pc, pg, ci, cj, pki, pkj, vel, 2,
                               np.zeros((0, N), complex), np.zeros((0, 4)), np.zeros(0, np.int64), 0, times)
    if sample_times is None:
        return out[-1, 0], out[-1, 1]
    return out[:, 0], out[:, 1]


def crossed_integral(E: float, gamma: float, N_list: Sequence[int], t: float, eps: float,
                     n_traj, seed: int, case_tag: str = "I", k_cut: float = 5.0,
                     progress: Callable[[str], None] | None = None) -> list:
    """Decay table of E|crossed integral| over N, with the same-frame control.

    ``n_traj`` is an int or a sequence matched to ``N_list``.
    """
    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be strictly increasing")
    counts = [n_traj] * len(N_list) if np.isscalar(n_traj) else list(n_traj)
    rows = []
    for N, n in zip(N_list, counts):
        if case_tag.upper() == "I":
            params = ModelParams(N=N, gamma=gamma, E_A=E, E_B=E, E_C=0.0)
        else:
            raise ValueError("crossed_integral is wired for case I")
        cr, co = [], []
        for i in range(n):
            a, b = crossed_trajectory(params, eps, t, make_rng(seed + N, i), case_tag, k_cut)
            cr.append(abs(a))
            co.append(abs(b))
        m1, e1 = batch_means(cr)
        m2, e2 = batch_means(co)
        rows.append(CrossedRow(N, float(m1), float(e1), float(m2), float(e2), n))
        if progress:
            progress(f"N={N}: crossed {m1:.4g} +- {e1:.2g}, control {m2:.4g} +- {e2:.2g}")
    return rows


# --------------------------------------------------- Riemann-Lebesgue ------

def oscillatory_integral(times, values, t: float, k: int, vel: float, N: int) -> complex:
    """int_0^t A_s e_{-k}(floor(vel s)/N) ds for a piecewise-constant A.

    A equals values[i] on [times[i], times[i+1]) (times[0] = 0).  The
    integral is evaluated exactly by splitting at every phase jump.
    """
    times = np.asarray(times, float)
    values = np.asarray(values)
    if times[0] != 0:
        raise ValueError("times must start at 0")
    m_max = math.floor(abs(vel) * t)
    if vel != 0:
        jumps = (np.arange(1, m_max + 1) / abs(vel))
    else:
        jumps = np.empty(0)
    brk = np.union1d(np.concatenate([times[times < t], jumps[jumps < t]]), [t])
    brk = np.concatenate([[0.0], brk[brk > 0]])
    brk = np.unique(brk)
    left = brk[:-1]
    dt = np.diff(brk)
    ia = np.searchsorted(times, left, side="right") - 1
    passed = np.searchsorted(jumps, left, side="right")
    m = passed if vel >= 0 else -(passed + 1)
    phase = np.exp(-1j * TWO_PI * ((k * m) % N) / N)
    return complex(np.sum(values[ia] * phase * dt))


def riemann_lebesgue_check(processes: Callable[[int, np.random.Generator], tuple], k_list, vel_of_N,
                           t: float, N_list, n_samples: int, seed: int) -> dict:
    """Tabulate E|oscillatory integral| against N for each k.

    ``processes(N, rng)`` returns (times, values) of a piecewise-constant
    process; ``vel_of_N(N)`` the phase velocity.  Returns
    {k: [(N, mean, stderr), ...]}.
    """
    table = {}
    for k in k_list:
        rows = []
        for N in N_list:
            vals = []
            for i in range(n_samples):
                rng = make_rng(seed + 7919 * N + k, i)
                ts, vs = processes(N, rng)
                vals.append(abs(oscillatory_integral(ts, vs, t, k, vel_of_N(N), N)))
            if n_samples > 1:
                m, e = batch_means(vals)
            else:
                m, e = vals[0], 0.0
            rows.append((N, float(m), float(e)))
        table[k] = rows
    return table


def constant_process(N: int, rng=None):
    return np.array([0.0]), np.array([1.0])


def random_walk_process(steps: int, horizon: float):
    """Factory: scaled +-1 random walk on a fixed grid, a Hölder-1/2 test process."""
    def make(N: int, rng: np.random.Generator):
        dt = horizon / steps
        inc = rng.choice([-1.0, 1.0], size=steps) * math.sqrt(dt)
        vals = np.concatenate([[0.0], np.cumsum(inc)[:-1]]) + 1.0
        return np.arange(steps) * dt, vals
    return make


# ---------------------------------------------------- energy process -------

def smoothed_square_integral(snapshots: Sequence[Configuration], dt: float, spec: NormalModeSpec,
                             params: ModelParams, grad_phi: np.ndarray, eps: float,
                             t_frames=None) -> float:
    """Left-Riemann approximation of int_0^t sum_u (Z_s * iota_eps)(u)^2 grad phi(u) / N ds.

    Z_s * iota_eps at u is sqrt(N) times the right block average of the
    field variable over floor(eps N) sites, in the field's moving frame.
    """
    N = params.N
    spec_blk = BlockAverageSpec(side="right", eps=eps)
    offs, wt = spec_blk.weights(N)
    kern = np.zeros(N)
    kern[offs % N] = wt
    kf = np.conj(np.fft.fft(kern))
    u_of = field_weights(spec)
    total = 0.0
    vel = spec.lattice_velocity(params)
    for j, conf in enumerate(snapshots):
        s = j * dt if t_frames is None else t_frames[j]
        m = math.floor(vel * s)
        u = u_of[conf.species] - (u_of[conf.species]).mean()
        blk = np.real(np.fft.ifft(kf * np.fft.fft(u)))
        blk = np.roll(blk, -m)            # frame: value at u = x - m
        total += float(np.sum(N * blk ** 2 * grad_phi) / N) * dt
    return total


def energy_process(ensemble: Sequence[Sequence[Configuration]], dt: float, spec: NormalModeSpec,
                   params: ModelParams, phi: TestFunction, eps: float, delta: float) -> dict:
    """Second moment of B^eps_t - B^delta_t over an ensemble of snapshot sequences.

    Returns the gap estimate, its error and the ratio gap / (eps t ||grad phi||^2).
    """
    if not (0 < delta <= eps):
        raise ValueError("need 0 < delta <= eps")
    N = params.N
    g = np.real(phi.grad(N))
    gaps = []
    for snaps in ensemble:
        be = smoothed_square_integral(snaps, dt, spec, params, g, eps)
        bd = smoothed_square_integral(snaps, dt, spec, params, g, delta)
        gaps.append((be - bd) ** 2)
    t = dt * len(ensemble[0])
    if len(gaps) > 1:
        m, e = batch_means(gaps)
    else:
        m, e = gaps[0], 0.0
    norm = eps * t * phi.grad_norm2(N)
    return {"gap": float(m), "stderr": float(e), "ratio": float(m) / norm if norm > 0 else float("nan")}
