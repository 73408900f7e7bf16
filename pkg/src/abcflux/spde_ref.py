"""Reference integrators for the limiting equations on the unit torus.

* Ornstein-Uhlenbeck / stochastic Burgers with conservative noise,
  dZ = Delta Z dt + lambda grad(Z^2) dt + sqrt(2 sigma^2) grad dW,
  integrated spectrally (exponential Euler, 2/3-rule dealiasing).
* The deterministic two-species hydrodynamic system
  d rho = Delta rho - div(chi(rho) g_E), explicit finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .mode_coupling import hydro_mobility

FOUR_PI2 = 4.0 * math.pi ** 2


@dataclass
class SpectralField:
    """Fourier coefficients c_k, k = 0..M, of a real field (c_{-k} = conj(c_k))."""
    coeffs: np.ndarray
    time: float = 0.0

    @property
    def M(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zeros(cls, M: int) -> "SpectralField":
        return cls(np.zeros(M + 1, complex))

    @classmethod
    def white_noise(cls, M: int, sigma2: float, rng: np.random.Generator, mean: float = 0.0):
        """Sample of the invariant law: independent modes with E|c_k|^2 = sigma2."""
        c = np.empty(M + 1, complex)
        c[0] = mean
        c[1:] = math.sqrt(sigma2 / 2) * (rng.standard_normal(M) + 1j * rng.standard_normal(M))
        return cls(c)

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.M:
            return 0j
        return self.coeffs[k] if k >= 0 else np.conj(self.coeffs[-k])

    def real_space(self, n: int | None = None) -> np.ndarray:
        """Field values on a uniform grid of n >= 2M + 1 points."""
        n = n or 2 * self.M + 2
        full = np.zeros(n // 2 + 1, complex)
        full[: self.M + 1] = self.coeffs
        return np.fft.irfft(full, n) * n


def _grid_size(M: int) -> int:
    """Smallest even grid that keeps quadratic products alias-free up to mode M."""
    n = 3 * M + 1
    return n + (n % 2)


class SBEIntegrator:
    """Exponential-Euler stepper with cached linear factors for a fixed (M, dt)."""

    def __init__(self, M: int, dt: float, lam: float, sigma2: float):
        if M < 1:
            raise ValueError("need at least one mode")
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.M, self.dt, self.lam, self.sigma2 = M, dt, lam, sigma2
        k = np.arange(M + 1)
        self.k = k
        rate = FOUR_PI2 * k ** 2
        self.decay = np.exp(-rate * dt)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.phi1 = np.where(k > 0, (1 - self.decay) / np.where(k > 0, rate, 1.0), dt)
        # exact OU noise over one step: keeps E|c_k|^2 = sigma2 stationary for lam = 0
        self.noise_sd = np.sqrt(sigma2 * (1 - self.decay ** 2))
        self.noise_sd[0] = 0.0
        self.n_grid = _grid_size(M)
        if lam != 0 and dt > 1.0 / (2 * math.pi * M) ** 2 * 50:
            # the nonlinear substep is explicit; guard against gross violations
            raise ValueError(f"dt={dt:g} too large for M={M} with a nonlinearity")

    def nonlinear(self, c: np.ndarray) -> np.ndarray:
        n = self.n_grid
        full = np.zeros(n // 2 + 1, complex)
        full[: self.M + 1] = c
        z = np.fft.irfft(full, n) * n
        sq = np.fft.rfft(z * z)[: self.M + 1] / n
        return self.lam * 2j * math.pi * self.k * sq

    def step(self, state: SpectralField, rng: np.random.Generator) -> SpectralField:
        c = state.coeffs
        new = self.decay * c
        if self.lam != 0:
            new = new + self.phi1 * self.nonlinear(c)
        if self.sigma2 != 0:
            noise = (rng.standard_normal(self.M + 1) + 1j * rng.standard_normal(self.M + 1)) / math.sqrt(2)
            new = new + self.noise_sd * noise
        new[0] = c[0]
        if not np.all(np.isfinite(new)):
            raise FloatingPointError(f"SBE step produced non-finite values at t={state.time:g}")
        return SpectralField(new, state.time + self.dt)


def sbe_step(state: SpectralField, dt: float, lam: float, sigma2: float,
             rng: np.random.Generator) -> SpectralField:
    """One step of the spectral scheme (builds a throwaway integrator)."""
    return SBEIntegrator(state.M, dt, lam, sigma2).step(state, rng)


def sbe_run(M: int, dt: float, lam: float, sigma2: float, t_max: float, rng: np.random.Generator,
            init: SpectralField | None = None, record_every: int = 0, modes=(1,)):
    """Integrate to t_max; optionally record the listed modes every ``record_every`` steps.

    Returns (final state, times, records[n_records, len(modes)]).
    """
    integ = SBEIntegrator(M, dt, lam, sigma2)
    st = init if init is not None else SpectralField.white_noise(M, sigma2, rng)
    n_steps = int(round(t_max / dt))
    times, recs = [], []
    modes = list(modes)
    if record_every:
        times.append(st.time)
        recs.append(st.coeffs[modes].copy())
    for i in range(1, n_steps + 1):
        st = integ.step(st, rng)
        if record_every and i % record_every == 0:
            times.append(st.time)
            recs.append(st.coeffs[modes].copy())
    return st, np.array(times), np.array(recs)


def ou_covariance(sigma2: float, k: int, t) -> np.ndarray:
    """E[Z_t(e_k) conj(Z_0(e_k))] for the stationary OU field: sigma2 exp(-4 pi^2 k^2 t)."""
    return sigma2 * np.exp(-FOUR_PI2 * k * k * np.asarray(t, float))


def two_time_covariance(series: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Per-lag average of x[i + lag] conj(x[i]) over all origins of one series (real part)."""
    x = np.asarray(series)
    out = np.empty(len(lags))
    for j, lag in enumerate(lags):
        out[j] = np.mean((x[lag:] * np.conj(x[: x.size - lag])).real)
    return out


def ou_vs_particle(sigma2: float, k: int, lags, particle_mean, particle_err) -> list:
    """Rows (t, analytic, particle, stderr, ratio, z-score) comparing covariance curves."""
    rows = []
    for t, m, e in zip(lags, particle_mean, particle_err):
        a = float(ou_covariance(sigma2, k, t))
        rows.append((float(t), a, float(m), float(e), float(m) / a, (float(m) - a) / e if e > 0 else float("inf")))
    return rows


# ------------------------------------------------------------ hydro --------

@dataclass
class HydroState:
    rho_A: np.ndarray
    rho_B: np.ndarray
    g_E: tuple
    time: float = 0.0

    def __post_init__(self):
        a, b = np.asarray(self.rho_A, float), np.asarray(self.rho_B, float)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("densities must be 1-d arrays of equal length")
        if np.any(a < -1e-12) or np.any(b < -1e-12) or np.any(a + b > 1 + 1e-12):
            raise ValueError("densities out of the simplex")
        self.rho_A, self.rho_B = a, b

    @property
    def masses(self):
        return float(self.rho_A.mean()), float(self.rho_B.mean())


def hydro_rhs(ra: np.ndarray, rb: np.ndarray, g_E, dx: float):
    """Right-hand side on a periodic grid; the flux is evaluated at cell faces."""
    lap_a = (np.roll(ra, -1) - 2 * ra + np.roll(ra, 1)) / dx ** 2
    lap_b = (np.roll(rb, -1) - 2 * rb + np.roll(rb, 1)) / dx ** 2
    fa = 0.5 * (ra + np.roll(ra, -1))
    fb = 0.5 * (rb + np.roll(rb, -1))
    chi = hydro_mobility(fa, fb)
    ja = chi[0, 0] * g_E[0] + chi[0, 1] * g_E[1]
    jb = chi[1, 0] * g_E[0] + chi[1, 1] * g_E[1]
    div_a = (ja - np.roll(ja, 1)) / dx
    div_b = (jb - np.roll(jb, 1)) / dx
    return lap_a - div_a, lap_b - div_b


def hydro_solve(initial: HydroState, t_max: float, dx: float, dt: float) -> HydroState:
    """Forward-Euler integration of the periodic hydrodynamic system up to t_max."""
    if dt > dx * dx / 4 * (1 + 1e-12):
        raise ValueError(f"CFL violation: dt={dt:g} > dx^2/4={dx * dx / 4:g}")
    n = initial.rho_A.size
    if abs(n * dx - 1.0) > 1e-9:
        raise ValueError("grid must cover the unit torus: n * dx = 1")
    ra, rb = initial.rho_A.copy(), initial.rho_B.copy()
    n_steps = int(math.ceil(t_max / dt - 1e-12))
    h = t_max / n_steps if n_steps else 0.0
    for _ in range(n_steps):
        da, db = hydro_rhs(ra, rb, initial.g_E, dx)
        ra = ra + h * da
        rb = rb + h * db
    return replace(initial, rho_A=ra, rho_B=rb, time=initial.time + t_max)
