"""Particle density profiles against the deterministic hydrodynamic equations.

Starts from a step profile with gamma = 1 and compares coarse-grained
occupations with a finite-difference solution of
    d rho = Delta rho - div(chi(rho) g_E).
Pass N on the command line; 4096 takes about an hour on one core.
"""
import sys
import time

import numpy as np

from abcflux import Configuration, EngineState, ModelParams, make_rng
from abcflux.spde_ref import HydroState, hydro_solve

N = int(sys.argv[1]) if len(sys.argv) > 1 else 1024
t, n_traj, bins = 0.05, 6, 16
params = ModelParams(N=N, gamma=1.0, E_A=12.0, E_B=-12.0, E_C=0.0)

x = (np.arange(N) + 0.5) / N
rho_a = np.where(x < 0.5, 0.6, 0.1)
rho_b = np.where(x < 0.5, 0.2, 0.5)

occ = np.zeros((2, N))
t0 = time.time()
for i in range(n_traj):
    rng = make_rng(55, i)
    u = rng.random(N)
    species = np.where(u < rho_a, 0, np.where(u < rho_a + rho_b, 1, 2)).astype(np.int8)
    state = EngineState(params, Configuration(species), rng)
    state.advance(t)
    occ[0] += state.species == 0
    occ[1] += state.species == 1
occ /= n_traj
print(f"{n_traj} trajectories at N = {N} in {time.time() - t0:.0f} s")

M = 256
xs = (np.arange(M) + 0.5) / M
start = HydroState(np.where(xs < 0.5, 0.6, 0.1), np.where(xs < 0.5, 0.2, 0.5), (12.0, -12.0))
pred = hydro_solve(start, t, 1 / M, 1 / M ** 2 / 4)
flat = hydro_solve(HydroState(start.rho_A, start.rho_B, (0.0, 0.0)), t, 1 / M, 1 / M ** 2 / 4)


def coarse(a):
    return a.reshape(bins, -1).mean(1)


print("bin   rho_A particles  hydro   | rho_B particles  hydro")
for k in range(bins):
    print(f"{k:3d}   {coarse(occ[0])[k]:.3f}          {coarse(pred.rho_A)[k]:.3f}   |"
          f" {coarse(occ[1])[k]:.3f}          {coarse(pred.rho_B)[k]:.3f}")
err = np.abs(coarse(occ[0]) - coarse(pred.rho_A)).mean()
err_flat = np.abs(coarse(occ[0]) - coarse(flat.rho_A)).mean()
print(f"mean |error| for A: {err:.4f} (heat equation alone: {err_flat:.4f})")
