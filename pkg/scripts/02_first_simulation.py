"""A first trajectory: densities, currents and snapshots.

Runs the exchange dynamics from the stationary product measure, looks at
the state through an observer, and stores the final configuration.
"""
import io

import numpy as np

from abcflux import (EventLog, ModelParams, Observer, make_rng, read_snapshot, sample_product_measure,
                     simulate, write_snapshot)
from abcflux.model_core import currents, mean_total_rate

params = ModelParams(N=256, gamma=0.5, E_A=3.0, E_B=-2.0, E_C=0.0, seed=1)
rng = make_rng(params.seed, 0)
init = sample_product_measure(1 / 3, 1 / 3, params.N, rng)
print("initial counts (A, B, C):", init.counts)
print(str(init)[:64], "...")

# Time is macroscopic: one unit is N^2 sweeps worth of microscopic events
expected = 0.01 * params.speed * mean_total_rate(params, 1 / 3, 1 / 3)
print(f"expected number of swaps up to t = 0.01: {expected:.0f}")

records = []


def look(config, t):
    j = currents(config, "A", params)
    records.append((t, config.counts, j.mean()))


log = simulate(params, init, 0.01, [Observer(np.linspace(0, 0.01, 6), look)], rng=rng)
print("logged swaps:", len(log))
for t, counts, jbar in records:
    print(f"t = {t:.4f}  counts = {counts}  mean A-current = {jbar:+.4f}")

# The event log replays exactly
final = log.replay(init)

# Snapshots: one byte per site, or four sites per byte when packed
buf = io.BytesIO()
write_snapshot(buf, final, params, time=0.01, packed=True)
print("packed snapshot bytes:", len(buf.getvalue()))
buf.seek(0)
back, p2, t2 = read_snapshot(buf)
assert back == final and p2 == params

# CSV export of the first few swaps
text = log.to_csv()
print("\n".join(text.splitlines()[:5]))
assert len(EventLog.from_csv(io.StringIO(text))) == len(log)
