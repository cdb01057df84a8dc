"""
Sweeping the intensity
======================

Coupled soups make every replica monotone in alpha, so one replica serves
the whole grid. Two sweeps: the block event and a plain box crossing.
"""
import numpy as np

from loopsoup import estimate_alpha_c, sweep_crossing_probability

res = sweep_crossing_probability([0.25, 1.0, 4.0, 8.0, 12.0], [4, 6], samples=200, seed=1)
for r in res.rows:
    print(f"N={r['N']}  alpha={r['alpha']:5.2f}  p={r['p_hat']:.3f}  [{r['ci_low']:.3f}, {r['ci_high']:.3f}]")

# Left-right crossing of the central square of [0, 2M] x (0, M].
est = estimate_alpha_c([8, 16], np.arange(0.2, 3.01, 0.2), samples=200, seed=2)
for row in est.summary():
    print(row)
