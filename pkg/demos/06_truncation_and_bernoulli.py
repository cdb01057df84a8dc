"""
Truncation and the Bernoulli minorant
=====================================

Dropping large loops can only shrink clusters. Separately, the loops whose
range is a single edge already form independent bond percolation.
"""
from loopsoup.experiments import (bernoulli_minorant, bernoulli_simulation, bernoulli_threshold,
                                  truncation_experiment)

for row in truncation_experiment(2.0, [1, 2, 4, 8, 16], box=16, samples=50, seed=0):
    print(f"cutoff {row['cutoff']:>4}: loops {row['mean_loops']:7.1f}  "
          f"largest cluster {row['mean_largest_vertices']:6.1f} sites  p_cross {row['p_cross']:.2f}")

print("edge open probability at alpha=1:", bernoulli_minorant(1.0))
print("bond percolation threshold alpha:", bernoulli_threshold())
b = bernoulli_simulation(4.0, 10, 300, seed=1)
print(f"simulated {b.open_frequency:.4f} vs {b.p_closed_form:.4f} (z = {b.z:+.2f})")
