"""
Loop mass of a finite region
============================

The total mass of random walk loops confined to a region is
``-log det(I - P)``. Splitting it vertex by vertex along any elimination
order gives the per-vertex rates used by the sampler.
"""
import math

import numpy as np

from loopsoup import Region, build_kernel, pointed_rates, total_loop_mass

# The smallest interesting region: two neighbouring sites. Every loop is a
# back-and-forth walk, and the mass has a closed form.
pair = Region([(0, 1), (1, 1)])
print("two sites:", total_loop_mass(build_kernel(pair)), "closed form:", math.log(16 / 15))

# A 7x5 box in the upper half-plane. The per-vertex rates depend on the
# order but their sum never does.
box = Region.box(0, 6, 1, 5)
kernel = build_kernel(box)
rng = np.random.default_rng(0)
for _ in range(3):
    order = [tuple(box.coords[i]) for i in rng.permutation(len(box))]
    rates = pointed_rates(build_kernel(box, order))
    print(f"sum of rates {rates.lam.sum():.15f}   log det {total_loop_mass(kernel):.15f}")

# Return probabilities are largest in the bulk and smallest at corners.
rates = pointed_rates(kernel)
print("largest r_i:", rates.r.max().round(4), "  smallest nonzero r_i:", rates.r[rates.r > 0].min().round(4))
