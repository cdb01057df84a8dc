"""
Sampling a loop soup
====================

Exact Poisson sampling by the pointed-loop decomposition, then a look at
the local time, which has a closed form in terms of the Green function.
"""
import io

import numpy as np

from loopsoup import Region, build_kernel, pointed_rates, sample_soup, write_soup

region = Region.box(0, 8, 1, 6)
kernel = build_kernel(region)
rates = pointed_rates(kernel)

soup = sample_soup(rates, alpha=1.0, seed=42)
print(len(soup), "loops; lengths:", np.sort(soup.lengths)[::-1][:10], "...")

# Expected number of visits to v equals alpha * (G(v, v) - 1).
G = np.linalg.inv(np.eye(len(region)) - kernel.dense())
v = (4, 3)
i = kernel.position(v)
visits = []
for s in range(4000):
    sp = sample_soup(rates, 1.0, (1, s))
    visits.append(int(np.all(sp.coords == v, axis=1).sum()))
visits = np.array(visits)
print(f"visits to {v}: {visits.mean():.3f} +- {visits.std() / np.sqrt(len(visits)):.3f}, "
      f"exact {G[i, i] - 1:.3f}")

# Soups serialise to a plain text format.
buf = io.StringIO()
write_soup(soup.subset(np.arange(2)), buf)
print(buf.getvalue())
