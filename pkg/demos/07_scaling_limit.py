"""
Rescaled loops
==============

A discrete loop with n steps becomes a continuous closed curve of duration
n / (2N^2) after shrinking space by N. Exported as timed points.
"""
import json

from loopsoup import Region, build_kernel, interpolate_loop, pointed_rates, sample_soup

soup = sample_soup(pointed_rates(build_kernel(Region.box(0, 16, 1, 16))), 1.0, seed=5)
loop = max(soup, key=lambda l: l.n_steps)
for N in (2, 8):
    c = interpolate_loop(loop, N)
    print(f"N={N}: {loop.n_steps} steps -> duration {c.duration:.4f}, closed={c.closed}")
    print("  position at half time:", c(c.duration / 2))
print(json.dumps(interpolate_loop(loop, 8).to_json())[:200], "...")
