"""
The block percolation field
===========================

Each edge of a coarse grid carries a translated or rotated copy of the
special crossing event. One soup on the hull drives all edges at once.
"""
from loopsoup.blocks import (BlockGrid, build_omega_global, sample_hull_soup, spanning_open_path,
                             witness_connectivity_check)

grid = BlockGrid(4, 3)
N = 4
soup = sample_hull_soup(N, 14.0, grid, seed=3)
omega = build_omega_global(soup, N, grid)
print(omega.to_text())
print("open fraction:", round(omega.open_fraction, 3))
ok, path = spanning_open_path(omega)
print("left-right open path:", ok, path)
print("witness loops connected along open components:", witness_connectivity_check(omega, soup))
