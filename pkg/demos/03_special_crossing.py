"""
Clusters and the special crossing event
=======================================

Loops sharing a vertex form clusters. The block event asks for one
horizontal and two vertical cluster crossings inside a 6N x 3N box.
"""
from loopsoup import BlockSpec, build_clusters, largest_cluster_stats, sample_soup, special_crossing
from loopsoup.blocks import block_rates

N = 4
spec = BlockSpec(N)
rates = block_rates(N)

for alpha in (2.0, 8.0, 16.0):
    hits = 0
    for s in range(100):
        soup = sample_soup(rates, alpha, (alpha, s))
        hits += special_crossing(soup, spec, short_circuit=True).all
    print(f"alpha={alpha:5.1f}  P(event) ~ {hits / 100:.2f}")

soup = sample_soup(rates, 16.0, 7)
part = build_clusters(soup)
print(part.n_clusters, "clusters; largest:", largest_cluster_stats(part))
res = special_crossing(soup, spec)
print({k: len(v) for k, v in res.witnesses.items()}, "witness loops per condition")
