"""Random walk loop soups on the discrete half-plane: exact sampling, loop
clusters, special crossing events and block renormalization."""

__version__ = "0.1.0"

from .geometry import (Q_EXT, Q_INT, DiscreteLoop, RealRect, Region, Segment, loop_diameter,
                       loop_hits_segment, rect_region, transform_rect)
from .kernel import (ExactKernel, PointedRates, build_kernel, edge_backforth_mass,
                     pointed_rates, total_loop_mass, vertex_hit_mass)
from .sampler import (LoopSoup, SamplerConfig, SamplingError, enumeration_sampler,
                      filter_by_diameter, read_soup, sample_soup, sample_soup_coupled,
                      write_soup)
from .clusters import ClusterPartition, build_clusters, cluster_crosses_rect, largest_cluster_stats
from .events import BlockSpec, EventWitness, eval_C1, eval_C2, eval_C3, special_crossing
from .blocks import (BlockGrid, OmegaField, build_omega_global, build_omega_independent,
                     lss_dominated_p, spanning_open_path, witness_connectivity_check)
from .experiments import (ContinuousLoop, SweepResult, bernoulli_minorant, convergence_diagnostic,
                          estimate_alpha_c, interpolate_loop, sweep_crossing_probability,
                          truncation_experiment)

__all__ = [
    "Q_EXT",
    "Q_INT",
    "DiscreteLoop",
    "RealRect",
    "Region",
    "Segment",
    "loop_diameter",
    "loop_hits_segment",
    "rect_region",
    "transform_rect",
    "ExactKernel",
    "PointedRates",
    "build_kernel",
    "edge_backforth_mass",
    "pointed_rates",
    "total_loop_mass",
    "vertex_hit_mass",
    "LoopSoup",
    "SamplerConfig",
    "SamplingError",
    "enumeration_sampler",
    "filter_by_diameter",
    "read_soup",
    "sample_soup",
    "sample_soup_coupled",
    "write_soup",
    "ClusterPartition",
    "build_clusters",
    "cluster_crosses_rect",
    "largest_cluster_stats",
    "BlockSpec",
    "EventWitness",
    "eval_C1",
    "eval_C2",
    "eval_C3",
    "special_crossing",
    "BlockGrid",
    "OmegaField",
    "build_omega_global",
    "build_omega_independent",
    "lss_dominated_p",
    "spanning_open_path",
    "witness_connectivity_check",
    "ContinuousLoop",
    "SweepResult",
    "bernoulli_minorant",
    "convergence_diagnostic",
    "estimate_alpha_c",
    "interpolate_loop",
    "sweep_crossing_probability",
    "truncation_experiment",
]
