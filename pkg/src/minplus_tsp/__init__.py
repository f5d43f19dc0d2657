"""Exact TSP by Held-Karp layers computed as batched min-plus matrix products."""

from .domain import batches, binomial, colex_rank, colex_unrank, next_same_cardinality
from .io import GeneratorSpec, InstanceDocument, gen_random, load_instance, parse_json, parse_tsplib, write_json
from .kernels import INF, KernelId, OpCounter, kernel_lookup, minplus_naive, minplus_tiled, minplus_transposed, register_kernel
from .solvers import (
    Instance,
    SolveStats,
    Tour,
    brute_force,
    expected_kernel_calls,
    held_karp_pull,
    reconstruct_tour,
    solve,
    solve_minplus,
)

__version__ = "0.1.0"
