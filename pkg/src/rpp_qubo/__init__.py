"""QUBO models for routing: TSP, VRP and ride pooling, with exact and annealing solvers."""

from .config import BuildOptions, PenaltyConfig, SaSchedule
from .decode import DecodedSolution, Violation, check_feasibility, decode_node, energy_decomposition
from .edge import build_rpp_edge, decode_edge
from .instance import (
    DistanceMatrix,
    InstanceError,
    RoutingInstance,
    generate_instance,
    load_instance,
    normalization_factor,
    parse_instance,
)
from .node import build_rpp, build_tsp, build_vrp, count_variables
from .qubo import (
    IsingModel,
    QuboModel,
    add_half_hot,
    add_one_hot,
    energy,
    fix_variable,
    fix_variables,
    read_qubo,
    to_ising,
    write_qubo,
)
from .solvers import routing_oracle, solve_exhaustive, solve_sa

import types as _types

__all__ = sorted(k for k, v in globals().items() if not k.startswith("_") and not isinstance(v, _types.ModuleType))
