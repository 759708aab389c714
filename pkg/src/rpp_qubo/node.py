"""Node-based QUBO builders: TSP, VRP and the ride-pooling problem (RPP).

Node variables say "vehicle a is at location l at step b".  RPP steps form a
path 1..S with S = 2C + 1; TSP and VRP steps are cyclic.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Optional, Sequence

from .config import BuildOptions, PenaltyConfig
from .instance import DistanceMatrix, RoutingInstance, normalization_factor
from .qubo import (
    OBJECTIVE,
    QuboModel,
    Terms,
    add_half_hot,
    add_one_hot,
    add_squared_linear,
    fix_variables,
)
from .variables import NodeVar, SlackVar, TspVar, VrpVar

# constraint families
LOCATION = "location-onehot"
STEP = "step-onehot"
HALF_HOT = "half-hot"
CAUSALITY = "incentive"
CAPACITY = "capacity"
START = "start"
NONEDGE = "nonedge"


# TSP / VRP -----------------------------------------------------------------

def _edge_set(nodes: Sequence[str], edges: Optional[Iterable[tuple[str, str]]]) -> set[tuple[str, str]]:
    if edges is None:
        return {(u, v) for u in nodes for v in nodes if u != v}
    out = set()
    for u, v in edges:
        if u == v:
            continue
        out.add((u, v))
        out.add((v, u))
    return out


def build_tsp(
    nodes: Sequence[str],
    distances: DistanceMatrix,
    edges: Optional[Iterable[tuple[str, str]]] = None,
    penalty: Optional[PenaltyConfig] = None,
    epsilon: Optional[float] = None,
) -> QuboModel:
    """Cyclic TSP over ``nodes`` with ``n**2`` variables ``TspVar(v, i)``.

    ``edges`` are undirected pairs (default: complete graph); transitions
    along a missing pair are charged ``lambda_nonedge``.
    """
    nodes = list(nodes)
    n = len(nodes)
    if n < 3:
        raise ValueError("TSP needs at least 3 nodes")
    penalty = penalty or PenaltyConfig.for_path_length(n)
    arcs = _edge_set(nodes, edges)
    if arcs:
        wmax = max(distances(u, v) for u, v in arcs)
        eps = epsilon if epsilon is not None else (1e-6 * wmax if wmax > 0 else 1e-6)
        W = wmax + eps
    else:
        W = 1.0
    model = QuboModel(
        (TspVar(v, i) for v in nodes for i in range(1, n + 1)),
        meta={"formulation": "tsp", "normalization": W, "path_length": n},
    )
    x = lambda v, i: model.index(TspVar(v, (i - 1) % n + 1))

    for i in range(1, n + 1):
        for u, v in product(nodes, nodes):
            if u == v:
                continue
            if (u, v) in arcs:
                w = distances(u, v) / W
                if w:
                    model.add_quadratic(x(u, i), x(v, i + 1), w, OBJECTIVE)
            else:
                model.add_quadratic(x(u, i), x(v, i + 1), penalty.lambda_nonedge, NONEDGE)
    for v in nodes:
        add_one_hot(model, [x(v, i) for i in range(1, n + 1)], penalty.lambda_location, LOCATION)
    for i in range(1, n + 1):
        add_one_hot(model, [x(v, i) for v in nodes], penalty.lambda_step, STEP)
    return model.compact()


def build_vrp(
    depot: str,
    locations: Sequence[str],
    distances: DistanceMatrix,
    num_vehicles: int,
    penalty: Optional[PenaltyConfig] = None,
    epsilon: Optional[float] = None,
) -> QuboModel:
    """Shared-depot VRP on a complete graph; steps ``0..n`` are cyclic.

    The depot is exempt from the per-location one-hot so idle vehicles can
    stay there at zero cost.
    """
    locations = [l for l in locations if l != depot]
    nodes = [depot] + locations
    n = len(locations)
    steps = n + 1
    penalty = penalty or PenaltyConfig.for_path_length(steps)
    W = normalization_factor(distances, epsilon, nodes)
    vehicles = [f"v{a + 1}" for a in range(num_vehicles)]
    model = QuboModel(
        (VrpVar(a, v, s) for a in vehicles for v in nodes for s in range(steps)),
        meta={"formulation": "vrp", "normalization": W, "path_length": steps},
    )
    x = lambda a, v, s: model.index(VrpVar(a, v, s % steps))

    for a in vehicles:
        for s in range(steps):
            for u, v in product(nodes, nodes):
                w = distances(u, v) / W if u != v else 0.0
                if w:
                    model.add_quadratic(x(a, u, s), x(a, v, s + 1), w, OBJECTIVE)
    for v in locations:
        add_one_hot(model, [x(a, v, s) for a in vehicles for s in range(steps)], penalty.lambda_location, LOCATION)
    for a in vehicles:
        for s in range(steps):
            add_one_hot(model, [x(a, v, s) for v in nodes], penalty.lambda_step, STEP)
    return model.compact()


# RPP -----------------------------------------------------------------------

def rpp_node_keys(instance: RoutingInstance) -> list[NodeVar]:
    """All node variables of the RPP, excluding each vehicle's start at step S."""
    S = instance.path_length
    keys = []
    for veh in instance.vehicles:
        for beta in range(1, S + 1):
            for l in instance.vehicle_nodes(veh):
                if l == veh.start and beta == S and S > 1:
                    continue
                keys.append(NodeVar(veh.id, l, beta))
    return keys


def _check_penalty(penalty: PenaltyConfig, mode: str) -> None:
    # duplicate visits can collect up to 1.5 * lambda_incentive per unit of
    # squared location error; the location penalty must outweigh that
    if mode == "incentive" and not 1.5 * penalty.lambda_incentive < penalty.lambda_location:
        raise ValueError(
            "incentive mode needs 1.5 * lambda_incentive < lambda_location "
            f"(got {penalty.lambda_incentive} and {penalty.lambda_location})"
        )


def build_rpp(instance: RoutingInstance, options: BuildOptions = BuildOptions()) -> QuboModel:
    """Node-based RPP QUBO.

    Families: location one-hot over the fleet, per-step one-hot (half-hot at
    the last step), start pinning, causality (incentive or penalty mode),
    normalized distance objective, and optionally capacity with unary slacks.
    """
    S = instance.path_length
    C = instance.num_requests
    penalty = options.penalty or PenaltyConfig.for_path_length(S)
    _check_penalty(penalty, options.causality_mode)
    W = normalization_factor(instance.distances)
    model = QuboModel(
        rpp_node_keys(instance),
        meta={
            "formulation": "node",
            "instance": instance.name,
            "normalization": W,
            "path_length": S,
            "causality_mode": options.causality_mode,
            "with_capacity": options.with_capacity,
            "with_presolve": options.with_presolve,
            "penalty": penalty.__dict__.copy(),
        },
    )

    def x(a: str, l: str, beta: int) -> Optional[int]:
        key = NodeVar(a, l, beta)
        return model.index(key) if key in model else None

    vids = [v.id for v in instance.vehicles]

    # every shared location visited exactly once by the whole fleet
    for l in instance.shared:
        idx = [x(a, l, b) for a in vids for b in range(1, S + 1)]
        add_one_hot(model, idx, penalty.lambda_location, LOCATION)

    for veh in instance.vehicles:
        nodes = instance.vehicle_nodes(veh)
        for beta in range(1, S):
            add_one_hot(model, [x(veh.id, l, beta) for l in nodes], penalty.lambda_step, STEP)
        last = [x(veh.id, l, S) for l in instance.shared]
        if last:
            add_half_hot(model, last, penalty.lambda_step, HALF_HOT)
        else:
            model.add_offset(penalty.lambda_step, HALF_HOT)
        # without this a path could begin at a pickup and skip the first leg
        i = x(veh.id, veh.start, 1)
        model.add_offset(penalty.lambda_step, START)
        model.add_linear(i, -penalty.lambda_step, START)

    _add_causality(model, instance, penalty.lambda_incentive, options.causality_mode, x)
    _add_distance_objective(model, instance, W, x)
    model.compact()

    if options.with_capacity:
        add_capacity_constraints(model, instance, penalty.lambda_capacity)
    if options.with_presolve:
        model = apply_presolve_fixings(model, instance)
    return model


def _add_causality(model, instance, lam, mode, x) -> None:
    S = instance.path_length
    vids = [v.id for v in instance.vehicles]
    steps = range(1, S + 1)
    for r in instance.requests:
        for a in vids:
            for b1, b2 in product(steps, steps):
                i, j = x(a, r.pickup, b1), x(a, r.dropoff, b2)
                if mode == "incentive" and b1 < b2:
                    model.add_quadratic(i, j, -lam, CAUSALITY)
                elif mode == "penalty" and b1 >= b2:
                    model.add_quadratic(i, j, lam, CAUSALITY)
        if mode == "penalty":
            for a1, a2 in product(vids, vids):
                if a1 == a2:
                    continue
                for b1, b2 in product(steps, steps):
                    model.add_quadratic(x(a1, r.pickup, b1), x(a2, r.dropoff, b2), lam, CAUSALITY)
    model.families.setdefault(CAUSALITY, Terms())


def _add_distance_objective(model, instance, W, x) -> None:
    S = instance.path_length
    for veh in instance.vehicles:
        a, d = veh.id, veh.start
        for beta in range(1, S):
            for l1 in instance.vehicle_nodes(veh):
                for l2 in instance.shared:
                    if l1 == l2:
                        continue
                    w = instance.w(l1, l2) / W
                    if w:
                        model.add_quadratic(x(a, l1, beta), x(a, l2, beta + 1), w, OBJECTIVE)
        # returning to the start; no start variable exists at step S
        for beta in range(1, S - 1):
            for l in instance.shared:
                w = instance.w(l, d) / W
                if w:
                    model.add_quadratic(x(a, l, beta), x(a, d, beta + 1), w, OBJECTIVE)
    model.families.setdefault(OBJECTIVE, Terms())


def add_capacity_constraints(model: QuboModel, instance: RoutingInstance, lam: float) -> None:
    """Per (vehicle, step): ``lam * (prefix passenger sum - sum of unary slacks)**2``.

    Registers ``capacity * S`` slack variables per vehicle.  Fixed node
    variables (after presolve) enter through their fixed values.
    """
    S = instance.path_length
    p = instance.signed_passengers
    for veh in instance.vehicles:
        for beta in range(1, S + 1):
            for c in range(1, veh.capacity + 1):
                model.add_variable(SlackVar(veh.id, beta, c))
    for veh in instance.vehicles:
        for beta in range(1, S + 1):
            coeffs = []
            const = 0.0
            for j in range(1, beta + 1):
                for l in instance.shared:
                    key = NodeVar(veh.id, l, j)
                    if key in model:
                        coeffs.append((model.index(key), float(p[l])))
                    elif model.fixed.get(key):
                        const += p[l]
            coeffs += [(model.index(SlackVar(veh.id, beta, c)), -1.0) for c in range(1, veh.capacity + 1)]
            add_squared_linear(model, coeffs, const, lam, CAPACITY)
    model.meta["with_capacity"] = True
    model.compact()


def presolve_fixings(instance: RoutingInstance) -> dict[NodeVar, int]:
    """Values forced by the problem structure.

    Every path starts at its own start; no dropoff can come right after the
    start; no path can end at a pickup.
    """
    S = instance.path_length
    fixed: dict[NodeVar, int] = {}
    for veh in instance.vehicles:
        fixed[NodeVar(veh.id, veh.start, 1)] = 1
        for l in instance.shared:
            fixed[NodeVar(veh.id, l, 1)] = 0
        if S >= 3:
            for f in instance.dropoffs:
                fixed[NodeVar(veh.id, f, 2)] = 0
            for s in instance.pickups:
                fixed[NodeVar(veh.id, s, S)] = 0
    return fixed


def apply_presolve_fixings(model: QuboModel, instance: RoutingInstance) -> QuboModel:
    fixings = {k: v for k, v in presolve_fixings(instance).items() if k in model}
    reduced = fix_variables(model, fixings)
    reduced.meta["with_presolve"] = True
    return reduced


def count_variables(
    vehicles: int,
    requests: int,
    capacities: Optional[Sequence[int]] = None,
    formulation: str = "node",
) -> int:
    """Closed-form variable counts (before any fixing).

    ``node``: A * ((2C+1)**2 - 1); ``node+capacity`` adds sum_a cap_a * (2C+1);
    ``edge``: A * (2C+1) * (2C) * (2C).
    """
    A, C = vehicles, requests
    S = 2 * C + 1
    if formulation == "node":
        return A * (S * S - 1)
    if formulation == "node+capacity":
        if capacities is None or len(capacities) != A:
            raise ValueError("node+capacity needs one capacity per vehicle")
        return A * (S * S - 1) + sum(capacities) * S
    if formulation == "edge":
        return A * S * (2 * C) * (S - 1)
    raise ValueError(f"unknown formulation {formulation!r}")


def count_presolved_variables(vehicles: int, requests: int, capacities: Optional[Sequence[int]] = None) -> int:
    """Free node variables left after presolve: A * (4C**2 - 1) (+ slacks)."""
    S = 2 * requests + 1
    base = vehicles * (4 * requests * requests - 1)
    return base + (sum(capacities) * S if capacities else 0)


def count_causality_terms(vehicles: int, requests: int, mode: str) -> int:
    """Number of quadratic causality terms each mode adds (before presolve)."""
    S = 2 * requests + 1
    if mode == "incentive":
        return vehicles * requests * S * (S - 1) // 2
    if mode == "penalty":
        same = vehicles * requests * S * (S + 1) // 2
        cross = vehicles * (vehicles - 1) * requests * S * S
        return same + cross
    raise ValueError(mode)
