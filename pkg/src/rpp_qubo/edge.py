"""Edge-based RPP QUBO, kept for comparison with the node-based model.

Variables say "vehicle a travels i -> j at step b" for i in the vehicle's
location set, j a pickup or dropoff, and b in 1..S-1.  The causality family
is expanded term by term, including the multiplicity that the nested
source x target sum puts on the pickup arcs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .config import PenaltyConfig
from .decode import DecodedSolution, Violation, check_feasibility
from .instance import RoutingInstance, Vehicle, normalization_factor
from .qubo import OBJECTIVE, QuboModel, Terms, add_squared_linear, fix_variables, full_assignment
from .variables import EdgeVar

PICKUP_IN = "edge-pickup-in"
PICKUP_OUT = "edge-pickup-out"
DROPOFF_IN = "edge-dropoff-in"
START_OUT = "edge-start"
EDGE_CAUSALITY = "edge-causality"


@dataclass(frozen=True)
class ArcIndex:
    """Arcs entering (``source``) and leaving (``target``) each location of one vehicle."""

    source: dict[str, tuple[str, ...]]
    target: dict[str, tuple[str, ...]]

    @classmethod
    def complete(cls, instance: RoutingInstance, vehicle: Vehicle) -> "ArcIndex":
        nodes = instance.vehicle_nodes(vehicle)
        shared = instance.shared
        source = {l: tuple(i for i in nodes if i != l) for l in shared}
        source[vehicle.start] = ()
        target = {l: tuple(j for j in shared if j != l) for l in nodes}
        return cls(source, target)


def edge_keys(instance: RoutingInstance) -> list[EdgeVar]:
    S = instance.path_length
    return [
        EdgeVar(veh.id, i, j, beta)
        for veh in instance.vehicles
        for beta in range(1, S)
        for i in instance.vehicle_nodes(veh)
        for j in instance.shared
    ]


def edge_prunings(instance: RoutingInstance) -> dict[EdgeVar, int]:
    """Self-loops and first-step arcs that do not leave the vehicle's start."""
    out = {}
    for key in edge_keys(instance):
        start = instance.vehicle(key.vehicle).start
        if key.source == key.target or (key.step == 1 and key.source != start):
            out[key] = 0
    return out


def build_rpp_edge(
    instance: RoutingInstance,
    penalty: Optional[PenaltyConfig] = None,
    prune: bool = True,
    multiplicity: bool = True,
) -> QuboModel:
    """Edge-based RPP with linear objective and squared constraint families.

    The full index range is registered; with ``prune`` the self-loops and the
    first-step arcs not leaving the start are fixed to 0 afterwards.

    ``multiplicity=True`` keeps the weights that the nested double sum puts
    on the pickup arcs (``|target[s]|`` and ``|source[s]|``).  Under those
    weights the intended path d -> s -> f is charged one causality unit, and
    on single-request instances the minimizer is a non-path that enters and
    leaves the pickup at the same step.  ``multiplicity=False`` gives every
    pickup arc weight 1; it exists for comparison only.

    Every vehicle must leave its start exactly once, so a fleet with an idle
    vehicle cannot reach zero constraint energy.
    """
    S = instance.path_length
    penalty = penalty or PenaltyConfig.for_path_length(S)
    W = normalization_factor(instance.distances)
    model = QuboModel(
        edge_keys(instance),
        meta={
            "formulation": "edge",
            "instance": instance.name,
            "normalization": W,
            "path_length": S,
            "with_capacity": False,
            "multiplicity": multiplicity,
            "penalty": penalty.__dict__.copy(),
        },
    )
    x = lambda a, i, j, b: model.index(EdgeVar(a, i, j, b))
    steps = range(1, S)
    arcs = {veh.id: ArcIndex.complete(instance, veh) for veh in instance.vehicles}

    for veh in instance.vehicles:
        for beta in steps:
            for i in instance.vehicle_nodes(veh):
                for j in instance.shared:
                    w = instance.w(i, j) / W if i != j else 0.0
                    if w:
                        model.add_linear(x(veh.id, i, j, beta), w, OBJECTIVE)
    model.families.setdefault(OBJECTIVE, Terms())

    lam_loc = penalty.lambda_location
    for s in instance.pickups:
        into = [(x(v.id, i, s, b), -1.0) for v in instance.vehicles for b in steps for i in arcs[v.id].source[s]]
        out = [(x(v.id, s, j, b), -1.0) for v in instance.vehicles for b in steps for j in arcs[v.id].target[s]]
        add_squared_linear(model, into, 1.0, lam_loc, PICKUP_IN)
        add_squared_linear(model, out, 1.0, lam_loc, PICKUP_OUT)
    for f in instance.dropoffs:
        into = [(x(v.id, i, f, b), -1.0) for v in instance.vehicles for b in steps for i in arcs[v.id].source[f]]
        add_squared_linear(model, into, 1.0, lam_loc, DROPOFF_IN)
    for veh in instance.vehicles:
        leave = [(x(veh.id, veh.start, j, b), -1.0) for b in steps for j in arcs[veh.id].target[veh.start]]
        add_squared_linear(model, leave, 1.0, penalty.lambda_step, START_OUT)

    lam_c = penalty.lambda_incentive
    for veh in instance.vehicles:
        a, ix = veh.id, arcs[veh.id]
        for r in instance.requests:
            s, f = r.pickup, r.dropoff
            n_src, n_tgt = len(ix.source[s]), len(ix.target[s])
            if not multiplicity:
                n_src = n_tgt = 1
            for b1 in steps:
                for b2 in steps:
                    if b2 <= b1:
                        continue
                    for b3 in steps:
                        if b3 < b2:
                            continue
                        # sum_{i in src[s]} sum_{j in tgt[s]} (x_{i,s,b1} + x_{s,j,b2})
                        coeffs = [(x(a, i, s, b1), float(n_tgt)) for i in ix.source[s]]
                        coeffs += [(x(a, s, j, b2), float(n_src)) for j in ix.target[s]]
                        coeffs += [(x(a, i, f, b3), -2.0) for i in ix.source[f]]
                        add_squared_linear(model, coeffs, 0.0, lam_c, EDGE_CAUSALITY)
    model.families.setdefault(EDGE_CAUSALITY, Terms())
    model.compact()
    if prune:
        model = fix_variables(model, edge_prunings(instance))
        model.meta["pruned"] = True
    return model


def decode_edge(
    bits: Sequence[int],
    model: QuboModel,
    instance: RoutingInstance,
    check_capacity: bool = False,
) -> DecodedSolution:
    """Chain each vehicle's arcs in step order into a path.

    ``total_distance`` is the summed length of the arcs that are switched on,
    which is what the edge objective prices.
    """
    values = full_assignment(model, bits)
    used: dict[str, list[EdgeVar]] = {v.id: [] for v in instance.vehicles}
    for key, v in values.items():
        if v and isinstance(key, EdgeVar):
            used[key.vehicle].append(key)

    violations: list[Violation] = []
    routes = {}
    dist = 0.0
    for veh in instance.vehicles:
        arcs = sorted(used[veh.id], key=lambda k: (k.step, k.source, k.target))
        dist += sum(instance.w(k.source, k.target) for k in arcs)
        if not arcs:
            violations.append(Violation("start", f"start never left by {veh.id}"))
            routes[veh.id] = (veh.start,)
            continue
        per_step: dict[int, int] = {}
        for k in arcs:
            per_step[k.step] = per_step.get(k.step, 0) + 1
        for beta, n in sorted(per_step.items()):
            if n > 1:
                violations.append(Violation("step-multiplicity", f"multiple arcs per step: {veh.id} has {n} at step {beta}"))
        route = [veh.start]
        for k in arcs:
            if k.source != route[-1]:
                violations.append(
                    Violation("chain-break", f"{veh.id} step {k.step} leaves {k.source}, expected {route[-1]}")
                )
            route.append(k.target)
        routes[veh.id] = tuple(route)

    sol = DecodedSolution(routes, float(dist), [])
    sol.violations = violations + check_feasibility(sol, instance, check_capacity)
    return sol
