"""Turn bitstrings back into vehicle routes and check them against RPP semantics.

Feasibility here is judged from routes (and the raw step trace when one is
available), never from penalty energies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .instance import InstanceError, RoutingInstance
from .qubo import QuboModel, family_energies, full_assignment
from .variables import NodeVar

KINDS = ("start", "location-multiplicity", "step-multiplicity", "causality", "capacity", "chain-break")


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass
class DecodedSolution:
    routes: dict[str, tuple[str, ...]]
    total_distance: float
    violations: list[Violation] = field(default_factory=list)
    # per vehicle, the locations set at each step (node models only)
    steps: Optional[dict[str, tuple[tuple[str, ...], ...]]] = None

    @property
    def feasible(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = {
            "routes": {a: list(r) for a, r in self.routes.items()},
            "total_distance": self.total_distance,
            "feasible": self.feasible,
            "violations": [{"kind": v.kind, "detail": v.detail} for v in self.violations],
        }
        if self.steps is not None:
            out["steps"] = {a: [list(s) for s in trace] for a, trace in self.steps.items()}
        return out


@dataclass
class EnergyBreakdown:
    families: dict[str, float]
    total: float


def route_distance(instance: RoutingInstance, route: Sequence[str]) -> float:
    return float(sum(instance.w(u, v) for u, v in zip(route, route[1:])))


def check_feasibility(
    sol: DecodedSolution,
    instance: RoutingInstance,
    check_capacity: bool = True,
) -> list[Violation]:
    """Re-derive every violation from the routes (and step trace, if present)."""
    known = {loc.id for loc in instance.locations}
    vehicles = {v.id: v for v in instance.vehicles}
    for a, route in sol.routes.items():
        if a not in vehicles:
            raise InstanceError(f"unknown vehicle {a!r}")
        for l in route:
            if l not in known:
                raise InstanceError(f"unknown location {l!r}")

    out: list[Violation] = []
    S = instance.path_length
    shared = set(instance.shared)
    for veh in instance.vehicles:
        route = sol.routes.get(veh.id, (veh.start,))
        if not route or route[0] != veh.start:
            out.append(Violation("start", f"{veh.id} does not begin at {veh.start}"))
        foreign = [l for l in route if l not in shared and l != veh.start]
        if foreign:
            out.append(Violation("start", f"{veh.id} visits other starts {foreign}"))
        if sol.steps is not None:
            for beta, here in enumerate(sol.steps.get(veh.id, ()), 1):
                if beta < S and len(here) != 1:
                    out.append(Violation("step-multiplicity", f"{veh.id} has {len(here)} locations at step {beta}"))
                elif beta == S and len(here) > 1:
                    out.append(Violation("step-multiplicity", f"{veh.id} has {len(here)} locations at step {beta}"))

    visits: dict[str, list[tuple[str, int]]] = {l: [] for l in instance.shared}
    for a, route in sol.routes.items():
        for pos, l in enumerate(route):
            if l in visits:
                visits[l].append((a, pos))
    for l in instance.shared:
        if len(visits[l]) != 1:
            out.append(Violation("location-multiplicity", f"{l} visited {len(visits[l])} times"))

    for r in instance.requests:
        vs, vf = visits[r.pickup], visits[r.dropoff]
        if len(vs) != 1 or len(vf) != 1:
            continue
        (a1, p1), (a2, p2) = vs[0], vf[0]
        if a1 != a2:
            out.append(Violation("causality", f"split request {r.pickup}->{r.dropoff} ({a1} vs {a2})"))
        elif p2 < p1:
            out.append(Violation("causality", f"{r.dropoff} before {r.pickup} on {a1}"))

    if check_capacity:
        p = instance.signed_passengers
        for veh in instance.vehicles:
            load = 0
            for pos, l in enumerate(sol.routes.get(veh.id, ())):
                load += p.get(l, 0)
                if load > veh.capacity:
                    out.append(Violation("capacity", f"{veh.id} carries {load} > {veh.capacity} at stop {pos}"))
    return out


def _collapse_stays(trace: Sequence[str], start: str) -> tuple[str, ...]:
    route: list[str] = []
    for l in trace:
        if route and l == start and route[-1] == start:
            continue
        route.append(l)
    return tuple(route)


def decode_node(
    bits: Sequence[int],
    model: QuboModel,
    instance: RoutingInstance,
    check_capacity: Optional[bool] = None,
) -> DecodedSolution:
    """Read routes from a node-based RPP assignment (fixed variables included).

    Capacity is checked when the model carries capacity terms, unless
    ``check_capacity`` says otherwise.
    """
    if check_capacity is None:
        check_capacity = bool(model.meta.get("with_capacity"))
    values = full_assignment(model, bits)
    S = instance.path_length
    routes, steps = {}, {}
    for veh in instance.vehicles:
        nodes = instance.vehicle_nodes(veh)
        trace = []
        for beta in range(1, S + 1):
            trace.append(tuple(l for l in nodes if values.get(NodeVar(veh.id, l, beta), 0)))
        steps[veh.id] = tuple(trace)
        routes[veh.id] = _collapse_stays([l for here in trace for l in here], veh.start)
    dist = sum(route_distance(instance, r) for r in routes.values())
    sol = DecodedSolution(routes, dist, [], steps)
    sol.violations = check_feasibility(sol, instance, check_capacity)
    return sol


def energy_decomposition(model: QuboModel, bits: Sequence[int]) -> EnergyBreakdown:
    fams = family_energies(model, bits)
    return EnergyBreakdown(fams, float(sum(fams.values())))


def is_pooled(route: Sequence[str], instance: RoutingInstance) -> bool:
    """True if two or more requests are on board at the same time somewhere on the route."""
    pick = set(instance.pickups)
    drop = set(instance.dropoffs)
    onboard = 0
    for l in route:
        if l in pick:
            onboard += 1
            if onboard >= 2:
                return True
        elif l in drop:
            onboard -= 1
    return False
