import json

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rpp_qubo.instance import TINY_1, tiny_instance

settings.register_profile(
    "default",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("quick", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def tiny():
    return tiny_instance()


@pytest.fixture
def tiny_path(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY_1))
    return path


def all_bits(n):
    """Every 0/1 vector of length n as rows of an int array."""
    k = np.arange(1 << n)
    return ((k[:, None] >> np.arange(n)) & 1).astype(int)


def all_energies(model, families=None):
    """Energies of every assignment, optionally restricted to some families."""
    from rpp_qubo.qubo import QuboModel

    sub = model
    if families is not None:
        sub = QuboModel(model.keys)
        sub.families = {k: v for k, v in model.families.items() if k in families}
    lin, q, offset = sub.dense()
    X = all_bits(model.num_vars).astype(float)
    return offset + X @ lin + np.einsum("ij,ij->i", X @ q, X)


def encode_routes(model, instance, routes):
    """Bits for the free variables of a node model that realize ``routes``.

    Unused steps are spent waiting at the start before the first stop, which
    costs nothing.  Slacks (if any) absorb the on-board count at each step,
    up to capacity.  Raises if the routes contradict a presolve fixing.
    """
    from rpp_qubo.variables import NodeVar, SlackVar

    S = instance.path_length
    values = {}
    for veh in instance.vehicles:
        stops = list(routes.get(veh.id, (veh.start,)))[1:]
        m = len(stops)
        wait = S - 1 if m == 0 else S - m
        trace = [veh.start] * wait + stops
        p = instance.signed_passengers
        load = 0
        for beta, loc in enumerate(trace, 1):
            values[NodeVar(veh.id, loc, beta)] = 1
            load += p.get(loc, 0)
            for c in range(1, veh.capacity + 1):
                values[SlackVar(veh.id, beta, c)] = int(c <= min(max(load, 0), veh.capacity))
        if m == 0:
            for c in range(1, veh.capacity + 1):
                values[SlackVar(veh.id, S, c)] = 0
    for key, v in model.fixed.items():
        if values.get(key, 0) != v:
            raise ValueError(f"routes contradict fixed {key}")
    return tuple(values.get(k, 0) for k in model.keys)


def feasible_route_sets(instance):
    """Every feasible (capacity ignored) fleet routing of a small instance."""
    from itertools import permutations, product

    A, C = instance.num_vehicles, instance.num_requests
    out = []
    for owner in product(range(A), repeat=C):
        per_vehicle = []
        for a, veh in enumerate(instance.vehicles):
            reqs = [instance.requests[k] for k in range(C) if owner[k] == a]
            stops = [l for r in reqs for l in (r.pickup, r.dropoff)]
            orders = []
            for perm in permutations(stops):
                pos = {l: i for i, l in enumerate(perm)}
                if all(pos[r.pickup] < pos[r.dropoff] for r in reqs):
                    orders.append((veh.start,) + perm)
            per_vehicle.append(orders)
        for combo in product(*per_vehicle):
            out.append({veh.id: r for veh, r in zip(instance.vehicles, combo)})
    return out


def best_slacks(model, instance, bits):
    """Copy of ``bits`` with every unary slack set to its optimal value for the node bits."""
    from rpp_qubo.qubo import full_assignment
    from rpp_qubo.variables import NodeVar, SlackVar

    values = full_assignment(model, bits)
    p = instance.signed_passengers
    out = list(bits)
    for veh in instance.vehicles:
        load = 0
        for beta in range(1, instance.path_length + 1):
            load += sum(p[l] for l in instance.shared if values.get(NodeVar(veh.id, l, beta), 0))
            target = min(max(load, 0), veh.capacity)
            for c in range(1, veh.capacity + 1):
                key = SlackVar(veh.id, beta, c)
                if key in model:
                    out[model.index(key)] = int(c <= target)
    return tuple(out)


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number, name, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
