import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rpp_qubo.config import BuildOptions, PenaltyConfig
from rpp_qubo.decode import decode_node, energy_decomposition
from rpp_qubo.instance import DistanceMatrix, generate_instance, instance_from_dict
from rpp_qubo.node import (
    CAPACITY,
    CAUSALITY,
    HALF_HOT,
    LOCATION,
    START,
    STEP,
    build_rpp,
    build_tsp,
    build_vrp,
    count_causality_terms,
    count_presolved_variables,
    count_variables,
    presolve_fixings,
)
from rpp_qubo.qubo import energy, fix_variables
from rpp_qubo.solvers import routing_oracle, solve_exhaustive
from rpp_qubo.variables import NodeVar, SlackVar, TspVar, VrpVar
from conftest import all_bits, all_energies, encode_routes, feasible_route_sets

RAW = BuildOptions(with_presolve=False)


# TSP / VRP ----------------------------------------------------------------

def test_tsp_triangle():
    nodes = ["a", "b", "c"]
    d = DistanceMatrix(nodes, np.ones((3, 3)) - np.eye(3))
    m = build_tsp(nodes, d)
    assert m.num_vars == 9
    res = solve_exhaustive(m)
    W = 1 + 1e-6
    assert res.best_energy == pytest.approx(3 / W, abs=1e-12)
    # 3 rotations x 2 directions
    assert len(res.all_minimizers) == 6


def test_tsp_path_graph_pays_for_a_missing_edge():
    nodes = ["a", "b", "c", "e"]
    d = DistanceMatrix(nodes, np.ones((4, 4)) - np.eye(4))
    pen = PenaltyConfig(10, 10, 1, 1, 3.0)
    m = build_tsp(nodes, d, edges=[("a", "b"), ("b", "c"), ("c", "e")], penalty=pen)
    res = solve_exhaustive(m)
    assert res.best_energy >= 3.0
    assert res.best_energy == pytest.approx(3.0 + 3 / (1 + 1e-6))


def test_tsp_needs_three_nodes():
    with pytest.raises(ValueError):
        build_tsp(["a", "b"], DistanceMatrix(["a", "b"], [[0, 1], [1, 0]]))


def _vrp_fixture():
    ids = ["o", "a", "b", "c"]
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 5, size=(4, 2))
    return ids, DistanceMatrix.euclidean(ids, pts)


def test_vrp_all_zero_constraint_energy():
    ids, d = _vrp_fixture()
    pen = PenaltyConfig(2.0, 3.0, 1.0, 1.0, 1.0)
    m = build_vrp("o", ids, d, num_vehicles=2, penalty=pen)
    n, A = 3, 2
    assert energy(m, [0] * m.num_vars) == pytest.approx(2.0 * n + 3.0 * A * (n + 1))


def test_vrp_double_visit_is_penalized():
    ids, d = _vrp_fixture()
    m = build_vrp("o", ids, d, num_vehicles=2)
    lam = m.meta["path_length"] * 5.0
    bits = [0] * m.num_vars
    for a in ("v1", "v2"):
        for s, loc in enumerate(["o", "a", "b", "c"]):
            bits[m.index(VrpVar(a, loc, s))] = 1
    assert energy_decomposition(m, bits).families[LOCATION] >= lam


def test_single_vehicle_vrp_matches_tsp():
    ids, d = _vrp_fixture()
    tsp = build_tsp(ids, d)
    vrp = build_vrp("o", ids, d, num_vehicles=1)
    # same variable order under VrpVar(v1, l, s) <-> TspVar(l, s + 1)
    perm = [vrp.index(VrpVar("v1", k.location, k.step - 1)) for k in tsp.keys]
    e_tsp = all_energies(tsp)
    X = all_bits(16)
    lin, q, off = vrp.dense()
    Y = np.zeros_like(X)
    Y[:, perm] = X
    e_vrp = off + Y @ lin + np.einsum("ij,ij->i", Y @ q, Y)
    # the only difference: the TSP also one-hots the depot
    depot_cols = [tsp.index(TspVar("o", i)) for i in range(1, 5)]
    lam = tsp.meta["path_length"] * 5.0
    depot_term = lam * (1 - X[:, depot_cols].sum(1)) ** 2
    assert np.allclose(e_tsp, e_vrp + depot_term, atol=1e-9)
    once = X[:, depot_cols].sum(1) == 1
    assert np.allclose(e_tsp[once], e_vrp[once], atol=1e-9)


# RPP ------------------------------------------------------------------------

def test_tiny_feasible_breakdown(tiny):
    m = build_rpp(tiny, RAW)
    bits = encode_routes(m, tiny, {"v1": ("d", "s", "f")})
    pen = PenaltyConfig.for_path_length(3)
    fam = energy_decomposition(m, bits).families
    W = 2 + 2e-6
    assert fam[LOCATION] == 0 and fam[STEP] == 0 and fam[START] == 0
    assert fam[HALF_HOT] == pen.lambda_step
    assert fam[CAUSALITY] == -pen.lambda_incentive
    assert fam["objective"] == pytest.approx(2 / W, abs=1e-12)


def test_tiny_optimum(tiny):
    for opts in (RAW, BuildOptions()):
        m = build_rpp(tiny, opts)
        sol = decode_node(solve_exhaustive(m).best_assignment, m, tiny)
        assert sol.routes == {"v1": ("d", "s", "f")} and sol.total_distance == 2.0 and sol.feasible


def test_tiny_presolve_counts(tiny):
    m = build_rpp(tiny)
    assert len(m.fixed) == 5 and m.num_vars == 3 and m.num_registered == 8
    assert set(presolve_fixings(tiny)) == {
        NodeVar("v1", "d", 1), NodeVar("v1", "s", 1), NodeVar("v1", "f", 1),
        NodeVar("v1", "f", 2), NodeVar("v1", "s", 3),
    }


def test_no_start_variable_at_last_step(tiny):
    m = build_rpp(tiny, RAW)
    assert NodeVar("v1", "d", 3) not in m
    assert m.num_vars == count_variables(1, 1) == 8


def test_presolve_preserves_optimum_energy(tiny):
    full = build_rpp(tiny, RAW)
    reduced = build_rpp(tiny)
    assert solve_exhaustive(full).best_energy == pytest.approx(solve_exhaustive(reduced).best_energy, abs=1e-9)


def test_presolved_assignments_start_at_the_start(tiny):
    m = build_rpp(tiny)
    for x in all_bits(m.num_vars):
        assert decode_node(x, m, tiny).routes["v1"][0] == "d"


def test_penalty_mode_term_count(tiny):
    assert count_causality_terms(1, 1, "incentive") == 3
    assert count_causality_terms(1, 1, "penalty") == 6
    m = build_rpp(tiny, BuildOptions(with_presolve=False, causality_mode="penalty"))
    assert len(m.families[CAUSALITY].quadratic) == 6


def test_incentive_check_rejects_large_incentives(tiny):
    with pytest.raises(ValueError, match="lambda_incentive"):
        build_rpp(tiny, BuildOptions(penalty=PenaltyConfig(1.0, 1.0, 1.0, 1.0, 1.0)))


def test_zero_requests():
    inst = instance_from_dict({
        "locations": [{"id": "d", "x": 0, "y": 0}],
        "vehicles": [{"id": "v", "start": "d", "capacity": 1}],
        "requests": [],
    })
    m = build_rpp(inst)
    assert m.num_vars == 0 and m.fixed == {NodeVar("v", "d", 1): 1}
    sol = decode_node((), m, inst)
    assert sol.feasible and sol.total_distance == 0.0


@pytest.mark.parametrize("A,C,expected", [(1, 2, 24), (2, 2, 48), (1, 3, 48)])
def test_count_examples(A, C, expected):
    assert count_variables(A, C) == expected


def test_count_with_capacity_example(tiny):
    assert count_variables(1, 1, [4], "node+capacity") == 20
    m = build_rpp(tiny, BuildOptions(with_capacity=True))
    assert m.num_registered == 20 and m.num_vars == 15
    assert sum(isinstance(k, SlackVar) for k in m.keys) == 12
    with pytest.raises(ValueError):
        count_variables(1, 1, None, "node+capacity")
    with pytest.raises(ValueError):
        count_variables(1, 1, formulation="bogus")


@given(st.integers(0, 1000), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=30)
def test_registry_matches_closed_forms(seed, A, C):
    inst = generate_instance(seed, A, C)
    caps = [v.capacity for v in inst.vehicles]
    assert build_rpp(inst, RAW).num_registered == count_variables(A, C)
    m = build_rpp(inst, BuildOptions(with_capacity=True))
    assert m.num_registered == count_variables(A, C, caps, "node+capacity")
    assert m.num_vars == count_presolved_variables(A, C, caps)


def test_capacity_overload_costs_at_least_lambda():
    inst = generate_instance(5, 1, 2, capacity_range=(1, 1))
    lam = 7.0
    pen = PenaltyConfig.for_path_length(5).replace(lambda_capacity=lam)
    m = build_rpp(inst, BuildOptions(with_capacity=True, penalty=pen))
    bits = np.array(encode_routes(m, inst, {"v1": ("d1", "s1", "s2", "f1", "f2")}))
    slack = [i for i, k in enumerate(m.keys) if isinstance(k, SlackVar)]
    best = math.inf
    for y in all_bits(len(slack)):
        bits[slack] = y
        best = min(best, energy_decomposition(m, bits).families[CAPACITY])
    assert best >= lam


def test_capacity_does_not_change_tiny_optimum(tiny):
    m = build_rpp(tiny, BuildOptions(with_capacity=True))
    sol = decode_node(solve_exhaustive(m).best_assignment, m, tiny)
    assert sol.routes == {"v1": ("d", "s", "f")} and sol.total_distance == 2.0


def test_idle_vehicle_needs_no_slack():
    inst = generate_instance(2, 2, 1, capacity_range=(2, 2))
    m = build_rpp(inst, BuildOptions(with_capacity=True))
    bits = encode_routes(m, inst, {"v1": ("d1", "s1", "f1"), "v2": ("d2",)})
    fam = energy_decomposition(m, bits).families
    assert fam[CAPACITY] == 0


# exhaustive properties on small instances ----------------------------------

SMALL = [(s, 1, 1) for s in range(3)] + [(s, 2, 1) for s in range(3)] + [(s, 1, 2) for s in range(2)]


def _floor(model, instance):
    pen = PenaltyConfig(**model.meta["penalty"])
    A, C = instance.num_vehicles, instance.num_requests
    return {
        LOCATION: 0.0,
        STEP: 0.0,
        START: 0.0,
        HALF_HOT: pen.lambda_step * A,
        CAUSALITY: -pen.lambda_incentive * C,
        CAPACITY: 0.0,
    }


@pytest.mark.parametrize("seed,A,C", SMALL)
def test_feasibility_iff_floor_energy(seed, A, C):
    """Slack bits are minimized out: a route is feasible iff some slack setting reaches the floor."""
    inst = generate_instance(seed, A, C, capacity_range=(2, 2))
    m = build_rpp(inst, BuildOptions(with_capacity=(C == 1)))
    n_slack = sum(isinstance(k, SlackVar) for k in m.keys)
    n_node = m.num_vars - n_slack
    # slacks are registered last, so they are the high bits of the enumeration index
    assert all(isinstance(k, SlackVar) for k in m.keys[n_node:])
    floor = _floor(m, inst)
    tables = {}
    for f in floor:
        if f in m.families:
            e = all_energies(m, {f}).reshape(1 << n_slack, 1 << n_node)
            tables[f] = e.min(axis=0)
    for k, x in enumerate(all_bits(m.num_vars)[: 1 << n_node]):
        at_floor = all(abs(tables[f][k] - floor[f]) <= 1e-9 for f in tables)
        assert decode_node(x, m, inst).feasible == at_floor


@pytest.mark.parametrize("seed,A,C", SMALL)
def test_proposition_one(seed, A, C):
    inst = generate_instance(seed, A, C)
    inc = build_rpp(inst)
    pen = build_rpp(inst, BuildOptions(causality_mode="penalty"))
    assert solve_exhaustive(inc).all_minimizers == solve_exhaustive(pen).all_minimizers
    lam = inc.meta["penalty"]["lambda_incentive"]
    for routes in feasible_route_sets(inst):
        bits = encode_routes(inc, inst, routes)
        assert energy(pen, bits) - energy(inc, bits) == pytest.approx(lam * C, abs=1e-9)


@pytest.mark.parametrize("seed,A,C", SMALL)
def test_monotonic_dominance(seed, A, C):
    inst = generate_instance(seed, A, C)
    m = build_rpp(inst)
    energies = all_energies(m)
    feasible = np.array([decode_node(x, m, inst).feasible for x in all_bits(m.num_vars)])
    assert energies[feasible].max() < energies[~feasible].min()


@pytest.mark.parametrize("seed,A,C", [c for c in SMALL if c[2] == 1])
def test_presolve_keeps_optimal_distance(seed, A, C):
    inst = generate_instance(seed, A, C)
    raw, red = build_rpp(inst, RAW), build_rpp(inst)
    d_raw = decode_node(solve_exhaustive(raw).best_assignment, raw, inst).total_distance
    d_red = decode_node(solve_exhaustive(red).best_assignment, red, inst).total_distance
    assert d_raw == pytest.approx(d_red, rel=1e-12)


@pytest.mark.parametrize("seed,A,C", SMALL)
def test_incentive_total_on_feasible_routes(seed, A, C):
    inst = generate_instance(seed, A, C)
    m = build_rpp(inst)
    lam = m.meta["penalty"]["lambda_incentive"]
    for routes in feasible_route_sets(inst):
        fam = energy_decomposition(m, encode_routes(m, inst, routes)).families
        assert fam[CAUSALITY] == pytest.approx(-lam * C)


@pytest.mark.parametrize("seed,A,C", SMALL)
def test_exhaustive_optimum_matches_oracle(seed, A, C):
    inst = generate_instance(seed, A, C)
    m = build_rpp(inst)
    sol = decode_node(solve_exhaustive(m).best_assignment, m, inst)
    ref = routing_oracle(inst, respect_capacity=False)
    assert sol.feasible
    assert sol.total_distance == pytest.approx(ref.total_distance, rel=1e-9)


def test_objective_family_times_w_is_distance():
    inst = generate_instance(11, 1, 2)
    m = build_rpp(inst)
    res = solve_exhaustive(m)
    sol = decode_node(res.best_assignment, m, inst)
    obj = energy_decomposition(m, res.best_assignment).families["objective"]
    W = m.meta["normalization"]
    assert obj * W == pytest.approx(sol.total_distance, abs=1e-9 * W)
