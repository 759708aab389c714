"""Exhaustive and simulated-annealing QUBO minimizers plus an enumerative routing oracle.

The routing oracle never looks at a QUBO; it is the ground truth the QUBO
pipeline is checked against.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Optional

import numba
import numpy as np

from .config import SaSchedule
from .decode import DecodedSolution, Violation, route_distance
from .instance import RoutingInstance
from .qubo import QuboModel, energy


class SizeError(ValueError):
    """Model too large for the requested solver."""


@dataclass
class SolveResult:
    best_assignment: tuple[int, ...]
    best_energy: float
    all_minimizers: Optional[frozenset] = None
    evaluations: int = 0
    wall_time: float = 0.0
    solver: str = ""


def _batch_energies(lin, q, offset, X):
    return offset + X @ lin + np.einsum("ij,ij->i", X @ q, X)


def solve_exhaustive(model: QuboModel, limit: int = 24, tol: float = 1e-9, chunk_bits: int = 16) -> SolveResult:
    """Enumerate all 2**N assignments.

    Minimizers are all assignments within ``tol * max(1, |E*|)`` of the best
    energy; ``best_assignment`` is the lexicographically smallest of them.
    """
    n = model.num_vars
    if n > limit:
        raise SizeError(f"{n} variables exceed the exhaustive limit of {limit}; use simulated annealing")
    t0 = time.perf_counter()
    lin, q, offset = model.dense()
    total = 1 << n
    step = 1 << min(n, chunk_bits)
    shifts = np.arange(n, dtype=np.int64)

    energies = np.empty(total)
    for lo in range(0, total, step):
        k = np.arange(lo, min(lo + step, total), dtype=np.int64)
        X = ((k[:, None] >> shifts) & 1).astype(float)
        energies[lo : lo + len(k)] = _batch_energies(lin, q, offset, X)
    best = energies.min()
    cut = best + tol * max(1.0, abs(best))
    winners = np.nonzero(energies <= cut)[0]
    minimizers = frozenset(tuple(int((k >> i) & 1) for i in range(n)) for k in winners.tolist())
    best_bits = min(minimizers)
    return SolveResult(
        best_assignment=best_bits,
        best_energy=energy(model, best_bits),
        all_minimizers=minimizers,
        evaluations=total,
        wall_time=time.perf_counter() - t0,
        solver="exhaustive",
    )


def _csr(q: np.ndarray):
    sym = q + q.T
    indptr = np.zeros(sym.shape[0] + 1, dtype=np.int64)
    cols, vals = [], []
    for i in range(sym.shape[0]):
        nz = np.nonzero(sym[i])[0]
        cols.append(nz)
        vals.append(sym[i, nz])
        indptr[i + 1] = indptr[i] + len(nz)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    vals = np.concatenate(vals) if vals else np.zeros(0)
    return indptr, cols.astype(np.int64), vals.astype(float)


@numba.njit(cache=True)
def _anneal_chain(lin, indptr, cols, vals, x, betas, seed):
    """Metropolis single-bit-flip sweeps; returns the best state seen at sweep ends."""
    np.random.seed(seed)
    n = x.shape[0]
    field = lin.copy()
    for i in range(n):
        if x[i]:
            for k in range(indptr[i], indptr[i + 1]):
                field[cols[k]] += vals[k]
    e = 0.0
    for i in range(n):
        if x[i]:
            e += lin[i] + 0.5 * (field[i] - lin[i])
    best_e = e
    best_x = x.copy()
    for t in range(betas.shape[0]):
        beta = betas[t]
        for i in range(n):
            sign = 1.0 - 2.0 * x[i]
            delta = sign * field[i]
            if delta <= 0.0 or np.random.random() < np.exp(-beta * delta):
                x[i] = 1 - x[i]
                e += delta
                for k in range(indptr[i], indptr[i + 1]):
                    field[cols[k]] += sign * vals[k]
        if e < best_e:
            best_e = e
            best_x[:] = x
    return best_x, best_e


def solve_sa(model: QuboModel, schedule: SaSchedule = SaSchedule()) -> SolveResult:
    """Independent annealing chains; chain ``r`` draws from child ``r`` of the seed.

    Energy deltas come from a maintained local field, so a flip costs only
    the degree of the flipped variable.  The reported energy is a full
    re-evaluation of the returned assignment.
    """
    t0 = time.perf_counter()
    n = model.num_vars
    lin, q, offset = model.dense()
    indptr, cols, vals = _csr(q)
    if schedule.sweeps:
        betas = np.geomspace(schedule.beta_initial, schedule.beta_final, schedule.sweeps)
    else:
        betas = np.zeros(0)
    children = np.random.SeedSequence(schedule.seed).spawn(schedule.restarts)

    candidates = []
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        x0 = rng.integers(0, 2, size=n).astype(np.int64)
        # numba keeps its own generator; seed it from this chain's child
        kernel_seed = int(child.generate_state(1)[0])
        best_x, best_e = _anneal_chain(lin, indptr, cols, vals, x0, betas, kernel_seed)
        bits = tuple(int(b) for b in best_x)
        candidates.append((energy(model, bits), bits))
    # ordering by (energy, bitstring) makes the merge independent of chain order
    best_e, best_bits = min(candidates)
    return SolveResult(
        best_assignment=best_bits,
        best_energy=energy(model, best_bits),
        evaluations=schedule.restarts * max(len(betas), 1) * n,
        wall_time=time.perf_counter() - t0,
        solver="sa",
    )


# routing oracle -----------------------------------------------------------

class OracleError(ValueError):
    pass


def _best_vehicle_route(instance: RoutingInstance, vehicle_idx: int, reqs: frozenset, respect_capacity: bool):
    """Cheapest precedence- and capacity-feasible ordering of ``reqs`` for one vehicle."""
    veh = instance.vehicles[vehicle_idx]
    requests = [instance.requests[k] for k in sorted(reqs)]
    best: list = [None]

    def dfs(route, dist, waiting, onboard, load):
        if not waiting and not onboard:
            cand = (dist, tuple(route))
            if best[0] is None or cand < best[0]:
                best[0] = cand
            return
        if best[0] is not None and dist > best[0][0]:
            return
        here = route[-1]
        for k in sorted(waiting):
            r = requests[k]
            if respect_capacity and load + r.passengers > veh.capacity:
                continue
            route.append(r.pickup)
            dfs(route, dist + instance.w(here, r.pickup), waiting - {k}, onboard | {k}, load + r.passengers)
            route.pop()
        for k in sorted(onboard):
            r = requests[k]
            route.append(r.dropoff)
            dfs(route, dist + instance.w(here, r.dropoff), waiting, onboard - {k}, load - r.passengers)
            route.pop()

    dfs([veh.start], 0.0, frozenset(range(len(requests))), frozenset(), 0)
    return best[0]


def routing_oracle(
    instance: RoutingInstance,
    respect_capacity: bool = True,
    max_requests: int = 5,
    max_vehicles: int = 3,
) -> DecodedSolution:
    """Minimum-distance RPP solution by enumeration (no return legs).

    Every request-to-vehicle assignment is tried; each vehicle's stops are
    ordered optimally with pickups before dropoffs and the on-board count
    never above capacity.  Ties go to the lexicographically smallest routes.
    """
    A, C = instance.num_vehicles, instance.num_requests
    if C > max_requests or A > max_vehicles:
        raise OracleError(f"oracle guard exceeded (A={A}, C={C}; limits {max_vehicles}, {max_requests})")

    @lru_cache(maxsize=None)
    def per_vehicle(a: int, reqs: frozenset):
        return _best_vehicle_route(instance, a, reqs, respect_capacity)

    best = None
    for owner in product(range(A), repeat=C):
        total = 0.0
        routes = []
        for a in range(A):
            sub = per_vehicle(a, frozenset(k for k in range(C) if owner[k] == a))
            if sub is None:
                break
            total += sub[0]
            routes.append(sub[1])
        else:
            cand = (total, tuple(routes))
            if best is None or cand < best:
                best = cand
    if best is None:
        return DecodedSolution(
            {v.id: (v.start,) for v in instance.vehicles},
            0.0,
            [Violation("capacity", "no feasible assignment: some request exceeds every vehicle capacity")],
        )
    routes = {v.id: r for v, r in zip(instance.vehicles, best[1])}
    dist = sum(route_distance(instance, r) for r in routes.values())
    return DecodedSolution(routes, dist, [])
