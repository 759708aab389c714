"""Simulated annealing on seeded two-vehicle, three-request instances, scored against the oracle.

Prints one row per instance (feasible, relative gap to the oracle optimum,
seconds) and a summary line.  Penalties are given as multiples of the path
length S so one setting carries over between instance sizes.
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass
from typing import Optional

from rpp_qubo.config import BuildOptions, PenaltyConfig, SaSchedule
from rpp_qubo.decode import decode_node
from rpp_qubo.instance import generate_instance
from rpp_qubo.node import build_rpp
from rpp_qubo.solvers import routing_oracle, solve_sa


@dataclass
class BenchConfig:
    instances: int = 20
    first_seed: int = 1000
    vehicles: int = 2
    requests: int = 3
    capacity_range: tuple[int, int] = (1, 3)
    with_capacity: bool = True
    sweeps: Optional[int] = None
    restarts: Optional[int] = None
    beta_initial: Optional[float] = None
    beta_final_per_step: Optional[float] = None
    hard: Optional[float] = None  # location/step/capacity weight per unit of S
    soft: Optional[float] = None  # incentive weight per unit of S


def run(cfg: BenchConfig) -> dict:
    feasible = optimal = 0
    total_time = 0.0
    for k in range(cfg.instances):
        inst = generate_instance(cfg.first_seed + k, cfg.vehicles, cfg.requests, cfg.capacity_range)
        S = inst.path_length
        penalty = None
        if cfg.hard is not None or cfg.soft is not None:
            base = PenaltyConfig.for_path_length(S)
            h = cfg.hard * S if cfg.hard is not None else base.lambda_location
            s = cfg.soft * S if cfg.soft is not None else base.lambda_incentive
            penalty = PenaltyConfig(h, h, s, h, s)
        model = build_rpp(inst, BuildOptions(with_capacity=cfg.with_capacity, penalty=penalty))
        overrides = dict(sweeps=cfg.sweeps, restarts=cfg.restarts, beta_initial=cfg.beta_initial)
        if cfg.beta_final_per_step is not None:
            overrides["beta_final"] = cfg.beta_final_per_step * S
        sched = SaSchedule.default(S, seed=k, **overrides)
        t0 = time.perf_counter()
        res = solve_sa(model, sched)
        dt = time.perf_counter() - t0
        total_time += dt
        sol = decode_node(res.best_assignment, model, inst)
        ref = routing_oracle(inst, respect_capacity=cfg.with_capacity)
        gap = sol.total_distance / ref.total_distance - 1 if ref.total_distance else 0.0
        hit = sol.feasible and abs(gap) <= 1e-9
        feasible += sol.feasible
        optimal += hit
        print(f"{inst.name:<28} feasible={sol.feasible!s:<5} gap={gap:+.4f} time={dt:.1f}s")
    summary = {"feasible": feasible, "optimal": optimal, "instances": cfg.instances, "seconds": total_time}
    print(f"feasible {feasible}/{cfg.instances}  optimal {optimal}/{cfg.instances}  "
          f"mean time {total_time / max(cfg.instances, 1):.1f}s")
    return summary


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--first-seed", type=int, default=1000)
    p.add_argument("--no-capacity", action="store_true")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--beta-initial", type=float)
    p.add_argument("--beta-final-per-step", type=float)
    p.add_argument("--hard", type=float)
    p.add_argument("--soft", type=float)
    a = p.parse_args()
    run(BenchConfig(
        instances=a.instances, first_seed=a.first_seed, with_capacity=not a.no_capacity,
        sweeps=a.sweeps, restarts=a.restarts, beta_initial=a.beta_initial,
        beta_final_per_step=a.beta_final_per_step, hard=a.hard, soft=a.soft,
    ))
