"""Print closed-form and built variable counts for node, node+capacity and edge models."""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from rpp_qubo.config import BuildOptions
from rpp_qubo.edge import build_rpp_edge
from rpp_qubo.instance import generate_instance
from rpp_qubo.node import build_rpp, count_presolved_variables, count_variables


@dataclass
class CountConfig:
    max_vehicles: int = 3
    max_requests: int = 5
    capacity: int = 2
    build: bool = False  # also build each model and compare registry sizes


def main(cfg: CountConfig) -> None:
    header = f"{'A':>2} {'C':>2} {'node':>6} {'presolved':>9} {'node+cap':>9} {'edge':>7}"
    print(header)
    for A in range(1, cfg.max_vehicles + 1):
        for C in range(1, cfg.max_requests + 1):
            caps = [cfg.capacity] * A
            row = (
                count_variables(A, C),
                count_presolved_variables(A, C),
                count_variables(A, C, caps, "node+capacity"),
                count_variables(A, C, formulation="edge"),
            )
            print(f"{A:>2} {C:>2} {row[0]:>6} {row[1]:>9} {row[2]:>9} {row[3]:>7}")
            if cfg.build:
                inst = generate_instance(0, A, C, capacity_range=(cfg.capacity, cfg.capacity))
                built = (
                    build_rpp(inst, BuildOptions(with_presolve=False)).num_registered,
                    build_rpp(inst).num_vars,
                    build_rpp(inst, BuildOptions(with_presolve=False, with_capacity=True)).num_registered,
                    build_rpp_edge(inst, prune=False).num_registered,
                )
                if built != row:
                    raise SystemExit(f"mismatch at A={A}, C={C}: built {built}, closed form {row}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--max-vehicles", type=int, default=3)
    p.add_argument("--max-requests", type=int, default=5)
    p.add_argument("--capacity", type=int, default=2)
    p.add_argument("--build", action="store_true")
    a = p.parse_args()
    main(CountConfig(a.max_vehicles, a.max_requests, a.capacity, a.build))
