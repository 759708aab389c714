"""Command-line entry point: gen, build, solve, compare and count.

Machine-readable JSON goes to stdout and a short human table to stderr
(suppressed by ``--quiet``).  Exit codes: 0 success, 1 internal error or
infeasible solution, 2 input error, 3 comparison disagreement.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .config import CAUSALITY_MODES, BuildOptions, PenaltyConfig, RunParameters, SaSchedule
from .decode import decode_node, energy_decomposition
from .edge import build_rpp_edge, decode_edge
from .instance import InstanceError, RoutingInstance, dumps_instance, generate_instance, load_instance
from .node import build_rpp, count_variables
from .qubo import QuboModel, sidecar, write_qubo
from .solvers import OracleError, SizeError, routing_oracle, solve_exhaustive, solve_sa
from .variables import SlackVar

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DISAGREE = 0, 1, 2, 3
LAMBDA_FLAGS = ("location", "step", "incentive", "capacity", "nonedge")


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


@dataclass
class RunReport:
    instance: str
    formulation: str
    solver: str
    counts: Optional[dict]
    best_energy: Optional[float]
    solution: dict
    breakdown: Optional[dict]
    parameters: dict
    # the only fields allowed to differ between identical reruns
    timing: dict = field(default_factory=dict)


# helpers ------------------------------------------------------------------

def _load(path: str) -> RoutingInstance:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"instance file not found: {p}")
    try:
        return load_instance(p)
    except InstanceError as exc:
        raise InputError(f"{p}: {exc}") from None


def _penalty(args, instance: RoutingInstance) -> PenaltyConfig:
    base = PenaltyConfig.for_path_length(instance.path_length)
    try:
        return base.replace(**{f"lambda_{k}": getattr(args, f"lambda_{k}") for k in LAMBDA_FLAGS})
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _build(args, instance: RoutingInstance, formulation: Optional[str] = None, mode: Optional[str] = None) -> QuboModel:
    formulation = formulation or args.formulation
    penalty = _penalty(args, instance)
    try:
        if formulation == "edge":
            return build_rpp_edge(instance, penalty)
        opts = BuildOptions(
            with_capacity=getattr(args, "capacity", False),
            with_presolve=not getattr(args, "no_presolve", False),
            causality_mode=mode or args.causality,
            penalty=penalty,
        )
        return build_rpp(instance, opts)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _counts(model: QuboModel) -> dict:
    slack = sum(isinstance(k, SlackVar) for k in model.keys)
    return {
        "free": model.num_vars,
        "fixed": len(model.fixed),
        "slack": slack,
        "registered": model.num_registered,
    }


def _decode(model: QuboModel, bits, instance: RoutingInstance):
    if model.meta.get("formulation") == "edge":
        return decode_edge(bits, model, instance)
    return decode_node(bits, model, instance)


def _emit(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _table(args, rows) -> None:
    if args.quiet:
        return
    width = max(len(str(k)) for k, _ in rows)
    for k, v in rows:
        print(f"{str(k).ljust(width)}  {v}", file=sys.stderr)


# subcommands --------------------------------------------------------------

def cmd_gen(args) -> int:
    try:
        inst = generate_instance(args.seed, args.vehicles, args.requests, (args.cap_min, args.cap_max))
    except (ValueError, InstanceError) as exc:
        raise InputError(str(exc)) from None
    text = dumps_instance(inst)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_build(args) -> int:
    inst = _load(args.instance)
    model = _build(args, inst)
    counts = _counts(model)
    caps = [v.capacity for v in inst.vehicles]
    if args.formulation == "edge":
        closed = count_variables(inst.num_vehicles, inst.num_requests, formulation="edge")
    elif args.capacity:
        closed = count_variables(inst.num_vehicles, inst.num_requests, caps, "node+capacity")
    else:
        closed = count_variables(inst.num_vehicles, inst.num_requests)
    counts["closed_form"] = closed
    if args.out:
        stem = Path(args.out)
        stem.with_suffix(".qubo").write_text(write_qubo(model))
        stem.with_suffix(".json").write_text(json.dumps(sidecar(model), indent=1) + "\n")
        counts["files"] = [str(stem.with_suffix(".qubo")), str(stem.with_suffix(".json"))]
    print(json.dumps({"instance": inst.name, "formulation": args.formulation, "counts": counts}, indent=1, sort_keys=True))
    _table(args, [("instance", inst.name), ("formulation", args.formulation), *counts.items()])
    return EXIT_OK


def _schedule(args, instance: RoutingInstance) -> SaSchedule:
    try:
        return SaSchedule.default(instance.path_length, seed=args.seed, sweeps=args.sweeps, restarts=args.restarts)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _solve_model(args, model: QuboModel, instance: RoutingInstance):
    if args.solver == "exhaustive":
        try:
            return solve_exhaustive(model)
        except SizeError as exc:
            raise InputError(str(exc)) from None
    return solve_sa(model, _schedule(args, instance))


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    params = RunParameters(
        formulation=args.formulation,
        solver=args.solver,
        with_capacity=args.capacity,
        with_presolve=not args.no_presolve,
        causality_mode=args.causality,
        seed=args.seed,
        sweeps=args.sweeps,
        restarts=args.restarts,
        penalty=asdict(_penalty(args, inst)),
        schedule=asdict(_schedule(args, inst)) if args.solver == "sa" else None,
    )
    t0 = time.perf_counter()
    if args.solver == "oracle":
        try:
            sol = routing_oracle(inst, respect_capacity=args.capacity)
        except OracleError as exc:
            raise InputError(str(exc)) from None
        report = RunReport(inst.name, "none", "oracle", None, None, sol.to_dict(), None, asdict(params))
        report.timing = {"total": time.perf_counter() - t0}
    else:
        model = _build(args, inst)
        t1 = time.perf_counter()
        result = _solve_model(args, model, inst)
        sol = _decode(model, result.best_assignment, inst)
        breakdown = energy_decomposition(model, result.best_assignment)
        report = RunReport(
            inst.name,
            args.formulation,
            args.solver,
            _counts(model),
            result.best_energy,
            sol.to_dict(),
            {"families": breakdown.families, "total": breakdown.total},
            asdict(params),
        )
        report.timing = {"build": t1 - t0, "solve": result.wall_time, "total": time.perf_counter() - t0}
    _emit(asdict(report), args.out)
    _table(args, [
        ("instance", inst.name),
        ("solver", args.solver),
        ("feasible", sol.feasible),
        ("distance", f"{sol.total_distance:.6g}"),
        *((a, " -> ".join(r)) for a, r in sol.routes.items()),
        *(("violation", f"{v.kind}: {v.detail}") for v in sol.violations),
    ])
    return EXIT_OK if sol.feasible else EXIT_FAIL


def cmd_compare(args) -> int:
    """Node vs. edge optimum, and incentive vs. penalty causality argmin sets."""
    inst = _load(args.instance)
    A, C = inst.num_vehicles, inst.num_requests
    node = _build(args, inst, "node", "incentive")
    node_pen = _build(args, inst, "node", "penalty")
    edge = _build(args, inst, "edge")
    try:
        r_node, r_pen, r_edge = solve_exhaustive(node), solve_exhaustive(node_pen), solve_exhaustive(edge)
    except SizeError as exc:
        raise InputError(f"compare needs exhaustive solving of both formulations: {exc}") from None
    d_node = decode_node(r_node.best_assignment, node, inst)
    d_edge = decode_edge(r_edge.best_assignment, edge, inst)
    tol = 1e-9 * max(1.0, abs(d_node.total_distance))
    distances_agree = abs(d_node.total_distance - d_edge.total_distance) <= tol
    modes_agree = r_node.all_minimizers == r_pen.all_minimizers
    verdict = {
        "distances_agree": distances_agree,
        "node_feasible": d_node.feasible,
        "edge_feasible": d_edge.feasible,
        "causality_modes_agree": modes_agree,
    }
    agree = all(verdict.values())
    out = {
        "instance": inst.name,
        "counts": {
            "node_registered": node.num_registered,
            "node_free": node.num_vars,
            "edge_registered": edge.num_registered,
            "edge_free": edge.num_vars,
            "node_closed_form": count_variables(A, C),
            "edge_closed_form": count_variables(A, C, formulation="edge"),
        },
        "node": d_node.to_dict(),
        "edge": d_edge.to_dict(),
        "verdict": verdict,
        "agree": agree,
    }
    _emit(out, args.out)
    _table(args, [
        ("variables node/edge", f"{node.num_registered} / {edge.num_registered}"),
        ("distance node/edge", f"{d_node.total_distance:.6g} / {d_edge.total_distance:.6g}"),
        *verdict.items(),
        *(("edge violation", f"{v.kind}: {v.detail}") for v in d_edge.violations),
    ])
    return EXIT_OK if agree else EXIT_DISAGREE


def cmd_count(args) -> int:
    A, C = args.vehicles, args.requests
    caps = args.capacities or []
    if caps and len(caps) != A:
        raise InputError(f"--capacities needs {A} values, got {len(caps)}")
    out = {
        "vehicles": A,
        "requests": C,
        "node": count_variables(A, C),
        "edge": count_variables(A, C, formulation="edge"),
    }
    if caps:
        out["node+capacity"] = count_variables(A, C, caps, "node+capacity")
    print(json.dumps(out, indent=1, sort_keys=True))
    _table(args, list(out.items()))
    return EXIT_OK


# parser -------------------------------------------------------------------

def _model_flags(p: argparse.ArgumentParser, formulation: bool = True) -> None:
    p.add_argument("--instance", required=True, metavar="PATH")
    if formulation:
        p.add_argument("--formulation", choices=("node", "edge"), default="node")
        p.add_argument("--capacity", action="store_true", help="add capacity constraints with slack variables")
        p.add_argument("--no-presolve", action="store_true")
        p.add_argument("--causality", choices=CAUSALITY_MODES, default="incentive")
    for name in LAMBDA_FLAGS:
        p.add_argument(f"--lambda-{name}", type=float, default=None, metavar="REAL")
    p.add_argument("--out", metavar="PATH")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rpp-qubo", description="Ride-pooling QUBO models and solvers.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="no human-readable table on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write a seeded random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vehicles", type=int, default=1)
    p.add_argument("--requests", type=int, default=1)
    p.add_argument("--cap-min", type=int, default=1)
    p.add_argument("--cap-max", type=int, default=4)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", parents=[common], help="export a QUBO file and its JSON sidecar")
    _model_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", parents=[common], help="build, solve, decode and validate")
    _model_flags(p)
    p.add_argument("--solver", choices=("exhaustive", "sa", "oracle"), default="exhaustive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", parents=[common], help="node vs. edge and incentive vs. penalty")
    _model_flags(p, formulation=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("count", parents=[common], help="closed-form variable counts")
    p.add_argument("--vehicles", type=int, required=True)
    p.add_argument("--requests", type=int, required=True)
    p.add_argument("--capacities", type=int, nargs="*")
    p.set_defaults(func=cmd_count)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any crash maps to exit code 1
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
