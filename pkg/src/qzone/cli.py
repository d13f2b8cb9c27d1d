"""Command-line interface: gen, solve, compare, render, impacts.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 solver or
backend failure. Every command is deterministic given its flags; seeds are
always explicit flags, and no emitted file contains wall-clock data.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from pathlib import Path

import numpy as np

from .decomposition import select_active_set
from .engine import (
    HybridConfig,
    RunTrajectory,
    initialize,
    run_classical_baseline,
    run_direct,
    run_hybrid,
    write_trajectory_csv,
)
from .errors import SolverError, ValidationError
from .qubo import Assignment, QuboModel, evaluate, impact_vector
from .render import RenderSpec, render_impact_svg, render_partition_ppm, render_partition_svg
from .subsolvers import EXACT_CAP, SUBSOLVER_KINDS, SubSolverConfig
from .zoning import (
    Solution,
    TrafficInstance,
    balance_targets,
    build_qubo,
    generate_instance,
    read_instance,
    read_solution,
    write_instance,
    write_solution,
)

METHODS = ("direct", "hybrid", "baseline-random", "baseline-roundrobin")
COMPARE_METHODS = ("direct", "hybrid", "baseline-random")
BACKEND_ENV_VAR = "QZONE_EXTERNAL_SOLVER"
REPORT_FORMAT_VERSION = 1


class UsageError(Exception):
    """Bad flags or arguments; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        raise UsageError(message)


def _parse_seeds(text: str) -> list[int]:
    """'12' means seeds 0..11; '3,5,9' means exactly those seeds."""
    try:
        if "," in text:
            seeds = [int(p) for p in text.split(",") if p.strip() != ""]
        else:
            seeds = list(range(int(text)))
    except ValueError as exc:
        raise UsageError(f"--seeds must be a count or a comma list, got {text!r}") from exc
    if not seeds:
        raise UsageError("--seeds selected no seeds")
    if any(s < 0 for s in seeds):
        raise UsageError("seeds must be >= 0")
    return seeds


def _subsolver_config(args, n: int, budget: int, seed: int) -> SubSolverConfig:
    params: dict = {}
    if args.subsolver == "external":
        command = getattr(args, "backend_cmd", None) or os.environ.get(BACKEND_ENV_VAR)
        if not command:
            raise ValidationError(
                "external subsolver needs --backend-cmd or the "
                f"{BACKEND_ENV_VAR} environment variable"
            )
        params["command"] = command
    return SubSolverConfig(kind=args.subsolver, budget=budget, seed=seed, params=params)


def _check_exact_size(args, n: int) -> None:
    if args.subsolver != "exact":
        return
    size = n if args.method == "direct" else min(args.q, n)
    if size > EXACT_CAP:
        raise ValidationError(
            f"exact subsolver cannot handle {size} variables (cap {EXACT_CAP}); "
            "lower --q or pick --subsolver anneal/tabu"
        )


def impact_rows(
    instance: TrafficInstance, model: QuboModel, x: Assignment, top: int
) -> list[tuple[int, int, int, float]]:
    """Top zones by |impact|: (zone, row, col, impact), largest magnitude first."""
    impacts = impact_vector(model, x)
    order = np.argsort(-np.abs(impacts), kind="stable")
    rows = []
    for i in order[: min(top, len(impacts))]:
        r, c = instance.zone_coords(int(i))
        rows.append((int(i), r, c, float(impacts[i])))
    return rows


def compare_methods(
    instance: TrafficInstance,
    seeds: list[int],
    total_budget: int,
    q: int,
    max_iterations: int = 20,
    patience: int = 2,
) -> dict:
    """Run direct/hybrid/random-baseline anneal solves under matched budgets.

    total_budget is the per-seed cap on single-flip proposal evaluations for
    each method: the direct solve gets total_budget/n sweeps in one call,
    and each decomposed iteration gets total_budget/(max_iterations*q)
    sweeps, so a run that uses all its iterations spends the same count.
    """
    model = build_qubo(instance)
    n = model.num_vars
    q_eff = min(q, n)
    direct_budget = max(1, total_budget // n)
    per_call_budget = max(1, total_budget // (max_iterations * q_eff))
    objectives: dict[str, list[float]] = {name: [] for name in COMPARE_METHODS}
    for seed in seeds:
        direct_cfg = SubSolverConfig(kind="anneal", budget=direct_budget, seed=seed)
        objectives["direct"].append(run_direct(model, direct_cfg).final.objective)
        for name, selection in (("hybrid", "impact"), ("baseline-random", "random")):
            config = HybridConfig(
                subsolver=SubSolverConfig(
                    kind="anneal", budget=per_call_budget, seed=seed
                ),
                q=q,
                selection=selection,
                max_iterations=max_iterations,
                patience=patience,
                init="random",
                seed=seed,
            )
            runner = run_hybrid if name == "hybrid" else run_classical_baseline
            objectives[name].append(runner(model, config).final.objective)
    methods = [
        {
            "name": name,
            "median_objective": float(statistics.median(values)),
            "best_objective": float(min(values)),
            "objectives": values,
        }
        for name, values in objectives.items()
    ]
    methods.sort(key=lambda row: (row["median_objective"], row["name"]))
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "seeds": list(seeds),
        "budget": total_budget,
        "q": q,
        "max_iterations": max_iterations,
        "patience": patience,
        "methods": methods,
    }


def format_report_table(report: dict) -> str:
    lines = [f"{'method':<20} {'median':>14} {'best':>14}"]
    for row in report["methods"]:
        lines.append(
            f"{row['name']:<20} {row['median_objective']:>14.6f} "
            f"{row['best_objective']:>14.6f}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------


def _cmd_gen(args) -> int:
    instance = generate_instance(args.rows, args.cols, args.attrs, args.seed, args.lam)
    write_instance(instance, args.out)
    targets = ", ".join(f"{t:.4f}" for t in balance_targets(instance))
    print(f"zones={instance.num_zones} edges={len(instance.adjacency)}")
    print(f"balance targets: [{targets}]")
    print(f"wrote {args.out}")
    return 0


def _run_method(model: QuboModel, args, warm_start: Assignment | None) -> RunTrajectory:
    budget = args.budget
    sub_cfg = _subsolver_config(args, model.num_vars, budget, args.seed)
    if args.method == "direct":
        return run_direct(model, sub_cfg)
    selection = {
        "hybrid": "impact",
        "baseline-random": "random",
        "baseline-roundrobin": "round_robin",
    }[args.method]
    config = HybridConfig(
        subsolver=sub_cfg,
        q=args.q,
        selection=selection,
        max_iterations=args.max_iters,
        patience=args.patience,
        init=args.init,
        seed=args.seed,
    )
    if args.method == "hybrid":
        return run_hybrid(model, config, warm_start=warm_start)
    return run_classical_baseline(model, config, warm_start=warm_start)


def _cmd_solve(args) -> int:
    instance = read_instance(args.instance)
    model = build_qubo(instance)
    _check_exact_size(args, model.num_vars)
    warm_start = None
    if args.warm_start:
        warm_start = read_solution(args.warm_start).assignment
        if args.method == "direct":
            raise ValidationError("--warm-start does not apply to --method direct")
    trajectory = _run_method(model, args, warm_start)
    solution = Solution(
        assignment=trajectory.final.assignment,
        objective=trajectory.final.objective,
        method=args.method,
        seed=args.seed,
        iterations=len(trajectory.iterations),
    )
    solution_path = f"{args.out_prefix}.solution.json"
    trajectory_path = f"{args.out_prefix}.trajectory.csv"
    write_solution(solution, solution_path)
    write_trajectory_csv(trajectory, trajectory_path)
    print(
        f"final_objective={trajectory.final.objective!r} "
        f"termination={trajectory.termination_reason} "
        f"iterations={len(trajectory.iterations)}"
    )
    print(f"wrote {solution_path} and {trajectory_path}")
    return 0


def _cmd_compare(args) -> int:
    instance = read_instance(args.instance)
    seeds = _parse_seeds(args.seeds)
    budget = args.budget if args.budget else 1000 * instance.num_zones
    report = compare_methods(
        instance,
        seeds,
        total_budget=budget,
        q=args.q,
        max_iterations=args.max_iters,
        patience=args.patience,
    )
    print(format_report_table(report))
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def _cmd_render(args) -> int:
    instance = read_instance(args.instance)
    solution = read_solution(args.solution)
    spec = RenderSpec(cell_size=args.cell_size, show_boundary=not args.no_boundary)
    if args.format == "svg":
        Path(args.out).write_text(
            render_partition_svg(instance, solution.assignment, spec), encoding="utf-8"
        )
    else:
        Path(args.out).write_bytes(render_partition_ppm(instance, solution.assignment, spec))
    print(f"wrote {args.out}")
    return 0


def _cmd_impacts(args) -> int:
    instance = read_instance(args.instance)
    model = build_qubo(instance)
    if args.solution:
        x = read_solution(args.solution).assignment
        if len(x) != instance.num_zones:
            raise ValidationError(
                f"solution has {len(x)} zones, instance has {instance.num_zones}"
            )
    else:
        config = HybridConfig(
            subsolver=SubSolverConfig(kind="anneal"), init=args.init, seed=args.seed
        )
        x = initialize(model, config)
    rows = impact_rows(instance, model, x, args.top)
    print(f"{'zone':>6} {'row':>4} {'col':>4} {'impact':>16}")
    for zone, r, c, impact in rows:
        print(f"{zone:>6} {r:>4} {c:>4} {impact:>16.6g}")
    if args.heatmap:
        impacts = impact_vector(model, x)
        Path(args.heatmap).write_text(
            render_impact_svg(instance, impacts, RenderSpec(cell_size=args.cell_size)),
            encoding="utf-8",
        )
        print(f"wrote {args.heatmap}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qzone",
        description="Balanced, spatially coherent zone bipartitioning via "
        "impact-guided QUBO decomposition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic grid instance")
    gen.add_argument("--rows", type=int, default=8)
    gen.add_argument("--cols", type=int, default=8)
    gen.add_argument("--attrs", type=int, default=3, help="attributes per zone")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--lambda", dest="lam", type=float, default=1.0,
                     help="spatial-coherence weight")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--method", choices=METHODS, default="hybrid")
    solve.add_argument("--subsolver", choices=SUBSOLVER_KINDS, default="anneal")
    solve.add_argument("--q", type=int, default=16, help="active-set size")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--budget", type=int, default=200,
                       help="subsolver budget per call (sweeps/moves)")
    solve.add_argument("--max-iters", type=int, default=20)
    solve.add_argument("--patience", type=int, default=2)
    solve.add_argument("--init", choices=("zeros", "random", "greedy"), default="zeros")
    solve.add_argument("--warm-start", help="solution file to start from")
    solve.add_argument("--backend-cmd", help="external backend command line")
    solve.add_argument("--out-prefix", required=True)
    solve.set_defaults(func=_cmd_solve)

    compare = sub.add_parser("compare", help="compare methods across seeds")
    compare.add_argument("--instance", required=True)
    compare.add_argument("--seeds", default="10",
                         help="seed count, or comma-separated seed list")
    compare.add_argument("--budget", type=int, default=0,
                         help="total proposal evaluations per method per seed "
                         "(default: 1000 * zones)")
    compare.add_argument("--q", type=int, default=16)
    compare.add_argument("--max-iters", type=int, default=20)
    compare.add_argument("--patience", type=int, default=2)
    compare.add_argument("--out", help="write the JSON report here")
    compare.set_defaults(func=_cmd_compare)

    render = sub.add_parser("render", help="draw a partition map")
    render.add_argument("--instance", required=True)
    render.add_argument("--solution", required=True)
    render.add_argument("--out", required=True)
    render.add_argument("--format", choices=("svg", "ppm"), default="svg")
    render.add_argument("--cell-size", type=int, default=24)
    render.add_argument("--no-boundary", action="store_true",
                        help="skip outlining cut edges")
    render.set_defaults(func=_cmd_render)

    impacts = sub.add_parser("impacts", help="report the most influential zones")
    impacts.add_argument("--instance", required=True)
    impacts.add_argument("--solution", help="assignment to analyze")
    impacts.add_argument("--init", choices=("zeros", "random"), default="zeros",
                         help="assignment policy when no solution is given")
    impacts.add_argument("--seed", type=int, default=0)
    impacts.add_argument("--top", type=int, default=10)
    impacts.add_argument("--heatmap", help="also write an |impact| heatmap SVG here")
    impacts.add_argument("--cell-size", type=int, default=24)
    impacts.set_defaults(func=_cmd_impacts)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
