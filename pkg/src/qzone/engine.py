"""Iterative coordination loop for decomposed QUBO solving.

Each iteration selects an active subset of variables (by impact ranking or a
baseline policy), solves the reduced subproblem with the configured
subsolver, and accepts the merged candidate only if it strictly improves the
incumbent. The incumbent objective is therefore non-increasing by
construction. Runs are deterministic functions of (model, config).
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .decomposition import ActiveSet, extract_subproblem, merge_solution, restrict, select_active_set
from .errors import SolverError, ValidationError
from .qubo import Assignment, QuboModel, delta_flip, evaluate
from .subsolvers import SubSolverConfig, run_subsolver, solve_greedy
from .zoning import Partition

SELECTION_POLICIES = ("impact", "random", "round_robin")
BASELINE_POLICIES = ("random", "round_robin")
INIT_POLICIES = ("zeros", "random", "greedy")
TERMINATION_REASONS = ("converged", "patience", "max_iterations")

TRAJECTORY_COLUMNS = (
    "iteration",
    "objective_before",
    "objective_after",
    "accepted",
    "num_active",
    "subsolver_evals",
)


@dataclass(frozen=True)
class HybridConfig:
    """Settings for one decomposed run."""

    subsolver: SubSolverConfig
    q: int = 16
    selection: str = "impact"
    max_iterations: int = 20
    patience: int = 2
    min_relative_improvement: float = 1e-9
    init: str = "zeros"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValidationError(f"active-set size must be positive, got {self.q}")
        if self.selection not in SELECTION_POLICIES:
            raise ValidationError(
                f"unknown selection policy {self.selection!r}; "
                f"expected one of {SELECTION_POLICIES}"
            )
        if self.max_iterations < 1:
            raise ValidationError(
                f"max_iterations must be positive, got {self.max_iterations}"
            )
        if self.patience < 1:
            raise ValidationError(f"patience must be positive, got {self.patience}")
        if self.min_relative_improvement < 0:
            raise ValidationError("min_relative_improvement must be >= 0")
        if self.init not in INIT_POLICIES:
            raise ValidationError(
                f"unknown init policy {self.init!r}; expected one of {INIT_POLICIES}"
            )
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class IterationRecord:
    """What happened in one loop iteration."""

    index: int
    objective_before: float
    objective_after: float
    active_indices: tuple[int, ...]
    accepted: bool
    subsolver_evaluations: int
    error: str | None = None


@dataclass(frozen=True, eq=False)
class RunTrajectory:
    """Per-iteration records plus the final partition of a solver run."""

    iterations: tuple[IterationRecord, ...]
    final: Partition
    termination_reason: str
    wall_time_s: float = 0.0


def _iteration_seed(base: int, iteration: int) -> int:
    # Distinct deterministic stream per iteration.
    return (base * 1_000_003 + iteration) % (2**63 - 1)


def initialize(model: QuboModel, config: HybridConfig) -> Assignment:
    """Starting assignment per the configured init policy, seeded."""
    n = model.num_vars
    if config.init == "zeros":
        return Assignment.zeros(n)
    rng = np.random.default_rng([config.seed, 0])
    x = Assignment(rng.integers(0, 2, size=n, dtype=np.int8))
    if config.init == "random":
        return x
    return solve_greedy(model, x).assignment


def _select(
    model: QuboModel,
    x: Assignment,
    config: HybridConfig,
    iteration: int,
    rng: np.random.Generator,
) -> ActiveSet:
    n = model.num_vars
    q = min(config.q, n)
    if config.selection == "impact":
        return select_active_set(model, x, config.q)
    if config.selection == "random":
        chosen = sorted(int(i) for i in rng.choice(n, size=q, replace=False))
    else:  # round_robin: contiguous blocks of size q, cycling in order
        num_blocks = (n + q - 1) // q
        block = (iteration - 1) % num_blocks
        chosen = list(range(block * q, min((block + 1) * q, n)))
    return ActiveSet(
        indices=tuple(chosen),
        impacts=tuple(delta_flip(model, x, i) for i in chosen),
    )


def run_hybrid(
    model: QuboModel, config: HybridConfig, warm_start: Assignment | None = None
) -> RunTrajectory:
    """Run the iterative select/solve/merge loop until it stalls or caps out.

    A candidate is accepted only when it beats the incumbent by more than
    min_relative_improvement * (1 + |incumbent|). After `patience`
    consecutive non-accepted iterations the run stops: the reason is
    "converged" when some of those candidates still improved (just below
    the threshold) and "patience" when none did. Subsolver failures mark
    the iteration failed and count as non-improving.
    """
    started = time.perf_counter()
    if warm_start is not None:
        if len(warm_start) != model.num_vars:
            raise ValidationError(
                f"warm start length {len(warm_start)} does not match model with "
                f"{model.num_vars} variables"
            )
        x = warm_start
    else:
        x = initialize(model, config)
    incumbent = evaluate(model, x)
    selection_rng = np.random.default_rng([config.seed, 1])
    records: list[IterationRecord] = []
    reason = "max_iterations"
    bad_streak = 0
    streak_saw_improvement = False

    for iteration in range(1, config.max_iterations + 1):
        active = _select(model, x, config, iteration, selection_rng)
        error: str | None = None
        evaluations = 0
        candidate = None
        candidate_energy = incumbent
        try:
            sub = extract_subproblem(model, x, active)
            sub_config = replace(
                config.subsolver,
                seed=_iteration_seed(config.subsolver.seed, iteration),
            )
            result = run_subsolver(sub.model, sub_config, x0=restrict(x, active.indices))
            candidate = merge_solution(x, sub, result.assignment)
            candidate_energy = evaluate(model, candidate)
            evaluations = result.evaluations
        except SolverError as exc:
            error = str(exc)

        improvement = incumbent - candidate_energy
        threshold = config.min_relative_improvement * (1.0 + abs(incumbent))
        accepted = error is None and improvement > threshold
        before = incumbent
        if accepted:
            assert candidate is not None and candidate_energy <= incumbent
            x = candidate
            incumbent = candidate_energy
            bad_streak = 0
            streak_saw_improvement = False
        else:
            bad_streak += 1
            if error is None and improvement > 0.0:
                streak_saw_improvement = True
        records.append(
            IterationRecord(
                index=iteration,
                objective_before=before,
                objective_after=incumbent,
                active_indices=active.indices,
                accepted=accepted,
                subsolver_evaluations=evaluations,
                error=error,
            )
        )
        if bad_streak >= config.patience:
            reason = "converged" if streak_saw_improvement else "patience"
            break

    final = Partition(assignment=x, objective=evaluate(model, x))
    return RunTrajectory(
        iterations=tuple(records),
        final=final,
        termination_reason=reason,
        wall_time_s=time.perf_counter() - started,
    )


def run_classical_baseline(
    model: QuboModel, config: HybridConfig, warm_start: Assignment | None = None
) -> RunTrajectory:
    """The same loop restricted to unguided subset policies."""
    if config.selection not in BASELINE_POLICIES:
        raise ValidationError(
            f"baseline selection must be one of {BASELINE_POLICIES}, "
            f"got {config.selection!r}"
        )
    return run_hybrid(model, config, warm_start=warm_start)


def run_direct(model: QuboModel, subsolver_config: SubSolverConfig) -> RunTrajectory:
    """One-shot full-problem solve wrapped as a single-iteration trajectory."""
    started = time.perf_counter()
    result = run_subsolver(model, subsolver_config)
    final = Partition(assignment=result.assignment, objective=result.energy)
    record = IterationRecord(
        index=1,
        objective_before=result.energy,
        objective_after=result.energy,
        active_indices=tuple(range(model.num_vars)),
        accepted=True,
        subsolver_evaluations=result.evaluations,
    )
    return RunTrajectory(
        iterations=(record,),
        final=final,
        termination_reason="max_iterations",
        wall_time_s=time.perf_counter() - started,
    )


def write_trajectory_csv(trajectory: RunTrajectory, path: str | Path) -> None:
    """One row per iteration; see TRAJECTORY_COLUMNS for the layout."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRAJECTORY_COLUMNS)
        for rec in trajectory.iterations:
            writer.writerow(
                [
                    rec.index,
                    repr(rec.objective_before),
                    repr(rec.objective_after),
                    "true" if rec.accepted else "false",
                    len(rec.active_indices),
                    rec.subsolver_evaluations,
                ]
            )


def read_trajectory_csv(path: str | Path) -> list[dict]:
    """Parse a trajectory CSV back into typed per-iteration rows."""
    rows: list[dict] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or tuple(reader.fieldnames) != TRAJECTORY_COLUMNS:
            raise ValidationError(
                f"{path}: trajectory header must be {','.join(TRAJECTORY_COLUMNS)}"
            )
        for line, raw in enumerate(reader, start=2):
            try:
                rows.append(
                    {
                        "iteration": int(raw["iteration"]),
                        "objective_before": float(raw["objective_before"]),
                        "objective_after": float(raw["objective_after"]),
                        "accepted": {"true": True, "false": False}[raw["accepted"]],
                        "num_active": int(raw["num_active"]),
                        "subsolver_evals": int(raw["subsolver_evals"]),
                    }
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: malformed row at line {line}") from exc
    return rows


def trajectory_summary(
    trajectory: RunTrajectory, config: HybridConfig | SubSolverConfig | None = None
) -> dict:
    """Summary document: final objective, termination, config echo, wall time."""
    summary = {
        "final_objective": trajectory.final.objective,
        "termination_reason": trajectory.termination_reason,
        "iterations": len(trajectory.iterations),
        "wall_time_s": trajectory.wall_time_s,
    }
    if config is not None:
        summary["config"] = asdict(config)
    return summary


def accepted_objectives(trajectory: RunTrajectory) -> list[float]:
    """The incumbent objective after each accepted iteration, in order."""
    return [rec.objective_after for rec in trajectory.iterations if rec.accepted]


def is_monotone(values: Iterable[float]) -> bool:
    seq = list(values)
    return all(b <= a for a, b in zip(seq, seq[1:]))
