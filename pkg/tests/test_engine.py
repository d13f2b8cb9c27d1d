import sys

import numpy as np
import pytest

from qzone.engine import (
    HybridConfig,
    accepted_objectives,
    initialize,
    is_monotone,
    read_trajectory_csv,
    run_classical_baseline,
    run_direct,
    run_hybrid,
    trajectory_summary,
    write_trajectory_csv,
)
from qzone.errors import ValidationError
from qzone.qubo import Assignment, QuboModel, evaluate
from qzone.subsolvers import SubSolverConfig, solve_exact
from qzone.zoning import build_qubo, generate_instance

from oracles import random_model


def exact_config(**overrides) -> HybridConfig:
    settings = dict(subsolver=SubSolverConfig(kind="exact"), q=16, seed=0)
    settings.update(overrides)
    return HybridConfig(**settings)


def anneal_config(budget=50, seed=0, **overrides) -> HybridConfig:
    settings = dict(
        subsolver=SubSolverConfig(kind="anneal", budget=budget, seed=seed),
        q=8,
        seed=seed,
    )
    settings.update(overrides)
    return HybridConfig(**settings)


def check_trajectory_invariants(traj):
    for rec in traj.iterations:
        if rec.accepted:
            assert rec.objective_after <= rec.objective_before
        else:
            assert rec.objective_after == rec.objective_before
    assert is_monotone(accepted_objectives(traj))
    assert traj.termination_reason in ("converged", "patience", "max_iterations")


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def test_initialize_zeros():
    model = QuboModel.from_terms(5, [1.0] * 5, None)
    assert initialize(model, exact_config(init="zeros")) == Assignment.zeros(5)


def test_initialize_random_is_deterministic():
    rng = np.random.default_rng(2)
    model = random_model(rng, n=12)
    config = exact_config(init="random", seed=9)
    assert initialize(model, config) == initialize(model, config)


def test_initialize_greedy_not_worse_than_random():
    rng = np.random.default_rng(8)
    for seed in range(5):
        model = random_model(rng, n=10)
        random_x = initialize(model, exact_config(init="random", seed=seed))
        greedy_x = initialize(model, exact_config(init="greedy", seed=seed))
        assert evaluate(model, greedy_x) <= evaluate(model, random_x)


# ---------------------------------------------------------------------------
# The hybrid loop
# ---------------------------------------------------------------------------


def test_hybrid_with_full_active_set_reaches_exact_optimum():
    rng = np.random.default_rng(12)
    for seed in range(5):
        model = random_model(rng, max_vars=12)
        config = exact_config(q=model.num_vars, seed=seed, init="random")
        traj = run_hybrid(model, config)
        assert traj.final.objective == solve_exact(model).energy
        check_trajectory_invariants(traj)


def test_hybrid_on_zero_model_terminates_by_patience():
    model = QuboModel.from_terms(6, None, None, constant=4.0)
    traj = run_hybrid(model, anneal_config())
    assert traj.termination_reason == "patience"
    assert traj.final.objective == 4.0
    assert all(rec.objective_after == 4.0 for rec in traj.iterations)


def test_hybrid_trajectories_are_monotone():
    inst = generate_instance(4, 4, 2, seed=6)
    model = build_qubo(inst)
    for selection in ("impact", "random", "round_robin"):
        traj = run_hybrid(model, anneal_config(selection=selection, init="zeros"))
        check_trajectory_invariants(traj)
        assert traj.final.objective == evaluate(model, traj.final.assignment)


def test_hybrid_is_deterministic(tmp_path):
    inst = generate_instance(3, 3, 2, seed=4)
    model = build_qubo(inst)
    config = anneal_config(seed=5, init="random")
    a = run_hybrid(model, config)
    b = run_hybrid(model, config)
    assert a.final.assignment == b.final.assignment
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trajectory_csv(a, pa)
    write_trajectory_csv(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_hybrid_warm_start():
    inst = generate_instance(3, 3, 1, seed=1)
    model = build_qubo(inst)
    warm = Assignment(np.array([1, 0, 1, 0, 1, 0, 1, 0, 1]))
    traj = run_hybrid(model, anneal_config(), warm_start=warm)
    assert traj.final.objective <= evaluate(model, warm) + 1e-12
    with pytest.raises(ValidationError, match="warm start"):
        run_hybrid(model, anneal_config(), warm_start=Assignment.zeros(4))


def test_hybrid_survives_subsolver_failure():
    model = QuboModel.from_terms(4, [1.0, -1.0, 2.0, -2.0], None)
    config = HybridConfig(
        subsolver=SubSolverConfig(
            kind="external", budget=1, seed=0, params={"command": "/no-such-backend"}
        ),
        q=2,
        patience=3,
        seed=0,
    )
    traj = run_hybrid(model, config)
    assert traj.termination_reason == "patience"
    assert len(traj.iterations) == 3
    assert all(not rec.accepted and rec.error for rec in traj.iterations)
    assert traj.final.assignment == Assignment.zeros(4)


def test_per_iteration_subsolver_seeds_differ():
    inst = generate_instance(3, 3, 2, seed=10)
    model = build_qubo(inst)
    traj = run_hybrid(model, anneal_config(seed=3, init="zeros", patience=20))
    # With varying per-iteration seeds the random selection must not repeat
    # the exact same record stream as a single frozen subsolve would.
    assert len(traj.iterations) >= 2


# ---------------------------------------------------------------------------
# Baselines and direct solve
# ---------------------------------------------------------------------------


def test_baseline_requires_unguided_selection():
    model = QuboModel.from_terms(4, [1.0] * 4, None)
    with pytest.raises(ValidationError, match="baseline selection"):
        run_classical_baseline(model, anneal_config(selection="impact"))


def test_baseline_round_robin_full_block_equals_direct_exact():
    rng = np.random.default_rng(18)
    model = random_model(rng, n=10)
    config = exact_config(q=10, selection="round_robin", init="random", seed=2)
    traj = run_classical_baseline(model, config)
    direct = run_direct(model, SubSolverConfig(kind="exact"))
    assert traj.final.objective == direct.final.objective == solve_exact(model).energy


def test_baseline_random_is_deterministic():
    inst = generate_instance(3, 3, 1, seed=3)
    model = build_qubo(inst)
    config = anneal_config(selection="random", seed=11, init="random")
    a = run_classical_baseline(model, config)
    b = run_classical_baseline(model, config)
    assert a.final.assignment == b.final.assignment
    assert [r.active_indices for r in a.iterations] == [
        r.active_indices for r in b.iterations
    ]


def test_direct_exact_is_global_optimum():
    rng = np.random.default_rng(25)
    model = random_model(rng, max_vars=12)
    traj = run_direct(model, SubSolverConfig(kind="exact"))
    assert traj.final.objective == solve_exact(model).energy
    assert len(traj.iterations) == 1
    assert traj.iterations[0].active_indices == tuple(range(model.num_vars))


def test_direct_zero_model():
    model = QuboModel.from_terms(5, None, None, constant=1.5)
    traj = run_direct(model, SubSolverConfig(kind="anneal", budget=10, seed=0))
    assert traj.final.objective == 1.5


def test_direct_propagates_subsolver_errors():
    from qzone.errors import BackendProcessError

    model = QuboModel.from_terms(3, [1.0] * 3, None)
    config = SubSolverConfig(
        kind="external", budget=1, seed=0, params={"command": "/no-such-backend"}
    )
    with pytest.raises(BackendProcessError):
        run_direct(model, config)


# ---------------------------------------------------------------------------
# Config validation, serialization, summaries
# ---------------------------------------------------------------------------


def test_config_validation():
    sub = SubSolverConfig(kind="anneal")
    with pytest.raises(ValidationError):
        HybridConfig(subsolver=sub, q=0)
    with pytest.raises(ValidationError):
        HybridConfig(subsolver=sub, selection="best")
    with pytest.raises(ValidationError):
        HybridConfig(subsolver=sub, patience=0)
    with pytest.raises(ValidationError):
        HybridConfig(subsolver=sub, max_iterations=0)
    with pytest.raises(ValidationError):
        HybridConfig(subsolver=sub, init="warm")
    with pytest.raises(ValidationError):
        HybridConfig(subsolver=sub, seed=-1)


def test_trajectory_csv_round_trip(tmp_path):
    inst = generate_instance(3, 3, 2, seed=2)
    model = build_qubo(inst)
    traj = run_hybrid(model, anneal_config(init="zeros"))
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path)
    rows = read_trajectory_csv(path)
    assert len(rows) == len(traj.iterations)
    for row, rec in zip(rows, traj.iterations):
        assert row["iteration"] == rec.index
        assert row["objective_before"] == rec.objective_before
        assert row["objective_after"] == rec.objective_after
        assert row["accepted"] == rec.accepted
        assert row["num_active"] == len(rec.active_indices)
        assert row["subsolver_evals"] == rec.subsolver_evaluations


def test_read_trajectory_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="header"):
        read_trajectory_csv(path)


def test_trajectory_summary_contents():
    model = QuboModel.from_terms(4, [1.0, -1.0, 0.5, -0.5], None)
    config = exact_config(q=4, init="random")
    traj = run_hybrid(model, config)
    summary = trajectory_summary(traj, config)
    assert summary["final_objective"] == traj.final.objective
    assert summary["termination_reason"] == traj.termination_reason
    assert summary["iterations"] == len(traj.iterations)
    assert summary["wall_time_s"] >= 0.0
    assert summary["config"]["q"] == 4
    assert summary["config"]["subsolver"]["kind"] == "exact"
