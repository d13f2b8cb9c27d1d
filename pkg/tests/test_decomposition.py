import numpy as np
import pytest

from qzone.decomposition import (
    ActiveSet,
    extract_subproblem,
    merge_solution,
    restrict,
    select_active_set,
)
from qzone.errors import ValidationError
from qzone.qubo import Assignment, QuboModel, evaluate, impact_vector

from oracles import random_assignment, random_model

TWO_VAR = QuboModel.from_terms(2, [1.0, 3.0], {(0, 1): -4.0})


def test_select_picks_largest_magnitudes():
    # At x = 0 the impacts equal the linear terms: (5, -3, 0.5, -7).
    model = QuboModel.from_terms(4, [5.0, -3.0, 0.5, -7.0], None)
    active = select_active_set(model, Assignment.zeros(4), 2)
    assert active.indices == (0, 3)
    assert active.impacts == (5.0, -7.0)


def test_select_with_q_at_least_n_returns_everything():
    model = QuboModel.from_terms(3, [1.0, 2.0, 3.0], None)
    active = select_active_set(model, Assignment.zeros(3), 10)
    assert active.indices == (0, 1, 2)


def test_select_breaks_ties_by_index():
    model = QuboModel.from_terms(5, None, None)
    active = select_active_set(model, Assignment.zeros(5), 3)
    assert active.indices == (0, 1, 2)


def test_select_rejects_bad_q():
    with pytest.raises(ValidationError):
        select_active_set(TWO_VAR, Assignment.zeros(2), 0)


def test_select_matches_independent_sort():
    rng = np.random.default_rng(15)
    for _ in range(30):
        model = random_model(rng, max_vars=20)
        x = random_assignment(rng, model.num_vars)
        q = int(rng.integers(1, model.num_vars + 1))
        impacts = impact_vector(model, x)
        ranked = sorted(range(model.num_vars), key=lambda i: (-abs(impacts[i]), i))
        expected = tuple(sorted(ranked[:q]))
        assert select_active_set(model, x, q).indices == expected


def test_select_negative_ranking_orders_by_delta():
    model = QuboModel.from_terms(4, [5.0, -3.0, 0.5, -7.0], None)
    active = select_active_set(model, Assignment.zeros(4), 2, ranking="negative")
    assert active.indices == (1, 3)


def test_extract_with_all_variables_is_identity():
    active = select_active_set(TWO_VAR, Assignment.zeros(2), 2)
    sub = extract_subproblem(TWO_VAR, Assignment.zeros(2), active)
    assert sub.model == TWO_VAR
    assert sub.constant_shift == 0.0
    assert sub.global_indices == (0, 1)


def test_extract_folds_frozen_bias_and_constant():
    x = Assignment(np.array([0, 1]))
    active = ActiveSet(indices=(0,), impacts=(0.0,))
    sub = extract_subproblem(TWO_VAR, x, active)
    assert sub.model.linear.tolist() == [-3.0]  # 1 + (-4) from frozen x1 = 1
    assert sub.model.constant == 3.0
    assert sub.constant_shift == 3.0
    assert evaluate(sub.model, Assignment(np.array([0]))) == 3.0  # global H(0,1)
    assert evaluate(sub.model, Assignment(np.array([1]))) == 0.0  # global H(1,1)

    frozen_zero = extract_subproblem(TWO_VAR, Assignment.zeros(2), active)
    assert frozen_zero.model.linear.tolist() == [1.0]
    assert frozen_zero.model.constant == 0.0


def test_merge_identity_and_replacement():
    x = Assignment(np.array([0, 0, 0]))
    active = ActiveSet(indices=(1,), impacts=(0.0,))
    model = QuboModel.from_terms(3, [1.0, 1.0, 1.0], None)
    sub = extract_subproblem(model, x, active)
    assert merge_solution(x, sub, restrict(x, (1,))) == x
    assert merge_solution(x, sub, Assignment(np.array([1]))) == Assignment(
        np.array([0, 1, 0])
    )


def test_merge_rejects_wrong_length():
    x = Assignment.zeros(2)
    sub = extract_subproblem(TWO_VAR, x, ActiveSet(indices=(0,), impacts=(0.0,)))
    with pytest.raises(ValidationError, match="length 2"):
        merge_solution(x, sub, Assignment(np.array([0, 1])))


def test_subproblem_energy_matches_merged_global_energy():
    rng = np.random.default_rng(20)
    for _ in range(100):
        model = random_model(rng, max_vars=32, density=0.4)
        n = model.num_vars
        x = random_assignment(rng, n)
        q = int(rng.integers(1, n + 1))
        chosen = tuple(sorted(map(int, rng.choice(n, size=q, replace=False))))
        active = ActiveSet(indices=chosen, impacts=tuple(0.0 for _ in chosen))
        sub = extract_subproblem(model, x, active)
        assert sub.model.constant == pytest.approx(
            model.constant + sub.constant_shift, abs=1e-12
        )
        for _ in range(10):
            y = random_assignment(rng, q)
            merged = merge_solution(x, sub, y)
            assert evaluate(sub.model, y) == pytest.approx(
                evaluate(model, merged), abs=1e-9
            )
            # Frozen positions stay untouched.
            for i in range(n):
                if i not in chosen:
                    assert merged[i] == x[i]


def test_exact_subsolve_never_worsens_incumbent():
    from qzone.subsolvers import solve_exact

    rng = np.random.default_rng(33)
    for _ in range(20):
        model = random_model(rng, max_vars=10)
        x = random_assignment(rng, model.num_vars)
        q = int(rng.integers(1, model.num_vars + 1))
        active = select_active_set(model, x, q)
        sub = extract_subproblem(model, x, active)
        best = solve_exact(sub.model)
        merged = merge_solution(x, sub, best.assignment)
        assert evaluate(model, merged) <= evaluate(model, x) + 1e-9


def test_active_set_validation():
    with pytest.raises(ValidationError, match="ascending"):
        ActiveSet(indices=(2, 1), impacts=(0.0, 0.0))
    with pytest.raises(ValidationError, match="align"):
        ActiveSet(indices=(0, 1), impacts=(0.0,))
    with pytest.raises(ValidationError, match="at least one"):
        ActiveSet(indices=(), impacts=())
