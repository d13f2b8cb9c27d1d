"""Impact-based active-set selection and subQUBO extraction.

The reduced problem over an active set S keeps the couplings internal to S,
folds the field exerted by frozen variables into the local linear terms, and
folds the frozen variables' own energy into the constant. Sub-energies are
therefore directly comparable to global energies: for any local assignment y,
evaluate(sub.model, y) equals the global energy of the merged configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .qubo import Assignment, QuboModel, impact_vector

RANKINGS = ("magnitude", "negative")


@dataclass(frozen=True, eq=False)
class ActiveSet:
    """Selected global variable indices with the flip deltas that ranked them."""

    indices: tuple[int, ...]
    impacts: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.indices:
            raise ValidationError("active set must contain at least one variable")
        if len(self.impacts) != len(self.indices):
            raise ValidationError("active set impacts must align with indices")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValidationError("active set indices must be strictly ascending")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class SubProblem:
    """A reduced model over an active set plus the context to merge back."""

    model: QuboModel
    global_indices: tuple[int, ...]
    frozen: Assignment
    constant_shift: float

    def __post_init__(self) -> None:
        if len(self.global_indices) != self.model.num_vars:
            raise ValidationError("global index map must cover every local variable")
        if any(b <= a for a, b in zip(self.global_indices, self.global_indices[1:])):
            raise ValidationError("global indices must be strictly ascending")
        if self.global_indices[-1] >= len(self.frozen):
            raise ValidationError("global indices exceed the frozen assignment length")


def select_active_set(
    model: QuboModel, x: Assignment, q: int, ranking: str = "magnitude"
) -> ActiveSet:
    """Top-q variables by flip impact, indices returned in ascending order.

    The default ranks by |delta| (largest magnitudes first); "negative" ranks
    by most-negative delta instead, for ablation runs. Ties break toward the
    lower index.
    """
    if q < 1:
        raise ValidationError(f"active-set size must be positive, got {q}")
    if ranking not in RANKINGS:
        raise ValidationError(f"unknown ranking {ranking!r}; expected one of {RANKINGS}")
    impacts = impact_vector(model, x)
    if ranking == "magnitude":
        order = np.argsort(-np.abs(impacts), kind="stable")
    else:
        order = np.argsort(impacts, kind="stable")
    chosen = sorted(int(i) for i in order[: min(q, model.num_vars)])
    return ActiveSet(
        indices=tuple(chosen),
        impacts=tuple(float(impacts[i]) for i in chosen),
    )


def extract_subproblem(model: QuboModel, x: Assignment, active: ActiveSet) -> SubProblem:
    """Reduce the model to the active variables, freezing the rest at x.

    Local linear terms are h_i plus the coupling field from frozen
    neighbors; the constant absorbs the frozen variables' linear and
    pairwise energy, so sub-energies equal merged global energies.
    """
    n = model.num_vars
    if len(x) != n:
        raise ValidationError(
            f"assignment length {len(x)} does not match model with {n} variables"
        )
    if active.indices[-1] >= n:
        raise ValidationError(
            f"active index {active.indices[-1]} out of range for {n} variables"
        )
    local_of = {g: l for l, g in enumerate(active.indices)}
    bits = x.bits
    local_h = model.linear[list(active.indices)].copy()
    local_quad: dict[tuple[int, int], float] = {}
    shift = 0.0
    for i in range(n):
        if i not in local_of and bits[i]:
            shift += float(model.linear[i])
    for (i, j), v in model.quadratic.items():
        li = local_of.get(i)
        lj = local_of.get(j)
        if li is not None and lj is not None:
            local_quad[(li, lj)] = v
        elif li is not None:
            if bits[j]:
                local_h[li] += v
        elif lj is not None:
            if bits[i]:
                local_h[lj] += v
        elif bits[i] and bits[j]:
            shift += v
    sub_model = QuboModel(
        num_vars=len(active.indices),
        linear=local_h,
        quadratic=local_quad,
        constant=model.constant + shift,
    )
    return SubProblem(
        model=sub_model,
        global_indices=active.indices,
        frozen=x,
        constant_shift=shift,
    )


def merge_solution(x: Assignment, sub: SubProblem, y: Assignment) -> Assignment:
    """Write a local solution back into the global assignment."""
    if len(y) != len(sub.global_indices):
        raise ValidationError(
            f"local assignment length {len(y)} does not match active set of "
            f"{len(sub.global_indices)} variables"
        )
    if len(x) <= sub.global_indices[-1]:
        raise ValidationError(
            f"global assignment length {len(x)} is too short for the active set"
        )
    bits = np.array(x.bits)
    bits[list(sub.global_indices)] = y.bits
    return Assignment(bits)


def restrict(x: Assignment, indices: tuple[int, ...]) -> Assignment:
    """The global assignment restricted to the given indices (local order)."""
    return Assignment(x.bits[list(indices)])
