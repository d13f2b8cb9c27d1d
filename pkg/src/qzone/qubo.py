"""Canonical QUBO representation and energy evaluation.

A model stores the energy function

    H(x) = sum_i h_i x_i + sum_{i<j} J_ij x_i x_j + C

over binary x. Relative to the symmetric-matrix form x^T Q x + C this means
h_i = Q_ii and J_ij = 2 Q_ij; :func:`from_symmetric_matrix` performs that
conversion. Models and assignments are immutable after construction and all
operations here are pure functions, so values can be shared freely across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

PairKey = tuple[int, int]


@dataclass(frozen=True, eq=False)
class Assignment:
    """A binary configuration: one bit per decision variable."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.bits, dtype=np.int8)
        if arr.ndim != 1:
            raise ValidationError(f"assignment must be one-dimensional, got shape {arr.shape}")
        if arr.size and not ((arr == 0) | (arr == 1)).all():
            raise ValidationError("assignment bits must all be 0 or 1")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @classmethod
    def zeros(cls, n: int) -> "Assignment":
        return cls(np.zeros(n, dtype=np.int8))

    @cached_property
    def floats(self) -> np.ndarray:
        """Read-only float64 view of the bits, cached for repeated evaluation."""
        arr = self.bits.astype(np.float64)
        arr.setflags(write=False)
        return arr

    def flip(self, i: int) -> "Assignment":
        """Return a copy with bit i inverted."""
        bits = np.array(self.bits)
        bits[i] ^= 1
        return Assignment(bits)

    def to_list(self) -> list[int]:
        return [int(b) for b in self.bits]

    def __len__(self) -> int:
        return int(self.bits.size)

    def __getitem__(self, i: int) -> int:
        return int(self.bits[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Assignment):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f"Assignment({self.to_list()})"


@dataclass(frozen=True, eq=False)
class QuboModel:
    """Energy function H(x) = h.x + sum_{i<j} J_ij x_i x_j + C.

    Coupling keys are canonical unordered pairs (i, j) with i < j; a pair
    appears at most once and exact-zero couplings are not stored. Use
    :meth:`from_terms` to build from uncanonicalized input (it accumulates
    duplicate pairs, which is how additive objective terms compose).
    """

    num_vars: int
    linear: np.ndarray
    quadratic: dict[PairKey, float]
    constant: float = 0.0

    def __post_init__(self) -> None:
        n = self.num_vars
        if not isinstance(n, int) or n < 1:
            raise ValidationError(f"num_vars must be a positive integer, got {n!r}")
        h = np.array(self.linear, dtype=np.float64)
        if h.shape != (n,):
            raise ValidationError(f"linear terms must have shape ({n},), got {h.shape}")
        if not np.isfinite(h).all():
            raise ValidationError("linear terms must all be finite")
        h.setflags(write=False)
        quad: dict[PairKey, float] = {}
        for key, value in self.quadratic.items():
            i, j = key
            if not (0 <= i < j < n):
                raise ValidationError(
                    f"coupling key ({i}, {j}) must satisfy 0 <= i < j < {n}"
                )
            v = float(value)
            if not np.isfinite(v):
                raise ValidationError(f"coupling ({i}, {j}) must be finite, got {value!r}")
            quad[(int(i), int(j))] = v
        c = float(self.constant)
        if not np.isfinite(c):
            raise ValidationError(f"constant term must be finite, got {self.constant!r}")
        object.__setattr__(self, "linear", h)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "constant", c)

    @classmethod
    def from_terms(
        cls,
        num_vars: int,
        linear: Mapping[int, float] | Sequence[float] | np.ndarray | None = None,
        quadratic: Mapping[tuple[int, int], float] | None = None,
        constant: float = 0.0,
    ) -> "QuboModel":
        """Build a model from loosely-keyed terms.

        Quadratic keys are canonicalized to i < j and repeated pairs are
        summed; entries that accumulate to exactly zero are dropped.
        """
        h = np.zeros(num_vars, dtype=np.float64)
        if isinstance(linear, Mapping):
            for i, v in linear.items():
                h[i] += v
        elif linear is not None:
            arr = np.asarray(linear, dtype=np.float64)
            if arr.shape != (num_vars,):
                raise ValidationError(
                    f"linear terms must have shape ({num_vars},), got {arr.shape}"
                )
            h = arr.copy()
        quad: dict[PairKey, float] = {}
        for (i, j), v in (quadratic or {}).items():
            if i == j:
                raise ValidationError(f"self-coupling ({i}, {j}) is not allowed")
            key = (min(i, j), max(i, j))
            quad[key] = quad.get(key, 0.0) + float(v)
        quad = {k: v for k, v in quad.items() if v != 0.0}
        return cls(num_vars=num_vars, linear=h, quadratic=quad, constant=constant)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuboModel):
            return NotImplemented
        return (
            self.num_vars == other.num_vars
            and np.array_equal(self.linear, other.linear)
            and self.quadratic == other.quadratic
            and self.constant == other.constant
        )

    def __repr__(self) -> str:
        return (
            f"QuboModel(num_vars={self.num_vars}, couplings={len(self.quadratic)}, "
            f"constant={self.constant})"
        )

    # Cached index structures used by evaluators and solvers. Safe because
    # the model is immutable after construction.

    @cached_property
    def _pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coupling terms as parallel (i, j, value) arrays in key order."""
        if not self.quadratic:
            empty = np.zeros(0, dtype=np.intp)
            return empty, empty.copy(), np.zeros(0, dtype=np.float64)
        keys = sorted(self.quadratic)
        ii = np.array([k[0] for k in keys], dtype=np.intp)
        jj = np.array([k[1] for k in keys], dtype=np.intp)
        vv = np.array([self.quadratic[k] for k in keys], dtype=np.float64)
        return ii, jj, vv

    @cached_property
    def _neighbor_arrays(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per-variable coupling neighbors: element i is (indices j, values J_ij)."""
        cols: list[list[int]] = [[] for _ in range(self.num_vars)]
        vals: list[list[float]] = [[] for _ in range(self.num_vars)]
        for (i, j), v in sorted(self.quadratic.items()):
            cols[i].append(j)
            vals[i].append(v)
            cols[j].append(i)
            vals[j].append(v)
        return [
            (np.array(c, dtype=np.intp), np.array(v, dtype=np.float64))
            for c, v in zip(cols, vals)
        ]

    @cached_property
    def _neighbor_lists(self) -> list[list[tuple[int, float]]]:
        """Neighbor structure as plain Python lists, for tight solver loops."""
        return [
            list(zip(cols.tolist(), vals.tolist()))
            for cols, vals in self._neighbor_arrays
        ]


def _check_assignment(model: QuboModel, x: Assignment) -> None:
    if len(x) != model.num_vars:
        raise ValidationError(
            f"assignment length {len(x)} does not match model with "
            f"{model.num_vars} variables"
        )


def evaluate(model: QuboModel, x: Assignment) -> float:
    """Exact energy of an assignment under the canonical form."""
    _check_assignment(model, x)
    xf = x.floats
    ii, jj, vv = model._pair_arrays
    energy = float(model.linear @ xf)
    if vv.size:
        energy += float(vv @ (xf[ii] * xf[jj]))
    return energy + model.constant


def _local_field(model: QuboModel, xf: np.ndarray, i: int) -> float:
    """h_i plus the coupling field exerted on variable i by the current bits."""
    cols, vals = model._neighbor_arrays[i]
    field = float(model.linear[i])
    if vals.size:
        field += float(np.dot(vals, xf[cols]))
    return field


def delta_flip(model: QuboModel, x: Assignment, i: int) -> float:
    """Energy change from flipping bit i: (1 - 2 x_i)(h_i + sum_j J_ij x_j)."""
    _check_assignment(model, x)
    if not 0 <= i < model.num_vars:
        raise ValidationError(
            f"variable index {i} out of range for model with {model.num_vars} variables"
        )
    xf = x.floats
    return (1.0 - 2.0 * float(xf[i])) * _local_field(model, xf, i)


def impact_vector(model: QuboModel, x: Assignment) -> np.ndarray:
    """Per-variable flip deltas, element i identical to delta_flip(model, x, i)."""
    _check_assignment(model, x)
    xf = x.floats
    out = np.empty(model.num_vars, dtype=np.float64)
    for i in range(model.num_vars):
        out[i] = (1.0 - 2.0 * float(xf[i])) * _local_field(model, xf, i)
    return out


def from_symmetric_matrix(q: np.ndarray, constant: float = 0.0) -> QuboModel:
    """Convert x^T Q x + C (symmetric Q) to canonical (h, J, C) form.

    Diagonal entries become linear terms, and J_ij = Q_ij + Q_ji for i < j.
    Q must be square and symmetric to within 1e-9 absolute.
    """
    arr = np.asarray(q, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("matrix entries must all be finite")
    asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
    if asym > 1e-9:
        raise ValidationError(
            f"matrix is asymmetric beyond tolerance: max |Q - Q^T| = {asym:g}"
        )
    n = arr.shape[0]
    quad: dict[PairKey, float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            v = float(arr[i, j] + arr[j, i])
            if v != 0.0:
                quad[(i, j)] = v
    return QuboModel(
        num_vars=n,
        linear=np.diagonal(arr).copy(),
        quadratic=quad,
        constant=float(constant),
    )


def combine(models: Iterable[QuboModel]) -> QuboModel:
    """Coefficient-wise sum of models over the same variable set."""
    items = list(models)
    if not items:
        raise ValidationError("combine requires at least one model")
    n = items[0].num_vars
    for m in items[1:]:
        if m.num_vars != n:
            raise ValidationError(
                f"cannot combine models with {n} and {m.num_vars} variables"
            )
    linear = items[0].linear.copy()
    quad: dict[PairKey, float] = dict(items[0].quadratic)
    constant = items[0].constant
    for m in items[1:]:
        linear = linear + m.linear
        for key, v in m.quadratic.items():
            quad[key] = quad.get(key, 0.0) + v
        constant += m.constant
    quad = {k: v for k, v in quad.items() if v != 0.0}
    return QuboModel(num_vars=n, linear=linear, quadratic=quad, constant=constant)
