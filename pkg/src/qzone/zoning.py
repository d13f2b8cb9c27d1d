"""Traffic-zone instances and the partitioning objective.

An instance is a rows x cols grid of zones, each carrying m nonnegative
attributes, plus weighted adjacency edges and a spatial-coherence weight.
The objective built here has two additive parts:

* balance: sum_k (sum_i A_ik x_i - T_k)^2 with targets T_k = half the
  column totals, which expands to a dense quadratic coupling;
* spatial coherence: lam * sum_edges W_ij (x_i - x_j)^2, which penalizes
  adjacent zones assigned to different regions.

Bit value 1 means region A, 0 means region B.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ValidationError
from .qubo import Assignment, QuboModel, combine, evaluate

Edge = tuple[int, int, float]

INSTANCE_FORMAT_VERSION = 1
SOLUTION_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class TrafficInstance:
    """A grid of traffic zones with attributes and adjacency weights."""

    rows: int
    cols: int
    attributes: np.ndarray
    adjacency: tuple[Edge, ...]
    lam: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValidationError(
                f"grid dimensions must be positive, got {self.rows}x{self.cols}"
            )
        n = self.rows * self.cols
        attrs = np.array(self.attributes, dtype=np.float64)
        if attrs.ndim != 2 or attrs.shape[0] != n or attrs.shape[1] < 1:
            raise ValidationError(
                f"attributes must have shape ({n}, m>=1), got {attrs.shape}"
            )
        if not np.isfinite(attrs).all():
            raise ValidationError("attribute values must all be finite")
        if (attrs < 0).any():
            raise ValidationError("attribute values must all be nonnegative")
        attrs.setflags(write=False)
        seen: set[tuple[int, int]] = set()
        edges: list[Edge] = []
        for entry in self.adjacency:
            i, j, w = int(entry[0]), int(entry[1]), float(entry[2])
            if not 0 <= i < j < n:
                raise ValidationError(
                    f"edge ({i}, {j}) must satisfy 0 <= i < j < {n}"
                )
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            if not (math.isfinite(w) and w > 0):
                raise ValidationError(f"edge ({i}, {j}) weight must be positive, got {w}")
            seen.add((i, j))
            edges.append((i, j, w))
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam >= 0):
            raise ValidationError(f"spatial weight must be >= 0, got {self.lam}")
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "adjacency", tuple(edges))
        object.__setattr__(self, "lam", lam)

    @property
    def num_zones(self) -> int:
        return self.rows * self.cols

    @property
    def num_attributes(self) -> int:
        return int(self.attributes.shape[1])

    def zone_coords(self, i: int) -> tuple[int, int]:
        """Grid coordinates (row, col) of zone i; zones are row-major."""
        return divmod(i, self.cols)


@dataclass(frozen=True, eq=False)
class Partition:
    """A zoning configuration together with its objective value."""

    assignment: Assignment
    objective: float


def grid_edges(rows: int, cols: int) -> list[Edge]:
    """4-neighbor grid edges with unit weight, in row-major zone order."""
    edges: list[Edge] = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1, 1.0))
            if r + 1 < rows:
                edges.append((i, i + cols, 1.0))
    return edges


def generate_instance(
    rows: int, cols: int, m: int, seed: int, lam: float = 1.0
) -> TrafficInstance:
    """Generate a synthetic grid instance from a seeded PRNG.

    Attributes are i.i.d. uniform on [0, 1] and each column is rescaled to
    mean 1, so every balance target equals half the zone count. Adjacency is
    the 4-neighbor grid graph with unit weights. The same arguments always
    produce a bit-identical instance.
    """
    if rows < 1 or cols < 1:
        raise ValidationError(f"grid dimensions must be positive, got {rows}x{cols}")
    if m < 1:
        raise ValidationError(f"attribute count must be positive, got {m}")
    rng = np.random.default_rng(seed)
    attrs = rng.random((rows * cols, m))
    attrs /= attrs.mean(axis=0)
    return TrafficInstance(
        rows=rows,
        cols=cols,
        attributes=attrs,
        adjacency=tuple(grid_edges(rows, cols)),
        lam=lam,
        seed=seed,
    )


def balance_targets(instance: TrafficInstance) -> np.ndarray:
    """Per-attribute balance targets: half of each column total."""
    return instance.attributes.sum(axis=0) / 2.0


def build_balance_qubo(instance: TrafficInstance) -> QuboModel:
    """Quadratic penalty on deviation of region-A attribute totals from target.

    Expanding sum_k (sum_i A_ik x_i - T_k)^2 gives h_i = sum_k (A_ik^2 -
    2 T_k A_ik), J_ij = 2 sum_k A_ik A_jk, and constant sum_k T_k^2.
    """
    a = instance.attributes
    n = instance.num_zones
    targets = balance_targets(instance)
    linear = (a * a).sum(axis=1) - 2.0 * (a @ targets)
    gram = 2.0 * (a @ a.T)
    quad: dict[tuple[int, int], float] = {}
    for i in range(n):
        row = gram[i]
        for j in range(i + 1, n):
            v = float(row[j])
            if v != 0.0:
                quad[(i, j)] = v
    return QuboModel(
        num_vars=n,
        linear=linear,
        quadratic=quad,
        constant=float(targets @ targets),
    )


def build_adjacency_qubo(instance: TrafficInstance) -> QuboModel:
    """Spatial-coherence penalty lam * sum_edges W_ij (x_i - x_j)^2.

    Each unordered edge is counted once; for binary bits the squared
    difference equals x_i + x_j - 2 x_i x_j.
    """
    n = instance.num_zones
    linear = np.zeros(n, dtype=np.float64)
    quad: dict[tuple[int, int], float] = {}
    for i, j, w in instance.adjacency:
        v = instance.lam * w
        if v == 0.0:
            continue
        linear[i] += v
        linear[j] += v
        quad[(i, j)] = quad.get((i, j), 0.0) - 2.0 * v
    return QuboModel(num_vars=n, linear=linear, quadratic=quad, constant=0.0)


def build_qubo(instance: TrafficInstance) -> QuboModel:
    """The full objective: balance penalty plus spatial-coherence penalty."""
    return combine([build_balance_qubo(instance), build_adjacency_qubo(instance)])


def cut_edges(instance: TrafficInstance, x: Assignment) -> list[Edge]:
    """Adjacency edges whose endpoint zones are assigned to different regions."""
    if len(x) != instance.num_zones:
        raise ValidationError(
            f"assignment length {len(x)} does not match instance with "
            f"{instance.num_zones} zones"
        )
    return [(i, j, w) for i, j, w in instance.adjacency if x[i] != x[j]]


def make_partition(instance: TrafficInstance, x: Assignment) -> Partition:
    """Wrap an assignment with its objective under the instance's QUBO."""
    return Partition(assignment=x, objective=evaluate(build_qubo(instance), x))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _require(payload: dict, field: str, kind: type | tuple[type, ...], where: str):
    if field not in payload:
        raise ValidationError(f"{where}: missing required field '{field}'")
    value = payload[field]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ValidationError(
            f"{where}: field '{field}' has type {type(value).__name__}"
        )
    return value


def write_instance(instance: TrafficInstance, path: str | Path) -> None:
    """Write an instance as versioned JSON; attributes are row-major by zone."""
    payload = {
        "format_version": INSTANCE_FORMAT_VERSION,
        "rows": instance.rows,
        "cols": instance.cols,
        "num_attributes": instance.num_attributes,
        "attributes": [[float(v) for v in row] for row in instance.attributes],
        "edges": [[i, j, w] for i, j, w in instance.adjacency],
        "lambda": instance.lam,
        "seed": instance.seed,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_instance(path: str | Path) -> TrafficInstance:
    """Read and validate an instance file, reporting the offending field."""
    where = str(path)
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"{where}: cannot read file ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{where}: malformed JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{where}: top level must be a JSON object")
    version = _require(payload, "format_version", int, where)
    if version != INSTANCE_FORMAT_VERSION:
        raise ValidationError(f"{where}: unsupported format_version {version}")
    rows = _require(payload, "rows", int, where)
    cols = _require(payload, "cols", int, where)
    m = _require(payload, "num_attributes", int, where)
    raw_attrs = _require(payload, "attributes", list, where)
    raw_edges = _require(payload, "edges", list, where)
    lam = _require(payload, "lambda", (int, float), where)
    seed = payload.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ValidationError(f"{where}: field 'seed' must be an integer or null")
    if rows < 1 or cols < 1:
        raise ValidationError(f"{where}: grid dimensions must be positive")
    n = rows * cols
    if len(raw_attrs) != n:
        raise ValidationError(
            f"{where}: attributes has {len(raw_attrs)} rows, expected {n}"
        )
    for zone, row in enumerate(raw_attrs):
        if not isinstance(row, list) or len(row) != m:
            raise ValidationError(
                f"{where}: attributes[{zone}] must be a list of {m} values"
            )
        for k, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValidationError(f"{where}: attributes[{zone}][{k}] is not a number")
            if not math.isfinite(v) or v < 0:
                raise ValidationError(
                    f"{where}: attributes[{zone}][{k}] must be finite and >= 0, got {v}"
                )
    edges: list[Edge] = []
    seen: set[tuple[int, int]] = set()
    for idx, entry in enumerate(raw_edges):
        if not isinstance(entry, list) or len(entry) != 3:
            raise ValidationError(f"{where}: edges[{idx}] must be [i, j, weight]")
        i, j, w = entry
        if not isinstance(i, int) or not isinstance(j, int) or isinstance(w, bool):
            raise ValidationError(f"{where}: edges[{idx}] has malformed entries")
        if not isinstance(w, (int, float)):
            raise ValidationError(f"{where}: edges[{idx}] weight is not a number")
        if not 0 <= i < j < n:
            raise ValidationError(
                f"{where}: edges[{idx}] indices must satisfy 0 <= i < j < {n}"
            )
        if (i, j) in seen:
            raise ValidationError(f"{where}: edges[{idx}] duplicates edge ({i}, {j})")
        if not (math.isfinite(w) and w > 0):
            raise ValidationError(f"{where}: edges[{idx}] weight must be positive")
        seen.add((i, j))
        edges.append((i, j, float(w)))
    return TrafficInstance(
        rows=rows,
        cols=cols,
        attributes=np.array(raw_attrs, dtype=np.float64),
        adjacency=tuple(edges),
        lam=float(lam),
        seed=seed,
    )


@dataclass(frozen=True, eq=False)
class Solution:
    """A stored partitioning result: assignment plus run provenance."""

    assignment: Assignment
    objective: float
    method: str
    seed: int | None
    iterations: int


def write_solution(solution: Solution, path: str | Path) -> None:
    payload = {
        "format_version": SOLUTION_FORMAT_VERSION,
        "assignment": solution.assignment.to_list(),
        "objective": float(solution.objective),
        "method": solution.method,
        "seed": solution.seed,
        "iterations": solution.iterations,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def read_solution(path: str | Path) -> Solution:
    where = str(path)
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"{where}: cannot read file ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{where}: malformed JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{where}: top level must be a JSON object")
    version = _require(payload, "format_version", int, where)
    if version != SOLUTION_FORMAT_VERSION:
        raise ValidationError(f"{where}: unsupported format_version {version}")
    bits = _require(payload, "assignment", list, where)
    for idx, b in enumerate(bits):
        if b not in (0, 1) or isinstance(b, bool):
            raise ValidationError(f"{where}: assignment[{idx}] must be 0 or 1")
    objective = _require(payload, "objective", (int, float), where)
    if not math.isfinite(objective):
        raise ValidationError(f"{where}: objective must be finite")
    method = _require(payload, "method", str, where)
    iterations = _require(payload, "iterations", int, where)
    seed = payload.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise ValidationError(f"{where}: field 'seed' must be an integer or null")
    return Solution(
        assignment=Assignment(np.array(bits, dtype=np.int8)),
        objective=float(objective),
        method=method,
        seed=seed,
        iterations=iterations,
    )


def connected_components(n: int, edges: Iterable[Edge]) -> list[set[int]]:
    """Connected components of the adjacency graph (union-find)."""
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j, _ in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    groups: dict[int, set[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return list(groups.values())
