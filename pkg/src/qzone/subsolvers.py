"""Pluggable solvers for (sub)QUBO models.

All solvers return a :class:`SolveResult` whose energy is recomputed with
:func:`qzone.qubo.evaluate` on the returned assignment, so it is always
consistent with the model regardless of internal incremental bookkeeping.
Every solver is a pure, deterministic function of (model, config, x0).
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import sys
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import (
    BackendAssignmentError,
    BackendProcessError,
    BackendResponseError,
    BackendTimeoutError,
    ValidationError,
)
from .qubo import Assignment, QuboModel, evaluate, impact_vector

SUBSOLVER_KINDS = ("exact", "anneal", "tabu", "greedy", "external")

EXACT_CAP = 24
DEFAULT_COOLING = 0.97
DEFAULT_TENURE = 10
DEFAULT_TIMEOUT_S = 300.0
PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class SubSolverConfig:
    """Which solver to run and with what effort.

    budget counts sweeps for anneal and moves for tabu; exact and external
    ignore it. params carries kind-specific settings: "cooling" (anneal),
    "tenure" (tabu), "cap" (exact), "command" and "timeout" (external).
    """

    kind: str
    budget: int = 200
    seed: int = 0
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in SUBSOLVER_KINDS:
            raise ValidationError(
                f"unknown subsolver kind {self.kind!r}; expected one of {SUBSOLVER_KINDS}"
            )
        if self.budget < 1:
            raise ValidationError(f"budget must be positive, got {self.budget}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        object.__setattr__(self, "params", dict(self.params))


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Best assignment found, its energy, and the evaluation effort spent."""

    assignment: Assignment
    energy: float
    evaluations: int


def _finish(model: QuboModel, bits: np.ndarray, evaluations: int) -> SolveResult:
    assignment = Assignment(np.asarray(bits, dtype=np.int8))
    return SolveResult(
        assignment=assignment,
        energy=evaluate(model, assignment),
        evaluations=evaluations,
    )


def solve_exact(model: QuboModel, cap: int = EXACT_CAP) -> SolveResult:
    """Global minimizer by exhaustive enumeration.

    Ties are broken toward the lexicographically smallest bit vector with
    x_0 most significant, which is the enumeration order itself.
    """
    n = model.num_vars
    if n > cap:
        raise ValidationError(
            f"exact enumeration refuses {n} variables (cap {cap}); "
            "use a heuristic subsolver kind such as anneal or tabu"
        )
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    ii, jj, vv = model._pair_arrays
    total = 1 << n
    chunk = min(total, 1 << 16)
    best_energy = math.inf
    best_code = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energies = bits @ model.linear
        for i, j, v in zip(ii, jj, vv):
            energies += v * bits[:, i] * bits[:, j]
        local = int(np.argmin(energies))
        if energies[local] < best_energy:
            best_energy = float(energies[local])
            best_code = start + local
    bits = (best_code >> shifts) & 1
    return _finish(model, bits, total)


def solve_anneal(
    model: QuboModel, config: SubSolverConfig, x0: Assignment | None = None
) -> SolveResult:
    """Single-flip Metropolis annealing with geometric cooling.

    The start temperature is the largest flip magnitude observed on a random
    probe assignment; it decays by the cooling ratio once per sweep and is
    floored at 1e-3 of its start value. Proposals within a sweep follow a
    seeded permutation and flips update local fields incrementally. The walk
    starts from x0 when given (the start state counts as seen, so the result
    is never worse than it), otherwise from seeded random bits.
    """
    n = model.num_vars
    rng = np.random.default_rng(config.seed)
    cooling = float(config.params.get("cooling", DEFAULT_COOLING))
    if not 0.0 < cooling < 1.0:
        raise ValidationError(f"cooling ratio must be in (0, 1), got {cooling}")

    probe = Assignment(rng.integers(0, 2, size=n, dtype=np.int8))
    t0 = float(np.max(np.abs(impact_vector(model, probe)))) if n else 0.0
    if t0 == 0.0:
        t0 = 1.0
    t_min = 1e-3 * t0

    start = rng.integers(0, 2, size=n, dtype=np.int8)
    if x0 is not None:
        if len(x0) != n:
            raise ValidationError(
                f"start assignment length {len(x0)} does not match model with "
                f"{n} variables"
            )
        start = x0.bits
    x = start.tolist()
    h = model.linear.tolist()
    neighbors = model._neighbor_lists
    fields = list(h)
    for i in range(n):
        acc = h[i]
        for j, v in neighbors[i]:
            if x[j]:
                acc += v
        fields[i] = acc
    energy = evaluate(model, Assignment(np.array(x, dtype=np.int8)))
    best_energy = energy
    best_x = list(x)

    temperature = t0
    evaluations = 0
    for _ in range(config.budget):
        order = rng.permutation(n)
        noise = rng.random(n)
        for pos in range(n):
            i = int(order[pos])
            delta = (1.0 - 2.0 * x[i]) * fields[i]
            evaluations += 1
            if delta > 0.0 and noise[pos] >= math.exp(-delta / temperature):
                continue
            step = 1 - 2 * x[i]
            x[i] ^= 1
            energy += delta
            for j, v in neighbors[i]:
                fields[j] += v * step
            if energy < best_energy:
                best_energy = energy
                best_x = list(x)
        temperature = max(temperature * cooling, t_min)
    return _finish(model, np.array(best_x, dtype=np.int8), evaluations)


def solve_tabu(
    model: QuboModel, config: SubSolverConfig, x0: Assignment | None = None
) -> SolveResult:
    """Steepest-descent single-flip tabu search with aspiration.

    Each move flips the admissible variable with the lowest delta (ties by
    index); a recently flipped variable is tabu for the configured tenure
    unless flipping it would beat the best energy seen so far. Starts from
    x0 when given, otherwise from seeded random bits.
    """
    n = model.num_vars
    tenure = int(config.params.get("tenure", DEFAULT_TENURE))
    if tenure < 0:
        raise ValidationError(f"tabu tenure must be >= 0, got {tenure}")
    rng = np.random.default_rng(config.seed)
    start = rng.integers(0, 2, size=n, dtype=np.int8)
    if x0 is not None:
        if len(x0) != n:
            raise ValidationError(
                f"start assignment length {len(x0)} does not match model with "
                f"{n} variables"
            )
        start = x0.bits
    x = start.astype(np.float64)
    fields = model.linear.copy()
    for i in range(n):
        cols, vals = model._neighbor_arrays[i]
        if vals.size:
            fields[i] += float(np.dot(vals, x[cols]))
    energy = evaluate(model, Assignment(x.astype(np.int8)))
    best_energy = energy
    best_x = x.copy()
    tabu_until = np.zeros(n, dtype=np.int64)
    evaluations = 0

    for move in range(config.budget):
        deltas = (1.0 - 2.0 * x) * fields
        evaluations += n
        admissible = (tabu_until <= move) | (energy + deltas < best_energy)
        candidate = np.where(admissible, deltas, np.inf)
        i = int(np.argmin(candidate))
        if not np.isfinite(candidate[i]):
            i = int(np.argmin(deltas))  # everything tabu: take the best move anyway
        delta = float(deltas[i])
        step = 1.0 - 2.0 * x[i]
        x[i] = 1.0 - x[i]
        energy += delta
        cols, vals = model._neighbor_arrays[i]
        if vals.size:
            fields[cols] += vals * step
        tabu_until[i] = move + 1 + tenure
        if energy < best_energy:
            best_energy = energy
            best_x = x.copy()
    return _finish(model, best_x.astype(np.int8), evaluations)


def solve_greedy(model: QuboModel, x0: Assignment) -> SolveResult:
    """Steepest descent: flip the most-improving variable until none improves.

    Only strictly negative deltas are taken (ties by lowest index), so the
    energy sequence is strictly decreasing and the result is a single-flip
    local minimum.
    """
    if len(x0) != model.num_vars:
        raise ValidationError(
            f"start assignment length {len(x0)} does not match model with "
            f"{model.num_vars} variables"
        )
    n = model.num_vars
    x = x0.floats.copy()
    fields = model.linear.copy()
    for i in range(n):
        cols, vals = model._neighbor_arrays[i]
        if vals.size:
            fields[i] += float(np.dot(vals, x[cols]))
    evaluations = 0
    while True:
        deltas = (1.0 - 2.0 * x) * fields
        evaluations += n
        i = int(np.argmin(deltas))
        if deltas[i] >= 0.0:
            break
        step = 1.0 - 2.0 * x[i]
        x[i] = 1.0 - x[i]
        cols, vals = model._neighbor_arrays[i]
        if vals.size:
            fields[cols] += vals * step
    return _finish(model, x.astype(np.int8), evaluations)


# ---------------------------------------------------------------------------
# External backend protocol (JSON over subprocess stdin/stdout)
# ---------------------------------------------------------------------------


def protocol_request(model: QuboModel) -> dict:
    """Request document sent to an external backend."""
    return {
        "format_version": PROTOCOL_VERSION,
        "num_vars": model.num_vars,
        "linear": [float(v) for v in model.linear],
        "quadratic": [[i, j, v] for (i, j), v in sorted(model.quadratic.items())],
        "constant": model.constant,
    }


def model_from_request(payload: dict) -> QuboModel:
    """Parse a protocol request back into a model (used by backends)."""
    if not isinstance(payload, dict):
        raise ValidationError("request must be a JSON object")
    version = payload.get("format_version")
    if version != PROTOCOL_VERSION:
        raise ValidationError(f"unsupported request format_version {version!r}")
    try:
        num_vars = int(payload["num_vars"])
        linear = [float(v) for v in payload["linear"]]
        quadratic = {(int(i), int(j)): float(v) for i, j, v in payload["quadratic"]}
        constant = float(payload.get("constant", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed request document: {exc}") from exc
    return QuboModel.from_terms(num_vars, linear, quadratic, constant)


def solve_external(model: QuboModel, config: SubSolverConfig) -> SolveResult:
    """Delegate one solve to an external command speaking the JSON protocol.

    The command receives one request on stdin and must reply with one
    response on stdout. The returned assignment is validated and its energy
    recomputed locally; the backend's energy field is advisory only.
    """
    command = config.params.get("command")
    if not command:
        raise ValidationError("external subsolver requires params['command']")
    argv = shlex.split(command) if isinstance(command, str) else [str(c) for c in command]
    timeout = float(config.params.get("timeout", DEFAULT_TIMEOUT_S))
    request = json.dumps(protocol_request(model)).encode("utf-8")
    try:
        proc = subprocess.run(
            argv,
            input=request,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise BackendTimeoutError(
            f"backend {argv[0]!r} exceeded timeout of {timeout:g}s"
        ) from exc
    except OSError as exc:
        raise BackendProcessError(f"could not spawn backend {argv[0]!r}: {exc}") from exc
    if proc.returncode != 0:
        detail = proc.stderr.decode("utf-8", "replace").strip()
        raise BackendProcessError(
            f"backend {argv[0]!r} exited with status {proc.returncode}"
            + (f": {detail}" if detail else "")
        )
    try:
        payload = json.loads(proc.stdout.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BackendResponseError(f"backend reply is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise BackendResponseError("backend reply must be a JSON object")
    if payload.get("format_version") != PROTOCOL_VERSION:
        raise BackendResponseError(
            f"backend reply has unsupported format_version "
            f"{payload.get('format_version')!r}"
        )
    if "assignment" not in payload or "energy" not in payload:
        raise BackendResponseError("backend reply is missing 'assignment' or 'energy'")
    if not isinstance(payload["energy"], (int, float)) or isinstance(
        payload["energy"], bool
    ):
        raise BackendResponseError("backend reply field 'energy' is not a number")
    bits = payload["assignment"]
    if not isinstance(bits, list) or len(bits) != model.num_vars:
        got = len(bits) if isinstance(bits, list) else type(bits).__name__
        raise BackendAssignmentError(
            f"backend assignment has length {got}, expected {model.num_vars}"
        )
    if any(b not in (0, 1) or isinstance(b, bool) for b in bits):
        raise BackendAssignmentError("backend assignment values must all be 0 or 1")
    return _finish(model, np.array(bits, dtype=np.int8), evaluations=1)


def default_backend_command() -> list[str]:
    """The reference in-process backend, runnable via ``python -m qzone.backend``."""
    return [sys.executable, "-m", "qzone.backend"]


def run_subsolver(
    model: QuboModel, config: SubSolverConfig, x0: Assignment | None = None
) -> SolveResult:
    """Dispatch a solve according to config.kind.

    x0 is the starting state for anneal, tabu, and greedy (exact and
    external ignore it); when omitted, those solvers start from seeded
    random bits.
    """
    if config.kind == "exact":
        return solve_exact(model, cap=int(config.params.get("cap", EXACT_CAP)))
    if config.kind == "anneal":
        return solve_anneal(model, config, x0=x0)
    if config.kind == "tabu":
        return solve_tabu(model, config, x0=x0)
    if config.kind == "greedy":
        if x0 is None:
            rng = np.random.default_rng(config.seed)
            x0 = Assignment(rng.integers(0, 2, size=model.num_vars, dtype=np.int8))
        return solve_greedy(model, x0)
    return solve_external(model, config)
