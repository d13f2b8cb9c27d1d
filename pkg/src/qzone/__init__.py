"""Balanced, spatially coherent zone bipartitioning as a QUBO, solved by
impact-guided decomposition with pluggable subsolvers."""

from .decomposition import (
    ActiveSet,
    SubProblem,
    extract_subproblem,
    merge_solution,
    select_active_set,
)
from .engine import (
    HybridConfig,
    IterationRecord,
    RunTrajectory,
    initialize,
    run_classical_baseline,
    run_direct,
    run_hybrid,
)
from .errors import (
    BackendAssignmentError,
    BackendProcessError,
    BackendResponseError,
    BackendTimeoutError,
    ExternalBackendError,
    QzoneError,
    SolverError,
    ValidationError,
)
from .qubo import (
    Assignment,
    QuboModel,
    combine,
    delta_flip,
    evaluate,
    from_symmetric_matrix,
    impact_vector,
)
from .subsolvers import (
    EXACT_CAP,
    SolveResult,
    SubSolverConfig,
    run_subsolver,
    solve_anneal,
    solve_exact,
    solve_external,
    solve_greedy,
    solve_tabu,
)
from .zoning import (
    Partition,
    Solution,
    TrafficInstance,
    balance_targets,
    build_adjacency_qubo,
    build_balance_qubo,
    build_qubo,
    cut_edges,
    generate_instance,
    read_instance,
    read_solution,
    write_instance,
    write_solution,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "Assignment",
    "BackendAssignmentError",
    "BackendProcessError",
    "BackendResponseError",
    "BackendTimeoutError",
    "EXACT_CAP",
    "ExternalBackendError",
    "HybridConfig",
    "IterationRecord",
    "Partition",
    "QuboModel",
    "QzoneError",
    "RunTrajectory",
    "Solution",
    "SolveResult",
    "SolverError",
    "SubProblem",
    "SubSolverConfig",
    "TrafficInstance",
    "ValidationError",
    "balance_targets",
    "build_adjacency_qubo",
    "build_balance_qubo",
    "build_qubo",
    "combine",
    "cut_edges",
    "delta_flip",
    "evaluate",
    "extract_subproblem",
    "from_symmetric_matrix",
    "generate_instance",
    "impact_vector",
    "initialize",
    "merge_solution",
    "read_instance",
    "read_solution",
    "run_classical_baseline",
    "run_direct",
    "run_hybrid",
    "run_subsolver",
    "select_active_set",
    "solve_anneal",
    "solve_exact",
    "solve_external",
    "solve_greedy",
    "solve_tabu",
    "write_instance",
    "write_solution",
]
