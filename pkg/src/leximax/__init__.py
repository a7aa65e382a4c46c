"""Utility allocations balancing leximax fairness and utilitarian efficiency.

The library evaluates a family of social welfare functions that blend a
utilitarian total with priority for every party within ``delta`` of the
worst-off, encodes their sequential maximization as MILPs, and solves them
with an embedded branch-and-bound solver (or an external one over MPS
files).  Two applications ship with it: budgeted healthcare treatment
allocation and shelter location/assignment.

Typical use::

    import numpy as np
    from leximax import ExplicitSet, TradeoffParams, explicit_instance, run_sequence

    exset = ExplicitSet(np.array([[1, 2, 8, 9], [2, 3, 7, 8], [1, 2, 3, 12]]))
    outcome = run_sequence(explicit_instance(exset), TradeoffParams(delta=5.0))
    print(outcome.utilities, outcome.K)
"""

from .encodings import (
    TradeoffParams,
    add_tiebreak,
    add_valid_cuts,
    compute_big_m,
    stage_k_model,
    stage_one_model,
)
from .instances import (
    HealthcareInstance,
    ShelterInstance,
    build_healthcare_model,
    build_shelter_model,
    healthcare_to_csv,
    parse_healthcare_csv,
    parse_orlib_cap,
    shelter_to_orlib,
)
from .model import ExtraVar, FeasibleSetSpec, LinearModel, SymRow, Variable, attach
from .mps import export_mps, mps_names, parse_mps
from .reference import ExplicitSet, enumerate_optimal, explicit_instance, leximax_best
from .sequence import (
    AllocationInstance,
    InfeasibleInstanceError,
    IterationRecord,
    SequentialState,
    SocialOutcome,
    SweepRow,
    run_sequence,
    sweep,
)
from .solver import (
    Solution,
    SolveStats,
    SolverConfig,
    SolverError,
    import_solution,
    solve,
    solve_relaxation,
)
from .welfare import (
    TransferSpec,
    alpha_fairness,
    class_transfer,
    convex_combination,
    fair_count,
    gini,
    group_residual_welfare,
    group_welfare,
    residual_welfare,
    stage_welfare,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationInstance",
    "ExplicitSet",
    "ExtraVar",
    "FeasibleSetSpec",
    "HealthcareInstance",
    "InfeasibleInstanceError",
    "IterationRecord",
    "LinearModel",
    "SequentialState",
    "ShelterInstance",
    "SocialOutcome",
    "Solution",
    "SolveStats",
    "SolverConfig",
    "SolverError",
    "SweepRow",
    "SymRow",
    "TradeoffParams",
    "TransferSpec",
    "Variable",
    "add_tiebreak",
    "add_valid_cuts",
    "alpha_fairness",
    "attach",
    "build_healthcare_model",
    "build_shelter_model",
    "class_transfer",
    "compute_big_m",
    "convex_combination",
    "enumerate_optimal",
    "explicit_instance",
    "export_mps",
    "fair_count",
    "gini",
    "group_residual_welfare",
    "group_welfare",
    "healthcare_to_csv",
    "import_solution",
    "leximax_best",
    "mps_names",
    "parse_healthcare_csv",
    "parse_mps",
    "parse_orlib_cap",
    "residual_welfare",
    "run_sequence",
    "shelter_to_orlib",
    "solve",
    "solve_relaxation",
    "stage_k_model",
    "stage_one_model",
    "stage_welfare",
    "sweep",
]
