"""The sequential optimization driver.

One stage per iteration: stage 1 locates the fair region and fixes the
smallest utility, stage k >= 2 fixes the k-th smallest while holding the
earlier ones, and the run stops at the first stage whose newly determined
minimum exits the fair region (or when everything is fixed).  The final
distribution takes the pinned prefix plus the terminal stage's values for
the rest.

Instances carry their feasible set declaratively (binaries, resource rows,
utility-defining rows) and may be expressed in shifted units so that the
stage models' ``u >= 0`` requirement holds; every reported number is in
original units.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .encodings import (
    TradeoffParams,
    add_tiebreak,
    add_valid_cuts,
    compute_big_m,
    stage_k_model,
    stage_one_model,
)
from .model import FeasibleSetSpec, LinearModel, attach
from .solver import Solution, SolverConfig, SolverError, solve

__all__ = [
    "AllocationInstance",
    "InfeasibleInstanceError",
    "IterationRecord",
    "SequentialState",
    "SocialOutcome",
    "SweepRow",
    "run_sequence",
    "sweep",
]


class InfeasibleInstanceError(RuntimeError):
    """The instance admits no feasible utility vector."""


@dataclass(frozen=True)
class AllocationInstance:
    """A feasible set plus the bookkeeping the driver needs.

    ``u_lo``/``u_hi`` bound every achievable utility (in the shifted units
    the model uses) and feed the big-M policy.  ``offset`` maps model units
    back to original units: original = shifted - offset.
    """

    kind: str  # "healthcare" | "shelter" | "explicit"
    feasible_set: FeasibleSetSpec
    sizes: np.ndarray
    u_lo: float
    u_hi: float
    offset: float = 0.0
    label: str = ""

    def __post_init__(self):
        self.feasible_set.validate()
        sizes = np.asarray(self.sizes)
        if sizes.shape != (self.feasible_set.n,):
            raise ValueError("sizes length must match the number of parties")
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return self.feasible_set.n


@dataclass
class SequentialState:
    """Prefix bookkeeping between stages: what is fixed and what remains."""

    k: int
    fixed_idx: list[int]  # 0-based party indices, in fixing order
    fixed_val: list[float]  # shifted units, non-decreasing
    remaining: list[int]
    delta: float
    big_m: float

    def __post_init__(self):
        if sorted(self.fixed_idx + self.remaining) != list(range(len(self.fixed_idx) + len(self.remaining))):
            raise ValueError("fixed and remaining indices must partition 0..n-1")
        if any(b < a for a, b in zip(self.fixed_val, self.fixed_val[1:])):
            raise ValueError("fixed values must be non-decreasing")

    @property
    def anchor(self) -> float:
        return self.fixed_val[0]


@dataclass
class IterationRecord:
    k: int
    fixed_index: int  # 0-based party index chosen at this stage
    fixed_value: float  # original units
    z: float
    wall_ms: float
    utilities: np.ndarray  # full stage solution, original units


@dataclass
class SocialOutcome:
    utilities: np.ndarray  # final distribution, original units
    K: int  # largest stage whose minimum stayed in the fair region
    iterations: list[IterationRecord]
    fair_mask: np.ndarray
    total: float  # sum(s_i * u_i), original units
    average: float  # per-capita utility
    diagnostics: dict = field(default_factory=dict)


@dataclass
class SweepRow:
    delta: float
    outcome: SocialOutcome | None
    error: str = ""
    wall_ms: float = 0.0


def _round_grid(values: np.ndarray, feas_tol: float) -> np.ndarray:
    decimals = max(0, int(round(-math.log10(feas_tol))))
    return np.round(values, decimals)


def _stage_solve(model: LinearModel, sizes, params: TradeoffParams,
                 cfg: SolverConfig, stage: int) -> tuple[Solution, float]:
    """Solve one stage honoring the tie-break policy; returns (sol, z_k)."""
    if params.tie_break == "epsilon":
        sol = solve(add_tiebreak(model, None, sizes, params), cfg)
        if sol.status != "Optimal":
            return sol, math.nan
        return sol, sol.values["z"]
    sol = solve(model, cfg)
    if sol.status != "Optimal":
        return sol, math.nan
    z_star = sol.objective
    if params.tie_break == "hierarchical":
        refined = solve(add_tiebreak(model, z_star, sizes, params), cfg)
        if refined.status != "Optimal":
            raise SolverError(
                f"stage {stage}: tie-break re-solve ended with {refined.status}"
            )
        return refined, z_star
    return sol, z_star


def run_sequence(instance: AllocationInstance, params: TradeoffParams,
                 cfg: SolverConfig | None = None, *, use_cuts: bool = False,
                 assemble: str = "terminal") -> SocialOutcome:
    """Run the full stage sequence on ``instance`` for one delta.

    ``assemble`` picks where the not-individually-fixed utilities come
    from: "terminal" (default) takes them from the first stage whose
    minimum left the fair region, "last_fair" from the last stage whose
    minimum stayed inside.  The two agree whenever every party ends up
    fixed.  ``use_cuts`` appends the stage-k tightening inequalities.
    """
    if assemble not in ("terminal", "last_fair"):
        raise ValueError(f"unknown assemble mode {assemble!r}")
    cfg = cfg or SolverConfig()
    if params.big_m is None:
        params = replace(params, big_m=compute_big_m(instance, params))
    n = instance.n
    sizes = np.asarray(instance.sizes, dtype=float)
    offset = instance.offset
    delta = params.delta

    def original(shifted: np.ndarray) -> np.ndarray:
        return shifted - offset

    iterations: list[IterationRecord] = []

    t0 = time.perf_counter()
    model = attach(stage_one_model(n, sizes, params), instance.feasible_set)
    try:
        sol, z1 = _stage_solve(model, sizes, params, cfg, stage=1)
    except SolverError as exc:
        raise SolverError(f"stage 1: {exc}") from exc
    if sol.status == "Infeasible":
        raise InfeasibleInstanceError(
            f"instance {instance.label or instance.kind!r} is infeasible"
        )
    if sol.status != "Optimal":
        raise SolverError(f"stage 1 ended with status {sol.status}")
    u = _round_grid(sol.utility_vector(model), params.feas_tol)
    i1 = int(np.argmin(u))  # lowest index on ties
    anchor = float(u[i1])
    iterations.append(IterationRecord(1, i1, anchor - offset, z1,
                                      (time.perf_counter() - t0) * 1e3,
                                      original(u)))

    fixed_idx, fixed_val = [i1], [anchor]
    remaining = [i for i in range(n) if i != i1]
    stage_u = u  # utilities of the most recent stage solve (shifted)
    stopped = False

    for k in range(2, n + 1):
        t0 = time.perf_counter()
        state = SequentialState(k, list(fixed_idx), list(fixed_val),
                                list(remaining), delta, params.big_m)
        model = attach(stage_k_model(state, sizes, params), instance.feasible_set)
        if use_cuts:
            model = add_valid_cuts(model, state, sizes, params)
        try:
            sol, zk = _stage_solve(model, sizes, params, cfg, stage=k)
        except SolverError as exc:
            raise SolverError(f"stage {k}: {exc}") from exc
        if sol.status != "Optimal":
            raise SolverError(f"stage {k} ended with status {sol.status}")
        u = _round_grid(sol.utility_vector(model), params.feas_tol)
        stage_u = u
        rest_vals = u[remaining]
        pos = int(np.argmin(rest_vals))  # lowest index on ties
        ik = remaining[pos]
        val = float(u[ik])
        iterations.append(IterationRecord(k, ik, val - offset, zk,
                                          (time.perf_counter() - t0) * 1e3,
                                          original(u)))
        if val > anchor + delta:
            stopped = True
            break
        fixed_idx.append(ik)
        fixed_val.append(val)
        remaining.remove(ik)

    K = len(fixed_idx)

    final = np.empty(n)
    if assemble == "terminal" or not stopped:
        # Pinned prefix plus the terminal stage's values for the rest.
        final[fixed_idx] = fixed_val
        for i in remaining:
            final[i] = stage_u[i]
    else:
        # Values of the last stage whose minimum stayed in the fair region.
        last_fair = iterations[K - 1].utilities + offset
        final[fixed_idx[: K - 1]] = fixed_val[: K - 1]
        for i in range(n):
            if i not in fixed_idx[: K - 1]:
                final[i] = last_fair[i]

    fair_mask = final <= anchor + delta
    total = float(sizes @ final) - offset * float(sizes.sum())
    outcome = SocialOutcome(
        utilities=final - offset,
        K=K,
        iterations=iterations,
        fair_mask=fair_mask,
        total=total,
        average=total / float(sizes.sum()),
        diagnostics={"delta": delta, "big_m": params.big_m, "stages": len(iterations)},
    )
    return outcome


def sweep(instance: AllocationInstance, deltas, params: TradeoffParams,
          cfg: SolverConfig | None = None, *, use_cuts: bool = False,
          assemble: str = "terminal") -> list[SweepRow]:
    """Independent :func:`run_sequence` per delta; failures don't stop it."""
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValueError("need at least one delta")
    if any(d < 0 for d in deltas):
        raise ValueError("deltas must be >= 0")
    rows: list[SweepRow] = []
    for d in sorted(deltas):
        run_params = replace(params, delta=d, big_m=None) if params.big_m is None \
            else params.with_delta(d)
        t0 = time.perf_counter()
        try:
            outcome = run_sequence(instance, run_params, cfg,
                                   use_cuts=use_cuts, assemble=assemble)
            rows.append(SweepRow(d, outcome, "", (time.perf_counter() - t0) * 1e3))
        except (InfeasibleInstanceError, SolverError, ValueError) as exc:
            rows.append(SweepRow(d, None, str(exc), (time.perf_counter() - t0) * 1e3))
    return rows
