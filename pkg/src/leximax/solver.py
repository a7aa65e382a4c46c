"""Branch-and-bound MILP solver over the bounded-variable simplex core.

Node selection is best-bound (max-heap on the LP relaxation value, ties by
insertion order for determinism), branching picks the most fractional
binary (ties by lowest index).  An initial depth-first dive rounds the
root relaxation to seed the incumbent so best-bound pruning bites early.
Models without binaries are solved by one simplex call.

Numerical trouble (iteration blow-up, singular bases) surfaces as
:class:`SolverError`; a wrong "Optimal" is never reported.
"""

from __future__ import annotations

import heapq
import math
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import LinearModel
from .simplex import SimplexFailure, solve_lp

__all__ = [
    "Solution",
    "SolveStats",
    "SolverConfig",
    "SolverError",
    "import_solution",
    "solve",
    "solve_relaxation",
]


class SolverError(RuntimeError):
    """Solve could not be completed or certified."""


@dataclass
class SolverConfig:
    abs_gap: float = 1e-9
    rel_gap: float = 1e-6
    feas_tol: float = 1e-6
    int_tol: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None  # seconds
    branching: str = "mostFractional"
    search: str = "bestBound"
    backend: str = "embedded"  # "embedded" or "external:<command>"

    def __post_init__(self):
        for t in (self.abs_gap, self.rel_gap, self.feas_tol, self.int_tol):
            if t <= 0:
                raise ValueError("tolerances must be positive")


@dataclass
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0


@dataclass
class Solution:
    status: str  # Optimal | Infeasible | Unbounded | GapLimit | TimeLimit
    values: dict[str, float] = field(default_factory=dict)
    objective: float = math.nan
    best_bound: float = math.nan
    stats: SolveStats = field(default_factory=SolveStats)
    detail: str = ""

    def utility_vector(self, model: LinearModel) -> np.ndarray:
        names = model.roles.get("utility", [])
        return np.array([self.values[name] for name in names])


def _gap_closed(incumbent: float, bound: float, cfg: SolverConfig) -> bool:
    return bound - incumbent <= max(cfg.abs_gap, cfg.rel_gap * abs(incumbent))


def solve_relaxation(model: LinearModel, cfg: SolverConfig | None = None) -> Solution:
    """Solve the LP relaxation (binaries relaxed to their bounds)."""
    cfg = cfg or SolverConfig()
    a, senses, b, c, lo, hi = model.to_arrays()
    sign = 1.0 if model.maximize else -1.0
    t0 = time.perf_counter()
    try:
        res = solve_lp(a, senses, b, sign * c, lo, hi)
    except SimplexFailure as exc:
        raise SolverError(f"LP relaxation failed: {exc}") from exc
    wall = time.perf_counter() - t0
    stats = SolveStats(nodes=0, lp_iterations=res.iterations, wall_time=wall)
    if res.status == "infeasible":
        return Solution("Infeasible", stats=stats)
    if res.status == "unbounded":
        return Solution("Unbounded", stats=stats)
    values = {v.name: float(x) for v, x in zip(model.variables, res.x)}
    obj = sign * res.objective
    return Solution("Optimal", values, obj, obj, stats)


def solve(model: LinearModel, cfg: SolverConfig | None = None) -> Solution:
    """Solve ``model`` to proven optimality within the configured gap."""
    cfg = cfg or SolverConfig()
    if cfg.backend != "embedded":
        if not cfg.backend.startswith("external:"):
            raise SolverError(f"unknown backend {cfg.backend!r}")
        return _solve_external(model, cfg)
    return _solve_embedded(model, cfg)


def _solve_embedded(model: LinearModel, cfg: SolverConfig) -> Solution:
    t0 = time.perf_counter()
    a, senses, b, c, lo0, hi0 = model.to_arrays()
    sign = 1.0 if model.maximize else -1.0
    cs = sign * c
    binaries = model.binary_indices
    stats = SolveStats()

    def lp(lo, hi):
        try:
            res = solve_lp(a, senses, b, cs, lo, hi)
        except SimplexFailure as exc:
            raise SolverError(f"node LP failed: {exc}") from exc
        stats.lp_iterations += res.iterations
        return res

    def finish(status, values, obj, bound, detail=""):
        stats.wall_time = time.perf_counter() - t0
        if values is not None:
            vals = {v.name: float(x) for v, x in zip(model.variables, values)}
        else:
            vals = {}
        return Solution(status, vals, sign * obj if obj is not None else math.nan,
                        sign * bound if bound is not None else math.nan, stats, detail)

    root = lp(lo0, hi0)
    stats.nodes += 1
    if root.status == "infeasible":
        return Solution("Infeasible", stats=stats)
    if root.status == "unbounded":
        return Solution("Unbounded", stats=stats)

    def fractional(x):
        """(index, distance-from-integer) of the most fractional binary."""
        worst, worst_j = 0.0, -1
        for j in binaries:
            f = abs(x[j] - round(x[j]))
            if f > worst + 1e-15:
                worst, worst_j = f, j
        return worst_j, worst

    def is_integral(x):
        return all(abs(x[j] - round(x[j])) <= cfg.int_tol for j in binaries)

    def polish(x, lo, hi):
        """Re-solve with binaries fixed at their rounded values.

        A near-integral LP point can hide a tiny fractional blend that a
        tolerance-slackened row (e.g. the tie-break's hold-optimum row)
        would accept; fixing the binaries yields an exactly representable
        incumbent or proves the rounding infeasible.
        """
        exact = all(abs(x[j] - round(x[j])) <= 1e-12 for j in binaries)
        if exact:
            return x, float(cs @ x)
        plo, phi = lo.copy(), hi.copy()
        for j in binaries:
            plo[j] = phi[j] = float(round(x[j]))
        res = lp(plo, phi)
        stats.nodes += 1
        if res.status != "optimal":
            return None, -math.inf
        return res.x, res.objective

    if not binaries:
        stats.nodes = 0  # LP-only model: simplex alone
        return finish("Optimal", root.x, root.objective, root.objective)

    incumbent_x = None
    incumbent_obj = -math.inf

    def offer_incumbent(x, lo, hi):
        nonlocal incumbent_x, incumbent_obj
        px, pobj = polish(x, lo, hi)
        if px is not None and pobj > incumbent_obj:
            incumbent_x, incumbent_obj = px, pobj

    # Depth-first dive rounding the relaxation: cheap incumbent seed.
    lo, hi = lo0.copy(), hi0.copy()
    x = root.x
    for _ in range(len(binaries)):
        if is_integral(x):
            offer_incumbent(x, lo, hi)
            break
        j, _ = fractional(x)
        lo[j] = hi[j] = float(round(x[j]))
        res = lp(lo, hi)
        stats.nodes += 1
        if res.status != "optimal":
            break
        x = res.x

    counter = 0
    heap = [(-root.objective, counter, lo0, hi0, root.x)]
    best_bound = root.objective
    status = "Optimal"
    detail = ""

    while heap:
        neg_bound, _, lo, hi, x = heapq.heappop(heap)
        bound = -neg_bound
        best_bound = bound
        if incumbent_x is not None and _gap_closed(incumbent_obj, bound, cfg):
            break
        if cfg.node_limit is not None and stats.nodes >= cfg.node_limit:
            status, detail = "GapLimit", f"node limit {cfg.node_limit} reached"
            break
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            status, detail = "TimeLimit", f"time limit {cfg.time_limit}s reached"
            break
        if is_integral(x):
            offer_incumbent(x, lo, hi)
            if _gap_closed(incumbent_obj, bound, cfg):
                continue  # node fully explained by its polished point
            # A sub-tolerance fractional blend hid behind a slackened row;
            # its binaries still branch exactly, so resolve it that way.
        j, frac = fractional(x)
        if j < 0 or frac <= 1e-12:
            continue  # exactly integral: nothing left to branch
        for branch_val in (0.0, 1.0):
            clo, chi = lo.copy(), hi.copy()
            clo[j] = chi[j] = branch_val
            res = lp(clo, chi)
            stats.nodes += 1
            if res.status != "optimal":
                continue
            if is_integral(res.x):
                offer_incumbent(res.x, clo, chi)
            if incumbent_x is not None and _gap_closed(incumbent_obj, res.objective, cfg):
                continue
            counter += 1
            heapq.heappush(heap, (-res.objective, counter, clo, chi, res.x))
    else:
        # Tree exhausted: the incumbent is proven optimal.
        best_bound = incumbent_obj

    if incumbent_x is None:
        if status in ("GapLimit", "TimeLimit"):
            return finish(status, None, None, best_bound, detail)
        return finish("Infeasible", None, None, None)
    if status == "Optimal":
        best_bound = max(best_bound, incumbent_obj)
    return finish(status, incumbent_x, incumbent_obj, best_bound, detail)


# -- external backend ------------------------------------------------------


def _solve_external(model: LinearModel, cfg: SolverConfig) -> Solution:
    """File-based backend: MPS out, "name value" listing in, re-verified."""
    from .mps import export_mps

    command = cfg.backend.split(":", 1)[1]
    if not command:
        raise SolverError("external backend command is empty")
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="leximax_") as tmp:
        path = Path(tmp) / "model.mps"
        path.write_text(export_mps(model))
        argv = shlex.split(command) + [str(path)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, check=False)
        except OSError as exc:
            raise SolverError(f"cannot run external backend {command!r}: {exc}") from exc
    if proc.returncode != 0:
        raise SolverError(
            f"external backend exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    sol = import_solution(proc.stdout, model, feas_tol=cfg.feas_tol, int_tol=cfg.int_tol)
    sol.stats.wall_time = time.perf_counter() - t0
    return sol


def import_solution(text: str, model: LinearModel, feas_tol: float = 1e-6,
                    int_tol: float = 1e-6) -> Solution:
    """Parse a "name value" listing and re-verify it against the model.

    Every model variable must appear (MPS-mangled names from
    :func:`leximax.mps.export_mps` are accepted too).  Feasibility of all
    rows, bounds and integralities is checked locally within ``feas_tol`` /
    ``int_tol``; the objective is recomputed locally.  The first violated
    row is reported by name.
    """
    from .mps import mps_names

    raw: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'name value', got {line!r}")
        try:
            raw[parts[0]] = float(parts[1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value {parts[1]!r}") from exc

    col_names, _ = mps_names(model)
    values: dict[str, float] = {}
    for idx, var in enumerate(model.variables):
        if var.name in raw:
            values[var.name] = raw[var.name]
        elif col_names[idx] in raw:
            values[var.name] = raw[col_names[idx]]
        else:
            raise ValueError(f"missing variable {var.name!r} in solution listing")

    for var in model.variables:
        x = values[var.name]
        if x < var.lb - feas_tol or x > var.ub + feas_tol:
            raise ValueError(
                f"variable {var.name} = {x} violates bounds [{var.lb}, {var.ub}]"
            )
        if var.kind == "binary" and abs(x - round(x)) > int_tol:
            raise ValueError(f"binary variable {var.name} = {x} is not integral")
    for row in model.rows:
        lhs = sum(coef * values[model.variables[i].name] for i, coef in row.coeffs.items())
        bad = (
            (row.sense == "<=" and lhs > row.rhs + feas_tol)
            or (row.sense == ">=" and lhs < row.rhs - feas_tol)
            or (row.sense == "==" and abs(lhs - row.rhs) > feas_tol)
        )
        if bad:
            raise ValueError(
                f"imported point violates row {row.name}: lhs={lhs!r}, "
                f"sense={row.sense}, rhs={row.rhs!r}"
            )

    obj = model.objective_value(values)
    return Solution("Optimal", values, obj, obj, SolveStats(), detail="imported")
