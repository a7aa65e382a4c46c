"""MILP encodings of the sequential welfare maximization stages.

``stage_one_model`` linearizes the first-stage objective (priority weight
for everyone within ``delta`` of the worst-off) with one indicator binary
per party marking whether it sits outside the fair region.
``stage_k_model`` encodes the later stages, where the k-1 smallest
utilities are already pinned and one extra binary per remaining party
selects the running minimum.  Both take a group-size profile and reduce to
the unit-size forms when every size is 1.

All big-M constants come from :class:`TradeoffParams`; the only structural
requirement is ``big_m > delta``.  Fixed utilities are pinned with
equality rows rather than substituted, so one builder serves both the
sequential driver and the encoding-fidelity tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import LinearModel

__all__ = [
    "TradeoffParams",
    "add_tiebreak",
    "add_valid_cuts",
    "compute_big_m",
    "stage_k_model",
    "stage_one_model",
]


@dataclass(frozen=True)
class TradeoffParams:
    """Everything governing one solve: delta, big-M, tolerances, tie-break.

    ``delta`` is in utility units: parties within ``delta`` of the lowest
    utility count as disadvantaged.  ``big_m=None`` means "derive from the
    instance bounds" (see :func:`compute_big_m`).  ``tie_break`` is one of
    "none", "hierarchical" (re-solve for maximum total utility among
    welfare-optimal points; the default) or "epsilon" (add
    ``epsilon * sum(s_i u_i)`` to the objective).
    """

    delta: float
    big_m: float | None = None
    feas_tol: float = 1e-6
    int_tol: float = 1e-6
    tie_break: str = "hierarchical"
    epsilon: float = 1e-4

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ValueError("delta must be finite and >= 0")
        if self.big_m is not None and not self.big_m > self.delta:
            raise ValueError("big_m must exceed delta")
        if self.feas_tol <= 0 or self.int_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.tie_break not in ("none", "hierarchical", "epsilon"):
            raise ValueError(f"unknown tie_break {self.tie_break!r}")
        if self.tie_break == "epsilon" and self.epsilon < 0:
            raise ValueError("epsilon weight must be >= 0")

    def with_delta(self, delta: float) -> "TradeoffParams":
        return replace(self, delta=delta)

    def require_big_m(self) -> float:
        if self.big_m is None:
            raise ValueError("big_m unset; call compute_big_m first")
        return self.big_m


def _sizes(sizes, n: int) -> np.ndarray:
    if sizes is None:
        return np.ones(n)
    s = np.asarray(sizes, dtype=float)
    if s.shape != (n,) or np.any(s < 1) or np.any(s != np.floor(s)):
        raise ValueError("sizes must be positive integers, one per party")
    return s


def compute_big_m(instance, params: TradeoffParams) -> float:
    """Big-M policy: ``max(u_hi - u_lo, delta) * 1.001 + 1``.

    Guarantees M > delta and M >= any achievable utility difference, with
    headroom so the MILP representability rows never bind at an optimum.
    """
    lo, hi = float(instance.u_lo), float(instance.u_hi)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("instance utility bounds must be finite")
    return max(hi - lo, params.delta) * 1.001 + 1.0


def stage_one_model(n: int, sizes, params: TradeoffParams) -> LinearModel:
    """MILP for the first stage: locate the fair region.

    max z  s.t.  z <= (N-1)*delta + sum_i s_i v_i
                 u_i - delta <= v_i <= u_i - delta*out_i
                 w <= v_i <= w + (M - delta)*out_i
                 u_i >= 0,  out_i binary

    where out_i indicates party i lies outside the fair region.  With unit
    sizes this is exactly the individual form; 1 + 4n rows before any
    instance constraints are attached.
    """
    if n < 1:
        raise ValueError("need at least one party")
    delta = params.delta
    big_m = params.require_big_m()
    s = _sizes(sizes, n)
    total = s.sum()

    mdl = LinearModel("stage1")
    z = mdl.add_var("z", -math.inf, math.inf)
    u = [mdl.add_var(f"u_{i + 1}", 0.0, math.inf) for i in range(n)]
    v = [mdl.add_var(f"v_{i + 1}", -math.inf, math.inf) for i in range(n)]
    w = mdl.add_var("w", -math.inf, math.inf)
    out = [mdl.add_var(f"out_{i + 1}", 0.0, 1.0, "binary") for i in range(n)]

    coeffs = {z: 1.0}
    for i in range(n):
        coeffs[v[i]] = -s[i]
    mdl.add_row(coeffs, "<=", (total - 1.0) * delta, name="welfare")
    for i in range(n):
        mdl.add_row({u[i]: 1.0, v[i]: -1.0}, "<=", delta, name=f"vlo_{i + 1}")
        mdl.add_row({v[i]: 1.0, u[i]: -1.0, out[i]: delta}, "<=", 0.0, name=f"vhi_{i + 1}")
        mdl.add_row({w: 1.0, v[i]: -1.0}, "<=", 0.0, name=f"wlo_{i + 1}")
        mdl.add_row({v[i]: 1.0, w: -1.0, out[i]: -(big_m - delta)}, "<=", 0.0,
                    name=f"whi_{i + 1}")
    mdl.set_objective({z: 1.0})
    mdl.roles = {
        "welfare": "z",
        "utility": [f"u_{i + 1}" for i in range(n)],
        "excess": [f"v_{i + 1}" for i in range(n)],
        "floor": "w",
        "outside": [f"out_{i + 1}" for i in range(n)],
        "stage": 1,
    }
    return mdl


def stage_k_model(state, sizes, params: TradeoffParams) -> LinearModel:
    """MILP for stage k >= 2 with the k-1 smallest utilities pinned.

    ``state`` carries the fixed indices/values, the remaining index set and
    the stage number (see :class:`leximax.sequence.SequentialState`).  The
    objective proxy z is bounded by the residual welfare: the population of
    the remaining groups times the capped running minimum plus the excess
    of parties beyond the fair region.  Binary out_i marks "beyond the fair
    region", binary min_i picks the running minimum (exactly one).
    """
    k = state.k
    if k < 2:
        raise ValueError("stage_k_model requires k >= 2")
    fixed_idx = list(state.fixed_idx)
    fixed_val = [float(v) for v in state.fixed_val]
    rest = list(state.remaining)
    if len(fixed_idx) != k - 1 or not rest:
        raise ValueError("state is inconsistent: need k-1 fixed and a non-empty rest")
    if any(b < a for a, b in zip(fixed_val, fixed_val[1:])):
        raise ValueError("fixed values must be non-decreasing")
    delta = params.delta
    big_m = params.require_big_m()
    n = len(fixed_idx) + len(rest)
    s = _sizes(sizes, n)
    anchor = fixed_val[0]  # smallest fixed utility
    last = fixed_val[-1]  # largest fixed utility
    rest_pop = float(sum(s[i] for i in rest))

    mdl = LinearModel(f"stage{k}")
    z = mdl.add_var("z", -math.inf, math.inf)
    u = [mdl.add_var(f"u_{i + 1}", 0.0, anchor + big_m) for i in range(n)]
    v = {i: mdl.add_var(f"v_{i + 1}", 0.0, math.inf) for i in rest}
    w = mdl.add_var("w", last, math.inf)
    sig = mdl.add_var("sig", -math.inf, anchor + delta)
    out = {i: mdl.add_var(f"out_{i + 1}", 0.0, 1.0, "binary") for i in rest}
    pick = {i: mdl.add_var(f"min_{i + 1}", 0.0, 1.0, "binary") for i in rest}

    coeffs = {z: 1.0, sig: -rest_pop}
    for i in rest:
        coeffs[v[i]] = -s[i]
    mdl.add_row(coeffs, "<=", 0.0, name="welfare")
    for i in rest:
        mdl.add_row({v[i]: 1.0, out[i]: -big_m}, "<=", 0.0, name=f"vcap_{i + 1}")
        mdl.add_row({v[i]: 1.0, u[i]: -1.0, out[i]: big_m}, "<=",
                    big_m - anchor - delta, name=f"vdef_{i + 1}")
        mdl.add_row({w: 1.0, u[i]: -1.0}, "<=", 0.0, name=f"floor_{i + 1}")
        mdl.add_row({u[i]: 1.0, w: -1.0, pick[i]: big_m}, "<=", big_m,
                    name=f"atmin_{i + 1}")
    mdl.add_row({sig: 1.0, w: -1.0}, "<=", 0.0, name="cap_floor")
    mdl.add_row({pick[i]: 1.0 for i in rest}, "==", 1.0, name="one_min")
    for j, (idx, val) in enumerate(zip(fixed_idx, fixed_val), start=1):
        mdl.pin(u[idx], val, name=f"fix{j}_u_{idx + 1}")
    mdl.set_objective({z: 1.0})
    mdl.roles = {
        "welfare": "z",
        "utility": [f"u_{i + 1}" for i in range(n)],
        "excess": [f"v_{i + 1}" for i in rest],
        "floor": "w",
        "fair_cap": "sig",
        "outside": [f"out_{i + 1}" for i in rest],
        "min_pick": [f"min_{i + 1}" for i in rest],
        "unfixed": [f"u_{i + 1}" for i in rest],
        "stage": k,
    }
    return mdl


def add_valid_cuts(model: LinearModel, state, sizes, params: TradeoffParams) -> LinearModel:
    """Append the stage-k tightening inequalities; the optimum is unchanged.

    One aggregate cut z <= sum_{i in rest} s_i u_i, and per remaining party

        z <= (sum_{j in rest} s_j) u_i
             + beta * sum_{j in rest, j != i} s_j (u_j - last_fixed)

    with beta = (M - delta) / (M - (last_fixed - first_fixed)).
    """
    k = state.k
    if k < 2:
        raise ValueError("cuts apply to stages k >= 2 only")
    fixed_val = [float(x) for x in state.fixed_val]
    rest = list(state.remaining)
    n = len(fixed_val) + len(rest)
    s = _sizes(sizes, n)
    delta = params.delta
    big_m = params.require_big_m()
    anchor, last = fixed_val[0], fixed_val[-1]
    denom = big_m - (last - anchor)
    if denom <= 0:
        raise ValueError("big_m too small for cut coefficient (denominator <= 0)")
    beta = (big_m - delta) / denom
    rest_pop = float(sum(s[i] for i in rest))

    out = model.copy()
    z = out.index_of("z")
    coeffs = {z: 1.0}
    for i in rest:
        coeffs[out.index_of(f"u_{i + 1}")] = -s[i]
    out.add_row(coeffs, "<=", 0.0, name="cut_sum")
    for i in rest:
        row = {z: 1.0, out.index_of(f"u_{i + 1}"): -rest_pop}
        others_pop = 0.0
        for j in rest:
            if j == i:
                continue
            uj = out.index_of(f"u_{j + 1}")
            row[uj] = row.get(uj, 0.0) - beta * s[j]
            others_pop += s[j]
        out.add_row(row, "<=", -beta * last * others_pop, name=f"cut_{i + 1}")
    return out


def add_tiebreak(model: LinearModel, z_star: float | None, sizes,
                 params: TradeoffParams) -> LinearModel:
    """Prefer higher total utility among welfare-optimal solutions.

    Hierarchical mode (needs the proven optimum ``z_star``): constrain the
    original objective to >= z_star - feas_tol and maximize sum(s_i u_i)
    instead.  Epsilon mode: leave the constraint set alone and add
    ``epsilon * sum(s_i u_i)`` to the objective.
    """
    names = model.roles["utility"]
    n = len(names)
    s = _sizes(sizes, n)
    out = model.copy()
    total = {out.index_of(name): s[i] for i, name in enumerate(names)}
    if params.tie_break == "hierarchical":
        if z_star is None:
            raise ValueError("hierarchical tie-break needs the proven optimum")
        out.add_row(dict(out.objective), ">=", z_star - params.feas_tol,
                    name="hold_opt")
        out.set_objective(total)
    elif params.tie_break == "epsilon":
        merged = dict(out.objective)
        for idx, coef in total.items():
            merged[idx] = merged.get(idx, 0.0) + params.epsilon * coef
        out.set_objective(merged)
    else:
        raise ValueError("tie_break is 'none'; nothing to add")
    return out
