"""Seeded property harnesses and the relaxation-gap diagnostic.

Each checker runs a reproducible randomized campaign and returns a
:class:`CheckReport` with the full witness for any violation, renderable
as plain text or CSV.  The welfare-monotonicity and encoding-fidelity
campaigns are asserting (violations mean a bug); the relaxation-gap
report is informational only -- pinned utilities and resource rows can
legitimately open an LP/MILP gap, so it records magnitudes without
judging them.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

from .encodings import TradeoffParams, add_valid_cuts, stage_k_model, stage_one_model
from .model import FeasibleSetSpec, SymRow
from .reference import ExplicitSet, enumerate_optimal, explicit_instance
from .sequence import SequentialState, run_sequence
from .solver import SolverConfig, solve, solve_relaxation
from .welfare import (
    TransferSpec,
    class_transfer,
    group_residual_welfare,
    group_welfare,
    residual_welfare,
    stage_welfare,
)

__all__ = [
    "CheckReport",
    "check_class_transfers",
    "cut_safety_report",
    "encoding_fidelity_report",
    "oracle_equivalence_report",
    "relaxation_gap_report",
]


@dataclass
class CheckReport:
    name: str
    trials: int
    checks: int = 0
    violations: list[dict] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    notes: str = ""

    @property
    def ok(self) -> bool:
        return not self.violations

    def text(self) -> str:
        lines = [f"[{self.name}] trials={self.trials} checks={self.checks} "
                 f"violations={len(self.violations)}"]
        if self.notes:
            lines.append(f"  {self.notes}")
        for v in self.violations[:20]:
            lines.append(f"  VIOLATION {v}")
        if len(self.violations) > 20:
            lines.append(f"  ... and {len(self.violations) - 20} more")
        return "\n".join(lines)

    def csv(self) -> str:
        rows = self.rows or self.violations
        if not rows:
            return f"name,trials,checks,violations\n{self.name},{self.trials},{self.checks},0\n"
        keys = sorted({k for row in rows for k in row})
        buf = io.StringIO()
        buf.write(",".join(keys) + "\n")
        for row in rows:
            buf.write(",".join(str(row.get(k, "")) for k in keys) + "\n")
        return buf.getvalue()


def _sorted_utilities(rng, n: int) -> np.ndarray:
    return np.sort(np.round(rng.uniform(0.0, 20.0, size=n), 3))


def check_class_transfers(k_max: int | None = None, trials: int = 1000,
                          seed: int = 20240101) -> CheckReport:
    """Equal-share top-to-bottom class transfers never lower any stage welfare.

    Per trial: a random sorted vector, a random valid class pair, an amount
    of one tenth of the smallest positive adjacent gap, a random delta; the
    stage-1..k_max welfare of the transferred vector must not drop by more
    than 1e-9.
    """
    rng = np.random.default_rng(seed)
    report = CheckReport("class-transfer-monotonicity", trials)
    done = 0
    while done < trials:
        n = int(rng.integers(3, 9))
        u = _sorted_utilities(rng, n)
        gaps = np.diff(u)
        positive = gaps[gaps > 0]
        if positive.size == 0:
            continue  # all equal: no valid transfer exists
        amount = 0.1 * float(positive.min())
        low = int(rng.integers(1, n))
        high = int(rng.integers(low + 1, n + 1))
        if not u[low - 1] < u[high - 1]:
            continue  # classes not strictly ordered: invalid spec, skip
        delta = float(rng.uniform(0.0, 1.5 * (u[-1] - u[0] + 1.0)))
        spec = TransferSpec(low_count=low, high_start=high, amount=amount)
        try:
            u2 = class_transfer(u, spec)
        except ValueError:
            continue  # amount would break sortedness for this pair
        done += 1
        top_k = min(k_max or n, n)
        for k in range(1, top_k + 1):
            before = stage_welfare(u, delta, k)
            after = stage_welfare(u2, delta, k)
            report.checks += 1
            if after < before - 1e-9:
                report.violations.append({
                    "u": u.tolist(), "transfer": (low, high, amount),
                    "delta": delta, "k": k, "before": before, "after": after,
                })
    return report


def _fidelity_cases(trials: int, seed: int, n_range=(2, 6)):
    """Shared generator for the fidelity and cut-safety campaigns."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        big_m = float(rng.uniform(25.0, 120.0))
        u = np.round(rng.uniform(0.0, big_m - 1.0, size=n), 3)
        span = float(u.max() - u.min())
        delta = float(np.round(rng.uniform(0.0, span if span > 0 else 1.0), 3))
        sizes = rng.integers(1, 5, size=n)
        yield n, u, delta, big_m, sizes


def _pin_all(model, u):
    for i, val in enumerate(u):
        model.pin(f"u_{i + 1}", float(val))
    return model


def _prefix_state(u, delta: float, big_m: float, k: int) -> SequentialState:
    order = np.argsort(u, kind="stable")
    fixed = [int(i) for i in order[: k - 1]]
    return SequentialState(
        k=k, fixed_idx=fixed, fixed_val=[float(u[i]) for i in fixed],
        remaining=[int(i) for i in order[k - 1 :]], delta=delta, big_m=big_m,
    )


def encoding_fidelity_report(trials: int = 200, seed: int = 20240202,
                             n_range=(2, 6), tol: float = 1e-6,
                             cfg: SolverConfig | None = None) -> CheckReport:
    """Pinning u and maximizing z must reproduce every welfare formula.

    Covers the unit and group stage-1 encodings and, for every stage k and
    the consistent sorted prefix, the unit and group stage-k encodings.
    """
    cfg = cfg or SolverConfig()
    report = CheckReport("encoding-fidelity", trials)

    def check(label, model, expected, case):
        sol = solve(model, cfg)
        report.checks += 1
        if sol.status != "Optimal" or abs(sol.objective - expected) > tol:
            report.violations.append({
                "what": label, "expected": expected,
                "got": sol.objective if sol.status == "Optimal" else sol.status,
                **case,
            })

    for n, u, delta, big_m, sizes in _fidelity_cases(trials, seed, n_range):
        params = TradeoffParams(delta=delta, big_m=big_m, tie_break="none")
        case = {"n": n, "u": u.tolist(), "delta": delta, "big_m": big_m,
                "sizes": sizes.tolist()}
        check("stage1-unit", _pin_all(stage_one_model(n, None, params), u),
              stage_welfare(u, delta, 1), case)
        check("stage1-group", _pin_all(stage_one_model(n, sizes, params), u),
              group_welfare(u, sizes, delta), case)
        for k in range(2, n + 1):
            state = _prefix_state(u, delta, big_m, k)
            rest = state.remaining
            fixed_val = state.fixed_val
            check(f"stagek-unit-k{k}",
                  _pin_all(stage_k_model(state, None, params), u),
                  residual_welfare(u[rest], fixed_val, delta), {**case, "k": k})
            check(f"stagek-group-k{k}",
                  _pin_all(stage_k_model(state, sizes, params), u),
                  group_residual_welfare(u[rest], sizes[rest], fixed_val, delta),
                  {**case, "k": k})
    return report


def cut_safety_report(trials: int = 200, seed: int = 20240202,
                      n_range=(2, 6), tol: float = 1e-6,
                      cfg: SolverConfig | None = None) -> CheckReport:
    """Tightening cuts must never move the MILP optimum nor loosen the LP.

    Runs over the same seeded case pool as the fidelity campaign.  Also
    substitutes the known-feasible pinned point into every generated cut
    (slack >= -1e-9).
    """
    cfg = cfg or SolverConfig()
    report = CheckReport("cut-safety", trials)
    for n, u, delta, big_m, sizes in _fidelity_cases(trials, seed, n_range):
        if n < 2:
            continue
        params = TradeoffParams(delta=delta, big_m=big_m, tie_break="none")
        case = {"n": n, "u": u.tolist(), "delta": delta, "big_m": big_m}
        for k in range(2, n + 1):
            state = _prefix_state(u, delta, big_m, k)
            rest = state.remaining
            plain = _pin_all(stage_k_model(state, sizes, params), u)
            cut = add_valid_cuts(plain, state, sizes, params)
            z_plain = solve(plain, cfg)
            z_cut = solve(cut, cfg)
            report.checks += 1
            if abs(z_plain.objective - z_cut.objective) > tol:
                report.violations.append({
                    "what": f"optimum-moved-k{k}", **case,
                    "plain": z_plain.objective, "cut": z_cut.objective,
                })
            lp_plain = solve_relaxation(plain, cfg)
            lp_cut = solve_relaxation(cut, cfg)
            report.checks += 1
            if lp_cut.objective > lp_plain.objective + 1e-9:
                report.violations.append({
                    "what": f"lp-loosened-k{k}", **case,
                    "lp_plain": lp_plain.objective, "lp_cut": lp_cut.objective,
                })
            # Direct substitution of the welfare-optimal pinned point.
            z_val = group_residual_welfare(u[rest], sizes[rest], state.fixed_val, delta)
            values = {f"u_{i + 1}": float(u[i]) for i in range(n)}
            values["z"] = z_val
            for row in cut.rows:
                if not row.name.startswith("cut"):
                    continue
                lhs = sum(
                    coef * values[cut.variables[idx].name]
                    for idx, coef in row.coeffs.items()
                    if cut.variables[idx].name in values
                )
                report.checks += 1
                if lhs > row.rhs + 1e-9:
                    report.violations.append({
                        "what": f"cut-violated-{row.name}-k{k}", **case,
                        "lhs": lhs, "rhs": row.rhs,
                    })
    return report


def oracle_equivalence_report(trials: int = 100, seed: int = 20240303,
                              cfg: SolverConfig | None = None) -> CheckReport:
    """MILP driver vs candidate-scanning oracle on random explicit sets.

    Integer utilities, matched hierarchical tie-break; instances whose
    outcome stays underdetermined even under the tie-break are resampled
    (the oracle flags them).  Sorted final vectors must match exactly.
    """
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(seed)
    report = CheckReport("oracle-equivalence", trials)
    done = resampled = 0
    while done < trials:
        m_c = int(rng.integers(2, 9))
        n = int(rng.integers(2, 7))
        cands = rng.integers(0, 13, size=(m_c, n)).astype(float)
        sizes = rng.integers(1, 4, size=n) if rng.random() < 0.5 else None
        delta = float(rng.integers(0, 15))
        exset = ExplicitSet(cands, sizes)
        oracle = enumerate_optimal(exset, delta, tie_break="hierarchical")
        if oracle.diagnostics["ambiguous"]:
            resampled += 1
            if resampled > 40 * trials:
                raise RuntimeError("instance generator starving on ambiguity")
            continue
        done += 1
        params = TradeoffParams(delta=delta, tie_break="hierarchical")
        outcome = run_sequence(explicit_instance(exset), params, cfg)
        report.checks += 1
        if not np.array_equal(np.sort(outcome.utilities), np.sort(oracle.utilities)):
            report.violations.append({
                "cands": cands.tolist(), "sizes": None if sizes is None else sizes.tolist(),
                "delta": delta, "milp": outcome.utilities.tolist(),
                "oracle": oracle.utilities.tolist(),
            })
    report.notes = f"{resampled} ambiguous instances resampled"
    return report


def relaxation_gap_report(n_range=(2, 5), trials: int = 20,
                          seed: int = 20240404,
                          cfg: SolverConfig | None = None) -> CheckReport:
    """LP-relaxation vs MILP optimum on random box instances; no pass/fail.

    The stage-1 encoding is a sharp formulation of the unconstrained
    problem, but box rows and pinned prefixes can open a gap, so this
    only reports magnitudes (with and without the stage-k cuts).
    """
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(seed)
    report = CheckReport("relaxation-gap", trials)
    for trial in range(trials):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        tops = np.round(rng.uniform(2.0, 15.0, size=n), 2)
        delta = float(np.round(rng.uniform(0.0, tops.max()), 2))
        rows = tuple(SymRow({f"u_{i + 1}": 1.0}, "<=", float(tops[i]), f"box_{i + 1}")
                     for i in range(n))
        spec = FeasibleSetSpec(n=n, rows=rows)
        from .sequence import AllocationInstance  # local to avoid cycle at import

        inst = AllocationInstance("explicit", spec, np.ones(n, dtype=int),
                                  0.0, float(tops.max()), label=f"box{trial}")
        params = TradeoffParams(delta=delta, tie_break="none")
        outcome = run_sequence(inst, params, cfg)
        big_m = outcome.diagnostics["big_m"]
        run_params = TradeoffParams(delta=delta, big_m=big_m, tie_break="none")

        from .model import attach

        model1 = attach(stage_one_model(n, None, run_params), spec)
        milp1 = solve(model1, cfg)
        lp1 = solve_relaxation(model1, cfg)
        report.rows.append({
            "trial": trial, "stage": 1, "n": n, "delta": delta,
            "milp": milp1.objective, "lp": lp1.objective,
            "lp_with_cuts": "", "gap": lp1.objective - milp1.objective,
        })
        fixed_idx = [rec.fixed_index for rec in outcome.iterations[:-1]]
        fixed_val = [rec.fixed_value for rec in outcome.iterations[:-1]]
        for k in range(2, len(outcome.iterations) + 1):
            state = SequentialState(
                k=k, fixed_idx=fixed_idx[: k - 1], fixed_val=fixed_val[: k - 1],
                remaining=[i for i in range(n) if i not in fixed_idx[: k - 1]],
                delta=delta, big_m=big_m,
            )
            base = attach(stage_k_model(state, None, run_params), spec)
            cut = add_valid_cuts(base, state, None, run_params)
            milp = solve(base, cfg)
            lp_plain = solve_relaxation(base, cfg)
            lp_cut = solve_relaxation(cut, cfg)
            report.rows.append({
                "trial": trial, "stage": k, "n": n, "delta": delta,
                "milp": milp.objective, "lp": lp_plain.objective,
                "lp_with_cuts": lp_cut.objective,
                "gap": lp_plain.objective - milp.objective,
            })
        report.checks += 1
    return report
