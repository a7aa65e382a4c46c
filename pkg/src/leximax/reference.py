"""Brute-force references for finite feasible sets.

:func:`enumerate_optimal` replays the sequential procedure by scoring the
candidate vectors directly with the welfare formulas -- it never touches
the MILP path, which makes it an independent cross-check for the driver.
:func:`leximax_best` is the pure lexicographic-maximin reference.
:func:`explicit_instance` is the one place an explicit set is turned into
a MILP feasible set (one selection binary per candidate), kept here so the
oracle and solver routes stay separate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ExtraVar, FeasibleSetSpec, SymRow
from .sequence import AllocationInstance, IterationRecord, SocialOutcome
from .welfare import group_residual_welfare, group_welfare

__all__ = ["ExplicitSet", "enumerate_optimal", "explicit_instance", "leximax_best"]

_TIE_TOL = 1e-9


@dataclass(frozen=True)
class ExplicitSet:
    """A finite feasible set: one row per candidate utility vector."""

    candidates: np.ndarray  # (m, n)
    sizes: np.ndarray | None = None

    def __post_init__(self):
        cands = np.asarray(self.candidates, dtype=float)
        if cands.ndim != 2 or cands.shape[0] < 1 or cands.shape[1] < 1:
            raise ValueError("candidates must be a non-empty (m, n) array")
        if not np.all(np.isfinite(cands)):
            raise ValueError("candidate utilities must be finite")
        object.__setattr__(self, "candidates", cands)
        if self.sizes is not None:
            s = np.asarray(self.sizes)
            if s.shape != (cands.shape[1],) or np.any(s < 1):
                raise ValueError("sizes must be positive, one per party")
            object.__setattr__(self, "sizes", s)

    @property
    def n(self) -> int:
        return self.candidates.shape[1]

    def size_vector(self) -> np.ndarray:
        return np.ones(self.n) if self.sizes is None else np.asarray(self.sizes, dtype=float)


def leximax_best(exset: ExplicitSet) -> np.ndarray:
    """Candidate whose sorted utilities are lexicographically maximal."""
    best = None
    best_key = None
    for cand in exset.candidates:
        key = tuple(np.sort(cand))
        if best_key is None or key > best_key:
            best, best_key = cand, key
    return np.array(best)


def explicit_instance(exset: ExplicitSet) -> AllocationInstance:
    """MILP feasible set for an explicit candidate list.

    One selection binary per candidate with sum = 1 and u_i equal to the
    selected candidate's i-th entry.  Negative utilities are shifted up so
    the stage models' u >= 0 requirement holds; the offset is recorded and
    all reporting stays in original units.
    """
    cands = exset.candidates
    m, n = cands.shape
    offset = float(max(0.0, -cands.min()))
    shifted = cands + offset
    extra = tuple(ExtraVar(f"pick_{c + 1}", 0.0, 1.0, "binary") for c in range(m))
    rows = [SymRow({f"pick_{c + 1}": 1.0 for c in range(m)}, "==", 1.0, "choose_one")]
    for i in range(n):
        coeffs = {f"u_{i + 1}": 1.0}
        for c in range(m):
            if shifted[c, i] != 0.0:
                coeffs[f"pick_{c + 1}"] = -float(shifted[c, i])
        rows.append(SymRow(coeffs, "==", 0.0, f"def_u_{i + 1}"))
    spec = FeasibleSetSpec(n=n, extra_vars=extra, rows=tuple(rows))
    return AllocationInstance(
        kind="explicit",
        feasible_set=spec,
        sizes=exset.size_vector(),
        u_lo=float(shifted.min()),
        u_hi=float(shifted.max()),
        offset=offset,
        label=f"explicit[{m}x{n}]",
    )


def _pick(scores: np.ndarray, totals: np.ndarray, tie_break: str, epsilon: float):
    """Index of the winning candidate plus whether co-optima remain."""
    if tie_break == "epsilon":
        key = scores + epsilon * totals
        best = key.max()
        tied = np.flatnonzero(key >= best - _TIE_TOL)
        return int(tied[0]), tied
    best = scores.max()
    tied = np.flatnonzero(scores >= best - _TIE_TOL)
    if tie_break == "hierarchical" and tied.size > 1:
        sub = totals[tied]
        tied = tied[sub >= sub.max() - _TIE_TOL]
    return int(tied[0]), tied


def enumerate_optimal(exset: ExplicitSet, delta: float,
                      tie_break: str = "hierarchical",
                      epsilon: float = 1e-4) -> SocialOutcome:
    """Sequential procedure by direct candidate scanning (no MILP).

    At stage k the surviving candidates are those matching the fixed
    prefix whose unfixed utilities stay above the last fixed value; each is
    scored by the residual welfare, the tie-break picks one, and its
    smallest unfixed coordinate is fixed next.  Identical stopping rule and
    assembly as the MILP driver.

    ``diagnostics["ambiguous"]`` is set when distinct candidates survive
    the tie-break with different sorted completions -- the outcome is then
    underdetermined and exact comparisons against another implementation
    are meaningless.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if tie_break not in ("none", "hierarchical", "epsilon"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    cands = exset.candidates
    m, n = cands.shape
    s = exset.size_vector()
    totals = cands @ s

    iterations: list[IterationRecord] = []
    ambiguous = False

    def note_ambiguity(tied: np.ndarray, rest: list[int]):
        nonlocal ambiguous
        if tied.size <= 1:
            return
        sorted_rests = {tuple(np.sort(cands[c][rest])) for c in tied}
        if len(sorted_rests) > 1:
            ambiguous = True

    scores = np.array([group_welfare(cands[c], s, delta) for c in range(m)])
    winner, tied = _pick(scores, totals, tie_break, epsilon)
    note_ambiguity(tied, list(range(n)))
    u = cands[winner]
    i1 = int(np.argmin(u))
    anchor = float(u[i1])
    iterations.append(IterationRecord(1, i1, anchor, float(scores[winner]), 0.0, u.copy()))

    fixed_idx, fixed_val = [i1], [anchor]
    remaining = [i for i in range(n) if i != i1]
    final_src = u
    stopped = False

    for k in range(2, n + 1):
        pool = []
        for c in range(m):
            cand = cands[c]
            if all(abs(cand[j] - v) <= _TIE_TOL for j, v in zip(fixed_idx, fixed_val)) \
                    and all(cand[i] >= fixed_val[-1] - _TIE_TOL for i in remaining):
                pool.append(c)
        if not pool:
            raise RuntimeError(
                f"stage {k}: no candidate matches the fixed prefix "
                "(inconsistent state; cannot occur from valid runs)"
            )
        pool = np.array(pool)
        scores = np.array([
            group_residual_welfare(cands[c][remaining], s[remaining], fixed_val, delta)
            for c in pool
        ])
        which, tied_local = _pick(scores, totals[pool], tie_break, epsilon)
        note_ambiguity(pool[tied_local], remaining)
        winner = int(pool[which])
        u = cands[winner]
        final_src = u
        rest_vals = u[remaining]
        pos = int(np.argmin(rest_vals))
        ik = remaining[pos]
        val = float(u[ik])
        iterations.append(IterationRecord(k, ik, val, float(scores[which]), 0.0, u.copy()))
        if val > anchor + delta:
            stopped = True
            break
        fixed_idx.append(ik)
        fixed_val.append(val)
        remaining.remove(ik)

    K = len(fixed_idx)
    final = np.empty(n)
    final[fixed_idx] = fixed_val
    for i in remaining:
        final[i] = final_src[i]

    total = float(s @ final)
    return SocialOutcome(
        utilities=final,
        K=K,
        iterations=iterations,
        fair_mask=final <= anchor + delta,
        total=total,
        average=total / float(s.sum()),
        diagnostics={"delta": float(delta), "ambiguous": ambiguous,
                     "stages": len(iterations), "stopped": stopped},
    )
