"""Bounded-variable primal simplex with a two-phase start.

This is the LP core under the branch-and-bound driver in
:mod:`leximax.solver`.  It maximizes ``c @ x`` subject to ``A x (sense) b``
and ``lo <= x <= hi`` with possibly infinite bounds.  Rows are turned into
equalities with one slack per row (its bounds encode the sense), phase 1
drives artificial variables to zero, and phase 2 optimizes the real
objective from the feasible basis.

Pivoting uses the largest-reduced-cost rule; a run of degenerate steps
switches to Bland's rule (smallest index in and out) until the objective
moves again, which guarantees termination on cycling-prone bases.  The
basis inverse is held explicitly and refactorized periodically to keep
drift in check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LpResult", "SimplexFailure", "solve_lp"]

_AT_LO, _AT_UP, _FREE, _BASIC = 0, 1, 2, 3

_PIV_TOL = 1e-9  # smallest usable pivot magnitude
_DJ_TOL = 1e-9  # reduced-cost optimality tolerance
_DEGEN_EPS = 1e-12  # step sizes below this count as degenerate
_REFACTOR_EVERY = 128


class SimplexFailure(RuntimeError):
    """Raised when the simplex cannot certify a result (never a wrong one)."""


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    iterations: int


def solve_lp(a, senses, b, c, lo, hi, max_iter: int | None = None) -> LpResult:
    """Maximize ``c @ x`` s.t. ``a x (senses) b``, ``lo <= x <= hi``.

    ``senses`` is a sequence of "<=", ">=" or "==" per row.  Returns the
    structural part of the solution only.  Raises :class:`SimplexFailure`
    on iteration blow-up or a singular basis, rather than guessing.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("constraint matrix must be 2-D")
    m, n = a.shape
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if b.shape != (m,) or c.shape != (n,) or lo.shape != (n,) or hi.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    if np.any(lo > hi + 1e-12):
        return LpResult("infeasible", None, -np.inf, 0)

    # Slack bounds encode the row sense: a@x + s = b.
    slack_lo = np.empty(m)
    slack_hi = np.empty(m)
    for i, sense in enumerate(senses):
        if sense == "<=":
            slack_lo[i], slack_hi[i] = 0.0, np.inf
        elif sense == ">=":
            slack_lo[i], slack_hi[i] = -np.inf, 0.0
        elif sense == "==":
            slack_lo[i], slack_hi[i] = 0.0, 0.0
        else:
            raise ValueError(f"unknown sense {sense!r}")

    n_all = n + m  # structural + slack
    lob = np.concatenate([lo, slack_lo])
    hib = np.concatenate([hi, slack_hi])

    # Start every non-basic at a finite bound (free variables at zero).
    x = np.zeros(n_all + m)
    stat = np.full(n_all + m, _AT_LO, dtype=np.int8)
    for j in range(n_all):
        if np.isfinite(lob[j]):
            x[j], stat[j] = lob[j], _AT_LO
        elif np.isfinite(hib[j]):
            x[j], stat[j] = hib[j], _AT_UP
        else:
            x[j], stat[j] = 0.0, _FREE

    resid = b - a @ x[:n] - x[n:n_all]
    signs = np.where(resid >= 0, 1.0, -1.0)
    w = np.concatenate([a, np.eye(m), np.diag(signs)], axis=1)
    lob = np.concatenate([lob, np.zeros(m)])
    hib = np.concatenate([hib, np.full(m, np.inf)])

    basis = np.arange(n_all, n_all + m)
    stat[basis] = _BASIC
    x[basis] = np.abs(resid)
    binv = np.diag(signs)  # diag(+-1) is its own inverse

    if max_iter is None:
        max_iter = 200 * (m + n_all) + 2000

    state = _State(w, b, lob, hib, basis, stat, x, binv)

    # Phase 1: drive the artificials to zero.
    c1 = np.zeros(n_all + m)
    c1[n_all:] = -1.0
    status, iters1 = _iterate(state, c1, max_iter, allow_unbounded=False)
    if status != "optimal":  # pragma: no cover - phase 1 cannot be unbounded
        raise SimplexFailure("phase 1 terminated abnormally")
    infeas = x[n_all:].sum()
    if infeas > 1e-7 * max(1.0, np.abs(b).max() if m else 1.0):
        return LpResult("infeasible", None, -np.inf, iters1)
    # Freeze artificials at zero for phase 2.
    state.lo[n_all:] = 0.0
    state.hi[n_all:] = 0.0
    state.x[n_all:] = np.where(state.stat[n_all:] == _BASIC, state.x[n_all:], 0.0)

    c2 = np.concatenate([c, np.zeros(2 * m)])
    status, iters2 = _iterate(state, c2, max_iter, allow_unbounded=True)
    if status == "unbounded":
        return LpResult("unbounded", None, np.inf, iters1 + iters2)
    xs = state.x[:n].copy()
    # Snap solution values onto their bounds where roundoff pushed them out.
    np.clip(xs, lo, hi, out=xs)
    return LpResult("optimal", xs, float(c @ xs), iters1 + iters2)


@dataclass
class _State:
    w: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    basis: np.ndarray
    stat: np.ndarray
    x: np.ndarray
    binv: np.ndarray


def _refactor(s: _State) -> None:
    try:
        s.binv = np.linalg.inv(s.w[:, s.basis])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise SimplexFailure("singular basis during refactorization") from exc
    nonbasic = s.stat != _BASIC
    rhs = s.b - s.w[:, nonbasic] @ s.x[nonbasic]
    s.x[s.basis] = s.binv @ rhs


def _iterate(s: _State, c: np.ndarray, max_iter: int, allow_unbounded: bool):
    m = s.b.size
    iters = 0
    degen_run = 0
    bland = False
    since_refactor = 0

    while True:
        if iters >= max_iter:
            raise SimplexFailure(f"simplex iteration limit {max_iter} exceeded")
        y = c[s.basis] @ s.binv
        d = c - y @ s.w
        can_up = (s.stat == _AT_LO) & (d > _DJ_TOL)
        can_dn = (s.stat == _AT_UP) & (d < -_DJ_TOL)
        free_mv = (s.stat == _FREE) & (np.abs(d) > _DJ_TOL)
        eligible = np.flatnonzero(can_up | can_dn | free_mv)
        if eligible.size == 0:
            return "optimal", iters

        if bland:
            q = int(eligible[0])
        else:
            q = int(eligible[np.argmax(np.abs(d[eligible]))])
        direction = 1.0 if (s.stat[q] == _AT_LO or (s.stat[q] == _FREE and d[q] > 0)) else -1.0

        col = s.binv @ s.w[:, q]
        rate = -direction * col  # change of basic values per unit step

        # Ratio test: basics hitting a bound, or the entering variable
        # flipping to its opposite bound.
        t_best = np.inf
        leave = -1
        with np.errstate(divide="ignore", invalid="ignore"):
            for i in range(m):
                r = rate[i]
                if abs(r) <= _PIV_TOL:
                    continue
                bi = s.basis[i]
                if r < 0:
                    if not np.isfinite(s.lo[bi]):
                        continue
                    t = (s.lo[bi] - s.x[bi]) / r
                else:
                    if not np.isfinite(s.hi[bi]):
                        continue
                    t = (s.hi[bi] - s.x[bi]) / r
                if t < -1e-9:
                    t = 0.0
                t = max(t, 0.0)
                better = t < t_best - 1e-12
                tied = abs(t - t_best) <= 1e-12
                if better or (
                    tied
                    and leave >= 0
                    and (
                        (bland and s.basis[i] < s.basis[leave])
                        or (not bland and abs(rate[i]) > abs(rate[leave]))
                    )
                ):
                    t_best, leave = t, i

        t_flip = np.inf
        if np.isfinite(s.lo[q]) and np.isfinite(s.hi[q]):
            t_flip = s.hi[q] - s.lo[q]

        if not np.isfinite(t_best) and not np.isfinite(t_flip):
            if allow_unbounded:
                return "unbounded", iters
            raise SimplexFailure("unexpected unbounded phase-1 subproblem")

        iters += 1
        if t_flip < t_best - 1e-12:
            s.x[q] += direction * t_flip
            s.stat[q] = _AT_UP if s.stat[q] == _AT_LO else _AT_LO
            s.x[s.basis] += t_flip * rate
            step = t_flip
        else:
            step = t_best
            s.x[s.basis] += step * rate
            s.x[q] += direction * step
            out = s.basis[leave]
            # Snap the leaving variable exactly onto the bound it hit.
            hit_lo = rate[leave] < 0
            s.x[out] = s.lo[out] if hit_lo else s.hi[out]
            s.stat[out] = _AT_LO if hit_lo else _AT_UP
            s.basis[leave] = q
            s.stat[q] = _BASIC
            piv = col[leave]
            if abs(piv) <= _PIV_TOL:  # pragma: no cover - screened by ratio test
                raise SimplexFailure("numerically zero pivot")
            s.binv[leave, :] /= piv
            other = np.flatnonzero(np.abs(col) > 0)
            for i in other:
                if i != leave:
                    s.binv[i, :] -= col[i] * s.binv[leave, :]
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                _refactor(s)
                since_refactor = 0

        if step <= _DEGEN_EPS:
            degen_run += 1
            if degen_run > 2 * (m + 10):
                bland = True
        else:
            degen_run = 0
            bland = False
