"""Exact evaluation of the social welfare functions and fairness metrics.

All functions here are pure and operate on plain 1-D array-likes of finite
utilities.  The family of welfare functions blends a utilitarian total with
priority for the worst-off: parties whose utility lies within ``delta`` of
the smallest are "in the fair region" and are weighted up, everyone else
counts once.  ``stage_welfare(u, delta, k)`` is the objective maximized at
stage ``k`` of the sequential procedure (see :mod:`leximax.sequence`);
``residual_welfare`` is the same objective with the already-fixed leading
terms removed.

Comparisons against ``delta`` are exact (no tolerance): inputs are user
data, not solver output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TransferSpec",
    "alpha_fairness",
    "class_transfer",
    "convex_combination",
    "fair_count",
    "gini",
    "group_residual_welfare",
    "group_welfare",
    "residual_welfare",
    "stage_welfare",
]


def _as_utilities(u) -> np.ndarray:
    v = np.asarray(u, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("utilities must be a non-empty 1-D array")
    if not np.all(np.isfinite(v)):
        raise ValueError("utilities must be finite")
    return v


def _as_sizes(sizes, n: int) -> np.ndarray:
    s = np.asarray(sizes)
    if s.ndim != 1 or s.size != n:
        raise ValueError(f"group sizes must be 1-D of length {n}")
    if not np.all(s == np.floor(s)) or np.any(s < 1):
        raise ValueError("group sizes must be positive integers")
    return s.astype(float)


def _check_delta(delta: float) -> float:
    if not np.isfinite(delta) or delta < 0:
        raise ValueError("delta must be finite and >= 0")
    return float(delta)


def fair_count(u, delta: float) -> int:
    """Number of utilities within ``delta`` of the smallest (t(u)).

    Returns the largest t with u<t> - u<1> <= delta, where u<i> is the i-th
    smallest utility.  Always between 1 and n.
    """
    v = _as_utilities(u)
    delta = _check_delta(delta)
    return int(np.count_nonzero(np.sort(v) - v.min() <= delta))


def stage_welfare(u, delta: float, k: int = 1) -> float:
    """Welfare maximized at stage ``k`` of the sequential procedure.

    For ``k=1`` this is the maximin-blended total

        (n-1)*delta + n*u<1> + sum_i (u_i - u<1> - delta)^+

    and for ``k >= 2`` the lexicographic refinement

        sum_{i<k} (n-i+1)*u<i> + (n-k+1)*min(u<1>+delta, u<k>)
        + sum_{i>=k} (u<i> - u<1> - delta)^+

    which gives the k-th smallest utility weight n-k+1 while utilities in
    the utilitarian region keep unit weight.
    """
    v = np.sort(_as_utilities(u))
    delta = _check_delta(delta)
    n = v.size
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    lo = v[0]
    hinges = np.maximum(v - lo - delta, 0.0)
    if k == 1:
        return float((n - 1) * delta + n * lo + hinges.sum())
    weights = np.arange(n, n - k + 1, -1, dtype=float)  # n, n-1, ..., n-k+2
    head = float(weights @ v[: k - 1])
    cap = min(lo + delta, v[k - 1])
    return float(head + (n - k + 1) * cap + hinges[k - 1 :].sum())


def residual_welfare(u_unfixed, fixed, delta: float) -> float:
    """Stage-k welfare with the fixed leading terms stripped off.

    ``fixed`` holds the k-1 utilities already determined (non-decreasing);
    ``u_unfixed`` holds the rest.  Satisfies the identity

        stage_welfare(full, delta, k) ==
            residual_welfare(unfixed, fixed, delta)
            + sum_j (n-j+1) * fixed[j-1]

    with n = len(fixed) + len(u_unfixed) and k = len(fixed) + 1.
    """
    rest = _as_utilities(u_unfixed)
    head = _as_utilities(fixed)
    delta = _check_delta(delta)
    if np.any(np.diff(head) < 0):
        raise ValueError("fixed utilities must be non-decreasing")
    if rest.min() < head[-1]:
        raise ValueError("every unfixed utility must be >= the last fixed one")
    n = head.size + rest.size
    k = head.size + 1
    anchor = head[0]
    cap = min(anchor + delta, rest.min())
    hinges = np.maximum(rest - anchor - delta, 0.0)
    return float((n - k + 1) * cap + hinges.sum())


def group_welfare(u, sizes, delta: float) -> float:
    """First-stage welfare for groups of the given sizes.

    With N = sum(sizes):  (N-1)*delta + N*u<1> + sum_i s_i*(u_i-u<1>-delta)^+.
    Reduces to ``stage_welfare(u, delta, 1)`` when every size is 1.
    """
    v = _as_utilities(u)
    s = _as_sizes(sizes, v.size)
    delta = _check_delta(delta)
    total = s.sum()
    lo = v.min()
    hinges = np.maximum(v - lo - delta, 0.0)
    return float((total - 1) * delta + total * lo + s @ hinges)


def group_residual_welfare(u_unfixed, sizes_unfixed, fixed, delta: float) -> float:
    """Group version of :func:`residual_welfare`.

    ``sizes_unfixed`` aligns with ``u_unfixed``.  The k-th-smallest weight
    becomes the total population of the unfixed groups.  The value does not
    depend on how ties for the smallest unfixed utility are resolved.
    """
    rest = _as_utilities(u_unfixed)
    s = _as_sizes(sizes_unfixed, rest.size)
    head = _as_utilities(fixed)
    delta = _check_delta(delta)
    if np.any(np.diff(head) < 0):
        raise ValueError("fixed utilities must be non-decreasing")
    if rest.min() < head[-1]:
        raise ValueError("every unfixed utility must be >= the last fixed one")
    anchor = head[0]
    cap = min(anchor + delta, rest.min())
    hinges = np.maximum(rest - anchor - delta, 0.0)
    return float(s.sum() * cap + s @ hinges)


def gini(u) -> float:
    """Gini coefficient: relative mean difference between all utility pairs.

    G(u) = sum_{i<j} |u_i - u_j| / (n * sum_i u_i).  Requires positive total
    utility.  Ranges from 0 (perfect equality) to (n-1)/n.
    """
    v = _as_utilities(u)
    total = v.sum()
    if total <= 0:
        raise ValueError("gini requires positive total utility")
    # sum_{i<j} |v_i - v_j| via the sorted identity sum_i (2i - n + 1) v<i>
    w = np.sort(v)
    n = v.size
    pairdiff = float((2.0 * np.arange(n) - n + 1) @ w)
    return pairdiff / (n * total)


def alpha_fairness(u, alpha: float) -> float:
    """Alpha-fairness welfare: sum u_i^(1-a)/(1-a), or sum log u_i at a=1.

    alpha=0 is the utilitarian total; alpha -> infinity approaches maximin.
    Utilities must be strictly positive when alpha >= 1.
    """
    v = _as_utilities(u)
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    if alpha >= 1 and np.any(v <= 0):
        raise ValueError("alpha >= 1 requires strictly positive utilities")
    if alpha == 1:
        return float(np.log(v).sum())
    return float((v ** (1.0 - alpha)).sum() / (1.0 - alpha))


def convex_combination(u, lam: float, kind: str = "maximin") -> float:
    """(1-lam)*total + lam*Phi(u) with Phi the maximin or 1 - Gini term."""
    v = _as_utilities(u)
    if not 0 <= lam <= 1:
        raise ValueError("lam must be in [0, 1]")
    if kind == "maximin":
        phi = float(v.min())
    elif kind == "one_minus_gini":
        phi = 1.0 - gini(v)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return float((1.0 - lam) * v.sum() + lam * phi)


@dataclass(frozen=True)
class TransferSpec:
    """An equal-share transfer from a top class to a bottom class.

    ``low_count`` is the size of the receiving bottom class (positions
    1..low_count of the sorted vector), ``high_start`` the 1-based position
    where the donating top class begins (positions high_start..n), and
    ``amount`` the total utility moved.
    """

    low_count: int
    high_start: int
    amount: float

    def validate(self, n: int) -> None:
        if not 1 <= self.low_count < self.high_start <= n:
            raise ValueError(
                f"need 1 <= low_count < high_start <= {n}, got "
                f"({self.low_count}, {self.high_start})"
            )
        if not self.amount > 0:
            raise ValueError("amount must be > 0")


def class_transfer(u_sorted, spec: TransferSpec) -> np.ndarray:
    """Apply an equal-share class-to-class transfer to a sorted vector.

    Each of the bottom ``low_count`` parties gains amount/low_count and each
    of the top n-high_start+1 parties loses amount/(n-high_start+1), so the
    total is preserved.  Rejects unsorted input, a non-poorer bottom class,
    and any amount large enough to break the sort order of the result.
    """
    v = _as_utilities(u_sorted)
    n = v.size
    spec.validate(n)
    if np.any(np.diff(v) < 0):
        raise ValueError("input must be sorted non-decreasing")
    lo, hi = spec.low_count, spec.high_start
    if not v[lo - 1] < v[hi - 1]:
        raise ValueError("bottom class must be strictly poorer than top class")
    out = v.copy()
    out[:lo] += spec.amount / lo
    out[hi - 1 :] -= spec.amount / (n - hi + 1)
    if np.any(np.diff(out) < 0):
        raise ValueError("amount too large: transfer breaks sortedness")
    return out
