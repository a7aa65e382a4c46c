"""Instance ingestion for the two bundled applications.

Healthcare: per patient group, a binary all-or-nothing treatment decision,
utility = baseline QALYs plus the treatment gain if funded, one budget row.
CSV schema (header required)::

    group,s,c,q,alpha
    pacemaker_1,52,3000,5.1,2.0
    ...

with an optional comment line ``# B = <budget>`` (overridable by callers).

Shelter: capacitated location/assignment read from the OR-Library
capacitated warehouse format (token stream, whitespace and line breaks are
interchangeable)::

    m n
    capacity_1 opening_cost_1     (m lines)
    demand_i                       (per customer i)
    C_i1 ... C_im                  (allocation costs, any line wrapping)

Per-person travel distance is D_ij = C_ij / s_i; utility is negative
distance, shifted so the models see u >= 0.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass

import numpy as np

from .model import ExtraVar, FeasibleSetSpec, SymRow
from .sequence import AllocationInstance

__all__ = [
    "HealthcareInstance",
    "ShelterInstance",
    "build_healthcare_model",
    "build_shelter_model",
    "healthcare_to_csv",
    "parse_healthcare_csv",
    "parse_orlib_cap",
    "shelter_to_orlib",
]


@dataclass(frozen=True)
class HealthcareInstance:
    names: list[str]
    sizes: np.ndarray  # patients per group
    cost: np.ndarray  # treatment cost per patient
    gain: np.ndarray  # QALY gain with treatment (q)
    baseline: np.ndarray  # QALYs without treatment (alpha)
    budget: float | None = None

    def __post_init__(self):
        n = len(self.names)
        for field_name in ("sizes", "cost", "gain", "baseline"):
            arr = np.asarray(getattr(self, field_name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{field_name} must have length {n}")
            object.__setattr__(self, field_name, arr)
        if np.any(self.sizes < 1) or np.any(self.sizes != np.floor(self.sizes)):
            raise ValueError("group sizes must be positive integers")
        if np.any(self.cost < 0):
            raise ValueError("costs must be >= 0")
        if np.any(self.baseline < 0):
            raise ValueError("baseline QALYs must be >= 0")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be >= 0")

    @property
    def n(self) -> int:
        return len(self.names)


_BUDGET_RE = re.compile(r"#\s*B\s*[=:]\s*([-+0-9.eE]+)")


def parse_healthcare_csv(text: str) -> HealthcareInstance:
    """Parse the documented healthcare CSV; row/column errors carry names."""
    budget = None
    rows = []
    reader = io.StringIO(text)
    header = None
    for lineno, raw in enumerate(reader, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = _BUDGET_RE.match(line)
            if match:
                budget = float(match.group(1))
            continue
        cells = [cell.strip() for cell in line.split(",")]
        if header is None:
            header = cells
            if header != ["group", "s", "c", "q", "alpha"]:
                raise ValueError(
                    f"line {lineno}: expected header 'group,s,c,q,alpha', got {line!r}"
                )
            continue
        if len(cells) != 5:
            raise ValueError(f"line {lineno}: expected 5 columns, got {len(cells)}")
        rows.append((lineno, cells))
    if header is None:
        raise ValueError("empty file: missing header")
    if not rows:
        raise ValueError("no group rows found")

    names, sizes, cost, gain, baseline = [], [], [], [], []
    seen = set()
    for lineno, (name, s, c, q, alpha) in rows:
        if name in seen:
            raise ValueError(f"line {lineno}: duplicate group name {name!r}")
        seen.add(name)
        values = {}
        for col, raw_val in (("s", s), ("c", c), ("q", q), ("alpha", alpha)):
            try:
                values[col] = float(raw_val)
            except ValueError as exc:
                raise ValueError(
                    f"line {lineno}: column {col!r} of group {name!r}: "
                    f"bad number {raw_val!r}"
                ) from exc
        for col in ("s", "c", "alpha"):
            if values[col] < 0:
                raise ValueError(
                    f"line {lineno}: column {col!r} of group {name!r} is negative"
                )
        names.append(name)
        sizes.append(values["s"])
        cost.append(values["c"])
        gain.append(values["q"])
        baseline.append(values["alpha"])
    return HealthcareInstance(names, np.array(sizes), np.array(cost),
                              np.array(gain), np.array(baseline), budget)


def healthcare_to_csv(inst: HealthcareInstance) -> str:
    out = []
    if inst.budget is not None:
        out.append(f"# B = {inst.budget!r}")
    out.append("group,s,c,q,alpha")
    for i, name in enumerate(inst.names):
        out.append(
            f"{name},{inst.sizes[i]!r},{inst.cost[i]!r},"
            f"{inst.gain[i]!r},{inst.baseline[i]!r}"
        )
    return "\n".join(out) + "\n"


def build_healthcare_model(inst: HealthcareInstance,
                           budget: float | None = None) -> AllocationInstance:
    """Feasible set: u_i = alpha_i + q_i*y_i, sum s_i c_i y_i <= B, y binary."""
    b = inst.budget if budget is None else float(budget)
    if b is None:
        raise ValueError("no budget: pass one or put '# B = ...' in the CSV")
    n = inst.n
    extra = tuple(ExtraVar(f"y_{i + 1}", 0.0, 1.0, "binary") for i in range(n))
    rows = []
    for i in range(n):
        rows.append(SymRow({f"u_{i + 1}": 1.0, f"y_{i + 1}": -float(inst.gain[i])},
                           "==", float(inst.baseline[i]), f"def_u_{i + 1}"))
    rows.append(SymRow(
        {f"y_{i + 1}": float(inst.sizes[i] * inst.cost[i]) for i in range(n)},
        "<=", b, "budget"))
    spec = FeasibleSetSpec(n=n, extra_vars=extra, rows=tuple(rows))
    u_lo = float(inst.baseline.min())
    u_hi = float(np.max(inst.baseline + np.maximum(inst.gain, 0.0)))
    return AllocationInstance("healthcare", spec, inst.sizes.astype(int),
                              u_lo, u_hi, offset=0.0, label="healthcare")


@dataclass(frozen=True)
class ShelterInstance:
    capacity: np.ndarray  # per location (m,)
    open_cost: np.ndarray  # per location (m,)
    population: np.ndarray  # per area (n,)
    distance: np.ndarray  # (n, m): per-person travel distance area -> location

    def __post_init__(self):
        cap = np.asarray(self.capacity, dtype=float)
        cost = np.asarray(self.open_cost, dtype=float)
        pop = np.asarray(self.population, dtype=float)
        dist = np.asarray(self.distance, dtype=float)
        m, n = cap.size, pop.size
        if cost.shape != (m,) or dist.shape != (n, m):
            raise ValueError("inconsistent shelter instance dimensions")
        if np.any(cap < 0) or np.any(cost < 0) or np.any(pop < 0):
            raise ValueError("capacities, costs and populations must be >= 0")
        if not np.all(np.isfinite(dist)) or np.any(dist < 0):
            raise ValueError("distances must be finite and >= 0")
        object.__setattr__(self, "capacity", cap)
        object.__setattr__(self, "open_cost", cost)
        object.__setattr__(self, "population", pop)
        object.__setattr__(self, "distance", dist)

    @property
    def m(self) -> int:
        return self.capacity.size

    @property
    def n(self) -> int:
        return self.population.size


def parse_orlib_cap(text: str) -> ShelterInstance:
    """Parse an OR-Library capacitated warehouse file into a shelter instance.

    Customers become residential areas (population = demand) and warehouses
    become candidate shelter locations; the per-person distance is the
    allocation cost divided by the demand.
    """
    tokens = text.split()
    pos = 0

    def take(what: str) -> float:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError(f"truncated file: expected {what}")
        tok = tokens[pos]
        pos += 1
        try:
            return float(tok)
        except ValueError as exc:
            raise ValueError(f"bad token {tok!r} while reading {what}") from exc

    m = int(take("location count"))
    n = int(take("area count"))
    if m < 1 or n < 1:
        raise ValueError("need at least one location and one area")
    capacity = np.empty(m)
    open_cost = np.empty(m)
    for j in range(m):
        capacity[j] = take(f"capacity of location {j + 1}")
        open_cost[j] = take(f"opening cost of location {j + 1}")
    population = np.empty(n)
    distance = np.empty((n, m))
    for i in range(n):
        population[i] = take(f"population of area {i + 1}")
        if population[i] <= 0:
            raise ValueError(f"area {i + 1} has non-positive population")
        for j in range(m):
            cost = take(f"allocation cost of area {i + 1}, location {j + 1}")
            distance[i, j] = cost / population[i]
    if pos != len(tokens):
        raise ValueError(f"token count mismatch: {len(tokens) - pos} unread tokens")
    return ShelterInstance(capacity, open_cost, population, distance)


def shelter_to_orlib(inst: ShelterInstance) -> str:
    out = [f"{inst.m} {inst.n}"]
    for j in range(inst.m):
        out.append(f"{inst.capacity[j]!r} {inst.open_cost[j]!r}")
    for i in range(inst.n):
        out.append(f"{inst.population[i]!r}")
        out.append(" ".join(repr(float(c)) for c in inst.distance[i] * inst.population[i]))
    return "\n".join(out) + "\n"


def build_shelter_model(inst: ShelterInstance, budget: float) -> AllocationInstance:
    """Feasible set: assign each area one open shelter within capacity/budget.

    Utility is negative travel distance; the model works in units shifted
    by max(D) so u >= 0, and the offset is recorded for reporting.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    m, n = inst.m, inst.n
    offset = float(inst.distance.max())

    def x_name(i: int, j: int) -> str:
        return f"x_{i + 1}_{j + 1}"

    extra = [ExtraVar(f"y_{j + 1}", 0.0, 1.0, "binary") for j in range(m)]
    extra += [ExtraVar(x_name(i, j), 0.0, 1.0, "binary")
              for i in range(n) for j in range(m)]
    rows = []
    for i in range(n):
        rows.append(SymRow({x_name(i, j): 1.0 for j in range(m)}, "==", 1.0,
                           f"assign_{i + 1}"))
    for j in range(m):
        coeffs = {x_name(i, j): float(inst.population[i]) for i in range(n)}
        coeffs[f"y_{j + 1}"] = -float(inst.capacity[j])
        rows.append(SymRow(coeffs, "<=", 0.0, f"cap_{j + 1}"))
    rows.append(SymRow({f"y_{j + 1}": float(inst.open_cost[j]) for j in range(m)},
                       "<=", float(budget), "budget"))
    for i in range(n):
        coeffs = {f"u_{i + 1}": 1.0}
        for j in range(m):
            if inst.distance[i, j] != 0.0:
                coeffs[x_name(i, j)] = float(inst.distance[i, j])
        rows.append(SymRow(coeffs, "==", offset, f"def_u_{i + 1}"))
    spec = FeasibleSetSpec(n=n, extra_vars=tuple(extra), rows=tuple(rows))
    return AllocationInstance(
        "shelter", spec, inst.population.astype(int),
        u_lo=0.0, u_hi=offset - float(inst.distance.min()),
        offset=offset, label=f"shelter[{m} locations, {n} areas]",
    )
