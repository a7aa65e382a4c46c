"""Generic mixed-integer linear model container.

A :class:`LinearModel` is a plain list of bounded variables (continuous or
binary), sparse constraint rows, and a sparse objective.  Builders in
:mod:`leximax.encodings` construct these; :mod:`leximax.solver` solves them
and :mod:`leximax.mps` serializes them.  A model is treated as immutable
once a builder hands it out: operations that extend a model (cuts,
tie-breaking, instance constraints) work on :meth:`LinearModel.copy`.

``roles`` maps semantic roles ("utility", "welfare", "floor", ...) to
variable names so downstream code never has to guess an index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ExtraVar", "FeasibleSetSpec", "LinearModel", "Row", "SymRow", "Variable", "attach"]

SENSES = ("<=", ">=", "==")


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    kind: str = "continuous"  # "continuous" | "binary"


@dataclass(frozen=True)
class Row:
    coeffs: dict[int, float]
    sense: str
    rhs: float
    name: str


class LinearModel:
    """Sparse MILP in max form: max c@x s.t. rows, bounds, binaries."""

    def __init__(self, name: str = "model", maximize: bool = True):
        self.name = name
        self.maximize = maximize
        self.variables: list[Variable] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self.roles: dict[str, object] = {}
        self._by_name: dict[str, int] = {}
        self._arrays: tuple | None = None

    # -- construction -----------------------------------------------------

    def add_var(self, name: str, lb: float = 0.0, ub: float = math.inf,
                kind: str = "continuous") -> int:
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind not in ("continuous", "binary"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == "binary" and not (0.0 <= lb and ub <= 1.0):
            raise ValueError("binary variables must have bounds within [0, 1]")
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ValueError(f"bad bounds [{lb}, {ub}] for {name!r}")
        idx = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), kind))
        self._by_name[name] = idx
        self._arrays = None
        return idx

    def index_of(self, name: str) -> int:
        return self._by_name[name]

    def _resolve(self, coeffs) -> dict[int, float]:
        out: dict[int, float] = {}
        for key, val in coeffs.items():
            idx = self._by_name[key] if isinstance(key, str) else int(key)
            if not 0 <= idx < len(self.variables):
                raise ValueError(f"row references undeclared variable {key!r}")
            val = float(val)
            if not math.isfinite(val):
                raise ValueError(f"non-finite coefficient for {key!r}")
            if val != 0.0:
                out[idx] = out.get(idx, 0.0) + val
        return out

    def add_row(self, coeffs, sense: str, rhs: float, name: str = "") -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        if not math.isfinite(rhs):
            raise ValueError("row rhs must be finite")
        if not name:
            name = f"c{len(self.rows) + 1}"
        self.rows.append(Row(self._resolve(coeffs), sense, float(rhs), name))
        self._arrays = None
        return len(self.rows) - 1

    def pin(self, var, value: float, name: str = "") -> int:
        """Fix a variable with an equality row (keeps one uniform builder)."""
        idx = self._by_name[var] if isinstance(var, str) else int(var)
        label = name or f"pin_{self.variables[idx].name}"
        return self.add_row({idx: 1.0}, "==", float(value), name=label)

    def set_objective(self, coeffs, maximize: bool = True) -> None:
        self.objective = self._resolve(coeffs)
        self.maximize = maximize
        self._arrays = None

    # -- views ------------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def binary_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == "binary"]

    def copy(self) -> "LinearModel":
        dup = LinearModel(self.name, self.maximize)
        dup.variables = list(self.variables)
        dup.rows = list(self.rows)
        dup.objective = dict(self.objective)
        dup.roles = {k: (list(v) if isinstance(v, list) else v) for k, v in self.roles.items()}
        dup._by_name = dict(self._by_name)
        return dup

    def objective_value(self, values: dict[str, float]) -> float:
        return sum(c * values[self.variables[i].name] for i, c in self.objective.items())

    def to_arrays(self):
        """Dense (a, senses, b, c, lo, hi) view used by the solver."""
        if self._arrays is None:
            m, n = len(self.rows), len(self.variables)
            a = np.zeros((m, n))
            b = np.empty(m)
            senses = []
            for i, row in enumerate(self.rows):
                for j, coef in row.coeffs.items():
                    a[i, j] = coef
                b[i] = row.rhs
                senses.append(row.sense)
            c = np.zeros(n)
            for j, coef in self.objective.items():
                c[j] = coef
            lo = np.array([v.lb for v in self.variables])
            hi = np.array([v.ub for v in self.variables])
            self._arrays = (a, senses, b, c, lo, hi)
        return self._arrays

    def __repr__(self) -> str:
        nb = len(self.binary_indices)
        return (f"LinearModel({self.name!r}, {self.n_vars} vars "
                f"[{nb} binary], {len(self.rows)} rows)")


@dataclass(frozen=True)
class ExtraVar:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    kind: str = "continuous"


@dataclass(frozen=True)
class SymRow:
    """Constraint written against variable names, resolved on attach."""

    coeffs: dict[str, float]
    sense: str
    rhs: float
    name: str = ""


@dataclass(frozen=True)
class FeasibleSetSpec:
    """Resource constraints and utility-defining rows for one instance.

    Rows reference utility variables by their model names (``u_1``..``u_n``)
    plus any ``extra_vars`` declared here, so the same spec attaches to
    every stage model of a run.  Every utility variable must appear in at
    least one defining row.
    """

    n: int
    extra_vars: tuple[ExtraVar, ...] = ()
    rows: tuple[SymRow, ...] = ()

    def validate(self) -> None:
        defined = set()
        for row in self.rows:
            for key in row.coeffs:
                if key.startswith("u_"):
                    defined.add(key)
        missing = {f"u_{i + 1}" for i in range(self.n)} - defined
        if missing:
            raise ValueError(f"utility variables never constrained: {sorted(missing)}")


def attach(model: LinearModel, spec: FeasibleSetSpec) -> LinearModel:
    """Return a copy of ``model`` with the instance constraints appended."""
    out = model.copy()
    for var in spec.extra_vars:
        out.add_var(var.name, var.lb, var.ub, var.kind)
    for row in spec.rows:
        out.add_row(row.coeffs, row.sense, row.rhs, name=row.name)
    return out
