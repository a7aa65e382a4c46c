"""MPS serialization for external solver backends.

:func:`export_mps` writes the classic fixed-field layout (NAME, OBJSENSE,
ROWS, COLUMNS with INTORG/INTEND markers around binary columns, RHS,
BOUNDS, ENDATA).  Numeric fields carry full shortest-round-trip precision,
so a value field may extend past the historical 61-column ruler; every
mainstream reader tokenizes on whitespace and accepts this.

Names longer than eight characters are truncated and deterministically
suffixed; :func:`mps_names` exposes the mapping so solution listings from
a backend can be matched back to model variables.
"""

from __future__ import annotations

import math

from .model import LinearModel

__all__ = ["export_mps", "mps_names", "parse_mps"]

_MAX_NAME = 8


def _shorten(names: list[str], reserved: set[str]) -> list[str]:
    used = set(reserved)
    out = []
    for name in names:
        cand = name[:_MAX_NAME]
        if cand in used:
            k = 1
            while True:
                suffix = f"~{k}"
                cand = name[: _MAX_NAME - len(suffix)] + suffix
                if cand not in used:
                    break
                k += 1
        used.add(cand)
        out.append(cand)
    return out


def mps_names(model: LinearModel):
    """Deterministic (column names, row names) used by the MPS writer."""
    cols = _shorten([v.name for v in model.variables], {"RHS", "BND", "OBJ"})
    rows = _shorten([r.name for r in model.rows], {"OBJ"})
    return cols, rows


def _num(x: float) -> str:
    return repr(float(x))


def _entry(f2: str, f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    line = f"    {f2:<10}{f3:<10}{f4:<14}{f5:<10}{f6}"
    return line.rstrip()


def export_mps(model: LinearModel) -> str:
    cols, rows = mps_names(model)
    sense_tag = {"<=": "L", ">=": "G", "==": "E"}
    out = [f"NAME          {model.name[:60]}"]
    out.append("OBJSENSE")
    out.append("    MAX" if model.maximize else "    MIN")
    out.append("ROWS")
    out.append(" N  OBJ")
    for tag, row in zip(rows, model.rows):
        out.append(f" {sense_tag[row.sense]}  {tag}")

    # Per-column entries, gathered so binary runs sit inside marker pairs.
    entries: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for j, coef in model.objective.items():
        entries[j].append(("OBJ", coef))
    for tag, row in zip(rows, model.rows):
        for j, coef in row.coeffs.items():
            entries[j].append((tag, coef))

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for idx, var in enumerate(model.variables):
        want_int = var.kind == "binary"
        if want_int != in_int:
            marker += 1
            tag = "INTORG" if want_int else "INTEND"
            out.append(_entry(f"M{marker}", "'MARKER'", "", f"'{tag}'"))
            in_int = want_int
        if not entries[idx]:
            entries[idx].append(("OBJ", 0.0))  # declare otherwise-unused column
        for row_tag, coef in entries[idx]:
            out.append(_entry(cols[idx], row_tag, _num(coef)))
    if in_int:
        marker += 1
        out.append(_entry(f"M{marker}", "'MARKER'", "", "'INTEND'"))

    out.append("RHS")
    for tag, row in zip(rows, model.rows):
        out.append(_entry("RHS", tag, _num(row.rhs)))

    out.append("BOUNDS")
    for idx, var in enumerate(model.variables):
        name = cols[idx]
        lb, ub = var.lb, var.ub
        if lb == ub:
            out.append(f" FX {'BND':<9}{name:<10}{_num(lb)}")
            continue
        if math.isinf(lb) and math.isinf(ub):
            out.append(f" FR {'BND':<9}{name}")
            continue
        if math.isinf(lb):
            out.append(f" MI {'BND':<9}{name}")
        elif lb != 0.0:
            out.append(f" LO {'BND':<9}{name:<10}{_num(lb)}")
        if not math.isinf(ub):
            out.append(f" UP {'BND':<9}{name:<10}{_num(ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def parse_mps(text: str) -> LinearModel:
    """Parse MPS text written by :func:`export_mps` (free-format tolerant).

    Reproduces the model up to the writer's name shortening.  Integer
    columns must have bounds inside [0, 1]: this artifact only uses binary
    integrality.
    """
    section = None
    obj_sense_pending = False
    name = "model"
    maximize = False
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_kind: dict[str, str] = {}
    col_entries: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list[float]] = {}
    obj_row = None
    in_int = False
    tag_to_sense = {"L": "<=", "G": ">=", "E": "=="}

    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        is_header = not raw[0].isspace()
        tokens = raw.split()
        if is_header:
            section = tokens[0].upper()
            obj_sense_pending = section == "OBJSENSE"
            if section == "NAME" and len(tokens) > 1:
                name = tokens[1]
            if section == "ENDATA":
                break
            continue
        if obj_sense_pending:
            maximize = tokens[0].upper() == "MAX"
            obj_sense_pending = False
            continue
        if section == "ROWS":
            tag, rname = tokens[0].upper(), tokens[1]
            if tag == "N":
                if obj_row is None:
                    obj_row = rname
                continue
            if tag not in tag_to_sense:
                raise ValueError(f"unknown row type {tag!r}")
            row_sense[rname] = tag_to_sense[tag]
            row_order.append(rname)
        elif section == "COLUMNS":
            stripped = [t.strip("'\"") for t in tokens]
            if "MARKER" in stripped:
                if "INTORG" in stripped:
                    in_int = True
                elif "INTEND" in stripped:
                    in_int = False
                else:
                    raise ValueError(f"bad marker line: {raw!r}")
                continue
            cname = tokens[0]
            if cname not in col_entries:
                col_order.append(cname)
                col_entries[cname] = []
                col_kind[cname] = "binary" if in_int else "continuous"
            pairs = tokens[1:]
            if len(pairs) % 2:
                raise ValueError(f"odd COLUMNS entry: {raw!r}")
            for rname, value in zip(pairs[::2], pairs[1::2]):
                col_entries[cname].append((rname, float(value)))
        elif section == "RHS":
            pairs = tokens[1:]
            if len(pairs) % 2:
                raise ValueError(f"odd RHS entry: {raw!r}")
            for rname, value in zip(pairs[::2], pairs[1::2]):
                rhs[rname] = float(value)
        elif section == "BOUNDS":
            btype = tokens[0].upper()
            cname = tokens[2]
            if cname not in bounds:
                default_ub = 1.0 if col_kind.get(cname) == "binary" else math.inf
                bounds[cname] = [0.0, default_ub]
            if btype == "FR":
                bounds[cname] = [-math.inf, math.inf]
            elif btype == "MI":
                bounds[cname][0] = -math.inf
            elif btype == "PL":
                bounds[cname][1] = math.inf
            elif btype == "BV":
                bounds[cname] = [0.0, 1.0]
                col_kind[cname] = "binary"
            else:
                value = float(tokens[3])
                if btype == "LO":
                    bounds[cname][0] = value
                elif btype == "UP":
                    bounds[cname][1] = value
                elif btype == "FX":
                    bounds[cname] = [value, value]
                else:
                    raise ValueError(f"unknown bound type {btype!r}")
        elif section in ("RANGES",):
            raise ValueError("RANGES section not supported")

    if obj_row is None:
        raise ValueError("no objective (N) row found")

    model = LinearModel(name, maximize=maximize)
    for cname in col_order:
        kind = col_kind[cname]
        default_ub = 1.0 if kind == "binary" else math.inf
        lb, ub = bounds.get(cname, [0.0, default_ub])
        if kind == "binary" and not (0.0 <= lb and ub <= 1.0):
            raise ValueError(f"integer column {cname!r} is not binary-bounded")
        model.add_var(cname, lb, ub, kind)
    objective: dict[str, float] = {}
    row_coeffs: dict[str, dict[str, float]] = {rname: {} for rname in row_order}
    for cname, pairs in col_entries.items():
        for rname, value in pairs:
            if rname == obj_row:
                objective[cname] = objective.get(cname, 0.0) + value
            elif rname in row_coeffs:
                row_coeffs[rname][cname] = row_coeffs[rname].get(cname, 0.0) + value
            else:
                raise ValueError(f"entry references unknown row {rname!r}")
    for rname in row_order:
        model.add_row(row_coeffs[rname], row_sense[rname], rhs.get(rname, 0.0), name=rname)
    model.set_objective(objective, maximize=maximize)
    return model
