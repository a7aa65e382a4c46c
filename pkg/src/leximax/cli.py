"""Command-line front end.

Subcommands: ``solve`` (one delta), ``sweep`` (a delta grid, CSV rows
ready for plotting), ``validate`` (the seeded property campaigns) and
``export`` (MPS emission for external solvers).

Exit codes are a fixed contract: 0 success, 2 usage, 3 parse error,
4 infeasible instance, 5 solver failure.  Every float in CSV output is
serialized with nine significant digits.  The environment variable
``LEXIMAX_BACKEND`` supplies the default ``--backend``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .diagnostics import (
    check_class_transfers,
    cut_safety_report,
    encoding_fidelity_report,
    oracle_equivalence_report,
    relaxation_gap_report,
)
from .encodings import TradeoffParams, add_valid_cuts, compute_big_m, stage_k_model, stage_one_model
from .instances import (
    build_healthcare_model,
    build_shelter_model,
    parse_healthcare_csv,
    parse_orlib_cap,
)
from .model import attach
from .mps import export_mps
from .reference import ExplicitSet, explicit_instance
from .sequence import (
    InfeasibleInstanceError,
    SequentialState,
    SocialOutcome,
    run_sequence,
    sweep,
)
from .solver import SolverConfig, SolverError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INFEASIBLE = 4
EXIT_SOLVER = 5


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def _parse_explicit(text: str) -> ExplicitSet:
    """Candidate-per-line utilities; optional '# sizes = 1,2,3' comment."""
    sizes = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.lower().startswith("sizes"):
                _, _, rest = body.partition("=")
                try:
                    sizes = np.array([int(tok) for tok in rest.replace(",", " ").split()])
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: bad sizes list") from exc
            continue
        try:
            rows.append([float(tok) for tok in line.replace(",", " ").split()])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad utility value") from exc
    if not rows:
        raise ParseError("no candidate vectors found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(f"candidate vectors have mixed lengths {sorted(widths)}")
    try:
        return ExplicitSet(np.array(rows), sizes)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _load_instance(args):
    try:
        text = Path(args.instance).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {args.instance}: {exc}") from exc
    try:
        if args.kind == "healthcare":
            inst = parse_healthcare_csv(text)
            return build_healthcare_model(inst, args.budget)
        if args.kind == "shelter":
            inst = parse_orlib_cap(text)
            if args.budget is None:
                raise ParseError("shelter instances need --budget")
            return build_shelter_model(inst, args.budget)
        return explicit_instance(_parse_explicit(text))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _tiebreak_params(spec: str, delta: float, big_m) -> TradeoffParams:
    if spec == "none" or spec == "hierarchical":
        return TradeoffParams(delta=delta, big_m=big_m, tie_break=spec)
    if spec.startswith("epsilon="):
        try:
            eps = float(spec.split("=", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad epsilon value in --tie-break {spec!r}") from exc
        return TradeoffParams(delta=delta, big_m=big_m, tie_break="epsilon", epsilon=eps)
    raise UsageError(f"--tie-break must be none|hierarchical|epsilon=<f>, got {spec!r}")


def _csv_header(n: int) -> str:
    return "delta,avg_utility,K,total_time_ms," + ",".join(f"u_{i + 1}" for i in range(n))


def _csv_row(delta: float, outcome: SocialOutcome, wall_ms: float) -> str:
    cells = [_fmt(delta), _fmt(outcome.average), str(outcome.K), _fmt(wall_ms)]
    cells += [_fmt(v) for v in outcome.utilities]
    return ",".join(cells)


def _write_out(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _summary(outcome: SocialOutcome, delta: float) -> str:
    lines = [f"delta={_fmt(delta)}" + ("  [utilitarian regime]" if delta == 0 else "")]
    lines.append("final utilities: " + " ".join(_fmt(v) for v in outcome.utilities))
    lines.append(f"K={outcome.K}  total={_fmt(outcome.total)}  "
                 f"average per capita={_fmt(outcome.average)}")
    fair = " ".join("*" if f else "." for f in outcome.fair_mask)
    lines.append(f"fair region mask: {fair}")
    for rec in outcome.iterations:
        lines.append(
            f"  stage {rec.k}: fixed u_{rec.fixed_index + 1}="
            f"{_fmt(rec.fixed_value)}  z={_fmt(rec.z)}  ({rec.wall_ms:.1f} ms)"
        )
    return "\n".join(lines) + "\n"


def _iteration_log_csv(outcome: SocialOutcome) -> str:
    lines = ["k,fixed_index,fixed_value,z,wall_ms"]
    for rec in outcome.iterations:
        lines.append(f"{rec.k},{rec.fixed_index + 1},{_fmt(rec.fixed_value)},"
                     f"{_fmt(rec.z)},{_fmt(rec.wall_ms)}")
    return "\n".join(lines) + "\n"


def _parse_deltas(spec: str) -> list[float]:
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise UsageError("--deltas range must be a:b:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise UsageError(f"bad --deltas range {spec!r}") from exc
        if step <= 0 or stop < start:
            raise UsageError("--deltas range needs step > 0 and b >= a")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --deltas list {spec!r}") from exc


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", required=True, help="instance file path")
    parser.add_argument("--kind", required=True,
                        choices=["healthcare", "shelter", "explicit"])
    parser.add_argument("--budget", type=float, default=None,
                        help="budget (healthcare: overrides the CSV '# B =' line)")
    parser.add_argument("--tie-break", default="hierarchical",
                        help="none | hierarchical | epsilon=<f>")
    parser.add_argument("--cuts", action="store_true",
                        help="add the stage-k tightening inequalities")
    parser.add_argument("--big-m", type=float, default=None,
                        help="override the derived big-M constant")
    parser.add_argument("--backend",
                        default=os.environ.get("LEXIMAX_BACKEND", "embedded"),
                        help="embedded | external:<command>")
    parser.add_argument("--assemble", default="terminal",
                        choices=["terminal", "last_fair"],
                        help="which stage supplies the not-fixed utilities")
    parser.add_argument("--time-limit", type=float, default=None,
                        help="per-solve time limit in seconds")
    parser.add_argument("--out", default=None, help="write CSV here (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leximax",
        description="Utility allocations balancing leximax fairness and "
                    "utilitarian efficiency.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance at one delta")
    _add_common(p_solve)
    p_solve.add_argument("--delta", type=float, required=True)
    p_solve.add_argument("--log", default=None,
                         help="write the per-stage iteration log CSV here")

    p_sweep = sub.add_parser("sweep", help="re-solve over a grid of deltas")
    _add_common(p_sweep)
    p_sweep.add_argument("--deltas", required=True, help="a:b:step or v1,v2,...")

    p_val = sub.add_parser("validate", help="run the seeded property campaigns")
    p_val.add_argument("--trials", type=int, default=25)
    p_val.add_argument("--seed", type=int, default=20240101)

    p_exp = sub.add_parser("export", help="write the MPS for one stage model")
    _add_common(p_exp)
    p_exp.add_argument("--delta", type=float, required=True)
    p_exp.add_argument("--stage", required=True, help="P1 or Pk:<k>")
    p_exp.add_argument("--run-log", default=None,
                       help="iteration log CSV from a prior solve (for Pk)")
    return parser


def _make_cfg(args) -> SolverConfig:
    return SolverConfig(backend=args.backend, time_limit=args.time_limit)


def cmd_solve(args) -> int:
    instance = _load_instance(args)
    params = _tiebreak_params(args.tie_break, args.delta, args.big_m)
    cfg = _make_cfg(args)
    try:
        outcome = run_sequence(instance, params, cfg, use_cuts=args.cuts,
                               assemble=args.assemble)
    except InfeasibleInstanceError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    wall = sum(rec.wall_ms for rec in outcome.iterations)
    csv_text = _csv_header(instance.n) + "\n" + _csv_row(args.delta, outcome, wall) + "\n"
    if args.out:
        _write_out(args.out, csv_text)
        sys.stdout.write(_summary(outcome, args.delta))
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(_summary(outcome, args.delta))
    if args.log:
        Path(args.log).write_text(_iteration_log_csv(outcome))
    return EXIT_OK


def cmd_sweep(args) -> int:
    instance = _load_instance(args)
    deltas = _parse_deltas(args.deltas)
    if not deltas:
        raise UsageError("--deltas produced an empty list")
    params = _tiebreak_params(args.tie_break, deltas[0], args.big_m)
    cfg = _make_cfg(args)
    rows = sweep(instance, deltas, params, cfg, use_cuts=args.cuts,
                 assemble=args.assemble)
    lines = [_csv_header(instance.n)]
    if instance.offset:
        lines.insert(0, f"# utilities in original units (model offset {_fmt(instance.offset)})")
    failures = 0
    for row in rows:
        if row.outcome is None:
            failures += 1
            lines.append(f"# delta={_fmt(row.delta)} failed: {row.error}")
        else:
            lines.append(_csv_row(row.delta, row.outcome, row.wall_ms))
    _write_out(args.out, "\n".join(lines) + "\n")
    if args.out:
        print(f"wrote {len(rows) - failures} rows to {args.out}"
              + (f" ({failures} failed)" if failures else ""))
    return EXIT_OK if failures == 0 else EXIT_SOLVER


def cmd_validate(args) -> int:
    trials = max(1, args.trials)
    reports = [
        check_class_transfers(trials=10 * trials, seed=args.seed),
        encoding_fidelity_report(trials=trials, seed=args.seed + 1),
        cut_safety_report(trials=trials, seed=args.seed + 1),
        oracle_equivalence_report(trials=trials, seed=args.seed + 2),
    ]
    gap = relaxation_gap_report(trials=max(3, trials // 5), seed=args.seed + 3)
    ok = True
    for report in reports:
        print(report.text())
        ok = ok and report.ok
    print(gap.text())
    print("gap report (informational):")
    sys.stdout.write(gap.csv())
    print("validate:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else 1


def _read_run_log(path: str):
    try:
        lines = Path(path).read_text().strip().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read run log {path}: {exc}") from exc
    if not lines or lines[0].split(",")[:3] != ["k", "fixed_index", "fixed_value"]:
        raise ParseError(f"{path} is not an iteration log CSV")
    entries = []
    for line in lines[1:]:
        cells = line.split(",")
        entries.append((int(cells[1]) - 1, float(cells[2])))
    return entries


def cmd_export(args) -> int:
    instance = _load_instance(args)
    params = _tiebreak_params(args.tie_break, args.delta, args.big_m)
    if params.big_m is None:
        params = _tiebreak_params(args.tie_break, args.delta,
                                  compute_big_m(instance, params))
    n = instance.n
    stage = args.stage
    if stage == "P1":
        model = attach(stage_one_model(n, instance.sizes, params), instance.feasible_set)
    elif stage.startswith("Pk:"):
        try:
            k = int(stage.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad stage reference {stage!r}") from exc
        if k < 2 or k > n:
            raise UsageError(f"stage k must be in 2..{n}, got {k}")
        if not args.run_log:
            raise UsageError("missing prefix: Pk:<k> export needs --run-log")
        entries = _read_run_log(args.run_log)
        if len(entries) < k - 1:
            raise ParseError(f"run log has only {len(entries)} stages; need {k - 1}")
        fixed_idx = [idx for idx, _ in entries[: k - 1]]
        fixed_val = [val + instance.offset for _, val in entries[: k - 1]]
        state = SequentialState(
            k=k, fixed_idx=fixed_idx, fixed_val=fixed_val,
            remaining=[i for i in range(n) if i not in fixed_idx],
            delta=params.delta, big_m=params.big_m,
        )
        model = attach(stage_k_model(state, instance.sizes, params), instance.feasible_set)
        if args.cuts:
            model = add_valid_cuts(model, state, instance.sizes, params)
    else:
        raise UsageError(f"--stage must be P1 or Pk:<k>, got {stage!r}")
    _write_out(args.out, export_mps(model))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code if exc.code is not None else EXIT_USAGE)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "export":
            return cmd_export(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleInstanceError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
