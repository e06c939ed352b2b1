"""Command-line interface: ``dgetc {run,sweep,hardness,solve,check}``.

Exit status is 0 on success, 1 when a check or validation fails, 2 on usage
errors. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

from .algorithms import dg_repeated
from .env import RngStream
from .errors import CapacityError, DgEtcError
from .harness.config import ExperimentConfig, apply_overrides, expand_grid, load_document
from .harness.experiment import run_experiment, sweep
from .setfn import (
    MAX_OPTIMUM_D,
    FunctionDescriptor,
    brute_force_optimum,
    compute_hardness,
    lattice_violation,
    min_marginal_sum,
    submodularity_violation,
    validate_range,
    TOL,
)

log = logging.getLogger("dgetc")


class UsageError(Exception):
    """Bad combination of command-line arguments (exit status 2)."""


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_function_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--function", metavar="FILE", help="function descriptor file (JSON or YAML)")
    p.add_argument("--xi", type=_floats, help="example-family weights, comma separated (use --xi=-0.5,... for a leading minus)")
    p.add_argument("--nu", type=float, default=1.0, help="example-family exponent in (0, 1]")
    p.add_argument("--permutation", type=_ints, help="item order, comma separated")


def _descriptor(args) -> FunctionDescriptor:
    if args.function:
        data = load_document(args.function)
        data = data.get("function", data)
    elif args.xi is not None:
        data = {"family": "example", "xi": args.xi, "nu": args.nu}
    else:
        raise UsageError("give --function FILE or --xi")
    if args.permutation is not None:
        data = dict(data, permutation=args.permutation)
    return FunctionDescriptor.from_dict(data)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def cmd_run(args) -> int:
    data = load_document(args.config)
    data = apply_overrides(data, args.set or [])
    if args.seed is not None:
        data["seed"] = args.seed
    if args.no_trace:
        data["trace"] = False
    cfg = ExperimentConfig.from_dict(data)
    summary = run_experiment(cfg, args.output, jobs=args.jobs)
    for key, value in summary.aggregates().items():
        print(f"{key}: {value!r}")
    return 0


def cmd_sweep(args) -> int:
    cells = expand_grid(load_document(args.grid))
    for cell in cells:
        if args.seed is not None:
            cell["seed"] = args.seed
        if args.no_trace:
            cell["trace"] = False
    rows = sweep(cells, args.output, jobs=args.jobs)
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        print(f"cell {r['config_id']} failed: {r['error']}", file=sys.stderr)
    print(f"cells: {len(cells)}, rows: {len(rows)}, failed cells: {len(failed)}")
    return 1 if failed else 0


def cmd_hardness(args) -> int:
    report = compute_hardness(_descriptor(args).build())
    sys.stdout.write(report.to_csv())
    print(f"global,{_fmt(report.total)}")
    return 0


def cmd_solve(args) -> int:
    f = _descriptor(args).build()
    best, value = dg_repeated(f, args.repeats, RngStream(0 if args.seed is None else args.seed))
    print(f"set: {best}")
    print(f"value: {value!r}")
    if f.d <= MAX_OPTIMUM_D:
        _, opt = brute_force_optimum(f)
        print(f"ratio: {(value / opt if opt > 0 else 1.0)!r}")
    return 0


def cmd_check(args) -> int:
    f = _descriptor(args).build()
    ok = True

    def report(name: str, passed, detail: str = "") -> None:
        nonlocal ok
        status = "skipped" if passed is None else "pass" if passed else "FAIL"
        ok &= passed is not False
        print(f"{name}: {status}" + (f" ({detail})" if detail else ""))

    report("range", validate_range(f), f"c={f.c!r}")
    try:
        gains = submodularity_violation(f)
        lattice = lattice_violation(f)
        if (gains is None) != (lattice is None):
            raise DgEtcError("submodularity characterizations disagree")
        detail = "" if gains is None else f"A={gains[0]}, B={gains[1]}, i={gains[2]}"
        report("submodular", gains is None, detail)
    except CapacityError as exc:
        report("submodular", None, str(exc))
    try:
        worst = min_marginal_sum(f)
        report("marginal_sum", worst >= -TOL, f"min alpha+beta = {worst!r}")
    except CapacityError as exc:
        report("marginal_sum", None, str(exc))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dgetc", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, help="override the base seed")
    parser.add_argument("--jobs", type=int, default=1, help="concurrent replications")
    parser.add_argument("--no-trace", action="store_true", help="skip per-round trace files")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="replicated run of one experiment config")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (dotted keys)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run every cell of a config grid")
    p.add_argument("grid")
    p.add_argument("-o", "--output", help="output directory")
    p.set_defaults(func=cmd_sweep)

    for name, func, text in (
        ("hardness", cmd_hardness, "per-item DG-hardness, gaps and zone thresholds"),
        ("solve", cmd_solve, "offline repeated Double-Greedy"),
        ("check", cmd_check, "structural checks: range, submodularity, marginal sums"),
    ):
        p = sub.add_parser(name, help=text)
        _add_function_args(p)
        if name == "solve":
            p.add_argument("--repeats", type=int, default=10)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DgEtcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
