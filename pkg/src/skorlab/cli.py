"""Batch front end: generate laws, run checks and diagnostics on files.

Exit codes: 0 on success or a passing verdict, 1 when a requested verdict
fails, 2 on malformed input or invalid options.  Every JSON report carries
tool_version, config_echo, and results, so a curve can be reproduced from
the report alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__
from .convergence import DenseGrid, converges
from .errors import DomainError, ValidationError
from .generators import generate
from .jsonio import (
    dump_json,
    law_from_obj,
    law_to_obj,
    load_json,
    path_from_obj,
    spec_from_obj,
)
from .laws import classify, norms
from .metrics import default_functionals, j1_finite, j1_halfline, mz_gap
from .tightness import (
    DEFAULT_C_GRID,
    DEFAULT_LEVEL_PAIRS,
    check_UB,
    check_UI,
    check_US,
    check_UT_empirical,
)

_CONDITIONS = ("ut", "ub", "ui", "us")


def _report(args: argparse.Namespace, results) -> dict:
    echo = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    return {"tool_version": __version__, "config_echo": echo, "results": results}


def _emit(report: dict, out: str | None) -> None:
    if out is None:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        dump_json(report, out)


def _emit_csv(rows, header, out: str | None) -> None:
    lines = [",".join(header)]
    lines += [",".join(repr(x) if isinstance(x, float) else str(x) for x in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out + ".tmp", "w") as fh:
            fh.write(text)
        os.replace(out + ".tmp", out)


def _load_law(file_path: str):
    return law_from_obj(load_json(file_path), where=file_path)


def _parse_levels(text: str):
    pairs = []
    for part in text.split(","):
        try:
            lo, hi = part.split(":")
            pairs.append((float(lo), float(hi)))
        except ValueError:
            raise DomainError(f"levels must look like 'q:r,q:r', got {text!r}")
    return tuple(pairs)


def _parse_times(text: str):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise DomainError(f"grid must be comma-separated numbers, got {text!r}")


def _c_grid(cmax: float | None):
    if cmax is None:
        return DEFAULT_C_GRID
    if not cmax > 0.0:
        raise DomainError("--cmax must be positive")
    grid = tuple(c for c in DEFAULT_C_GRID if c <= cmax)
    if not grid or grid[-1] < cmax:
        grid = grid + (float(cmax),)
    return grid


# -- subcommands -----------------------------------------------------------------


def _cmd_generate(args) -> int:
    spec = spec_from_obj(load_json(args.spec), where=args.spec)
    made = generate(spec)
    if isinstance(made, list):
        os.makedirs(args.out, exist_ok=True)
        files = []
        for k, law in enumerate(made):
            file_path = os.path.join(args.out, f"law_{k:04d}.json")
            dump_json(law_to_obj(law), file_path)
            files.append(file_path)
        results = {"kind": spec.kind, "count": len(files), "files": files}
    else:
        dump_json(law_to_obj(made), args.out)
        results = {"kind": spec.kind, "count": 1, "files": [args.out]}
    _emit(_report(args, results), None)
    return 0


def _cmd_check(args) -> int:
    law = _load_law(args.law)
    cls = classify(law, tol=args.tol)
    nr = norms(law, p=args.p)
    results = {
        "martingale": cls.martingale,
        "supermartingale": list(cls.supermartingale),
        "quasi_statistic": cls.quasimartingale_statistic,
        "norms": dataclasses.asdict(nr),
    }
    _emit(_report(args, results), args.out)
    return 0


def _cmd_metric(args) -> int:
    paths = [path_from_obj(load_json(f), where=f) for f in args.paths]
    if len(paths) < 2:
        raise DomainError("metric needs at least two path files")
    n = len(paths)
    matrix = [[0.0] * n for _ in range(n)]
    fs = None
    if args.method == "mz":
        fs = default_functionals(paths[0].d, paths[0].horizon)
    for a in range(n):
        for b in range(a + 1, n):
            if args.method == "j1":
                if paths[a].horizon.is_finite:
                    dist = j1_finite(paths[a], paths[b])
                else:
                    dist = j1_halfline(paths[a], paths[b]).value
            else:
                dist = mz_gap(paths[a], paths[b], fs)
            matrix[a][b] = matrix[b][a] = dist
    results = {"method": args.method, "files": list(args.paths), "matrix": matrix}
    if args.format == "csv":
        rows = [(a, b, matrix[a][b]) for a in range(n) for b in range(n)]
        _emit_csv(rows, ("row", "col", "distance"), args.out)
    else:
        _emit(_report(args, results), args.out)
    return 0


def _condition_results(rep) -> dict:
    out = dataclasses.asdict(rep)
    out["curves"] = {label: [list(point) for point in pts] for label, pts in rep.curves.items()}
    out["offenders"] = [dataclasses.asdict(o) for o in rep.offenders]
    return out


def _cmd_diagnose(args) -> int:
    family_obj = load_json(args.family)
    if not isinstance(family_obj, list) or not family_obj:
        raise ValidationError(f"{args.family}: expected a nonempty array")
    base = os.path.dirname(os.path.abspath(args.family))
    family = []
    for entry in family_obj:
        if isinstance(entry, str):
            file_path = entry if os.path.isabs(entry) else os.path.join(base, entry)
            family.append(_load_law(file_path))
        else:
            family.append(law_from_obj(entry, where=args.family))
    c_grid = _c_grid(args.cmax)
    levels = _parse_levels(args.levels) if args.levels else DEFAULT_LEVEL_PAIRS
    wanted = _CONDITIONS if args.condition == "all" else (args.condition,)
    reports = {}
    for cond in wanted:
        if cond == "ut":
            rep = check_UT_empirical(family, c_grid=c_grid, levels=levels,
                                     seed=args.seed, eps=args.eps)
        elif cond == "ub":
            rep = check_UB(family)
        elif cond == "ui":
            rep = check_UI(family, c_grid=c_grid, eps=args.eps)
        else:
            rep = check_US(family, levels=levels, c_grid=c_grid, eps=args.eps)
        reports[cond] = rep
    results = {cond: _condition_results(rep) for cond, rep in reports.items()}
    if args.format == "csv":
        rows = []
        for cond, rep in reports.items():
            for label, pts in rep.curves.items():
                rows += [(f"{cond}:{label}", c, v) for c, v in pts]
        _emit_csv(rows, ("curve", "c", "statistic"), args.out)
    else:
        _emit(_report(args, results), args.out)
    return 1 if any(rep.verdict == "fail" for rep in reports.values()) else 0


def _cmd_converge(args) -> int:
    sequence = [_load_law(f) for f in args.sequence]
    limit = _load_law(args.limit)
    grid = DenseGrid(_parse_times(args.grid))
    rep = converges(sequence, limit, grid, tol=args.tol)
    results = dataclasses.asdict(rep)
    if args.format == "csv":
        rows = [
            (k, fdd, fun)
            for k, (fdd, fun) in enumerate(zip(rep.fdd_gaps, rep.functional_gaps))
        ]
        _emit_csv(rows, ("index", "fdd_gap", "functional_gap"), args.out)
    else:
        _emit(_report(args, results), args.out)
    return 0 if rep.verdict else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skorlab", description="Diagnostics for step-path process laws."
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="build laws from a generator spec file")
    p.add_argument("--spec", required=True, help="generator spec JSON file")
    p.add_argument("--out", required=True,
                   help="law file, or directory when the spec yields a sequence")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("check", help="classify a law and compute its norms")
    p.add_argument("law", help="law JSON file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("metric", help="pairwise distance matrix between paths")
    p.add_argument("paths", nargs="+", help="two or more path JSON files")
    p.add_argument("--method", choices=("j1", "mz"), default="j1")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metric)

    p = sub.add_parser("diagnose", help="uniform-bound conditions on a family")
    p.add_argument("--family", required=True,
                   help="JSON file: array of law files or inline law objects")
    p.add_argument("--condition", choices=_CONDITIONS + ("all",), default="all")
    p.add_argument("--cmax", type=float)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--levels", help="upcrossing level pairs, e.g. '-1:1,0:2'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("converge", help="gap curves of a sequence against a limit")
    p.add_argument("--sequence", nargs="+", required=True,
                   help="ordered law JSON files")
    p.add_argument("--limit", required=True, help="limit law JSON file")
    p.add_argument("--grid", required=True, help="comma-separated times")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
