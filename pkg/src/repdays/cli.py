"""Command-line front end: ``repdays cluster | solve | evaluate``.

Exit codes: 0 success, 1 runtime failure, 2 usage or input validation error.

Every run writes ``manifest.json`` next to its outputs.  Passing that file
back through ``--manifest`` replays the run with the recorded arguments
(``--out`` may still redirect the outputs).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .clustering import MKM, TKM, ClusteringError, cluster_days, write_repdays_csv, read_repdays_csv
from .timeseries import IngestError, build_day_observations, load_hourly_csv
from .model.builder import BuildError
from .solver.fileio import SolutionImportError
from .system import SystemError_, bundled_path, load_system

log = logging.getLogger("repdays")

OUT_ENV = "REPDAYS_OUT"
DEFAULT_OUT = "repdays-out"
BUNDLED_SYSTEMS = {"rts24": "rts24.toml", "desk3": "desk3.toml"}
BUNDLED_DATA = {"synthetic": "synthetic_year.csv"}
_PATH_ARGS = ("input", "system", "repdays", "history", "import_solution")


class UsageError(Exception):
    """Bad flag combination or input that fails validation (exit 2)."""


# -- helpers -----------------------------------------------------------------

def _system_path(name: str) -> str:
    return bundled_path(BUNDLED_SYSTEMS[name]) if name in BUNDLED_SYSTEMS else name


def _data_path(name: str) -> str:
    return bundled_path(BUNDLED_DATA[name]) if name in BUNDLED_DATA else name


def _int_list(text: str) -> List[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _str_list(text: str) -> List[str]:
    return [v.strip().lower() for v in text.split(",") if v.strip()]


def _load_history(path: str, days: Optional[int]):
    from .synthetic import desk_day_indices
    records = load_hourly_csv(_data_path(path))
    if days is not None:
        if not 1 <= days <= records.n_days:
            raise UsageError(f"--days must lie in [1, {records.n_days}]")
        records = records.subset(desk_day_indices(records.n_days, days))
    return records


def _solver_config(args):
    from .solver.bnb import SolverConfig
    return SolverConfig(int_tol=args.int_tol, mip_gap=args.mip_gap, node_limit=args.node_limit,
                        time_limit=args.time_limit, seed=args.seed, lp_method=args.lp_method)


def _apply_budget_mode(system, mode: Optional[str]):
    if mode is None or mode == system.budgets.mode:
        return system
    from dataclasses import replace
    return replace(system, budgets=replace(system.budgets, mode=mode))


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(args, out_dir: str, outputs: Dict[str, str], extra: Optional[dict] = None,
                    wall: float = 0.0) -> str:
    recorded = {k: v for k, v in vars(args).items() if k not in ("func", "manifest", "config", "verbose")}
    for key in _PATH_ARGS:
        # pin relative input paths so a replay works from any directory
        val = recorded.get(key)
        if isinstance(val, str) and os.path.exists(val):
            recorded[key] = os.path.abspath(val)
    doc = {
        "tool": "repdays",
        "version": __version__,
        "command": args.command,
        "args": recorded,
        "outputs": {k: {"path": os.path.relpath(p, out_dir), "sha256": _sha256(p)}
                    for k, p in sorted(outputs.items()) if os.path.isfile(p)},
        "wall_time": wall,
    }
    if extra:
        doc.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(args) -> str:
    out = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    os.makedirs(out, exist_ok=True)
    return out


# -- subcommands ---------------------------------------------------------------

def _validate_cluster_args(args) -> None:
    if args.method is None:
        raise UsageError("--method is required")
    if args.method == TKM:
        if args.k is None:
            raise UsageError("--method tkm requires --k")
        if args.k1 is not None or args.k2 is not None:
            raise UsageError("--k1/--k2 apply to --method mkm only")
    else:
        given = (args.k1 is not None, args.k2 is not None)
        if any(given) and not all(given):
            raise UsageError("--method mkm needs both --k1 and --k2 (or --k alone)")
        if all(given) and args.k is not None and args.k != args.k1 * args.k2:
            raise UsageError("--k must equal --k1 * --k2")
        if not any(given) and args.k is None:
            raise UsageError("--method mkm requires --k1 and --k2 (or --k)")
    for name in ("k", "k1", "k2"):
        v = getattr(args, name)
        if v is not None and v < 1:
            raise UsageError(f"--{name} must be positive")


def cmd_cluster(args) -> int:
    _validate_cluster_args(args)
    t0 = time.perf_counter()
    records = _load_history(args.input, args.days)
    k_total = args.k if args.k is not None else args.k1 * args.k2
    if k_total > records.n_days:
        raise UsageError(f"K={k_total} exceeds the {records.n_days} available days")
    obs = build_day_observations(records)
    res, repdays = cluster_days(obs, args.method, k=args.k, k1=args.k1, k2=args.k2, seed=args.seed,
                                max_iter=args.max_iter)
    out = _out_dir(args)
    outputs = {"repdays": os.path.join(out, "repdays.csv"), "assignment": os.path.join(out, "assignment.csv")}
    write_repdays_csv(repdays, outputs["repdays"])
    with open(outputs["assignment"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("day,date,rep_day\n")
        for d, (date, c) in enumerate(zip(records.dates, res.assignment), start=1):
            fh.write(f"{d},{date.isoformat() if date else ''},{int(c) + 1}\n")
    if not args.no_plots:
        from .plotting import plot_repdays
        outputs["profiles_png"] = plot_repdays(repdays, os.path.join(out, "repdays.png"), records)
    print(f"{args.method.upper()} {repdays.parameters}: {len(repdays)} representative days, "
          f"total weight {repdays.total_weight}, SSE {res.sse:.6g}, iterations {res.iterations}, "
          f"converged {res.converged}")
    for r, day in enumerate(repdays.days, start=1):
        print(f"  day {r:3d}  weight {day.weight}")
    _write_manifest(args, out, outputs, {"n_days": records.n_days, "sse": res.sse},
                    time.perf_counter() - t0)
    return 0


def cmd_solve(args) -> int:
    from .model.builder import ModelOptions, build_chronological_model, build_representative_model
    from .model.solution import (SolutionError, extract_solution, write_costs_csv, write_plan_csv,
                                 write_schedule_csv)
    from .solver.bnb import solve_milp
    from .solver.fileio import export_problem, import_solution, write_solution

    if (args.repdays is None) == (args.history is None):
        raise UsageError("give exactly one of --repdays or --history")
    system = _apply_budget_mode(load_system(_system_path(args.system)), args.budget_mode)
    options = ModelOptions(allow_storage=not args.no_storage)
    if args.repdays is not None:
        repdays = read_repdays_csv(args.repdays)
        problem = build_representative_model(system, repdays, options)
    else:
        records = _load_history(args.history, args.days)
        problem = build_chronological_model(system, records, options)
    out = _out_dir(args)
    t0 = time.perf_counter()
    if args.export:
        path = args.export if os.path.isabs(args.export) or os.path.dirname(args.export) \
            else os.path.join(out, args.export)
        export_problem(problem, path, args.format)
        print(f"wrote {path}: {problem.n_vars} variables, {problem.n_rows} constraints")
        _write_manifest(args, out, {"model": path}, wall=time.perf_counter() - t0)
        return 0
    if args.import_solution:
        sol = import_solution(problem, args.import_solution)
    else:
        sol = solve_milp(problem, _solver_config(args))
    try:
        plan, schedule, costs = extract_solution(problem, sol)
    except SolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    outputs = {
        "plan": os.path.join(out, "plan.csv"),
        "schedule": os.path.join(out, "schedule.csv"),
        "costs": os.path.join(out, "costs.csv"),
        "solution": os.path.join(out, "solution.txt"),
    }
    write_plan_csv(plan, outputs["plan"])
    write_schedule_csv(schedule, outputs["schedule"])
    write_costs_csv(costs, outputs["costs"])
    write_solution(problem, sol.x, outputs["solution"])
    print(f"status {sol.status}, objective {sol.objective:.10g}, nodes {sol.nodes}")
    print(f"operation {costs.operation:.10g}  investment {costs.investment:.10g}  "
          f"shed {100 * costs.shed_fraction:.4g} % of demand")
    for role, ent, val in plan.items():
        print(f"  {role:7s} {ent:8s} {val:.6g}")
    _write_manifest(args, out, outputs, {"status": sol.status, "objective": sol.objective},
                    time.perf_counter() - t0)
    return 0


def cmd_evaluate(args) -> int:
    from .evaluation import evaluate_grid, exact_solution, report, run_seeds, write_exact_csv
    from .model.builder import ModelOptions

    methods = args.methods
    for m in methods:
        if m not in (TKM, MKM):
            raise UsageError(f"unknown method {m!r} in --methods")
    if args.seeds < 1:
        raise UsageError("--seeds must be positive")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    system = _apply_budget_mode(load_system(_system_path(args.system)), args.budget_mode)
    records = _load_history(args.input, args.days)
    if not args.exact_only:
        for k in args.k_grid:
            if not 1 <= k <= records.n_days:
                raise UsageError(f"--k-grid value {k} outside [1, {records.n_days}]")
    cfg = _solver_config(args)
    options = ModelOptions(allow_storage=not args.no_storage)
    out = _out_dir(args)
    t0 = time.perf_counter()
    exact = exact_solution(system, records, cfg, options)
    print(f"exact: CT = {exact.ct:.10g} ({exact.status}), shed {100 * exact.shed_fraction:.4g} % of demand")
    outputs: Dict[str, str] = {}
    if args.exact_only:
        outputs["exact"] = os.path.join(out, "exact.csv")
        write_exact_csv(exact, outputs["exact"], args.timing)
    else:
        seeds = run_seeds(args.seed, args.seeds)
        rows = evaluate_grid(system, records, args.k_grid, methods, seeds, exact, cfg, options, args.jobs)
        outputs.update(report(rows, exact, out, timing=args.timing, figures=not args.no_plots))
        with open(outputs["table"], encoding="utf-8") as fh:
            sys.stdout.write(fh.read())
    _write_manifest(args, out, outputs, {"n_days": records.n_days, "exact_status": exact.status},
                    time.perf_counter() - t0)
    return 0


# -- parser ----------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--seed", type=int, default=0, help="base random seed")
    p.add_argument("--config", help="TOML file whose keys override the defaults of this command")
    p.add_argument("--manifest", help="replay the run recorded in this manifest.json")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mip-gap", type=float, default=1e-6)
    p.add_argument("--int-tol", type=float, default=1e-6)
    p.add_argument("--node-limit", type=int, default=100_000)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--lp-method", choices=("auto", "simplex", "highs"), default="auto")
    p.add_argument("--budget-mode", choices=("total", "per_category"), default=None,
                   help="override the budget mode of the system file")
    p.add_argument("--no-storage", action="store_true", help="forbid candidate storage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repdays", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="reduce hourly history to representative days")
    p.add_argument("--in", dest="input", default="synthetic", help="hourly CSV (default: bundled synthetic year)")
    p.add_argument("--days", type=int, default=None, help="use N days spread evenly over the input")
    p.add_argument("--method", choices=(TKM, MKM), help="required unless replaying a manifest")
    p.add_argument("--k", type=int)
    p.add_argument("--k1", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--max-iter", type=int, default=300)
    _common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("solve", help="build and solve (or export) the expansion model")
    p.add_argument("--system", default="desk3", help="system TOML, or a bundled name (rts24, desk3)")
    p.add_argument("--repdays", help="representative-day CSV written by 'cluster'")
    p.add_argument("--history", help="hourly CSV for the full chronological model")
    p.add_argument("--days", type=int, default=None, help="with --history: N days spread over the input")
    p.add_argument("--export", help="write the model to this .lp/.mps file and stop")
    p.add_argument("--format", choices=("lp", "mps"), default=None)
    p.add_argument("--import-solution", help="read an external 'name value' solution instead of solving")
    _solver_flags(p)
    _common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="clustering error study against the full-horizon optimum")
    p.add_argument("--system", default="desk3")
    p.add_argument("--in", dest="input", default="synthetic")
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--k-grid", type=_int_list, default=[2, 4, 7])
    p.add_argument("--methods", type=_str_list, default=[TKM, MKM])
    p.add_argument("--seeds", type=int, default=5, help="number of seeds per (method, K)")
    p.add_argument("--exact-only", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", choices=("wall", "none"), default="none",
                   help="'wall' fills the time columns (and breaks byte-identical reruns)")
    _solver_flags(p)
    _common(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def _apply_overrides(parser, args, doc: dict, source: str) -> argparse.Namespace:
    known = vars(args)
    for key, val in doc.items():
        attr = key.replace("-", "_")
        if attr == "in":
            attr = "input"
        if attr not in known or attr in ("command", "func"):
            raise UsageError(f"{source}: unknown option {key!r} for '{args.command}'")
        known[attr] = val
    return args


def _parse(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.manifest:
        with open(args.manifest, encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("command") != args.command:
            raise UsageError(f"manifest records '{doc.get('command')}', not '{args.command}'")
        out = args.out
        recorded = dict(doc["args"])
        recorded.pop("command", None)
        args = _apply_overrides(parser, args, recorded, args.manifest)
        if out:
            args.out = out
        args.manifest = None
    elif args.config:
        try:
            with open(args.config, "rb") as fh:
                doc = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"{args.config}: {exc}") from None
        section = doc.get(args.command, doc)
        section = {k: v for k, v in section.items() if not isinstance(v, dict)}
        # explicit command-line flags win over the config file
        given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
        given = {"input" if g == "in" else g for g in given}
        args = _apply_overrides(parser, args, {k: v for k, v in section.items()
                                               if k.replace("-", "_") not in given}, args.config)
        if isinstance(args.k_grid if hasattr(args, "k_grid") else None, str):
            args.k_grid = _int_list(args.k_grid)
        if isinstance(getattr(args, "methods", None), str):
            args.methods = _str_list(args.methods)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parse(argv)
    except SystemExit as exc:      # argparse usage errors already printed
        return int(exc.code or 0)
    except (UsageError, OSError, ValueError) as exc:
        print(f"repdays: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, SystemError_, IngestError, ClusteringError, BuildError, SolutionImportError) as exc:
        print(f"repdays: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"repdays: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        log.debug("failure", exc_info=True)
        print(f"repdays: runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
