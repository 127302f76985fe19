"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or model, 2 solver failure, 64 usage
error (unknown flag, missing ``--seed``).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import InputError, ModelError, ResilixError, SolverError
from .io import load_inputs, resolve_event
from .mem import RECOURSE_MODES, build_mem_schedule, evaluate_schedule_sr
from .oracle import brute_force_sr
from .report import (
    ALPHA_HEADERS,
    ENHANCEMENT_HEADERS,
    SR_COMPARISON_HEADERS,
    dumps,
    enhancement_rows,
    enhancement_summary,
    format_delimited,
    format_table,
    histogram_data,
    mem_doc,
    plan_doc,
    report_doc,
    report_text,
    scenario_summary,
    sr_comparison_rows,
)
from .rop import CASE_TABLE, RopConfig, alpha_sweep, named_event, run_rop_on, scenarios_for, solve_rop
from .rop_model import build_rop_model
from .scenarios import MODES, failure_count_histogram
from .solve import BACKENDS, SolveBudget, solve_bundled

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64
SOLVER_CODES = {"PLAN_INVALID", "INFEASIBLE_SOLUTION", "OBJECTIVE_MISMATCH", "SOLVER_BUDGET_EXCEEDED"}

log = logging.getLogger("resilix")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _alphas(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of numbers: {text!r}") from None


def _common(p: argparse.ArgumentParser, event_default: str | None = "extreme") -> None:
    p.add_argument("--spec", default="fixture", help="spec JSON file or a bundled fixture name (fixture, zero-margin)")
    p.add_argument("--event", default=event_default,
                   help="event JSON file, a named event (non-emergency, moderate, extreme) or a case C1..C6")
    p.add_argument("--profiles", help="CSV with time,critical_kw,<inverter names...> columns")
    p.add_argument("--count", type=int, default=1000, help="Monte Carlo samples")
    p.add_argument("--seed", type=int, help="sampling seed (required)")
    p.add_argument("--mode", choices=MODES, default="empirical", help="scenario probability mode")
    p.add_argument("--out", help="output directory (file for the scenarios command)")


def _solver_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=1.0, help="fraction of critical load that counts as served")
    p.add_argument("--solver", choices=BACKENDS, default="auto")
    p.add_argument("--solver-cmd", help="external solver command template with {input} and {output}")
    p.add_argument("--time-limit", type=float, default=600.0, help="wall seconds per MILP solve")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures when writing --out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="resilix", description="Survivability planning for islanded microgrids.")
    parser.add_argument("--version", action="version", version=f"resilix {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scenarios", help="sample failure scenarios and print the failure histogram")
    _common(p)
    p.add_argument("--hist", help="write two-column histogram data here")
    p.add_argument("--figure", help="write a histogram PNG here")

    p = sub.add_parser("rop", help="solve the survivability model once")
    _common(p)
    _solver_opts(p)
    p.add_argument("--tie-break", action="store_true", help="second phase minimizing expected cost")

    p = sub.add_parser("mem", help="score the cost-minimizing baseline schedule")
    _common(p)
    _solver_opts(p)
    p.add_argument("--recourse", choices=RECOURSE_MODES, default="none")

    p = sub.add_parser("compare", help="ROP and MEM on one shared scenario set")
    _common(p)
    _solver_opts(p)
    p.add_argument("--recourse", choices=RECOURSE_MODES, default="none")

    p = sub.add_parser("cases", help="ROP against MEM for each failure case C1..C6")
    _common(p, event_default=None)
    _solver_opts(p)
    p.add_argument("--cases", default=",".join(CASE_TABLE), help="comma list of case labels")

    p = sub.add_parser("alpha-sweep", help="optimal SR over a list of alpha values")
    _common(p)
    _solver_opts(p)
    p.add_argument("--alphas", type=_alphas, default=[0.9, 0.95, 1.0, 1.02, 1.05])

    p = sub.add_parser("plan", help="full loop: solve, then add portable DGs until the target SR holds")
    _common(p)
    _solver_opts(p)
    p.add_argument("--target-sr", type=float, default=0.95)
    p.add_argument("--max-dg", type=int, default=3)
    p.add_argument("--events", help="comma list of events to plan in turn (overrides --event)")
    p.add_argument("--tie-break", action="store_true")

    p = sub.add_parser("oracle", help="exhaustive optimum next to the bundled solver (tiny instances only)")
    _common(p)
    p.add_argument("--alpha", type=float, default=1.0)
    return parser


def _config(args: argparse.Namespace, **extra) -> RopConfig:
    if args.seed is None:
        raise UsageError(f"resilix {args.command}: --seed is required (sampling is seeded by contract)")
    budget = SolveBudget(max_wall_seconds=getattr(args, "time_limit", 600.0))
    return RopConfig(alpha=getattr(args, "alpha", 1.0), scenario_count=args.count, seed=args.seed,
                     solver=getattr(args, "solver", "auto"), budget=budget, mode=args.mode,
                     solver_cmd=getattr(args, "solver_cmd", None), **extra)


def _out_dir(args: argparse.Namespace) -> Path | None:
    if not args.out:
        return None
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)


def _figures(args: argparse.Namespace, out: Path | None) -> Path | None:
    if out is None or getattr(args, "no_figures", False):
        return None
    return out / "figures"


def _inputs(args: argparse.Namespace):
    spec, event = load_inputs(args.spec, args.event, args.profiles)
    return spec, event


def cmd_scenarios(args) -> int:
    cfg = _config(args)
    spec, event = _inputs(args)
    scenarios = scenarios_for(spec, event, cfg)
    hist = failure_count_histogram(scenarios)
    print(format_table(("failures", "count", "weight"), hist.to_rows(),
                       title=f"{len(scenarios)} distinct scenarios from {scenarios.sample_count} samples"), end="")
    if args.out:
        _write(Path(args.out), scenarios.to_json())
    if args.hist:
        _write(Path(args.hist), histogram_data(hist))
    if args.figure:
        from .plots import plot_histogram

        plot_histogram(hist, args.figure)
    return EXIT_OK


def cmd_rop(args) -> int:
    cfg = _config(args, tie_break=args.tie_break)
    spec, event = _inputs(args)
    scenarios = scenarios_for(spec, event, cfg)
    plan = solve_rop(spec, scenarios, cfg.alpha, cfg.solver, cfg.budget, cfg.solver_cmd, cfg.tie_break)
    print(format_table(("quantity", "value"), [
        ("rop_sr", plan.sr), ("status", plan.status), ("distinct scenarios", len(scenarios))]), end="")
    out = _out_dir(args)
    if out:
        doc = {"scenarios": scenario_summary(scenarios), "config": cfg.echo(), "plan": plan_doc(plan, detail=True)}
        _write(out / "rop.json", dumps(doc))
    return EXIT_OK


def cmd_mem(args) -> int:
    cfg = _config(args)
    spec, event = _inputs(args)
    scenarios = scenarios_for(spec, event, cfg)
    schedule = build_mem_schedule(spec, cfg.solver, cfg.budget, cfg.solver_cmd)
    ev = evaluate_schedule_sr(spec, schedule, scenarios, cfg.alpha, args.recourse)
    print(format_table(("quantity", "value"), [
        ("mem_sr", ev.sr), ("recourse", ev.recourse), ("total_cost", schedule.total_cost)]), end="")
    out = _out_dir(args)
    if out:
        _write(out / "mem.json", dumps({"scenarios": scenario_summary(scenarios), "mem": mem_doc(schedule, ev)}))
    return EXIT_OK


def _compare_one(spec, scenarios, cfg: RopConfig, recourse: str = "none") -> tuple[float, float]:
    schedule = build_mem_schedule(spec, cfg.solver, cfg.budget, cfg.solver_cmd)
    mem_sr = evaluate_schedule_sr(spec, schedule, scenarios, cfg.alpha, recourse).sr
    rop_sr = solve_rop(spec, scenarios, cfg.alpha, cfg.solver, cfg.budget, cfg.solver_cmd).sr
    return rop_sr, mem_sr


def _write_comparison(args, results, name: str) -> None:
    rows = sr_comparison_rows(results)
    print(format_table(SR_COMPARISON_HEADERS, rows), end="")
    out = _out_dir(args)
    if out:
        _write(out / f"{name}.txt", format_table(SR_COMPARISON_HEADERS, rows))
        _write(out / f"{name}.csv", format_delimited(SR_COMPARISON_HEADERS, rows))
        figs = _figures(args, out)
        if figs:
            from .plots import plot_sr_comparison

            plot_sr_comparison(results, figs / f"{name}.png")


def cmd_compare(args) -> int:
    cfg = _config(args)
    spec, event = _inputs(args)
    scenarios = scenarios_for(spec, event, cfg)
    rop_sr, mem_sr = _compare_one(spec, scenarios, cfg, args.recourse)
    _write_comparison(args, [(str(args.event), rop_sr, mem_sr)], "compare")
    return EXIT_OK


def cmd_cases(args) -> int:
    cfg = _config(args)
    spec, _ = load_inputs(args.spec, None, args.profiles)
    results = []
    for label in [c.strip() for c in args.cases.split(",") if c.strip()]:
        scenarios = scenarios_for(spec, named_event(label, spec.horizon), cfg)
        results.append((label, *_compare_one(spec, scenarios, cfg)))
        log.info("%s: rop %.4f mem %.4f", label, results[-1][1], results[-1][2])
    _write_comparison(args, results, "cases")
    return EXIT_OK


def cmd_alpha_sweep(args) -> int:
    cfg = _config(args)
    spec, event = _inputs(args)
    rows = alpha_sweep(spec, event, args.alphas, cfg)
    print(format_table(ALPHA_HEADERS, rows), end="")
    out = _out_dir(args)
    if out:
        _write(out / "alpha_sweep.txt", format_table(ALPHA_HEADERS, rows))
        _write(out / "alpha_sweep.csv", format_delimited(ALPHA_HEADERS, rows))
        figs = _figures(args, out)
        if figs:
            from .plots import plot_alpha_sweep

            plot_alpha_sweep(rows, figs / "alpha_sweep.png")
    return EXIT_OK


def cmd_plan(args) -> int:
    cfg = _config(args, target_sr=args.target_sr, max_added_dgs=args.max_dg, tie_break=args.tie_break)
    spec, _ = load_inputs(args.spec, None, args.profiles)
    names = [e.strip() for e in args.events.split(",")] if args.events else [args.event]
    out = _out_dir(args)
    traces, exhausted = [], False
    for name in names:
        event = resolve_event(name, spec.horizon)
        report = run_rop_on(spec, scenarios_for(spec, event, cfg), cfg)
        traces.append((name, report.enhancement_trace))
        exhausted |= report.enhancement_exhausted
        if len(names) > 1:
            print(f"== {name}")
        print(report_text(report), end="")
        if out:
            stem = "report" if len(names) == 1 else f"report_{Path(name).stem}"
            _write(out / f"{stem}.json", dumps(report_doc(report)))
            _write(out / f"{stem}.txt", report_text(report))
            _write(out / f"{stem}_histogram.dat", histogram_data(report.histogram))
            figs = _figures(args, out)
            if figs:
                from .plots import plot_histogram

                plot_histogram(report.histogram, figs / f"{stem}_histogram.png")
    if len(names) > 1:
        print(enhancement_summary(traces), end="")
    if out:
        _write(out / "enhancement.txt", enhancement_summary(traces))
        _write(out / "enhancement.csv", format_delimited(ENHANCEMENT_HEADERS, enhancement_rows(traces)))
        figs = _figures(args, out)
        if figs:
            from .plots import plot_enhancement

            plot_enhancement(traces, figs / "enhancement.png", target=cfg.target_sr)
    if exhausted:
        log.warning("ENHANCEMENT_EXHAUSTED for at least one event")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _config(args)
    spec, event = _inputs(args)
    scenarios = scenarios_for(spec, event, cfg)
    oracle = brute_force_sr(spec, scenarios, cfg.alpha)
    sol = solve_bundled(build_rop_model(spec, scenarios, cfg.alpha))
    rows = [("oracle_sr", oracle.sr), ("bundled_sr", sol.objective_value), ("bundled_status", sol.status),
            ("commitments_checked", oracle.commitments_checked), ("nodes", sol.nodes)]
    print(format_table(("quantity", "value"), rows), end="")
    out = _out_dir(args)
    if out:
        _write(out / "oracle.json", dumps({
            "oracle_sr": oracle.sr, "bundled_sr": sol.objective_value, "bundled_status": sol.status,
            "best_commitment": oracle.best_commitment.astype(int).tolist(),
            "per_scenario_success": oracle.per_scenario_success.astype(int).tolist(),
        }))
    return EXIT_OK if abs(oracle.sr - sol.objective_value) <= 1e-9 else EXIT_SOLVER


COMMANDS = {
    "scenarios": cmd_scenarios, "rop": cmd_rop, "mem": cmd_mem, "compare": cmd_compare, "cases": cmd_cases,
    "alpha-sweep": cmd_alpha_sweep, "plan": cmd_plan, "oracle": cmd_oracle,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER if exc.code in SOLVER_CODES else EXIT_INVALID
    except (InputError, ResilixError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
