"""Minimal external-solver adapter: ``python -m resilix.lp_shim INPUT.lp OUTPUT.sol``.

With the default ``highspy`` engine HiGHS parses the LP file itself, so the
file format is exercised by an independent reader. The ``resilix`` engine
reads it back with :func:`resilix.lpformat.read_lp_text` and solves with
``scipy.optimize.milp``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import highspy


def solve_with_highspy(inp: str, time_limit: float) -> tuple[list[str], list[float], float | None]:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(time_limit))
    h.setOptionValue("mip_rel_gap", 1e-9)
    if h.readModel(inp) != highspy.HighsStatus.kOk:
        raise RuntimeError(f"HiGHS could not read {inp}")
    h.run()
    if h.getModelStatus() != highspy.HighsModelStatus.kOptimal:
        raise RuntimeError(f"HiGHS status {h.modelStatusToString(h.getModelStatus())}")
    lp = h.getLp()
    names = [h.getColName(k)[1] for k in range(lp.num_col_)]
    return names, list(h.getSolution().col_value), h.getInfo().objective_function_value


def solve_with_resilix(inp: str, time_limit: float) -> tuple[list[str], list[float], float | None]:
    from .lpformat import read_lp_text
    from .solve import OPTIMAL, SolveBudget, solve_highs

    problem = read_lp_text(Path(inp).read_text())
    sol = solve_highs(problem, SolveBudget(max_wall_seconds=time_limit))
    if sol.status != OPTIMAL:
        raise RuntimeError(f"solve ended with status {sol.status}")
    return [v.name for v in problem.variables], list(sol.x), sol.objective_value


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="resilix.lp_shim")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--engine", choices=("highspy", "resilix"), default="highspy")
    p.add_argument("--time-limit", type=float, default=600.0)
    args = p.parse_args(argv)
    run = solve_with_highspy if args.engine == "highspy" else solve_with_resilix
    try:
        names, values, obj = run(args.input, args.time_limit)
    except (RuntimeError, OSError) as exc:
        print(f"lp_shim: {exc}", file=sys.stderr)
        return 1
    lines = [f"# lp_shim engine={args.engine}"]
    if obj is not None:
        lines.append(f"=obj= {obj:.17g}")
    lines.extend(f"{n} {v:.17g}" for n, v in zip(names, values))
    Path(args.output).write_text("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
