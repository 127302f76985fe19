"""Report serialization: JSON documents, aligned text tables and two-column plot data."""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .io import spec_to_dict
from .mem import MemSchedule, ScheduleEvaluation
from .rop import SurvivabilityReport
from .rop_model import RopPlan
from .scenarios import FailureHistogram, ScenarioSet

REPORT_SCHEMA = "resilix.report/1"


def _round(x: float, digits: int = 10) -> float:
    # stable text output: strip float noise such as 0.9650000000000001
    return float(round(float(x), digits))


def _ints(a: np.ndarray) -> list:
    return np.asarray(a).astype(int).tolist()


def _floats(a: np.ndarray) -> list:
    return np.round(np.asarray(a, dtype=float), 10).tolist()


def histogram_doc(hist: FailureHistogram) -> dict:
    return {
        "sample_count": hist.sample_count,
        "bins": [{"failures": k, "count": c, "weight": _round(w)} for k, c, w in hist.to_rows()],
        "distinct_inverter_bins": [
            {"inverters": k, "count": b.raw_count, "weight": _round(b.weight)}
            for k, b in sorted(hist.distinct_inverter_bins.items())
        ],
    }


def plan_doc(plan: RopPlan, detail: bool = False) -> dict:
    doc = {
        "sr": _round(plan.sr),
        "status": plan.status,
        "alpha": plan.alpha,
        "commitment": _ints(plan.commitment),
        "scenario_success": _ints(plan.scenario_success),
    }
    if detail:
        doc.update(
            dispatch=_floats(plan.dispatch), usage=_ints(plan.usage),
            availability=_ints(plan.availability), interval_success=_ints(plan.interval_success),
            net_power=_floats(plan.net_power),
        )
    return doc


def mem_doc(schedule: MemSchedule, evaluation: ScheduleEvaluation | None = None) -> dict:
    doc = {
        "total_cost": _round(schedule.total_cost, 6),
        "commitment": _ints(schedule.commitment),
        "startup": _ints(schedule.startup),
        "dispatch": _floats(schedule.dispatch),
        "inverter_usage": _ints(schedule.inverter_usage),
    }
    if evaluation is not None:
        doc["sr"] = _round(evaluation.sr)
        doc["recourse"] = evaluation.recourse
    return doc


def scenario_summary(scenarios: ScenarioSet) -> dict:
    return {
        "seed": scenarios.seed,
        "sample_count": scenarios.sample_count,
        "distinct": len(scenarios),
        "probability_mode": scenarios.probability_mode,
    }


def report_doc(report: SurvivabilityReport, detail: bool = False) -> dict:
    gens = spec_to_dict(report.final_spec)["generators"]
    return {
        "schema": REPORT_SCHEMA,
        "config": report.config.echo(),
        "scenarios": scenario_summary(report.scenarios),
        "rop_sr": _round(report.rop_sr),
        "mem_sr": _round(report.mem_sr),
        "final_sr": _round(report.final_sr),
        "target_sr": report.config.target_sr,
        "enhancement_trace": [{"added_dgs": n, "sr": _round(sr)} for n, sr in report.enhancement_trace],
        "enhancement_exhausted": report.enhancement_exhausted,
        "added_generators": gens[len(gens) - report.added_dgs:],
        "plan": plan_doc(report.plan, detail),
        "mem": mem_doc(report.mem_schedule, report.mem_evaluation),
        "histogram": histogram_doc(report.histogram),
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def format_table(headers: Sequence[str], rows: Sequence[Sequence], title: str | None = None) -> str:
    """Right-aligned columns separated by two spaces; floats at four decimals."""
    cells = [[_cell(v) for v in row] for row in rows]
    widths = [max([len(h)] + [len(r[k]) for r in cells]) for k, h in enumerate(headers)]
    lines = [title] if title else []
    lines.append("  ".join(h.rjust(w) for h, w in zip(headers, widths)))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)
    return "\n".join(lines) + "\n"


def format_delimited(headers: Sequence[str], rows: Sequence[Sequence], sep: str = ",") -> str:
    out = [sep.join(headers)]
    out.extend(sep.join(_cell(v) if isinstance(v, float) else str(v) for v in r) for r in rows)
    return "\n".join(out) + "\n"


def sr_comparison_rows(results: Sequence[tuple[str, float, float]]) -> list[tuple]:
    return [(case, rop, mem, rop - mem) for case, rop, mem in results]


SR_COMPARISON_HEADERS = ("case", "rop_sr", "mem_sr", "difference")
ALPHA_HEADERS = ("alpha", "sr")
ENHANCEMENT_HEADERS = ("event", "added_dgs", "sr")


def enhancement_rows(traces: Sequence[tuple[str, Sequence[tuple[int, float]]]]) -> list[tuple]:
    return [(event, n, sr) for event, trace in traces for n, sr in trace]


def enhancement_summary(traces: Sequence[tuple[str, Sequence[tuple[int, float]]]]) -> str:
    """One row per event with the SR after each added DG, blank past the last step."""
    depth = max(len(t) for _, t in traces)
    headers = ["event", "no DG"] + [f"{k} DG" for k in range(1, depth)]
    rows = []
    for event, trace in traces:
        srs = [f"{sr:.4f}" for _, sr in trace]
        rows.append([event] + srs + ["/"] * (depth - len(srs)))
    return format_table(headers, rows)


def histogram_data(hist: FailureHistogram) -> str:
    """Two whitespace-separated columns: failure count and number of samples."""
    lines = ["# failures count"]
    lines.extend(f"{k} {c}" for k, c, _ in hist.to_rows())
    return "\n".join(lines) + "\n"


def report_text(report: SurvivabilityReport) -> str:
    parts = [
        format_table(("quantity", "value"), [
            ("rop_sr", report.rop_sr),
            ("mem_sr", report.mem_sr),
            ("final_sr", report.final_sr),
            ("target_sr", report.config.target_sr),
            ("added_dgs", report.added_dgs),
            ("distinct scenarios", len(report.scenarios)),
        ], title="survivability"),
        format_table(("added_dgs", "sr"), report.enhancement_trace, title="enhancement trace"),
        format_table(("failures", "count", "weight"), report.histogram.to_rows(), title="failure histogram"),
    ]
    if report.enhancement_exhausted:
        parts.append("ENHANCEMENT_EXHAUSTED: target not reached within the DG limit\n")
    return "\n".join(parts)
