"""JSON/CSV input files, bundled fixtures and spec serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import fields
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import InputError, Issue, SpecValidationError
from .model import (
    EventProfile,
    GeneratorSpec,
    InverterSpec,
    LoadProfile,
    MicrogridSpec,
    PortableDgTemplate,
    Stage,
    validate_spec,
)

FIXTURES = {
    "fixture": "table1_testbed.json",
    "testbed": "table1_testbed.json",
    "table1": "table1_testbed.json",
    "zero-margin": "table2_zero_margin.json",
    "table2": "table2_zero_margin.json",
}
_GEN_FIELDS = [f.name for f in fields(GeneratorSpec)]
_TPL_FIELDS = [f.name for f in fields(PortableDgTemplate)]


class ParseError(InputError):
    code = "PARSE_ERROR"


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("resilix") / "data" / FIXTURES[name]))


def _read_json(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _need(doc: dict, key: str, where: str) -> Any:
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in doc:
        raise ParseError(f"{where}.{key}: missing field")
    return doc[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _numbers(value: Any, where: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ParseError(f"{where}: expected a list of numbers")
    return tuple(_number(v, f"{where}[{k}]") for k, v in enumerate(value))


def spec_from_dict(doc: dict, profiles: dict[str, tuple[float, ...]] | None = None) -> MicrogridSpec:
    """Build a spec from a parsed document; ``profiles`` (from CSV) fill in time series."""
    if not isinstance(doc, dict):
        raise ParseError("spec: expected an object")
    gens = []
    for k, g in enumerate(_need(doc, "generators", "spec") or []):
        where = f"generators[{k}]"
        unknown = set(g) - set(_GEN_FIELDS) if isinstance(g, dict) else set()
        if unknown:
            raise ParseError(f"{where}: unknown field {sorted(unknown)[0]!r}")
        gens.append(GeneratorSpec(
            name=str(_need(g, "name", where)),
            p_min_kw=_number(_need(g, "p_min_kw", where), f"{where}.p_min_kw"),
            p_max_kw=_number(_need(g, "p_max_kw", where), f"{where}.p_max_kw"),
            ramp_kw_per_h=_number(_need(g, "ramp_kw_per_h", where), f"{where}.ramp_kw_per_h"),
            op_cost_per_kwh=_number(g.get("op_cost_per_kwh", 0.0), f"{where}.op_cost_per_kwh"),
            no_load_cost_per_h=_number(g.get("no_load_cost_per_h", 0.0), f"{where}.no_load_cost_per_h"),
            startup_cost=_number(g.get("startup_cost", 0.0), f"{where}.startup_cost"),
            initially_on=bool(g.get("initially_on", False)),
        ))
    invs = []
    for k, inv in enumerate(doc.get("inverters") or []):
        where = f"inverters[{k}]"
        name = str(_need(inv, "name", where))
        if profiles is not None and "output_kw" not in inv:
            if name not in profiles:
                raise SpecValidationError([Issue("HORIZON_MISMATCH", name,
                                                 f"profile CSV has no column for inverter {name!r}")])
            out = profiles[name]
        else:
            out = _numbers(_need(inv, "output_kw", where), f"{where}.output_kw")
        invs.append(InverterSpec(name, out))
    load_doc = doc.get("load") or {}
    if profiles is not None and "critical_kw" not in load_doc:
        if "critical_kw" not in profiles:
            raise SpecValidationError([Issue("HORIZON_MISMATCH", "critical_kw",
                                             "profile CSV has no critical_kw column")])
        load = LoadProfile(profiles["critical_kw"])
    else:
        load = LoadProfile(_numbers(_need(load_doc, "critical_kw", "load"), "load.critical_kw"))
    tpl = None
    if doc.get("portable_dg") is not None:
        t = doc["portable_dg"]
        if not isinstance(t, dict):
            raise ParseError("portable_dg: expected an object")
        unknown = set(t) - set(_TPL_FIELDS)
        if unknown:
            raise ParseError(f"portable_dg: unknown field {sorted(unknown)[0]!r}")
        vals = {key: (t[key] if key == "name" or t[key] is None else _number(t[key], f"portable_dg.{key}"))
                for key in t}
        tpl = PortableDgTemplate(**vals)
    hours = _number(_need(doc, "interval_hours", "spec"), "interval_hours")
    return MicrogridSpec(tuple(gens), tuple(invs), load, hours, tpl)


def spec_to_dict(spec: MicrogridSpec) -> dict:
    doc: dict[str, Any] = {
        "interval_hours": spec.interval_hours,
        "generators": [{k: getattr(g, k) for k in _GEN_FIELDS} for g in spec.generators],
        "inverters": [{"name": inv.name, "output_kw": list(inv.output_kw)} for inv in spec.inverters],
        "load": {"critical_kw": list(spec.load.critical_kw)},
    }
    if spec.portable_dg_template is not None:
        doc["portable_dg"] = {k: v for k in _TPL_FIELDS if (v := getattr(spec.portable_dg_template, k)) is not None}
    return doc


def dump_spec(spec: MicrogridSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def event_from_dict(doc: dict) -> EventProfile:
    stages = []
    for k, s in enumerate(_need(doc, "stages", "event")):
        where = f"stages[{k}]"
        n = _need(s, "intervals", where)
        if isinstance(n, bool) or not isinstance(n, int):
            raise ParseError(f"{where}.intervals: expected an integer, got {n!r}")
        p = _need(s, "failure_prob", where)
        prob = _numbers(p, f"{where}.failure_prob") if isinstance(p, list) else _number(p, f"{where}.failure_prob")
        stages.append(Stage(n, prob))
    return EventProfile(tuple(stages))


def event_to_dict(event: EventProfile) -> dict:
    return {"stages": [
        {"intervals": s.intervals,
         "failure_prob": list(s.failure_prob) if isinstance(s.failure_prob, tuple) else s.failure_prob}
        for s in event.stages
    ]}


def read_profiles_csv(text: str, source: str = "profiles") -> dict[str, tuple[float, ...]]:
    """Columns of a ``time,critical_kw,<inverter>...`` file, keyed by header name."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError(f"{source}: empty file") from None
    if not header or header[0] != "time" or "critical_kw" not in header:
        raise ParseError(f"{source}: line 1: header must start with time and include critical_kw")
    cols: dict[str, list[float]] = {h: [] for h in header[1:]}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{source}: line {lineno}: {len(row)} fields, header has {len(header)}")
        for name, cell in zip(header[1:], row[1:]):
            try:
                cols[name].append(float(cell))
            except ValueError:
                raise ParseError(f"{source}: line {lineno}, field {name!r}: bad number {cell!r}") from None
    return {k: tuple(v) for k, v in cols.items()}


def _source_text(path: str | Path) -> tuple[str, str]:
    key = str(path)
    if key in FIXTURES:
        p = fixture_path(key)
    else:
        p = Path(path)
    try:
        return p.read_text(encoding="utf-8"), str(p)
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc.strerror}", code="FILE_NOT_FOUND") from None


def load_spec(path: str | Path, profiles_csv: str | Path | None = None) -> MicrogridSpec:
    text, source = _source_text(path)
    profiles = None
    if profiles_csv is not None:
        csv_text, csv_source = _source_text(profiles_csv)
        profiles = read_profiles_csv(csv_text, csv_source)
    return validate_spec(spec_from_dict(_read_json(text, source), profiles))


def load_event(path: str | Path) -> EventProfile:
    text, source = _source_text(path)
    return event_from_dict(_read_json(text, source))


def resolve_event(ref: str | Path, horizon: int) -> EventProfile:
    """An event file, or a built-in name (``extreme``, ``C4``, ...) laid over ``horizon`` intervals."""
    from .rop import CASE_TABLE, NAMED_EVENTS, named_event

    key = str(ref)
    if not Path(key).exists() and (key.lower() in NAMED_EVENTS or key.upper() in CASE_TABLE):
        return named_event(key, horizon)
    return load_event(ref)


def load_inputs(spec_path: str | Path, event_path: str | Path | None = None,
                profiles_csv: str | Path | None = None) -> tuple[MicrogridSpec, EventProfile | None]:
    """Parse and validate a spec file (or fixture name) and an optional event file or name."""
    spec = load_spec(spec_path, profiles_csv)
    event = None
    if event_path is not None:
        event = resolve_event(event_path, spec.horizon)
        validate_spec(spec, event)
    return spec, event
