import json

import pytest

from resilix.cli import main
from resilix.errors import InputError, SpecValidationError
from resilix.io import (
    dump_spec,
    event_from_dict,
    event_to_dict,
    load_event,
    load_inputs,
    load_spec,
    read_profiles_csv,
    spec_from_dict,
    spec_to_dict,
)
from resilix.rop import named_event


def test_table1_values():
    spec = load_spec("fixture")
    rows = [(g.name, g.p_min_kw, g.p_max_kw) for g in spec.generators]
    assert rows == [("MT", 18, 180), ("FC", 12.7, 75), ("DG", 14, 80)]


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"interval_hours": 1,\n  "generators": [}\n')
    with pytest.raises(InputError) as err:
        load_spec(path)
    assert err.value.code == "PARSE_ERROR" and "line 2" in str(err.value)


def test_unknown_field_rejected():
    doc = spec_to_dict(load_spec("fixture"))
    doc["generators"][0]["colour"] = "red"
    with pytest.raises(InputError) as err:
        spec_from_dict(doc)
    assert "colour" in str(err.value)


def test_missing_file():
    with pytest.raises(InputError) as err:
        load_spec("/nonexistent/spec.json")
    assert err.value.code == "FILE_NOT_FOUND"


def _csv_spec(tmp_path, header, rows):
    doc = spec_to_dict(load_spec("fixture"))
    for inv in doc["inverters"]:
        del inv["output_kw"]
    del doc["load"]["critical_kw"]
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(doc))
    csv_path = tmp_path / "p.csv"
    csv_path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
    return spec_path, csv_path


def test_profiles_csv(tmp_path):
    names = [i.name for i in load_spec("fixture").inverters]
    header = ["time", "critical_kw"] + names
    rows = [[t, 100 + t] + [5] * len(names) for t in range(3)]
    spec_path, csv_path = _csv_spec(tmp_path, header, rows)
    spec, _ = load_inputs(spec_path, None, csv_path)
    assert spec.load.critical_kw == (100, 101, 102)
    assert all(inv.output_kw == (5, 5, 5) for inv in spec.inverters)


def test_profiles_csv_missing_column(tmp_path):
    names = [i.name for i in load_spec("fixture").inverters]
    header = ["time", "critical_kw"] + names[:-1]
    rows = [[t, 100] + [5] * (len(names) - 1) for t in range(3)]
    spec_path, csv_path = _csv_spec(tmp_path, header, rows)
    with pytest.raises(SpecValidationError) as err:
        load_inputs(spec_path, None, csv_path)
    assert err.value.code == "HORIZON_MISMATCH" and names[-1] in str(err.value)


def test_profiles_bad_number():
    with pytest.raises(InputError) as err:
        read_profiles_csv("time,critical_kw\n0,abc\n")
    assert err.value.code == "PARSE_ERROR" and "line 2" in str(err.value)


def test_spec_round_trip():
    spec = load_spec("fixture")
    assert spec_from_dict(json.loads(dump_spec(spec))) == spec
    assert dump_spec(spec) == dump_spec(spec_from_dict(json.loads(dump_spec(spec))))


def test_event_round_trip(tmp_path):
    ev = named_event("extreme", 3)
    assert event_from_dict(event_to_dict(ev)) == ev
    path = tmp_path / "ev.json"
    path.write_text(json.dumps(event_to_dict(ev)))
    assert load_event(path) == ev


def test_named_event_resolution():
    _, ev = load_inputs("fixture", "moderate")
    assert [s.failure_prob for s in ev.stages] == [0.01, 0.03, 0.01]


# command line ------------------------------------------------------------------

def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_plan_example(tmp_path, capsys):
    out = tmp_path / "plan"
    code, cap = run(capsys, "plan", "--spec", "fixture", "--event", "extreme", "--target-sr", "0.95",
                    "--max-dg", "3", "--seed", "7", "--count", "200", "--out", str(out))
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    trace = doc["enhancement_trace"]
    assert trace[0]["added_dgs"] == 0 and doc["final_sr"] >= 0.95
    assert doc["rop_sr"] >= doc["mem_sr"]
    for name in ("report.txt", "report_histogram.dat", "enhancement.txt", "enhancement.csv",
                 "figures/enhancement.png", "figures/report_histogram.png"):
        assert (out / name).stat().st_size > 0
    assert "enhancement trace" in cap.out


def test_seed_required_is_usage_error(capsys):
    code, cap = run(capsys, "rop", "--count", "10")
    assert code == 64 and "--seed" in cap.err


def test_bad_option_is_usage_error(capsys):
    assert run(capsys, "rop", "--seed", "1", "--solver", "gurobi")[0] == 64


def test_input_error_exit(capsys, tmp_path):
    bad = tmp_path / "s.json"
    bad.write_text("{")
    code, cap = run(capsys, "rop", "--seed", "1", "--spec", str(bad))
    assert code == 1 and "PARSE_ERROR" in cap.err


def test_solver_error_exit(capsys):
    code, cap = run(capsys, "rop", "--seed", "1", "--count", "20", "--solver", "external",
                    "--solver-cmd", "false {input} {output}")
    assert code == 2 and "SOLVER_LAUNCH_FAILED" in cap.err


def test_outputs_are_byte_identical(tmp_path, capsys):
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert run(capsys, "rop", "--seed", "3", "--count", "150", "--out", str(out))[0] == 0
        texts.append((out / "rop.json").read_bytes())
    assert texts[0] == texts[1]


def test_compare_rop_at_least_mem(tmp_path, capsys):
    out = tmp_path / "cmp"
    assert run(capsys, "compare", "--seed", "2", "--count", "200", "--out", str(out))[0] == 0
    header, row = (out / "compare.csv").read_text().splitlines()
    assert header == "case,rop_sr,mem_sr,difference"
    _, rop, mem, diff = row.split(",")
    assert float(rop) >= float(mem) and float(diff) >= 0
    assert (out / "figures" / "compare.png").exists()


def test_scenarios_command(tmp_path, capsys):
    out = tmp_path / "s.json"
    hist = tmp_path / "h.dat"
    code, cap = run(capsys, "scenarios", "--event", "C2", "--seed", "1", "--count", "500",
                    "--out", str(out), "--hist", str(hist))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["sample_count"] == 500 and sum(s["occurrences"] for s in doc["scenarios"]) == 500
    lines = hist.read_text().splitlines()
    assert lines[0] == "# failures count" and sum(int(ln.split()[1]) for ln in lines[1:]) == 500


def test_mem_and_alpha_sweep(tmp_path, capsys):
    assert run(capsys, "mem", "--seed", "1", "--count", "100", "--recourse", "redispatch",
               "--out", str(tmp_path))[0] == 0
    assert json.loads((tmp_path / "mem.json").read_text())["mem"]["recourse"] == "redispatch"
    code, cap = run(capsys, "alpha-sweep", "--seed", "1", "--count", "100", "--alphas", "0,1.05",
                    "--out", str(tmp_path), "--no-figures")
    assert code == 0
    rows = (tmp_path / "alpha_sweep.csv").read_text().splitlines()[1:]
    assert [float(r.split(",")[1]) for r in rows] == [1.0, 0.0]
    assert not (tmp_path / "figures").exists()


def test_oracle_command(tmp_path, capsys):
    spec = {
        "interval_hours": 1.0,
        "generators": [{"name": "g", "p_min_kw": 0, "p_max_kw": 5, "ramp_kw_per_h": 5}],
        "inverters": [{"name": "i", "output_kw": [10, 10]}],
        "load": {"critical_kw": [10, 10]},
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(spec))
    code, cap = run(capsys, "oracle", "--spec", str(path), "--event", "C6", "--seed", "1", "--count", "200")
    assert code == 0 and "oracle_sr" in cap.out
