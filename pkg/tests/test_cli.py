import csv
import json

import numpy as np
import pytest

from coil.cli import CSV_COLUMNS, main
from coil.errors import InvariantViolation, ParseError
from coil.gridworld import generate_scenario, run_episode
from coil.model import PROFILES
from coil.trace import read_trace, verify_records, verify_trace, write_trace
from coil.ufl import dumps, random_instance

MED = PROFILES["med"]


@pytest.fixture
def trace(tmp_path):
    log = run_episode(generate_scenario(0), "COIL", MED)
    return write_trace(tmp_path / "t.jsonl", log, seed=0)


def test_valid_trace(trace):
    totals = verify_trace(trace)
    assert totals["n_pref"] > 0
    assert main(["replay", str(trace)]) == 0


def test_tampered_cost(trace):
    lines = trace.read_text().splitlines()
    rec = json.loads(lines[2])
    rec["charged_cost"] += 1
    lines[2] = json.dumps(rec)
    trace.write_text("\n".join(lines) + "\n")
    with pytest.raises(InvariantViolation) as exc:
        verify_trace(trace)
    assert exc.value.step == rec["step"]
    assert main(["replay", str(trace)]) == 1


def test_tampered_summary(trace):
    recs = read_trace(trace)
    recs[-1]["realized_cost"] += 5
    with pytest.raises(InvariantViolation):
        verify_records(recs)


def test_unjustified_pref_request(trace):
    recs = read_trace(trace)
    step = next(r for r in recs if r["type"] == "step" and r["action"]["kind"] == "pref")
    step["info"]["expected_pref_cost"] = step["info"]["known_prefs_cost"]
    with pytest.raises(InvariantViolation):
        verify_records(recs)


def test_empty_trace(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert verify_trace(p) == {}
    assert main(["replay", str(p)]) == 0


def test_malformed_trace(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text("{not json\n")
    with pytest.raises(ParseError):
        verify_trace(p)
    assert main(["replay", str(p)]) == 2
    p.write_text(json.dumps({"type": "step"}) + "\n")
    with pytest.raises(ParseError):
        verify_trace(p)


def test_run_writes_csv_and_metadata(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--seeds", "2", "--profile", "med", "--algos", "COIL,CBA",
                 "--out", str(out), "--trace", str(out / "traces")]) == 0
    with (out / "results.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 4
    meta = json.loads((out / "run.json").read_text())
    assert {"root_seed", "config_hash", "version", "config"} <= set(meta)
    assert len(list((out / "traces").glob("*.jsonl"))) == 4
    assert len(list((out / "scenarios").glob("*.json"))) == 2
    assert main(["replay", str(out / "traces")]) == 0
    printed = capsys.readouterr().out
    coil = [float(r["realized_cost"]) for r in rows if r["algorithm"] == "COIL"]
    assert f"{np.mean(coil):.2f}" in printed


def test_minimal_run_one_row(tmp_path):
    assert main(["run", "--seeds", "1", "--profile", "low", "--algos", "COIL", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "results.csv").read_text().splitlines()) == 2


def test_env_seed_override(tmp_path, monkeypatch):
    monkeypatch.setenv("COIL_SEED", "77")
    assert main(["run", "--seeds", "1", "--profile", "low", "--algos", "COIL", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "run.json").read_text())["root_seed"] == 77
    assert (tmp_path / "results.csv").read_text().splitlines()[1].startswith("77,")


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"profiles": {"custom": {"c_skill": 150}}, "algorithms": ["IG"],
                               "n_seeds": 2, "seq_len": 6}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "results.csv").read_text().splitlines()
    assert len(rows) == 3 and rows[1].split(",")[1:3] == ["IG", "custom"]


@pytest.mark.parametrize("argv,field", [(["--algos", "FOO"], "algos"),
                                        (["--profile", "extreme"], "profile"),
                                        (["--challenging-frac", "2"], "challenging_frac"),
                                        (["--seeds", "0"], "seeds")])
def test_bad_run_config(tmp_path, capsys, argv, field):
    assert main(["run", "--out", str(tmp_path)] + argv) == 2
    assert repr(field) in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_sedes": 3}))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "n_sedes" in capsys.readouterr().err


def test_bench_ufl(tmp_path, capsys):
    assert main(["bench-ufl", "--sizes", "4,6", "--instances", "3", "--out", str(tmp_path)]) == 0
    with (tmp_path / "bench_ufl.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert all(1.0 - 1e-9 <= float(r["ratio"]) <= np.log(int(r["n_demands"])) + 1 for r in rows)
    assert "mean ratio" in capsys.readouterr().out


def test_bench_single_facility_ratio_one(tmp_path):
    assert main(["bench-ufl", "--sizes", "5", "--facilities", "1", "--instances", "4",
                 "--out", str(tmp_path)]) == 0
    with (tmp_path / "bench_ufl.csv").open() as fh:
        assert all(float(r["ratio"]) == 1.0 for r in csv.DictReader(fh))


def test_bench_instance_file(tmp_path):
    inst = tmp_path / "inst.txt"
    inst.write_text(dumps(random_instance(np.random.default_rng(0), 4, 4)))
    assert main(["bench-ufl", "--instance", str(inst), "--out", str(tmp_path)]) == 0
    inst.write_text("garbage\n")
    assert main(["bench-ufl", "--instance", str(inst), "--out", str(tmp_path)]) == 1
