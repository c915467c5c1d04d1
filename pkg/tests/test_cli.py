import json
import os

import pytest

from helixlink.cli import main
from helixlink.output import fmt, read_calibration, read_csv, render_csv
from helixlink.errors import MissingCalibrationError

SHORT = "[profile]\nkind = sprint\nspeed_mph = 120\ncruise_s = 0.5\n[environment]\nkind = urban\n"


@pytest.fixture()
def scenario(tmp_path):
    p = tmp_path / "s.ini"
    p.write_text(SHORT)
    return str(p)


def _files(d):
    out = {}
    for root, _, names in os.walk(d):
        for n in names:
            path = os.path.join(root, n)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, d)] = fh.read()
    return out


def test_fmt_cells():
    assert fmt(True) == "1" and fmt(3) == "3" and fmt(0.0) == "0"
    assert fmt(1.23456789) == "1.23457" and fmt(float("nan")) == "nan"
    text = render_csv(("a", "b"), [(1, 0.5)], ["artifact: x"])
    assert text == "# artifact: x\na,b\n1,0.5\n"


def test_usage_and_config_exit_codes(tmp_path, capsys):
    assert main([]) == 1
    assert main(["fly"]) == 1
    assert main(["run", "--runs", "0"]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[profile]\nspeed = 3\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == 2


def test_tuned_run_requires_calibration(tmp_path, scenario, capsys):
    assert main(["run", "--config", scenario, "--out", str(tmp_path)]) == 2
    assert "calibrate" in capsys.readouterr().err
    assert main(["run", "--config", scenario, "--mode", "static", "--out", str(tmp_path)]) == 0
    with pytest.raises(MissingCalibrationError):
        read_calibration(str(tmp_path / "missing.csv"))


def test_calibration_roundtrip(tmp_path, table):
    assert main(["calibrate", "--out", str(tmp_path)]) == 0
    t = read_calibration(str(tmp_path / "calibration.csv"))
    assert t.frequencies.tolist() == table.frequencies.tolist()
    assert t.pitches.tolist() == table.pitches.tolist()
    assert t.frequency_step_hz == 25.0


def test_full_pipeline_is_deterministic(tmp_path, scenario):
    outs = []
    for name in ("a", "b"):
        d = str(tmp_path / name)
        base = ["--config", scenario, "--seed", "5", "--out", d]
        assert main(["calibrate"] + base) == 0
        assert main(["run", "--mode", "both"] + base) == 0
        assert main(["sweep", "--runs", "2", "--speeds", "0", "60", "120"] + base) == 0
        assert main(["bench", "--packets", "1000", "--offsets", "0", "600"] + base) == 0
        assert main(["report"] + base) == 0
        outs.append(_files(d))
    assert outs[0].keys() == outs[1].keys()
    for k in outs[0]:
        assert outs[0][k] == outs[1][k], k
    names = set(outs[0])
    for n in ("run_metrics.csv", "sweep.csv", "sweep_runs.csv", "regression.csv", "comparisons.csv",
              "anova.csv", "bench.csv", "report/per_vs_speed.csv", "report/per_vs_speed.png",
              "report/gain_vs_bank.png", "report/rssi_trace.csv", "report/actuator_trace.png"):
        assert n in names
    meta, cols, rows = read_csv(str(tmp_path / "a" / "sweep.csv"))
    assert meta["seed"] == "5" and meta["artifact"].startswith("helixlink")
    assert "calibration_table" in meta and len(rows) == 6


def test_thread_count_does_not_change_outputs(tmp_path, scenario, monkeypatch):
    outs = []
    for n in ("1", "3"):
        monkeypatch.setenv("HELIX_SIM_THREADS", n)
        d = str(tmp_path / n)
        base = ["--config", scenario, "--out", d, "--mode", "static"]
        assert main(["sweep", "--runs", "3", "--speeds", "0", "100"] + base) == 0
        outs.append(_files(d))
    assert outs[0] == outs[1]


def test_records_format(tmp_path, scenario):
    d = str(tmp_path)
    assert main(["run", "--config", scenario, "--mode", "static", "--format", "records", "--out", d]) == 0
    with open(os.path.join(d, "run_metrics.jsonl")) as fh:
        lines = [json.loads(x) for x in fh]
    assert "_meta" in lines[0] and lines[1]["mode"] == "static"
