import csv
import json
import subprocess
import sys

import pytest

from automodal import read_frf, read_report
from automodal.cli import main
from automodal.errors import ConfigError, FrfFormatError


@pytest.fixture
def small_spec(tmp_path):
    spec = {"modes": [{"f_hz": 50.0, "xi": 0.02}], "n_u": 2, "n_y": 3, "band": [0, 100],
            "n_lines": 128, "noise_rms_ratio": 0.0}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return path


def test_synth_run_and_cmif(tmp_path, small_spec, capsys):
    frf_path = tmp_path / "frf.json"
    truth = tmp_path / "truth.json"
    assert main(["synth", "--spec", str(small_spec), "--seed", "1", "--out", str(frf_path),
                 "--truth", str(truth)]) == 0
    frf = read_frf(frf_path)
    assert (frf.n_f, frf.n_y, frf.n_u) == (128, 3, 2)
    assert json.loads(truth.read_text())[0]["f_hz"] == 50.0

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_bootstrap": 6}))
    out = tmp_path / "report.json"
    stab = tmp_path / "stab.csv"
    cm = tmp_path / "cmif.csv"
    code = main(["run", "--input", str(frf_path), "--config", str(cfg), "--seed", "0",
                 "--em-order", "4", "--threads", "2", "--out", str(out), "--stab", str(stab),
                 "--stab-orders", "2:6", "--cmif", str(cm)])
    assert code == 0
    report = read_report(out)
    assert len(report.physical) == 1
    assert report.config["threads"] == 2 and report.config["n_bootstrap"] == 6
    assert "1 physical" in capsys.readouterr().out
    kinds = {r[0] for r in csv.reader(stab.open())}
    assert {"pole", "dop"} <= kinds

    cm2 = tmp_path / "cmif2.csv"
    assert main(["cmif", "--input", str(frf_path), "--out", str(cm2)]) == 0
    assert cm2.read_text() == cm.read_text()


def test_error_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code = main(["run", "--input", str(bad), "--out", str(tmp_path / "r.json")])
    assert code == FrfFormatError.exit_code != 0
    assert "error:" in capsys.readouterr().err

    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code = main(["synth", "--out", str(tmp_path / "f.json"), "--spec", str(tmp_path / "none.json")])
    assert code == ConfigError.exit_code
    assert main(["cmif", "--input", str(tmp_path / "missing.json"), "--out", "x"]) == 1


def test_bad_order_range(tmp_path, small_spec):
    frf_path = tmp_path / "frf.json"
    main(["synth", "--spec", str(small_spec), "--out", str(frf_path)])
    code = main(["run", "--input", str(frf_path), "--em-order", "4", "--out",
                 str(tmp_path / "r.json"), "--stab", str(tmp_path / "s.csv"),
                 "--stab-orders", "2-6"])
    assert code == ConfigError.exit_code


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "automodal.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "synth" in res.stdout
