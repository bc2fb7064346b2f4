import json
import subprocess
import sys

import pytest

from maserlab.cli import PRESETS, main, parse_noise, parse_range
from maserlab import DomainError, NoiseKind


def _run(args, tmp_path, name="out.csv", env=None):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def test_parsers():
    assert parse_noise("none").kind is NoiseKind.NONE
    z = parse_noise("detuning_gaussian:0.1")
    assert z.kind is NoiseKind.DETUNING_GAUSSIAN and z.sigma_sq == 0.1
    assert parse_range("0:60:7") == (0.0, 60.0, 7)
    with pytest.raises(DomainError):
        parse_noise("gamma")
    with pytest.raises(DomainError):
        parse_range("1:2")


def test_sweep_deterministic_across_thread_counts(tmp_path, monkeypatch):
    args = ["sweep", "--theta-range", "1:40:9", "--outputs", "p_plus,p_joint_pp,x_bar,saddles,corr"]
    monkeypatch.setenv("MASERLAB_THREADS", "1")
    code1, text1 = _run(args, tmp_path, "a.csv")
    monkeypatch.setenv("MASERLAB_THREADS", "4")
    code4, text4 = _run(args, tmp_path, "b.csv")
    assert code1 == code4 == 0
    assert text1 == text4
    rows = text1.splitlines()
    assert rows[0].startswith("theta,p_plus,p_joint_pp,x_bar,n_saddles")
    thetas = [float(r.split(",")[0]) for r in rows[1:]]
    assert thetas == sorted(thetas) and len(thetas) == 9


def test_row_errors_give_exit_three(tmp_path):
    code, text = _run(["sweep", "--noise", "pump_gamma:25", "--theta-range", "0:10:3"], tmp_path)
    assert code == 3
    first = text.splitlines()[1]
    assert first.startswith("0,,,") and "DomainError" in first


def test_config_error_exit_two(tmp_path, capsys):
    assert main(["sweep", "--a", "2", "--theta-range", "0:1:2"]) == 2
    assert main(["sweep", "--theta-range", "0:1:2", "--outputs", "bogus"]) == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"a": 0.9, "n_b": 0.1, "N": 20, "theta": 3, "noise": {"kind": "pump_gamma", "sigma_sq": 1.0}}))
    code, text = _run(["sweep", "--config", str(cfg), "--theta-range", "2:4:3", "--outputs", "x_bar"], tmp_path)
    assert code == 0 and len(text.splitlines()) == 4


def test_phase_spot_value(tmp_path):
    code, text = _run(["phase", "--noise", "pump_gamma:10", "--theta-range", "0:1:2"], tmp_path)
    assert code == 0
    row = text.splitlines()[1].split(",")
    assert float(row[2]) == pytest.approx(0.55)


def test_saddle_reports(tmp_path, capsys):
    code, text = _run(["saddle", "--a", "0.5"], tmp_path)
    assert code == 0 and text.strip() == "x,kind,v0,v0pp,sigma_x,T"
    assert "thermal phase" in capsys.readouterr().err
    code, text = _run(["saddle", "--theta", "50"], tmp_path)
    err = capsys.readouterr().err
    assert "x_inf=0.340289" in err


def test_figure_preset_sidecar(tmp_path):
    out = tmp_path / "fig2.csv"
    assert main(["figure", "fig2", "--out", str(out), "--steps", "5"]) == 0
    meta = json.loads((tmp_path / "fig2.csv.json").read_text())
    assert meta["preset"] == "fig2" and meta["sigma_sq"] == [0.1, 1.0, 10.0]
    assert len(out.read_text().splitlines()) == 1 + 3 * 5
    assert set(PRESETS) == {f"fig{i}" for i in range(1, 8)}


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "maserlab", "phase", "--theta-range", "1:2:2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("sigma_sq,theta,a_crit")
