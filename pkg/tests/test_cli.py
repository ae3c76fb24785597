import json
import math
import os
import subprocess
import sys

import pytest

from darkion.cli import main

PAIR = ["--m1", "27u", "--m2", "9.012u", "--omega2", "2pi*1MHz"]
EQUAL = ["--m1", "9.012u", "--m2", "9.012u", "--omega2", "2pi*1MHz"]
RATIO20 = ["--m1", "180.24u", "--m2", "9.012u", "--omega2", "2pi*1MHz"]


@pytest.fixture(autouse=True)
def _no_env_output(monkeypatch):
    monkeypatch.delenv("DARKION_OUTPUT_DIR", raising=False)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def test_modes_report(capsys):
    code, out, _ = run(["modes"] + PAIR, capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["omega_minus"]["over_omega2"] == pytest.approx(0.67, abs=0.01)
    assert doc["config"]["input"]["m1"] == "27u"
    assert doc["equilibrium_distance"]["unit"] == "m"
    code, out, _ = run(["modes"] + EQUAL, capsys)
    assert json.loads(out)["phi"] == pytest.approx(math.pi / 4)


@pytest.mark.parametrize(
    "argv,field",
    [
        (["modes", "--m2", "9.012u", "--omega2", "2pi*1MHz"], "m1"),
        (["modes", "--m1", "27u", "--m2", "9.012u"], "omega2"),
        (["plan"] + PAIR + ["--eta2", "0.2"], "rabi"),
        (["modes", "--m1", "27kHz", "--m2", "9.012u", "--omega2", "1MHz"], "m1"),
        (["map"] + PAIR, "state"),
    ],
)
def test_missing_or_bad_field_exits_2(argv, field, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert f"'{field}'" in err


def test_light_dark_ion_exits_2(capsys):
    code, _, err = run(["modes", "--m1", "1u", "--m2", "9.012u", "--omega2", "1MHz"], capsys)
    assert code == 2


def test_config_file_and_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m1": "27u", "m2": "9.012u", "omega2": "2pi*1MHz", "rabi": "0.01*omega2", "eta2": 0.2}))
    code, out, _ = run(["plan", "--config", str(cfg)], capsys)
    assert code == 0
    # flags override the file
    code, out, _ = run(["plan", "--config", str(cfg), "--rabi", "omega2"], capsys)
    assert code == 3
    cfg.write_text(json.dumps({"m1": "27u", "colour": "blue"}))
    code, _, err = run(["modes", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err


def test_plan_feasible_and_infeasible(capsys):
    code, out, _ = run(["plan"] + PAIR + ["--rabi", "0.01*omega2", "--eta2", "0.2"], capsys)
    assert code == 0
    doc = json.loads(out)
    purposes = [p["purpose"] for p in doc["schedule"]["pulses"]]
    assert purposes == ["squeeze(-)", "squeeze(+)", "mix"]
    assert doc["config"]["resolved"]["rabi_rad_s"] == pytest.approx(0.01 * 2 * math.pi * 1e6)
    code, out, _ = run(["plan"] + PAIR + ["--rabi", "omega2", "--eta2", "0.2"], capsys)
    assert code == 3
    assert json.loads(out)["schedule"]["resolution"]["all_resolved"] is False


def test_map_fock_and_vacuum(capsys):
    code, out, _ = run(["map"] + PAIR + ["--state", '{"-": {"kind": "fock", "n": 1}}', "--points", "15"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["certified"] and doc["metrics"]["sup"] <= 1e-4
    code, out, _ = run(["map"] + RATIO20 + ["--state", '{"kind": "vacuum"}', "--points", "15"], capsys)
    assert code == 0 and json.loads(out)["metrics"]["sup"] <= 1e-6


def test_map_cutoff_too_small_exits_4(capsys):
    code, out, _ = run(["map"] + RATIO20 + ["--state", '{"kind": "cat", "beta": 1.5}', "--cutoff", "20"], capsys)
    assert code == 4
    assert json.loads(out)["certified"] is False


def test_map_state_from_file(tmp_path, capsys):
    spec = tmp_path / "s.json"
    spec.write_text('{"dark": {"kind": "fock", "n": 2}}')
    code, out, _ = run(["map"] + PAIR + ["--state", "@" + str(spec), "--points", "5", "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    assert (tmp_path / "map.json").read_text() == out
    assert csv_rows((tmp_path / "map_oracle.csv").read_text())[0] == "q,p,w,flags"


def test_tomo_fock_one_origin(tmp_path, capsys):
    argv = ["tomo", "--state", '{"readout": {"kind": "fock", "n": 1}}', "--points", "5", "--extent", "1",
            "--output-dir", str(tmp_path)]
    code, out, _ = run(argv, capsys)
    assert code == 0
    rows = csv_rows((tmp_path / "tomo.csv").read_text())
    assert rows[0] == "q,p,w,flags"
    origin = [r for r in rows[1:] if r.startswith("0.0000000000,0.0000000000,")]
    assert float(origin[0].split(",")[2]) == pytest.approx(-2 / math.pi, abs=1e-3)
    assert json.loads(out)["rows"] == 25


def test_tomo_full_grid_row_count(tmp_path, capsys):
    argv = ["tomo", "--state", '{"readout": {"kind": "fock", "n": 1}}', "--output-dir", str(tmp_path)]
    assert run(argv, capsys)[0] == 0
    assert len(csv_rows((tmp_path / "tomo.csv").read_text())) == 1 + 41 * 41


def test_tomo_seeded_runs_are_byte_identical(tmp_path, capsys):
    texts = []
    for name in ("a", "b"):
        d = tmp_path / name
        argv = ["tomo", "--state", '{"readout": {"kind": "coherent", "beta": 0.5}}', "--points", "5",
                "--shots", "10000", "--seed", "11", "--output-dir", str(d)]
        assert run(argv, capsys)[0] == 0
        texts.append((d / "tomo.csv").read_bytes())
    assert texts[0] == texts[1]
    assert b"\r" not in texts[0]


def test_tomo_noise_needs_seed(capsys):
    code, _, err = run(["tomo", "--state", '{"readout": {"kind": "vacuum"}}', "--shots", "100"], capsys)
    assert code == 2 and "'seed'" in err


def test_tomo_through_mapping(tmp_path, capsys):
    argv = ["tomo"] + PAIR + ["--state", '{"dark": {"kind": "fock", "n": 1}}', "--points", "3", "--extent", "0.5",
                              "--cutoff", "30", "--output-dir", str(tmp_path)]
    code, out, _ = run(argv, capsys)
    assert code == 0
    assert json.loads(out)["metrics"]["sup"] < 1e-4


def test_env_overrides_output_dir(tmp_path, monkeypatch, capsys):
    env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("DARKION_OUTPUT_DIR", str(env_dir))
    assert run(["modes"] + PAIR + ["--output-dir", str(flag_dir)], capsys)[0] == 0
    assert (env_dir / "modes.json").exists()
    assert not flag_dir.exists()
    assert str(tmp_path) not in (env_dir / "modes.json").read_text()


def test_figures(capsys):
    code, out, _ = run(["figures", "2", "--ratio-min", "1", "--ratio-max", "20", "--steps", "5"], capsys)
    assert code == 0
    assert out.startswith("#")
    rows = csv_rows(out)
    assert rows[0] == "ratio,eta_minus_ratio,eta_plus_ratio"
    assert [float(v) for v in rows[1].split(",")] == pytest.approx([1, 0.7071, 0.5373], abs=1e-4)
    code, out, _ = run(["figures", "3", "--steps", "3"], capsys)
    header, first = csv_rows(out)[:2]
    cols = dict(zip(header.split(","), map(float, first.split(","))))
    assert cols["t_squeeze_minus_lns"] == 0 and cols["t_squeeze_plus_lns"] == 0
    code, out, _ = run(["figures", "4", "--steps", "3"], capsys)
    header = csv_rows(out)[0].split(",")
    assert {"omega2_over_split", "omega2_over_omega_minus", "omega2_over_omega_plus"} <= set(header)
    assert "1/rabi" in out
    assert run(["figures", "7"], capsys)[0] == 2
    assert run(["figures", "2", "--ratio-min", "5", "--ratio-max", "2"], capsys)[0] == 2


def test_figures_deterministic(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        run(["figures", "3", "--output-dir", str(tmp_path / name)], capsys)
        outs.append((tmp_path / name / "figure3.csv").read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "darkion", "modes"] + EQUAL, capture_output=True, text=True,
                          env={k: v for k, v in os.environ.items() if k != "DARKION_OUTPUT_DIR"})
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["omega_plus"]["over_omega2"] == pytest.approx(math.sqrt(3))
