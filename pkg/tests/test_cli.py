import csv
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from hybridqit import cli

ROOT = Path(__file__).resolve().parents[1]


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main(list(argv) + ["--out", str(out)])
    return code, out


def amps(doc):
    return np.array([complex(re, im) for re, im in doc])


def test_qit4to2_uniform_state(tmp_path):
    code, out = run(tmp_path, "protocol", "qit4to2", "--state", "0.5,0.5,0.5,0.5", "--check")
    assert code == 0
    doc = json.loads((out / "result.json").read_text())
    assert doc["target_fidelity"] == pytest.approx(1.0, abs=1e-10)
    a = amps(doc["result"]["amplitudes"])
    assert np.allclose(abs(a[[0, 1, 4, 5]]), 0.5)
    assert (out / "meta.json").exists()


def test_merge_basis_inputs(tmp_path):
    code, out = run(tmp_path, "protocol", "merge", "--d", "2", "--qubit", "1,0",
                    "--qudit", "1,0", "--check")
    assert code == 0
    a = amps(json.loads((out / "result.json").read_text())["result"]["amplitudes"])
    assert np.allclose(abs(a), [1, 0, 0, 0])


def test_merge_dimension_mismatch_is_an_error(tmp_path, capsys):
    code, _ = run(tmp_path, "protocol", "merge", "--d", "3", "--qubit", "1,0", "--qudit", "1,0")
    assert code == 2
    assert "does not match" in capsys.readouterr().err


def test_synthesize_ccz_check(tmp_path):
    code, out = run(tmp_path, "synthesize", "--n", "3", "--gate", "ccz", "--check", "--seed", "1")
    assert code == 0
    doc = json.loads((out / "synthesis.json").read_text())
    assert doc["check"]["passed"] and doc["check"]["max_infidelity"] < 1e-10


def test_paper_suite_fig4_noiseless_exact(tmp_path):
    code, out = run(tmp_path, "paper-suite", "--which", "Fig4", "--exact", "--q", "1", "--check")
    assert code == 0
    rows = list(csv.DictReader((out / "fig4.csv").open()))
    assert len(rows) == 5
    for r in rows:
        assert float(r["estimate"]) == pytest.approx(1.0, abs=1e-10)
        assert r["reference_only"] == "True"


def test_paper_suite_hom_and_cx4(tmp_path):
    code, out = run(tmp_path, "paper-suite", "--which", "HOM", "--check", name="hom")
    assert code == 0
    rows = {float(r["q"]): r for r in csv.DictReader((out / "hom.csv").open())}
    assert float(rows[0.826]["visibility"]) == pytest.approx(0.661, abs=1e-3)
    code, out = run(tmp_path, "paper-suite", "--which", "CX4", "--q", "1", "--check", name="cx4")
    assert code == 0
    doc = json.loads((out / "cx4.json").read_text())
    assert doc["success_probability_max"] == pytest.approx(1 / 27, abs=1e-12)


def test_hom_scan_values(tmp_path):
    code, out = run(tmp_path, "hom-scan", "--q-values", "0,0.5,1", "--check")
    assert code == 0
    v = [float(r["visibility"]) for r in csv.DictReader((out / "hom.csv").open())]
    assert np.allclose(v, [0, 0.4, 0.8])


def test_tomo_exact_and_sampled(tmp_path):
    s = 2 ** -0.5
    code, out = run(tmp_path, "tomo", "--state", f"{s},0,{s},0", "--exact", "--check", name="e")
    assert code == 0
    assert json.loads((out / "tomo.json").read_text())["fidelity"] == pytest.approx(1, abs=1e-10)
    code, out = run(tmp_path, "tomo", "--seed", "2", "--q", "0.5", "--check", name="s")
    doc = json.loads((out / "tomo.json").read_text())
    assert code == 0 and doc["min_eigenvalue"] >= -1e-9
    assert (out / "counts.csv").exists()


def test_optical_runs_and_writes_circuit(tmp_path):
    code, out = run(tmp_path, "optical", "--experiment", "cx4", "--check")
    assert code == 0
    circ = json.loads((out / "circuit.json").read_text())
    assert circ["elements"][0]["angle_deg"] == pytest.approx(22.5)
    doc = json.loads((out / "result.json").read_text())
    assert doc["success_probability"] == pytest.approx(1 / 27, abs=1e-12)


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps({"version": 1, "command": "hom-scan", "q_values": [0.0, 1.0]}))
    code, out = run(tmp_path, "hom-scan", "--config", str(cfg))
    assert code == 0
    assert len(list(csv.DictReader((out / "hom.csv").open()))) == 2
    code, out = run(tmp_path, "hom-scan", "--config", str(cfg), "--q-values", "0.5", name="o2")
    rows = list(csv.DictReader((out / "hom.csv").open()))
    assert len(rows) == 1 and float(rows[0]["q"]) == 0.5
    meta = json.loads((out / "meta.json").read_text())
    assert meta["spec"]["q_values"] == [0.5]


def test_schema_violation_gives_nonzero_exit(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"version": 1, "command": "tomo", "q": 3}))
    code, _ = run(tmp_path, "tomo", "--config", str(cfg))
    assert code == 2
    assert "run spec invalid" in capsys.readouterr().err
    cfg.write_text(json.dumps({"version": 99, "command": "tomo"}))
    assert run(tmp_path, "tomo", "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"version": 1, "command": "tomo", "colour": "red"}))
    assert run(tmp_path, "tomo", "--config", str(cfg))[0] == 2


def test_config_for_another_command_is_rejected(tmp_path):
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps({"version": 1, "command": "tomo"}))
    assert run(tmp_path, "hom-scan", "--config", str(cfg))[0] == 2


def test_failed_check_exit_code(tmp_path):
    # phi3 sits right above 2/3 at q=0.826; at q=0.5 the bound is missed
    code, _ = run(tmp_path, "paper-suite", "--which", "fig4", "--q", "0.5", "--exact", "--check")
    assert code == 1
    code, _ = run(tmp_path, "paper-suite", "--which", "fig4", "--q", "0.5", "--exact", name="o2")
    assert code == 0


def test_env_var_sets_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["hom-scan", "--q-values", "1"]) == 0
    assert (tmp_path / "envout" / "hom.csv").exists()


def test_amplitude_parsing():
    assert cli.parse_amplitudes("0.5, 1j,1+2j,-3") == [[0.5, 0], [0, 1], [1, 2], [-3, 0]]
    with pytest.raises(Exception):
        cli.parse_amplitudes("1,,2")


def test_published_schema_matches_code():
    doc = json.loads((ROOT / "docs" / "runspec.schema.json").read_text())
    assert doc == json.loads(json.dumps(cli.RUNSPEC_SCHEMA))
    jsonschema.Draft202012Validator.check_schema(doc)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hybridqit", "hom-scan", "--q-values", "1",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
