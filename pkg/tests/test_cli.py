import csv
import json
import math

import pytest

from coherent_bell.cli import (BELL_COLUMNS, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, QUANTUM_COLUMNS,
                               SCAN_COLUMNS, TRACE_COLUMNS, ConfigError, main, parse_grid, read_provenance)


def read_table(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def only(dirpath, pattern):
    (hit,) = list(dirpath.glob(pattern))
    return hit


def test_parse_grid():
    assert parse_grid("0:90:5") == [5.0 * i for i in range(19)]
    assert parse_grid("0,30,60") == [0.0, 30.0, 60.0]
    assert parse_grid([1, 2]) == [1.0, 2.0]
    for bad in ("0:90:0", "90:0:5", "a,b", ""):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_trace_equal_angles(tmp_path):
    assert main(["trace", "--theta1", "22.5", "--theta2", "22.5", "-n", "2000", "--out", str(tmp_path)]) == EXIT_OK
    path = only(tmp_path, "trace-*/trace.csv")
    rows = read_table(path)
    assert list(rows[0]) == list(TRACE_COLUMNS)
    product = [float(r["product"]) for r in rows]
    n = len(product)
    mean = sum(product) / n
    sd = math.sqrt(sum((p - mean) ** 2 for p in product) / (n - 1))
    assert n == 2000 and mean < 0
    assert abs(mean + 0.5) < 3 * sd / math.sqrt(n)


def test_trace_orthogonal_angles(tmp_path):
    assert main(["trace", "--theta1", "0", "--theta2", "45", "-n", "2000", "--out", str(tmp_path)]) == EXIT_OK
    product = [float(r["product"]) for r in read_table(only(tmp_path, "trace-*/trace.csv"))]
    assert abs(sum(product) / len(product)) < 0.05


def test_zero_samples_is_config_error(tmp_path, capsys):
    assert main(["trace", "-n", "0", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "samples" in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_bell_summary(tmp_path):
    assert main(["bell", "--prep", "psi-minus", "--a", "0", "--b", "30", "--c-grid", "0:90:5",
                 "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads(only(tmp_path, "bell-*/bell_summary.json").read_text())["summary"]
    assert summary["max_F"] == pytest.approx(0.5, abs=0.05)
    assert summary["argmax_c_deg"] == 60.0
    rows = read_table(only(tmp_path, "bell-*/bell.csv"))
    assert list(rows[0]) == list(BELL_COLUMNS) and len(rows) == 19


def test_quantum_curve(tmp_path):
    assert main(["quantum", "--state", "phi-plus", "--theta1", "0", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_table(only(tmp_path, "quantum-*/quantum.csv"))
    assert list(rows[0]) == list(QUANTUM_COLUMNS)
    for r in rows:
        t2 = math.radians(float(r["theta2_deg"]))
        assert float(r["c_quantum"]) == pytest.approx(math.cos(2 * t2), abs=1e-12)


def test_scan_csv(tmp_path):
    assert main(["scan", "--theta2-grid", "0,45,60", "-n", "20000", "--workers", "2",
                 "--out", str(tmp_path)]) == EXIT_OK
    rows = read_table(only(tmp_path, "scan-*/scan.csv"))
    assert list(rows[0]) == list(SCAN_COLUMNS)
    assert [float(r["corr_normalized"]) for r in rows] == pytest.approx([-1, 0, 0.5], abs=0.05)
    assert all(int(r["n_samples"]) == 20000 for r in rows)


def test_qkd_zero_decorrelation(tmp_path):
    assert main(["qkd", "--rounds", "10000", "--decorrelation", "0", "--out", str(tmp_path)]) == EXIT_OK
    data = json.loads(only(tmp_path, "qkd-*/qkd.json").read_text())
    assert data["summary"]["qber"] == 0.0
    assert data["summary"]["n_sifted"] > 3000
    assert len(read_table(only(tmp_path, "qkd-*/qkd_rounds.csv"))) == 10000


def test_overwrite_requires_force(tmp_path):
    args = ["quantum", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    assert main(args) == EXIT_CONFIG
    assert main(args + ["--force"]) == EXIT_OK


def test_replay_from_provenance_header(tmp_path):
    assert main(["scan", "--prep", "phi-minus", "--theta1", "10", "--theta2-grid", "0:40:20",
                 "-n", "5000", "--seed", "77", "--out", str(tmp_path / "a")]) == EXIT_OK
    first = only(tmp_path / "a", "scan-*/scan.csv")
    prov = read_provenance(first)
    assert prov["config"]["seed"] == 77 and prov["subcommand"] == "scan"
    assert main(["scan", "--config", str(first), "--out", str(tmp_path / "b")]) == EXIT_OK
    second = only(tmp_path / "b", "scan-*/scan.csv")
    assert first.read_bytes() == second.read_bytes()
    assert first.parent.name == second.parent.name


def test_json_config_file_and_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"state": "psi-plus", "theta1": 15, "theta2_grid": [0, 30]}))
    assert main(["quantum", "--config", str(cfg), "--format", "json", "--out", str(tmp_path)]) == EXIT_OK
    data = json.loads(only(tmp_path, "quantum-*/quantum.json").read_text())
    assert data["provenance"]["config"]["state"] == "psi-plus"
    assert [r["theta2_deg"] for r in data["rows"]] == [0.0, 30.0]
    cfg.write_text(json.dumps({"state": "psi-plus", "colour": "blue"}))
    assert main(["quantum", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["scan", "--config", str(only(tmp_path, "quantum-*/quantum.json")),
                 "--out", str(tmp_path)]) == EXIT_CONFIG


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("COHERENT_BELL_SEED", "1234")
    assert main(["trace", "-n", "10", "--out", str(tmp_path)]) == EXIT_OK
    assert read_provenance(only(tmp_path, "trace-*/trace.csv"))["config"]["seed"] == 1234


def test_bad_arguments_are_config_errors(tmp_path):
    assert main(["trace", "--bogus"]) == EXIT_CONFIG
    assert main(["bell", "--c-grid", "5:0:1", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["qkd", "--rounds", "0", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG


def test_runtime_failure_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    assert main(["quantum", "--out", str(blocker)]) == EXIT_RUNTIME
