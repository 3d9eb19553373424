import csv
import io
import json

import pytest

from jacnf.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("ext", ["txt", "bin"])
def test_simulate_then_estimate(tmp_path, capsys, ext):
    sig = tmp_path / f"s.{ext}"
    code, _, _ = run(capsys, "simulate", "--r", "20", "--theta-deg", "30", "--snapshots", "4",
                     "--model", "quadratic", "--out", str(sig))
    assert code == 0 and sig.exists()
    code, out, _ = run(capsys, "estimate", str(sig), "--truth-r", "20", "--truth-theta-deg", "30",
                       "--truth-model", "quadratic", "--dump-autocorr", str(tmp_path / "c.csv"))
    assert code == 0
    d = json.loads(out)
    assert d["r_m"] == pytest.approx(20, rel=1e-3)
    assert d["theta_deg"] == pytest.approx(30, abs=1e-3)
    assert d["nmse_db"] < -60
    assert (tmp_path / "c.csv").read_text().startswith("eta,c_hat\n1,")


def test_estimate_methods(tmp_path, capsys):
    sig = tmp_path / "s.txt"
    run(capsys, "simulate", "--r", "15", "--snapshots", "2", "--snr-db", "20", "--out", str(sig),
        "--n-antennas", "64")
    for method in ("isf", "gd", "music"):
        code, out, _ = run(capsys, "estimate", str(sig), "--method", method)
        assert code == 0
        assert json.loads(out)["diagnostics"]["method_tag"].endswith(method if method != "music" else "only")


def test_seed_env_and_flag(tmp_path, capsys, monkeypatch):
    args = ["simulate", "--r", "20", "--snapshots", "2", "--snr-db", "0", "--n-antennas", "16"]
    monkeypatch.setenv("JAC_SEED", "5")
    run(capsys, *args, "--out", str(tmp_path / "a.txt"))
    run(capsys, *args, "--out", str(tmp_path / "b.txt"), "--seed", "5")
    run(capsys, *args, "--out", str(tmp_path / "c.txt"), "--seed", "6")
    a, b, c = ((tmp_path / f"{n}.txt").read_text() for n in "abc")
    assert a == b and a != c
    monkeypatch.setenv("JAC_SEED", "x")
    assert run(capsys, *args, "--out", str(tmp_path / "d.txt"))[0] == 1


SWEEP_YAML = """sweep_var: snr_db
values: [5, 20]
n_antennas: 32
snapshots: 4
trials: 2
r_range: [5, 10]
music_grid: 256
"""


def test_sweep_csv_json_and_dry_run(tmp_path, capsys):
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text(SWEEP_YAML)
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and list(rows[0]) == ["sweep_var", "value", "method", "metric", "mean", "std",
                                      "trials", "seed"]
    code, out2, _ = run(capsys, "sweep", "--config", str(cfg), "--threads", "2")
    assert out2 == out
    code, out3, _ = run(capsys, "sweep", "--config", str(cfg), "--seed", "3")
    assert out3 != out and all(r["seed"] == "3" for r in csv.DictReader(io.StringIO(out3)))
    code, js, _ = run(capsys, "sweep", "--config", str(cfg), "--format", "json")
    assert len(json.loads(js)) == len(rows)
    code, dry, _ = run(capsys, "sweep", "--config", str(cfg), "--dry-run")
    lines = dry.splitlines()
    assert lines[0] == "value_index,value,trial,seed" and len(lines) == 5


def test_crlb_command(tmp_path, capsys):
    code, out, _ = run(capsys, "crlb", "--theta-deg", "20", "--r", "10,20", "--n-antennas", "32",
                       "--snapshots", "4")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 4 and rows[0]["source_tag"] == "closed_form"
    cfg = tmp_path / "crlb.yaml"
    cfg.write_text("theta_deg: [0]\nr_m: [10]\nn_antennas: 16\nclosed_form: false\n")
    code, out, _ = run(capsys, "crlb", "--config", str(cfg), "--format", "json")
    assert code == 0 and json.loads(out)[0]["source_tag"] == "numeric_fim"
    cfg.write_text("radius: 3\n")
    assert run(capsys, "crlb", "--config", str(cfg))[0] == 1


def test_bench_command(capsys):
    code, out, _ = run(capsys, "bench", "--n-list", "16,32", "--snapshots", "2", "--reps", "1", "--min-time", "0")
    assert code == 0
    assert out.splitlines()[0] == "method,N,median_ns,ratio"


def test_output_file(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, stdout, _ = run(capsys, "bench", "--n-list", "16", "--snapshots", "2", "--reps", "1", "--min-time", "0",
                          "--out", str(out))
    assert code == 0 and stdout == "" and out.read_text().startswith("method,")


@pytest.mark.parametrize("argv,code", [
    ([], 1),
    (["frobnicate"], 1),
    (["simulate", "--r", "20"], 1),
    (["simulate", "--r", "-1", "--out", "/tmp/never.txt"], 1),
    (["estimate", "/nonexistent/file.txt"], 2),
    (["sweep", "--config", "/nonexistent.yaml"], 2),
    (["crlb", "--r", "ten"], 1),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_bad_inputs(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 2\n1,2\n")
    assert run(capsys, "estimate", str(bad))[0] == 1
    cfg = tmp_path / "s.yaml"
    cfg.write_text("sweep_var: snr_db\nvalues: [1]\nunknown_key: 1\n")
    code, _, err = run(capsys, "sweep", "--config", str(cfg))
    assert code == 1 and "unknown_key" in err
    cfg.write_text(SWEEP_YAML)
    assert run(capsys, "sweep", "--config", str(cfg), "--threads", "0")[0] == 1


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "jacnf.cli", "simulate", "--r", "20", "--snapshots", "1",
                           "--n-antennas", "16", "--out", str(tmp_path / "s.txt")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "jacnf.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and "usage" in proc.stderr
