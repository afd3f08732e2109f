import json
import subprocess
import sys

import pytest

from orbitlab.cli import main

FIELDS = "data/fields"


@pytest.fixture
def run(tmp_path, monkeypatch, data_dir):
    monkeypatch.chdir(data_dir.parent)

    def _run(*argv):
        return main([str(a) for a in argv])

    return _run


def test_best_approx_csv(run, tmp_path):
    out = tmp_path / "ba.csv"
    assert run("best-approx", "--field", f"{FIELDS}/sqrt2.toml", "--gens", "b-1", "--max-q", 200,
               "--out", out) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 8
    assert [int(r.split(",")[1]) for r in rows[1:]] == [1, 2, 5, 12, 29, 70, 169]
    # an integer shift of the target leaves the denominators unchanged
    assert run("best-approx", "--field", f"{FIELDS}/sqrt2.toml", "--gens", "b", "--norm", "sup",
               "--max-q", 200, "--out", out) == 0
    assert [int(r.split(",")[1]) for r in out.read_text().splitlines()[1:]] == [1, 2, 5, 12, 29, 70, 169]


@pytest.mark.parametrize("argv, code", [
    (["best-approx", "--field", "missing.toml", "--gens", "b", "--max-q", "9"], 2),
    (["best-approx", "--field", f"{FIELDS}/sqrt2.toml", "--gens", "b", "--max-q", "0"], 2),
    (["best-approx", "--field", f"{FIELDS}/sqrt2.toml", "--gens", "1/2", "--max-q", "9"], 2),
    (["equidist-test", "--field", f"{FIELDS}/sqrt2.toml", "--basis", "data/bases/one_b.json",
      "--schedule", "0,0;0,0;0,0"], 3),
    (["nu-best-compare", "--field", f"{FIELDS}/cubic49.toml", "--gens", "b,b^2", "--schedule", "1,2"], 2),
])
def test_exit_codes(run, argv, code, capsys):
    assert run(*argv) == code
    assert capsys.readouterr().err.startswith("orbitlab: ")


def test_enumeration_cap_exit_code(run, tmp_path):
    spec = tmp_path / "big.json"
    spec.write_text('{"p": 5, "N": 12, "terms": [{"c_num": 1, "i": 1, "l": 1}], "lambdas": [0]}')
    assert run("padic-good", "--spec", spec, "--C", 1, "--alpha", 1) == 4


def test_precision_env(run, monkeypatch, tmp_path):
    monkeypatch.setenv("ORBITLAB_PRECISION_BITS", "32")
    assert run("orbit-sample", "--field", f"{FIELDS}/sqrt2.toml", "--basis", "data/bases/one_b.json",
               "--N", 2, "--out", tmp_path / "o.csv") == 2


def test_padic_good_report(run, tmp_path):
    out = tmp_path / "g.json"
    assert run("padic-good", "--spec", "data/padic/s2_p3.json", "--C", 1, "--alpha", 1, "--ivt",
               "--rho", "1/3", "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["good"]["pass"] is False and rep["good"]["witness"] is not None
    assert rep["controlled_value"]["s"] == 3
    assert all(r["ratio"] == "1/9" for r in rep["weak_ivt"]["levels"])


CASES = {
    "best-approx": ["--field", f"{FIELDS}/cubic49.toml", "--gens", "b,b^2", "--max-k", 40,
                    "--moduli", "2,3", "--summary", "{tmp}/s.json"],
    "orbit-sample": ["--field", f"{FIELDS}/sqrt2.toml", "--basis", "data/bases/one_b.json", "--m", 2,
                     "--ivec", "0,3", "--T", 20, "--N", 40, "--seed", 7, "--radii", "0.8,1,1.5",
                     "--summary", "{tmp}/s.json"],
    "haar-ref-d2": ["--N", 30, "--y", 1e-4, "--seed", 3, "--summary", "{tmp}/s.json"],
    "padic-good": ["--spec", "data/padic/s_p5.json", "--C", 1, "--alpha", 1, "--ivt"],
    "baseline-gen": ["--targets", 4, "--K", 30, "--d", 3],
    "nu-best-compare": ["--field", f"{FIELDS}/cubic49.toml", "--gens", "b,b^2", "--schedule", "1,2;2,4;3,6",
                        "--K", 40, "--baseline-targets", 5, "--reference", "{tmp}/base.csv"],
    "equidist-test": ["--field", f"{FIELDS}/sqrt2.toml", "--basis", "data/bases/one_b.json",
                      "--schedule", "0,1;0,2;0,3", "--N", 30, "--reference-N", 30],
}


def _artifacts(tmp):
    return {p.name: p.read_bytes() for p in sorted(tmp.iterdir()) if p.name != "cfg.json"}


@pytest.mark.parametrize("command", sorted(CASES))
def test_config_rerun_and_jobs_are_byte_identical(run, tmp_path, command):
    args = [str(a).replace("{tmp}", str(tmp_path)) for a in CASES[command]]
    cfg = tmp_path / "cfg.json"
    assert run(command, *args, "--out", tmp_path / "out", "--emit-config", cfg) == 0
    first = _artifacts(tmp_path)
    data = json.loads(cfg.read_text())
    assert data["command"] == command and "config_version" in data and "jobs" not in data
    if command == "nu-best-compare":
        (tmp_path / "base.csv").unlink()
        (tmp_path / "base.schema.json").unlink()
    assert run(command, "--config", cfg) == 0
    assert _artifacts(tmp_path) == first
    assert run(command, "--config", cfg, "--jobs", 2) == 0
    assert _artifacts(tmp_path) == first


def test_console_script_entry_point(data_dir):
    res = subprocess.run([sys.executable, "-m", "orbitlab.cli", "best-approx", "--field",
                          str(data_dir / "fields" / "golden.toml"), "--gens", "b-1", "--max-q", "100"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert [int(r.split(",")[1]) for r in res.stdout.splitlines()[1:]] == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
