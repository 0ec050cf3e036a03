import json
import os
import subprocess
import sys

import pytest

from isospec import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def fields(text):
    out = {}
    for line in text.splitlines():
        if ": " in line and not line.startswith(" "):
            k, v = line.split(": ", 1)
            out.setdefault(k, v)
    return out


# --- construct -----------------------------------------------------------------------

@pytest.mark.parametrize("spec, k", [(("l=3", "a=1", "b=1"), 8), (("l=7", "a=1", "b=0"), 8), (("l=1",), 2)])
def test_construct_clifford(capsys, spec, k):
    code, out, _ = run(capsys, "construct", "--clifford", *spec)
    f = fields(out)
    assert code == 0
    assert f["k"] == str(k)
    assert f["heisenberg_type"] == "True"
    assert f["status"] == "PASS"


def test_construct_writes_space(capsys, tmp_path):
    path = tmp_path / "h3.json"
    code, out, _ = run(capsys, "construct", "--clifford", "l=3", "a=2", "b=0", "--space-out", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert doc["k"] == 8 and doc["l"] == 3
    code, out, _ = run(capsys, "construct", "--matrix-file", str(path))
    assert code == 0 and fields(out)["k"] == "8"


def test_construct_nonskew(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"k": 2, "l": 1, "basis": [[1, 0, 0, 1]]}))
    code, out, err = run(capsys, "construct", "--matrix-file", str(path))
    assert code == 2
    assert "reason: NonSkew" in err
    assert out == ""


def test_construct_malformed(capsys, tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("not a matrix")
    code, _, err = run(capsys, "construct", "--matrix-file", str(path))
    assert code == 2 and err.startswith("status: ERROR")


def test_construct_needs_source(capsys):
    code, _, err = run(capsys, "construct")
    assert code == 2 and "UsageError" in err


def test_bad_arguments(capsys):
    assert run(capsys, "verify", "isotonal")[0] == 2
    assert run(capsys, "construct", "--clifford", "l3")[0] == 2
    assert run(capsys, "verify", "isotonal", "--pair", "q3_11", "n3_22")[0] == 2
    assert run(capsys, "construct", "--clifford", "l=3", "--tol", "-1")[0] == 2


# --- verify ------------------------------------------------------------------------

def test_isotonal_fails(capsys):
    code, out, _ = run(capsys, "verify", "isotonal", "--pair", "n3_13", "n3_22")
    f = fields(out)
    assert code == 1
    assert f["status"] == "FAIL"
    assert f["set"].startswith("different")
    assert float(f["invariance_residual"]) <= 1e-9


def test_isotonal_self_is_isospectral(capsys):
    code, out, _ = run(capsys, "verify", "isotonal", "--pair", "n3_11", "n3_11")
    assert code == 1
    assert fields(out)["multiset"].startswith("isospectral")


def test_conjugator_pass(capsys):
    code, out, _ = run(capsys, "verify", "conjugator", "--pair", "h3_11", "h3_20", "--samples", "10")
    assert code == 0
    assert "unit_endo_conjugator:" in out
    assert fields(out)["status"] == "PASS"


def test_intertwine_default_fails_on_perp(capsys):
    code, out, _ = run(capsys, "verify", "intertwine", "--pair", "h3_11", "h3_20", "--rmax", "2")
    assert code == 1
    assert "D_perp" in out and "FAIL" in out


def test_intertwine_families_pass(capsys):
    code, out, _ = run(capsys, "verify", "intertwine", "--pair", "h3_11", "h3_20", "--rmax", "2",
                       "--families", "spherical_laplacian,D_A,M_cd,JA_norm")
    assert code == 0 and fields(out)["status"] == "PASS"


def test_intertwine_solvable_section(capsys):
    code, out, _ = run(capsys, "verify", "intertwine", "--pair", "sh3_11", "sh3_20", "--rmax", "2",
                       "--points", "2", "--families", "D_A,JA_norm")
    assert code == 0
    assert "[solvable geodesic sphere]" in out
    assert float(fields(out)["bundle_residual"]) <= 1e-8


def test_geosphere(capsys):
    code, out, _ = run(capsys, "verify", "geosphere", "--group", "sh3_20", "--points", "2")
    f = fields(out)
    assert code == 0
    assert float(f["tensor_L_max"]) <= 1e-9
    assert f["locally_homogeneous_signature"] == "True"
    code, out, _ = run(capsys, "verify", "geosphere", "--group", "sh3_11", "--points", "2")
    f = fields(out)
    assert code == 0
    assert float(f["tensor_L_max"]) > 1e-2
    assert float(f["tensor_L_pure_point"]) <= 1e-9


def test_geosphere_needs_solvable(capsys):
    code, _, err = run(capsys, "verify", "geosphere", "--group", "h3_20")
    assert code == 2 and "UsageError" in err


def test_fourier_small(capsys):
    code, out, _ = run(capsys, "verify", "fourier", "--pair", "h3_10", "h3_01", "--beta", "0.3,0.2,0.1",
                       "--N", "8", "--eigs", "5")
    assert code == 0
    assert float(fields(out)["exact unitary route residual"]) <= 1e-12


def test_fourier_beta_length(capsys):
    code, _, err = run(capsys, "verify", "fourier", "--pair", "h3_10", "h3_01", "--beta", "0.3")
    assert code == 2 and "beta needs 3" in err


# --- scans -------------------------------------------------------------------------

def test_scan_hopf(capsys):
    code, out, _ = run(capsys, "scan", "hopf", "--points", "5")
    rows = out.strip().splitlines()
    assert code == 0
    assert rows[0] == "tau,kappa,dkappa"
    assert len(rows) == 6
    assert all(float(r.split(",")[2]) != 0 for r in rows[1:])


def test_scan_geosphere_constant(capsys):
    code, out, _ = run(capsys, "scan", "geosphere", "--group", "sh3_20", "--points", "3")
    vals = [float(r.split(",")[4]) for r in out.strip().splitlines()[1:]]
    assert code == 0
    assert max(vals) - min(vals) <= 1e-7 * abs(vals[0])


def test_scan_rim_flags(capsys):
    code, out, _ = run(capsys, "scan", "rim", "--group", "h1_10", "--points", "5")
    rows = out.strip().splitlines()[1:]
    assert code == 0
    assert rows[-1].endswith("RimPoint")
    assert rows[0].endswith("ok")


# --- determinism, config, output ----------------------------------------------------

def test_byte_identical_reports(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        assert cli.main(["verify", "conjugator", "--pair", "h3_11", "h3_20", "--samples", "5",
                         "--seed", "7", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "seed: 7" in a.read_text()


def test_seed_changes_sampling(tmp_path):
    outs = []
    for seed in ("1", "2"):
        path = tmp_path / f"{seed}.csv"
        cli.main(["scan", "geosphere", "--group", "sh3_20", "--points", "1", "--seed", seed, "--out", str(path)])
        outs.append(path.read_text())
    assert outs[0] != outs[1]


def test_config_file(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# canned run\npoints = 4\nR2 = 3.0\n")
    code, out, _ = run(capsys, "scan", "hopf", "--config", str(conf))
    assert code == 0 and len(out.strip().splitlines()) == 5
    code, out, _ = run(capsys, "scan", "hopf", "--config", str(conf), "--points", "2")
    assert len(out.strip().splitlines()) == 3
    conf.write_text("bogus = 1\n")
    assert run(capsys, "scan", "hopf", "--config", str(conf))[0] == 2


def test_read_config_rejects_bad_line(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("points 4\n")
    with pytest.raises(cli.UsageError):
        cli.read_config(str(conf))


def test_run_config_header():
    cfg = cli.RunConfig("demo", 3, {"beta": [0.5, 1.0], "N": 4})
    assert cfg.header()[1:] == ["command: demo", "seed: 3", "N: 4", "beta: [0.5, 1]"]


def test_console_script_threads(tmp_path):
    env = dict(os.environ, ISOSPEC_THREADS="1")
    res = subprocess.run([sys.executable, "-m", "isospec.cli", "construct", "--clifford", "l=3"],
                         capture_output=True, text=True, env=env, timeout=120)
    assert res.returncode == 0
    assert "status: PASS" in res.stdout
    clean = {k: v for k, v in env.items() if k not in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")}
    res = subprocess.run([sys.executable, "-c",
                          "import os, isospec.cli; print(os.environ['OPENBLAS_NUM_THREADS'])"],
                         capture_output=True, text=True, env=clean, timeout=120)
    assert res.stdout.strip() == "1"
