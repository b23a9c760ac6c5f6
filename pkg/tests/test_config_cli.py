import csv
import dataclasses
import json
import math
import os

import numpy as np
import pytest

from pointfield import cli, fileio
from pointfield.config import ConfigError, parse_config, serialize

MINIMAL = """
[space]
d = 3
delta = 2

[measure]
kind = uniform_ball
radius = 1

[renorm]
K = 1
K_prime = 1

[run]
N_grid = 100
trials = 1000
seed = 42
"""


def test_minimal_parses():
    cfg = parse_config(MINIMAL)
    assert (cfg.d, cfg.delta, cfg.kind, cfg.N_grid, cfg.trials, cfg.seed) == (3, 2.0, "uniform_ball", (100,), 1000, 42)
    assert cfg.coupling_sign == 1 and cfg.workers >= 1


def test_delta_zero_names_key():
    with pytest.raises(ConfigError, match=r"delta.*delta > 0"):
        parse_config(MINIMAL.replace("delta = 2", "delta = 0"))


def test_singular_small_N():
    text = MINIMAL.replace("d = 3", "d = 2").replace("N_grid = 100", "N_grid = 2")
    with pytest.raises(ConfigError, match=r"N_grid.*N >= e\*K"):
        parse_config(text)


def test_unknown_and_missing_keys():
    with pytest.raises(ConfigError, match="unknown key run.trails"):
        parse_config(MINIMAL + "trails = 3\n")
    with pytest.raises(ConfigError, match=r"unknown section \[extra\]"):
        parse_config(MINIMAL + "[extra]\nx = 1\n")
    text = MINIMAL.replace("K = 1\n", "").replace("seed = 42\n", "").replace("radius = 1\n", "")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    msg = str(exc.value)
    for key in ("renorm.K", "run.seed", "measure.radius"):
        assert key in msg


@pytest.mark.parametrize("old,new,key", [
    ("kind = uniform_ball", "kind = cube", "kind"),
    ("radius = 1", "radius = -2", "radius"),
    ("N_grid = 100", "N_grid = 100, 10", "N_grid"),
    ("trials = 1000", "trials = 0", "trials"),
    ("seed = 42", "seed = -1", "seed"),
    ("K_prime = 1", "K_prime = nan", "K_prime"),
    ("d = 3", "d = 2.5", "d"),
])
def test_field_precise_errors(old, new, key):
    with pytest.raises(ConfigError, match=f"^{key}:"):
        parse_config(MINIMAL.replace(old, new))


def test_offset_rules():
    with pytest.raises(ConfigError, match="offset"):
        parse_config(MINIMAL.replace("radius = 1", "radius = 1\noffset = 0.5, 0, 0"))
    text = MINIMAL.replace("uniform_ball", "shifted_uniform_ball")
    with pytest.raises(ConfigError, match="measure.offset"):
        parse_config(text)
    with pytest.raises(ConfigError, match="offset"):
        parse_config(text.replace("radius = 1", "radius = 1\noffset = 1.5, 0, 0"))
    cfg = parse_config(text.replace("radius = 1", "radius = 1\noffset = 0.5, 0, 0"))
    assert cfg.offset == (0.5, 0.0, 0.0)


def test_round_trip():
    texts = [MINIMAL,
             MINIMAL.replace("uniform_ball\nradius = 1", "gaussian\nscale = 0.37"),
             MINIMAL.replace("uniform_ball", "shifted_uniform_ball").replace("radius = 1", "radius = 1.1\noffset = 0.1, -0.2, 0.3")
             + "workers = 3\nz_grid = 0.1, 1, 10\noutput_dir = somewhere\n"]
    for t in texts:
        cfg = parse_config(t)
        again = parse_config(serialize(cfg))
        assert again == cfg
        assert serialize(again) == serialize(cfg)


def test_hash_covers_every_output_field():
    cfg = parse_config(MINIMAL.replace("uniform_ball", "shifted_uniform_ball").replace("radius = 1", "radius = 1\noffset = 0.1, 0, 0"))
    h = cfg.config_hash()
    changes = dict(d=2, delta=2.5, kind="gaussian", scale=2.0, offset=(0.2, 0, 0), K=2.0, K_prime=3.0, coupling_sign=-1,
                   N_grid=(100, 1000), trials=7, seed=43, z_grid=(1.0,))
    assert set(changes) == set(cfg.output_fields())
    for k, v in changes.items():
        assert dataclasses.replace(cfg, **{k: v}).config_hash() != h, k
    assert dataclasses.replace(cfg, workers=5, output_dir="x").config_hash() == h


def test_env_output_dir(monkeypatch):
    monkeypatch.setenv("POINTFIELD_OUTPUT_DIR", "/tmp/from-env")
    assert parse_config(MINIMAL).output_dir == "/tmp/from-env"
    assert parse_config(MINIMAL + "output_dir = here\n").output_dir == "here"


def test_fileio_samples_roundtrip(tmp_path):
    f = np.random.default_rng(0).standard_normal((5, 2))
    e = np.random.default_rng(1).standard_normal(5)
    p = tmp_path / "s.csv"
    fileio.write_text(str(p), fileio.samples_text({"N": 3, "offset": [0.1, 0.2]}, f, e))
    meta, f2, e2 = fileio.read_samples(str(p))
    assert meta["N"] == "3" and np.array_equal(f, f2) and np.array_equal(e, e2)
    assert b"\r" not in p.read_bytes()


# --- command line -----------------------------------------------------------

@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text(MINIMAL.replace("N_grid = 100", "N_grid = 100, 1000, 10000").replace("trials = 1000", "trials = 400"))
    return str(p)


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_cli_renorm(tmp_path, capsys):
    assert cli.main(["renorm", "--d", "1", "--delta", "3", "--K", "1", "--K-prime", "1", "--N-grid", "10,100"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "N,L_N,k_N,a_N,b_N,sigma_N,sigma_p_N"
    assert float(out[1].split(",")[1]) == pytest.approx(20.0)
    assert "e+" in out[1] or "e-" in out[1]


def test_cli_flags_override_file(cfg_file, tmp_path, capsys):
    out = tmp_path / "plan.csv"
    assert cli.main(["renorm", "--config", cfg_file, "--N-grid", "7", "--out", str(out)]) == 0
    rows = _rows(out)
    assert [r["N"] for r in rows] == ["7"]


def test_cli_config_error_exit_code(tmp_path, capsys):
    assert cli.main(["renorm", "--d", "3", "--delta", "0", "--K", "1", "--K-prime", "1", "--N-grid", "10"]) == 2
    assert "delta" in capsys.readouterr().err
    assert cli.main(["renorm", "--config", str(tmp_path / "missing.ini")]) == 2


def test_cli_cf(cfg_file, tmp_path):
    out = tmp_path / "cf.csv"
    assert cli.main(["cf", "--config", cfg_file, "--N", "1000", "--out", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 60 and {r["branch"] for r in rows} == {"1<alpha<2"}
    assert {r["direction"] for r in rows} == {"0", "1", "2"}
    out2 = tmp_path / "cfe.csv"
    assert cli.main(["cf", "--config", cfg_file, "--target", "energy", "--z-grid", "0.5,1,2", "--out", str(out2)]) == 0
    assert len(_rows(out2)) == 9


def test_cli_simulate_compare_tailfit(cfg_file, tmp_path, capsys):
    od = tmp_path / "o"
    assert cli.main(["simulate", "--config", cfg_file, "--N", "1000", "--output-dir", str(od), "--workers", "2"]) == 0
    sp = od / "samples-N1000.csv"
    meta, f, e = fileio.read_samples(str(sp))
    assert f.shape == (400, 3) and meta["N"] == "1000"
    cmp_out = tmp_path / "cmp.csv"
    assert cli.main(["cf-compare", "--config", cfg_file, "--samples", str(sp), "--out", str(cmp_out)]) == 0
    rows = _rows(cmp_out)
    assert list(rows[0]) == ["N", "target", "direction", "z_abs", "re_emp", "im_emp", "re_theo", "im_theo",
                             "abs_dev", "branch"]
    assert max(float(r["abs_dev"]) for r in rows) < 4 / math.sqrt(400)
    tf = tmp_path / "tail.csv"
    assert cli.main(["tailfit", "--config", cfg_file, "--draws", "200000", "--out", str(tf)]) == 0
    t = [r for r in _rows(tf) if not r["source"].startswith("#")]
    assert abs(float(t[1]["alpha_hat"]) - 1.5) < 0.15


def test_cli_experiment_outputs(cfg_file, tmp_path):
    od = tmp_path / "exp"
    assert cli.main(["experiment", "--config", cfg_file, "--output-dir", str(od), "--workers", "1"]) == 0
    names = sorted(os.listdir(od))
    assert names == sorted(["manifest.json", "plan.csv", "fits.json"] +
                           [f"{p}-N{n}.csv" for p in ("samples", "cf") for n in (100, 1000, 10000)])
    man = json.loads((od / "manifest.json").read_text())
    assert man["status"] == "complete" and man["seed"] == 42 and man["checks_failed"] == []
    assert set(man["files"]) == set(names) - {"manifest.json"}
    for name, digest in man["files"].items():
        assert fileio.sha256_file(str(od / name)) == digest
    fits = json.loads((od / "fits.json").read_text())
    assert abs(fits["tail"]["alpha_hat"] - 1.5) < 0.15
    assert abs(fits["force_width_fit"]["slope"] + 1 / 3) < 0.05
    assert "timestamp" not in json.dumps(man)


def test_cli_experiment_failed_check(cfg_file, tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "SLOPE_TOL", 0.0)
    od = tmp_path / "exp"
    assert cli.main(["experiment", "--config", cfg_file, "--output-dir", str(od), "--trials", "200"]) == 3
    man = json.loads((od / "manifest.json").read_text())
    assert man["checks_failed"] == ["force_width_slope"]


def test_cli_experiment_stage_failure(cfg_file, tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise MemoryError("simulated")

    monkeypatch.setattr(cli, "run_ensemble", boom)
    od = tmp_path / "exp"
    assert cli.main(["experiment", "--config", cfg_file, "--output-dir", str(od)]) == 4
    man = json.loads((od / "manifest.json").read_text())
    assert man["status"] == "incomplete" and man["failed_stage"] == "simulate N=100"
    assert "plan.csv" in man["files"]
    assert "[simulate N=100]" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "pointfield", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "pointfield" in out.stdout
