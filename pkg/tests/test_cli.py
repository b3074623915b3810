import json
import os

import numpy as np
import pytest
import yaml

from mcflab.cli import main

GRIM = {
    "schema_version": 1,
    "name": "grim_cli",
    "metric": {"name": "euclidean"},
    "domain": {"kind": "interval", "bounds": [-1.0, 1.0], "resolution": [32]},
    "phi": {"kind": "constant", "value": -0.8414709848078965, "phi0": 0.9},
    "flow": {"t_end": 0.5, "sample_every": 100},
    "translator": {"eps_start": 0.01, "n_eps": 3},
}


def _cfg(tmp_path, raw, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(raw))
    return str(p)


def test_translator_outputs(tmp_path):
    out = str(tmp_path / "out")
    rc = main(["translator", "--config", _cfg(tmp_path, GRIM), "--out", out,
               "--quiet"])
    assert rc == 0
    doc = json.load(open(os.path.join(out, "translator.json")))
    assert doc["schema_version"] == 1
    assert doc["speed"] == pytest.approx(1.0, rel=2e-3)
    assert doc["speed_quadrature"] == pytest.approx(doc["speed"], rel=5e-3)
    lines = open(os.path.join(out, "profile.csv")).read().splitlines()
    assert lines[0] == "x,u"
    assert len(lines) == 34


def test_flow_outputs(tmp_path):
    out = str(tmp_path / "out")
    rc = main(["flow", "--config", _cfg(tmp_path, GRIM), "--out", out,
               "--quiet"])
    assert rc == 0
    lines = open(os.path.join(out, "trajectory.csv")).read().splitlines()
    assert lines[0] == "t,dt,mean_u,max_abs_ut,max_w,energy,bc_residual"
    assert len(lines) > 3
    doc = json.load(open(os.path.join(out, "report.json")))
    assert doc["verdicts"]["ut_max"]["passed"] is True


def test_verify_pass_and_exit_zero(tmp_path):
    out = str(tmp_path / "out")
    rc = main(["verify", "--config", _cfg(tmp_path, GRIM), "--out", out,
               "--quiet"])
    assert rc == 0
    table = open(os.path.join(out, "verify_table.txt")).read()
    assert "FAIL" not in table


def test_verify_corrupted_fixture_exits_monitor_code(tmp_path):
    fixture = {"t": [0.0, 0.1, 0.2, 0.3],
               "max_abs_ut": [1.0, 0.9, 1.5, 0.8]}
    fp = tmp_path / "fixture.json"
    fp.write_text(json.dumps(fixture))
    raw = dict(GRIM, verify={"fixture": str(fp)})
    out = str(tmp_path / "out")
    rc = main(["verify", "--config", _cfg(tmp_path, raw), "--out", out,
               "--quiet"])
    assert rc == 4
    table = open(os.path.join(out, "verify_table.txt")).read()
    assert "ut_max" in table and "FAIL" in table


def test_config_error_exit_and_error_json(tmp_path):
    raw = dict(GRIM, phi={"kind": "constant", "value": 1.5})
    out = str(tmp_path / "out")
    rc = main(["translator", "--config", _cfg(tmp_path, raw), "--out", out,
               "--quiet"])
    assert rc == 2
    err = json.load(open(os.path.join(out, "error.json")))
    assert err["error"] == "configuration"
    assert err["violations"]


def test_missing_config_is_config_error(tmp_path):
    rc = main(["flow", "--config", str(tmp_path / "nope.yaml"),
               "--out", str(tmp_path / "o"), "--quiet"])
    assert rc == 2


def test_sweep_summary(tmp_path):
    raw = dict(GRIM)
    raw["domain"] = {"kind": "polar", "bounds": [1.5], "resolution": [12, 16]}
    raw["metric"] = {"name": "hyperbolic_polar"}
    raw["phi"] = {"kind": "constant", "value": 0.5, "phi0": 0.9}
    raw["sweep"] = {"parameter": "domain.bounds[0]", "values": [1.0, 1.5, 2.0]}
    out = str(tmp_path / "out")
    rc = main(["sweep", "--config", _cfg(tmp_path, raw), "--out", out,
               "--quiet"])
    assert rc == 0
    lines = open(os.path.join(out, "summary.csv")).read().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("index,parameter,value,speed")
    assert all(os.path.isdir(os.path.join(out, f"point_{k:03d}"))
               for k in range(3))


def test_cheeger_table(tmp_path):
    raw = dict(GRIM)
    raw["domain"] = {"kind": "polar", "bounds": [0.76159], "resolution": [24, 32]}
    raw["metric"] = {"name": "poincare_disk"}
    out = str(tmp_path / "out")
    rc = main(["cheeger", "--config", _cfg(tmp_path, raw), "--out", out,
               "--quiet"])
    assert rc == 0
    lines = open(os.path.join(out, "cheeger.csv")).read().splitlines()
    ratio = float(lines[1].split(",")[-1])
    # chart radius tanh(1) corresponds to geodesic radius 2
    assert ratio == pytest.approx(1.0 / np.tanh(1.0), rel=1e-2)


def test_byte_identical_reruns(tmp_path):
    cfg = _cfg(tmp_path, GRIM)
    outs = []
    for tag in ("a", "b"):
        out = str(tmp_path / tag)
        assert main(["translator", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        outs.append(out)
    for fname in ("translator.json", "profile.csv"):
        a = open(os.path.join(outs[0], fname), "rb").read()
        b = open(os.path.join(outs[1], fname), "rb").read()
        assert a == b
