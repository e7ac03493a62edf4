from __future__ import annotations

import csv
import hashlib
import json
import math

import numpy as np
import pytest

from nlbif.cli import initial_profile, main
from nlbif.config import DEFAULT_TOLERANCES, ConfigError, load_config, parse_config
from nlbif.export import ArtifactWriter, csv_text, dumps_json
from nlbif.svg import Marker, Series, chart

BASE = {
    "nonlinearity": {"kind": "cubic"},
    "diffusion": {"kind": "constant", "value": 1.0},
    "j_max": 2,
    "nu": 5.0,
    "nu_grid": {"start": 0.5, "stop": 12.0, "num": 24},
    "tasks": ["validate", "ccurves", "equilibria", "sweep", "spectrum", "simulate", "verify-all"],
    "spectrum": {"n": 201, "eps_points": 11},
    "simulate": {"n": 256, "t_end": 15.0},
}


def test_parse_defaults():
    cfg = parse_config({"nonlinearity": {"kind": "asymmetric_cubic"},
                        "diffusion": {"kind": "knots", "knots": [[0, 1, 0], [3, 2, 0]]},
                        "tasks": ["ccurves", "validate"]})
    assert cfg.tasks == ("validate", "ccurves")
    assert cfg.j_max == 4 and cfg.r_max is None and cfg.nu == ()
    assert cfg.tol == DEFAULT_TOLERANCES
    assert cfg.nl.z_minus == -2.0


def test_tolerance_override_and_scale():
    cfg = parse_config(dict(BASE, tolerances={"gap": 1e-5}), tol_scale=2.0)
    assert cfg.tol["gap"] == pytest.approx(2e-5)
    assert cfg.tol["holdout"] == pytest.approx(2e-7)
    assert np.allclose(cfg.nu_grid, np.linspace(0.5, 12.0, 24))


@pytest.mark.parametrize("patch", [
    {"tasks": ["sweep"], "nu_grid": None},
    {"tasks": ["equilibria"], "nu": None},
    {"nu_grid": [1.0, 0.5]},
    {"nu_grid": {"start": 2.0, "stop": 1.0, "num": 4}},
    {"nonlinearity": {"kind": "quartic"}},
    {"diffusion": {"kind": "bump", "alpha": 1.0, "beta": -2.0, "gamma": 1.0, "r0": 1.0}},
    {"diffusion": {"kind": "knots", "knots": [[0, 1, 0], [1, 2, 1]]}},
    {"j_max": 0},
    {"unknown": 1},
])
def test_config_errors(patch):
    data = dict(BASE)
    for k, v in patch.items():
        if v is None:
            data.pop(k, None)
        else:
            data[k] = v
    with pytest.raises(ConfigError):
        parse_config(data)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(p)


def test_json_and_csv_formatting():
    text = dumps_json({"b": np.float64(math.inf), "a": np.arange(2), "c": np.bool_(True)})
    assert json.loads(text) == {"a": [0, 1], "b": None, "c": True}
    assert text.index('"a"') < text.index('"b"')
    out = csv_text(["x", "y"], [(0.1, None), (np.nan, True)])
    assert out == "x,y\n0.1,\nnan,true\n"


def test_manifest_hashes(tmp_path):
    w = ArtifactWriter(tmp_path)
    w.text("a.txt", "hello\n")
    w.csv("sub/t.csv", ["k"], [(1,)])
    man = w.manifest({"t": {"ok": True}}, 0)
    assert [e["path"] for e in man["artifacts"]] == ["a.txt", "sub/t.csv"]
    assert man["artifacts"][0]["sha256"] == hashlib.sha256(b"hello\n").hexdigest()
    assert json.loads((tmp_path / "manifest.json").read_text())["status"] == 0


def test_svg_deterministic_and_valid():
    import xml.etree.ElementTree as ET
    s = [Series(np.linspace(0, 1, 5), np.array([0, 1, np.nan, 3, 4.0]), label="a<b")]
    m = [Marker(0.5, 2.0, "pf", shape="triangle"), Marker(0.2, 1.0, shape="square")]
    one = chart(s, title="t", xlabel="x", ylabel="y", markers=m)
    assert one == chart(s, title="t", xlabel="x", ylabel="y", markers=m)
    root = ET.fromstring(one)
    assert root.tag.endswith("svg")
    assert one.count("<polyline") == 2   # the nan splits the series
    assert "a&lt;b" in one


def test_initial_profile_perturbation():
    x = np.linspace(0, math.pi, 101)
    run = {"name": "p", "modes": [[2, 0.1]], "perturbation": 1e-6, "seed": 0}
    u = initial_profile(run, x)
    base = 0.1 * np.sin(2 * x)
    assert np.max(np.abs(u - base)) == pytest.approx(1e-6, rel=1e-12)
    assert np.array_equal(u, initial_profile(run, x))


@pytest.fixture(scope="module")
def cli_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "cfg.json"
    cfg.write_text(json.dumps(BASE))
    status1 = main(["run", str(cfg), "--out", str(root / "o1")])
    status2 = main(["run", str(cfg), "--out", str(root / "o2"), "--jobs", "2"])
    return root, status1, status2


def test_cli_success_and_artifacts(cli_run):
    root, s1, _ = cli_run
    assert s1 == 0
    out = root / "o1"
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == 0
    assert all(t["ok"] for t in man["tasks"].values())
    for e in man["artifacts"]:
        assert hashlib.sha256((out / e["path"]).read_bytes()).hexdigest() == e["sha256"]
    paths = {e["path"] for e in man["artifacts"]}
    for p in ("validation.json", "equilibria.csv", "sweep/counts.csv", "sweep/events.json",
              "sweep/diagram.svg", "spectrum/spectrum.json", "simulate.json", "verify.json"):
        assert p in paths
    with open(out / "equilibria.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5
    assert sorted(int(r["morse_index"]) for r in rows) == [0, 0, 1, 1, 2]
    verify = json.loads((out / "verify.json").read_text())
    assert verify and all(c["passed"] for c in verify)
    sim = json.loads((out / "simulate.json").read_text())
    terminals = {r["name"]: r["terminal"] for r in sim["runs"]}
    assert terminals["sin1_plus"].startswith("j1p")
    assert terminals["sin1_minus"].startswith("j1m")


def test_cli_deterministic_across_jobs(cli_run):
    root, s1, s2 = cli_run
    assert s1 == s2 == 0
    a = (root / "o1" / "manifest.json").read_bytes()
    b = (root / "o2" / "manifest.json").read_bytes()
    assert a == b


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"nonlinearity": {"kind": "cubic"}, "tasks": ["validate"]}))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()
    assert "config error" in capsys.readouterr().err


def test_cli_failed_validation_status(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nonlinearity": {"kind": "polynomial", "coefficients": [0, 1, 0, 1]},
                               "diffusion": {"kind": "constant", "value": 1.0},
                               "tasks": ["validate"]}))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["status"] == 1 and not man["tasks"]["validate"]["ok"]
