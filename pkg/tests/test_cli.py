import csv
import json
import math

import pytest

from germforge import cli
from germforge.background import HQDField
from germforge.cli import ConfigError, PipelineConfig, main, parse_config_text
from germforge.gauss_solver import Solution
from germforge.germ import germ_from_json
from germforge.mesh import ConeMesh

ADS_TORUS = {"background": "torus", "refinement": 3, "t": 0.3, "setting": "ads-max",
             "scales": [0.5, 1.0]}


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_config_parsing_formats(tmp_path):
    text = "background = lshape  # comment\nrefinement=2\nscales = 0.5, 1\ntau = 0.1+1.2j\n"
    cfg = PipelineConfig.from_mapping(parse_config_text(text))
    assert cfg.background == "lshape" and cfg.refinement == 2
    assert cfg.scales == (0.5, 1.0) and cfg.tau == 0.1 + 1.2j
    (tmp_path / "c.json").write_text(json.dumps({"tau": [0.1, 1.2], "marks": [[0.5, 0.5, 3.0]]}))
    cfg = PipelineConfig.load(tmp_path / "c.json", ["refinement=1"])
    assert cfg.tau == 0.1 + 1.2j and cfg.marks == ((0.5 + 0.5j, 3.0),) and cfg.refinement == 1


@pytest.mark.parametrize("bad", [{"nope": 1}, {"background": "sphere"}, {"scales": [1, 0.5]},
                                 {"tol": 0}, {"setting": "ads-cmc", "H": 2}, {"refinement": "x"}])
def test_config_rejects(bad):
    with pytest.raises((ConfigError, ValueError)):
        PipelineConfig.from_mapping(bad)


def test_run_writes_six_artifacts_deterministically(tmp_path, capsys):
    cfg = tmp_path / "ads.json"
    cfg.write_text(json.dumps(ADS_TORUS))
    for out in ("a", "b"):
        assert main(["--seed", "3", "run", "--config", str(cfg), "--out", str(tmp_path / out)]) == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    names = [a["file"] for a in manifest["artifacts"]]
    assert names == ["mesh.json", "hqd.json", "solution.json", "germ.json", "report.json",
                     "foliation.csv"]
    assert manifest["seed"] == 3
    for name in names + ["manifest.json"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    # every artifact reloads through its own type
    a = tmp_path / "a"
    mesh = ConeMesh.load(a / "mesh.json")
    hqd = HQDField.load(a / "hqd.json", mesh)
    hqd.check(mesh)
    sol = Solution.load(a / "solution.json")
    germ = germ_from_json(json.loads((a / "germ.json").read_text()), mesh)
    assert sol.u.shape == (mesh.n_vertices,) and germ.B.shape == (mesh.n_faces, 2, 2)
    report = json.loads((a / "report.json").read_text())
    assert report["diagnostics"]["curvature_bound_ok"] is True
    with open(a / "foliation.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5 * mesh.n_faces


def test_hyperbolic_torus_is_infeasible(tmp_path, capsys):
    code = main(["run", "--set", "background=torus", "--set", "setting=hyp-min", "--set", "t=0.5",
                 "--set", "refinement=2", "--out", str(tmp_path)])
    assert code == cli.EXIT_INFEASIBLE
    err = _err(capsys)
    assert err["error"] == "infeasible" and "AM-GM" in err["message"]


@pytest.mark.parametrize("overrides,ok", [
    (["background=torus", "setting=hyp-min", "t=0", f"marks=0.5,0.5,{1.5 * math.pi}"], True),
    (["background=torus", "setting=hyp-min", "t=0"], False),
    (["background=polepair", "setting=ads-max", f"pole_theta={1.5 * math.pi}", "refinement=2"], False),
])
def test_validate(overrides, ok, capsys):
    args = ["validate", "--strict", "--set", "refinement=2"]
    for o in overrides:
        args += ["--set", o]
    code = main(args)
    rep = json.loads(capsys.readouterr().out)
    assert rep["ok"] is ok
    assert code == (0 if ok else cli.EXIT_INFEASIBLE)


def test_stepwise_pipeline(tmp_path, capsys):
    d = tmp_path
    assert main(["background", "lshape", "--set", "refinement=2", "--out", str(d)]) == 0
    assert main(["solve", "--setting", "ads-max", "--mesh", str(d / "mesh.json"), "--hqd",
                 str(d / "hqd.json"), "--scale", "0.5", "--out", str(d / "sol.json")]) == 0
    common = ["--mesh", str(d / "mesh.json"), "--hqd", str(d / "hqd.json"), "--solution",
              str(d / "sol.json"), "--setting", "ads-max", "--scale", "0.5"]
    assert main(["analyze", *common, "--out", str(d / "germ.json"), "--report", str(d / "r.json")]) == 0
    assert json.loads((d / "r.json").read_text())["curvature_bound_ok"] is True
    for which in cli.MAPS:
        assert main(["maps", *common, "--which", which, "--out", str(d / f"{which}.json")]) == 0
    assert main(["hamiltonian", *common, "--out", str(d / "h.csv")]) == 0
    assert len((d / "h.csv").read_text().splitlines()) == 6
    assert main(["foliate", *common, "--r", "0,0.2", "--out", str(d / "f.csv")]) == 0
    assert main(["boundary", *common, "--out", str(d / "b.json")]) == 0
    assert main(["corebound", *common]) == cli.EXIT_CONFIG


def test_exit_codes(tmp_path, capsys):
    assert main(["solve", "--setting", "ads-max", "--mesh", str(tmp_path / "none.json"),
                 "--hqd", "x", "--out", "y"]) == cli.EXIT_IO
    assert _err(capsys)["exit_code"] == cli.EXIT_IO
    assert main(["validate", "--set", "setting=bogus"]) == cli.EXIT_CONFIG
    assert _err(capsys)["error"] == "setting"
    bad = tmp_path / "bad.cfg"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == cli.EXIT_CONFIG


def test_nonconvergence_exit_code(tmp_path, capsys):
    code = main(["run", "--set", "background=lshape", "--set", "refinement=2",
                 "--set", "setting=ads-max", "--set", "max_iter=1", "--out", str(tmp_path)])
    assert code == cli.EXIT_NONCONVERGENCE
