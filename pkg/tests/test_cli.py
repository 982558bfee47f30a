import json

import numpy as np
import pytest

from pefplan import cli, energy, spectral
from pefplan.field import Grid, ScalarField
from pefplan.io import config_from_dict, design_from_dict, field_csv, InputError

DESIGN = {
    "domain": {"W": 1, "H": 1},
    "modules": [{"w": 0.3, "h": 0.25}, {"w": 0.25, "h": 0.3}],
    "nets": [[{"m": 0}, {"fixed": [0.5, 0.5]}], [{"m": 1}, {"fixed": [0.5, 0.5]}], [{"m": 0}, {"m": 1}]],
    "initial": [[0.45, 0.5], [0.55, 0.52]],
}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    return {
        "design": write(tmp_path / "d.json", DESIGN),
        "config": write(tmp_path / "c.json", {"lambda": 1000, "epsilon": 0.02, "max_iters": 40, "grid": [64, 64]}),
        "dir": tmp_path,
    }


def test_place_writes_outputs(files):
    out = files["dir"] / "run" / "a"
    rc = cli.main(["place", files["design"], "--config", files["config"], "-o", str(out)])
    assert rc == 0
    for suffix in (".placement.json", ".diag.csv", ".layout.svg"):
        assert (out.parent / ("a" + suffix)).exists()
    centers = json.loads((out.parent / "a.placement.json").read_text())["centers"]
    assert np.array(centers).shape == (2, 2)
    header = (out.parent / "a.diag.csv").read_text().splitlines()[0]
    assert header == "k,F,W,E_eps,Var,overlap,grad_mapping_norm,step,lam"


def test_place_is_deterministic(files):
    outs = []
    for name in ("x", "y"):
        assert cli.main(["place", files["design"], "--config", files["config"], "-o", str(files["dir"] / name)]) == 0
        outs.append([(files["dir"] / (name + s)).read_bytes() for s in (".placement.json", ".diag.csv", ".layout.svg")])
    assert outs[0] == outs[1]


def test_malformed_json_exit_2_no_outputs(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["place", str(bad), "-o", str(tmp_path / "o")]) == 2
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bad.json"]


def test_unknown_config_key_exit_2(files):
    cfg = write(files["dir"] / "u.json", {"lambda": 1, "learning_rate": 3})
    assert cli.main(["place", files["design"], "--config", cfg, "-o", str(files["dir"] / "o")]) == 2


def test_erosion_too_large_exit_3(files, capsys):
    cfg = write(files["dir"] / "e.json", {"epsilon": 0.2, "grid": [32, 32]})
    assert cli.main(["place", files["design"], "--config", cfg, "-o", str(files["dir"] / "o")]) == 3
    assert "ErosionTooLarge" in capsys.readouterr().err


def test_verify_passes_and_is_reproducible(files):
    paths = [files["dir"] / "r1.json", files["dir"] / "r2.json"]
    for p in paths:
        assert cli.main(["verify", files["design"], "--config", files["config"], "-o", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rep = json.loads(paths[0].read_text())
    assert rep["passed"]
    names = {c["name"] for inst in rep["instances"] for c in inst["checks"]}
    assert {"energy_upper_bound", "energy_lower_bound", "spectral_identity", "erosion_lemma", "overlap_certificate"} <= names
    assert set(rep["instances"][0]["checks"][0]) == {"name", "value", "bound", "margin", "passed"}


def test_verify_detects_corrupted_energy(files, monkeypatch, capsys):
    # energy computed with eigenvalues scaled down by 10
    monkeypatch.setattr(energy, "poisson_energy", lambda f: 5.0 * spectral.hminus1_norm_sq(f))
    assert cli.main(["verify", files["design"], "--config", files["config"]]) == 1
    rep = json.loads(capsys.readouterr().out)
    assert any(name.endswith("energy_upper_bound") for name in rep["failed"])


def test_verify_density_infeasible_exit_3(files, capsys):
    doc = dict(DESIGN, modules=[{"w": 1, "h": 1}, {"w": 1, "h": 1}], nets=[], initial=None)
    path = write(files["dir"] / "dense.json", doc)
    assert cli.main(["verify", path]) == 3
    assert "DensityInfeasible" in capsys.readouterr().err


def test_spectrum_design_and_fields(files):
    out = files["dir"] / "s.csv"
    assert cli.main(["spectrum", files["design"], "--config", files["config"], "-N", "10", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,l,lambda_discrete,lambda_continuum,alpha"
    assert len(lines) == 12 and lines[-1].startswith("# parseval")
    rel = float(lines[-1].split("rel_err=")[1])
    assert rel < 1e-12
    assert json.loads((files["dir"] / "s.report.json").read_text())["N"] == 10

    g = Grid(16, 16)
    pure = ScalarField.from_function(g, lambda x, y: np.cos(np.pi * x) * np.cos(2 * np.pi * y))
    src = files["dir"] / "pure.csv"
    src.write_text(field_csv(pure))
    assert cli.main(["spectrum", str(src), "-N", "255", "-o", str(files["dir"] / "p.csv")]) == 0
    data = np.loadtxt(files["dir"] / "p.csv", delimiter=",", skiprows=1, comments="#")
    nz = data[np.abs(data[:, 4]) > 1e-10]
    assert nz.shape[0] == 1 and tuple(nz[0, :2]) == (1, 2)

    flat = files["dir"] / "flat.csv"
    flat.write_text(field_csv(ScalarField(g, np.full(g.shape, 0.4))))
    assert cli.main(["spectrum", str(flat), "-o", str(files["dir"] / "f.csv")]) == 0
    data = np.loadtxt(files["dir"] / "f.csv", delimiter=",", skiprows=1, comments="#")
    assert np.all(data[:, 4] == 0)


def test_flow_outputs_and_compare(files):
    cfg = write(files["dir"] / "f.json", {"t_end": 0.05, "grid": [32, 32], "record_every": 5})
    out = files["dir"] / "fl"
    assert cli.main(["flow", files["design"], "--config", cfg, "-o", str(out), "--compare-heat"]) == 0
    ledger = np.loadtxt(files["dir"] / "fl.ledger.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(ledger[:, 1]) <= 1e-10)
    assert (files["dir"] / "fl.heat.ledger.csv").exists()
    assert (files["dir"] / "fl.snap_0000.csv").exists()
    cmp = json.loads((files["dir"] / "fl.compare.json").read_text())
    assert {"wgf_half_life", "heat_half_life"} <= set(cmp)


def test_flow_uniform_field_flat_ledger(files):
    g = Grid(16, 16)
    src = files["dir"] / "u.csv"
    src.write_text(field_csv(ScalarField(g, np.full(g.shape, 0.5))))
    assert cli.main(["flow", str(src), "-o", str(files["dir"] / "u")]) == 0
    ledger = np.loadtxt(files["dir"] / "u.ledger.csv", delimiter=",", skiprows=1, ndmin=2)
    assert np.all(ledger[:, 1] == 0)


def test_grid_and_seed_flags(files):
    doc = dict(DESIGN)
    doc.pop("initial")
    path = write(files["dir"] / "noinit.json", doc)
    out = files["dir"] / "g"
    argv = ["place", path, "--config", files["config"], "--grid", "32", "40", "--seed", "5", "--threads", "1", "-o", str(out)]
    assert cli.main(argv) == 0


def test_parsers():
    d, init = design_from_dict(DESIGN)
    assert len(d) == 2 and len(d.netlist) == 3 and init.shape == (2, 2)
    with pytest.raises(InputError):
        design_from_dict({"domain": {"W": 1}})
    with pytest.raises(InputError):
        config_from_dict({"lambda": 1, "bogus": 0})
    assert config_from_dict({"grid": 64}).grid == (64, 64)


def test_bad_arguments_exit_2():
    assert cli.main(["place"]) == 2
    assert cli.main(["nonsense"]) == 2
