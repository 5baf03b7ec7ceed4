import json
from importlib import resources

import jsonschema
import pytest

from winterbottom_lab import cli

SCHEMA = json.loads(resources.files("winterbottom_lab").joinpath("schemas/report.schema.json").read_text())
L1 = {"kind": "support_polytope", "vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
    return str(p)


def run(tmp_path, command, cfg, *extra, out="out"):
    path = write(tmp_path, cfg)
    target = tmp_path / out
    code = cli.main([command, "--config", path, "--out", str(target), "--quiet", *extra])
    return code, target


def report(target):
    data = json.loads((target / "report.json").read_text())
    jsonschema.validate(data, SCHEMA)
    return data


def test_winterbottom_example(tmp_path):
    code, out = run(tmp_path, "winterbottom", {"anisotropy": {"kind": "euclidean"}, "beta": 0.5})
    assert code == 0
    assert (out / "winterbottom.svg").exists()
    assert report(out)["results"][0]["area"] == pytest.approx(0.61418, abs=1e-5)
    svg = (out / "winterbottom.svg").read_text()
    assert 'class="wulff"' in svg and 'class="substrate"' in svg


def test_regime_example(tmp_path, capsys):
    path = write(tmp_path, {"anisotropy": {"kind": "euclidean"}, "beta": 2})
    code = cli.main(["regime", "--config", path, "--out", str(tmp_path / "o")])
    assert code == 0
    assert capsys.readouterr().out.strip() == "unbounded_below"


def test_verify_example(tmp_path):
    code, out = run(tmp_path, "verify", {"anisotropy": L1, "beta": 0.5}, "--samples", "200")
    assert code == 0
    res = report(out)["results"][0]
    assert res["violations"] == 0 and res["samples"] == 200


def test_malformed_json_reports_position(tmp_path, capsys):
    code, _ = run(tmp_path, "wulff", '{"anisotropy":\n  {"kind": euclid}}')
    assert code == 1
    assert ":2:12:" in capsys.readouterr().err


def test_regime_mismatch_names_required_regime(tmp_path, capsys):
    code, _ = run(tmp_path, "winterbottom", {"anisotropy": {"kind": "euclidean"}, "beta": 1.0})
    assert code == 1
    err = capsys.readouterr().err
    assert "critical_wetting" in err and "required regime: winterbottom" in err


@pytest.mark.parametrize(
    "cfg",
    [
        {"anisotropy": {"kind": "euclidean"}, "beta": 0.1, "beta_grid": {"min": 0, "max": 0.5, "count": 3}},
        {"anisotropy": {"kind": "euclidean"}, "beta_grid": {"min": 0, "max": 0.5, "count": 202}},
        {"anisotropy": {"kind": "euclidean"}},
        {"anisotropy": {"kind": "euclidean"}, "beta": 0.1, "speed": 3},
        {"anisotropy": {"kind": "hexagonal"}, "beta": 0.1},
        {"beta": 0.1},
    ],
)
def test_config_errors(tmp_path, cfg):
    assert run(tmp_path, "winterbottom", cfg)[0] == 1


def test_unknown_subcommand(tmp_path):
    path = write(tmp_path, {"anisotropy": {"kind": "euclidean"}, "beta": 0})
    assert cli.main(["paint", "--config", path]) == 1


def test_violation_exits_2(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "verify_inequality_sample", lambda phi, beta, n, seed: (3, -0.5))
    assert run(tmp_path, "verify", {"anisotropy": L1, "beta": 0.5})[0] == 2


def test_every_subcommand_emits_a_valid_report(tmp_path):
    cfg = {
        "anisotropy": {"kind": "shifted_euclidean", "shift": [0, 0.25]},
        "anisotropy_id": "shifted",
        "beta_grid": {"min": -0.5, "max": 0.5, "count": 2},
        "polygon": {"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]},
        "minimize": {"vertex_count": 16, "restarts": 2, "max_iterations": 200},
        "identity": {"samples": 10},
        "verify": {"samples": 10},
    }
    for command in ("validate", "wulff", "winterbottom", "energy", "identity", "minimize", "verify", "regime"):
        code, out = run(tmp_path, command, cfg, out=command)
        assert code == 0, command
        assert report(out)["command"] == command
    rows = (tmp_path / "minimize" / "results.csv").read_text().splitlines()
    assert rows[0].split(",") == [
        "anisotropy_id", "beta", "mode", "vertex_count", "restarts", "best_ratio",
        "winterbottom_ratio", "relative_gap", "hausdorff_mod_translation", "seconds",
    ]
    assert len(rows) == 3 and rows[1].startswith("shifted,-0.5,ratio,16,2,")
    assert (tmp_path / "winterbottom" / "winterbottom_001.svg").exists()


def test_witness_report(tmp_path):
    code, out = run(tmp_path, "witness", {"anisotropy": {"kind": "euclidean"}, "beta": 1.1, "witness": {"k_max": 10}})
    assert code == 0
    seq = report(out)["results"][0]["sequence"]
    assert len(seq) == 10 and seq[-1][1] < -100


def test_formats_filter(tmp_path):
    code, out = run(tmp_path, "winterbottom", {"anisotropy": {"kind": "euclidean"}, "beta": 0.0, "formats": ["json"]})
    assert code == 0
    assert (out / "report.json").exists() and not (out / "winterbottom.svg").exists()


def test_outputs_are_byte_identical(tmp_path):
    cfg = {
        "anisotropy": L1,
        "beta_grid": {"min": -0.3, "max": 0.6, "count": 3},
        "minimize": {"vertex_count": 16, "restarts": 2, "max_iterations": 150, "seed": 5},
    }
    for command in ("winterbottom", "identity", "minimize"):
        run(tmp_path, command, cfg, out=f"{command}_a")
        run(tmp_path, command, cfg, out=f"{command}_b")
        a, b = tmp_path / f"{command}_a", tmp_path / f"{command}_b"
        names = sorted(p.name for p in a.iterdir() if p.suffix in (".json", ".svg"))
        assert names
        for name in names:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
        assert (a / "run.log").exists()


def test_seed_flag_overrides_config(tmp_path):
    cfg = {"anisotropy": L1, "beta": 0.5, "verify": {"samples": 30, "seed": 1}}
    run(tmp_path, "verify", cfg, out="a")
    run(tmp_path, "verify", cfg, "--seed", "9", out="b")
    ra, rb = report(tmp_path / "a")["results"][0], report(tmp_path / "b")["results"][0]
    assert ra["worst_margin"] != rb["worst_margin"]
