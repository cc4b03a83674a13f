"""Unit tests for cli/actions/main.py"""

import json
import runpy
import sys

import numpy as np
import pytest
import yaml

from ssidepth.cli.actions import main as cli_main
from ssidepth.fileio.pfm import read_grid, read_normals, write_grid
from ssidepth.fileio.ply import read_ply
from ssidepth.model.grids_model import ScalarGrid
from ssidepth.model.settings_model import ToolSettings


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """No user config file and no seed from the environment."""
    monkeypatch.setattr(ToolSettings, "user_settings_path", staticmethod(lambda: tmp_path / "absent.toml"))
    monkeypatch.delenv("SSIDEPTH_SEED", raising=False)


@pytest.fixture
def run(capsys):
    def _run(*argv):
        assert cli_main.dispatch([str(a) for a in argv]) == 0
        return json.loads(capsys.readouterr().out)

    return _run


@pytest.fixture
def scene_dir(tmp_path, run):
    out = tmp_path / "scene"
    run("synth", "--out-dir", out, "--width", 32, "--height", 32, "--seed", 5, "-q")
    return out


def _expect_exit(capsys, argv, code):
    with pytest.raises(SystemExit) as exc:
        cli_main.dispatch([str(a) for a in argv])
    assert exc.value.code == code
    return capsys.readouterr().err


# ============================================================================
# envelope and exit codes
# ============================================================================

def test_synth_writes_scene_files(tmp_path, run):
    """synth writes every map and reports them in the envelope."""
    report = run("synth", "--out-dir", tmp_path / "s", "--width", 24, "--height", 16, "--seed", 3, "-q")
    assert report["command"] == "synth"
    assert report["seeds"] == {"scene": 3}
    assert report["config"]["seed"] == 3
    assert "threads" not in report["config"]
    assert set(report["metric_variants"])
    files = report["result"]["files"]
    assert set(files) == {"depth", "disparity", "normals", "rgb", "mask", "scene"}
    for name in files.values():
        assert (tmp_path / "s" / name).is_file()
    depth = read_grid(tmp_path / "s" / "depth.pfm")
    assert depth.shape == (16, 24)
    assert report["result"]["depth_min"] == pytest.approx(float(depth.data.min()))


def test_yaml_format(tmp_path, capsys):
    """--format yaml renders the same envelope as YAML."""
    assert cli_main.dispatch(["synth", "--out-dir", str(tmp_path), "--width", "8", "--height", "8",
                              "--format", "yaml", "-q"]) == 0
    doc = yaml.safe_load(capsys.readouterr().out)
    assert doc["command"] == "synth"
    assert doc["result"]["scene"]["width"] == 8


def test_missing_input_is_a_domain_error(tmp_path, capsys):
    """A missing file exits 1 with a prefixed message."""
    err = _expect_exit(capsys, ["loss", "--name", "ssi", "--pred", tmp_path / "nope.pfm"], 1)
    assert err.startswith("ssidepth: prediction file not found")


def test_option_conflict_is_a_usage_error(tmp_path, capsys):
    """Rule violations from the options processor exit 2."""
    err = _expect_exit(capsys, ["evaluate", "--manifest", tmp_path / "m.json", "--pred", "p.pfm",
                                "--gt", "g.pfm"], 2)
    assert "--manifest is incompatible with --pred" in err


def test_bad_seed_environment(monkeypatch, tmp_path, capsys):
    """An unparsable SSIDEPTH_SEED is a settings error."""
    monkeypatch.setenv("SSIDEPTH_SEED", "seven")
    err = _expect_exit(capsys, ["synth", "--out-dir", tmp_path, "--width", 8, "--height", 8], 1)
    assert "SSIDEPTH_SEED must be an integer" in err


def test_seed_environment_is_used(monkeypatch, tmp_path, run):
    """SSIDEPTH_SEED replaces the default seed."""
    monkeypatch.setenv("SSIDEPTH_SEED", "21")
    report = run("synth", "--out-dir", tmp_path, "--width", 8, "--height", 8, "-q")
    assert report["seeds"]["scene"] == 21


def test_config_save_round_trip(tmp_path, run):
    """--config-save writes the effective settings and --config reads them back."""
    saved = tmp_path / "ssidepth.toml"
    run("synth", "--out-dir", tmp_path / "a", "--width", 8, "--height", 8, "--pairs", 77,
        "--weight", "so=0.25", "--config-save", saved, "-q")
    assert saved.is_file()
    report = run("synth", "--out-dir", tmp_path / "b", "--width", 8, "--height", 8, "--config", saved, "-q")
    assert report["config"]["pair_count"] == 77
    assert report["config"]["weights"]["lambda_so"] == 0.25


def test_bad_weight_override(tmp_path, capsys):
    """Malformed --weight values are settings errors."""
    err = _expect_exit(capsys, ["synth", "--out-dir", tmp_path, "--weight", "so"], 1)
    assert "name=value" in err


def test_module_entry_point(monkeypatch):
    """python -m ssidepth runs main."""
    called = {"flag": False}
    monkeypatch.setattr(cli_main, "main", lambda: called.__setitem__("flag", True))
    sys.modules.pop("ssidepth.__main__", None)
    runpy.run_module("ssidepth.__main__", run_name="__main__")
    assert called["flag"]


# ============================================================================
# subcommands
# ============================================================================

def test_loss_on_identical_maps(scene_dir, tmp_path, run):
    """The ssi loss of ground truth against itself vanishes, and gradients are written."""
    depth = scene_dir / "disparity.pfm"
    grad = tmp_path / "grad.pfm"
    report = run("loss", "--name", "ssi", "--pred", depth, "--gt", depth, "--out-grad", grad, "-q")
    result = report["result"]
    assert result["name"] == "ssi"
    assert result["value"] == pytest.approx(0.0, abs=1e-9)
    assert read_grid(grad).shape == (32, 32)


def test_loss_gradcheck(tmp_path, run, rng):
    """--gradcheck reports a small relative error."""
    pred = write_grid(tmp_path / "p.pfm", ScalarGrid(rng.uniform(0.5, 1.5, size=(4, 4))))
    gt = write_grid(tmp_path / "g.pfm", ScalarGrid(rng.uniform(0.5, 1.5, size=(4, 4))))
    report = run("loss", "--name", "l1", "--pred", pred, "--gt", gt, "--gradcheck", "-q")
    assert report["result"]["gradcheck"]["max_relative_error"] < 1e-5


def test_loss_needs_ground_truth(tmp_path, capsys, rng):
    """Supervised losses without --gt fail as domain errors."""
    pred = write_grid(tmp_path / "p.pfm", ScalarGrid(rng.uniform(0.5, 1.5, size=(4, 4))))
    _expect_exit(capsys, ["loss", "--name", "ssi", "--pred", pred], 1)


def test_align_recovers_affine(tmp_path, run, random_grid):
    """align fits pred = 2 gt + 1 back onto gt."""
    gt = random_grid()
    pred = write_grid(tmp_path / "p.pfm", ScalarGrid(2.0 * gt.data + 1.0))
    gt_path = write_grid(tmp_path / "g.pfm", gt)
    out = tmp_path / "aligned.pfm"
    result = run("align", "--pred", pred, "--gt", gt_path, "--out", out, "-q")["result"]
    assert result["mode"] == "ssi"
    assert result["a"] == pytest.approx(0.5, rel=1e-5)
    assert result["b"] == pytest.approx(-0.5, abs=1e-5)
    assert result["valid_pixels"] == 256
    np.testing.assert_allclose(read_grid(out).data, gt.data, atol=1e-5)


def test_align_without_gt(tmp_path, capsys, random_grid):
    """align needs a reference."""
    pred = write_grid(tmp_path / "p.pfm", random_grid())
    err = _expect_exit(capsys, ["align", "--pred", pred], 1)
    assert "--gt" in err


def test_normals_and_project(scene_dir, tmp_path, run):
    """Normals and point clouds come from the synthetic depth."""
    normals_out = tmp_path / "n.pfm"
    result = run("normals", "--depth", scene_dir / "depth.pfm", "--out", normals_out, "-q")["result"]
    assert result["intrinsics"]["default"] is True
    assert result["valid_normals"] + result["invalid_normals"] == 32 * 32
    assert read_normals(normals_out).vectors.shape == (32, 32, 3)

    ply = tmp_path / "c.ply"
    result = run("project", "--depth", scene_dir / "depth.pfm", "--rgb", scene_dir / "rgb.png",
                 "--intrinsics", "40,40,16,16", "--out", ply, "-q")["result"]
    assert result["colored"] is True
    assert result["intrinsics"] == {"fx": 40.0, "fy": 40.0, "cx": 16.0, "cy": 16.0, "default": False}
    assert len(read_ply(ply)) == result["points"] == 32 * 32


def test_malformed_intrinsics(scene_dir, tmp_path, capsys):
    """Intrinsics need four numbers."""
    err = _expect_exit(capsys, ["normals", "--depth", scene_dir / "depth.pfm", "--out", tmp_path / "n.pfm",
                                "--intrinsics", "1,2,3"], 1)
    assert "fx,fy,cx,cy" in err


def test_evaluate_single_pair(scene_dir, run):
    """Ground truth scored against itself is perfect."""
    depth = scene_dir / "depth.pfm"
    result = run("evaluate", "--pred", depth, "--gt", depth, "--mode", "si",
                 "--gt-normals", scene_dir / "normals.pfm", "-q")["result"]
    report = result["per_image"][0]
    assert report["alignment"]["scale"] == pytest.approx(1.0)
    assert report["metrics"]["rmse"] == pytest.approx(0.0, abs=1e-9)
    assert report["metrics"]["ord"] == 0.0
    assert 0.0 <= report["metrics"]["normal_within_t"] <= 1.0
    assert result["aggregate"]["images"] == 1


def test_evaluate_manifest(scene_dir, tmp_path, run):
    """Manifest items are reported in order with an aggregate."""
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps([
        {"pred": str(scene_dir / "depth.pfm"), "gt": str(scene_dir / "depth.pfm")},
        {"pred": str(scene_dir / "disparity.pfm"), "gt": str(scene_dir / "depth.pfm"), "mask": str(scene_dir / "mask.png")},
    ]))
    result = run("evaluate", "--manifest", manifest, "--threads", 2, "-q")["result"]
    assert [r["pred"] for r in result["per_image"]] == ["depth.pfm", "disparity.pfm"]
    assert result["aggregate"]["images"] == 2
    assert result["per_image"][0]["metrics"]["abs_rel"] == pytest.approx(0.0, abs=1e-9)


def test_evaluate_manifest_error_names_entry(scene_dir, tmp_path, capsys):
    """A broken manifest entry is reported with its index."""
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps([
        {"pred": str(scene_dir / "depth.pfm"), "gt": str(scene_dir / "depth.pfm")},
        {"pred": str(scene_dir / "missing.pfm"), "gt": str(scene_dir / "depth.pfm")},
    ]))
    err = _expect_exit(capsys, ["evaluate", "--manifest", manifest], 1)
    assert "manifest entry 1" in err


# ============================================================================
# training and inference
# ============================================================================

TINY = ["--scenes", 2, "--heldout", 1, "--size", 16, "--epochs", 1, "--pairs", 50, "--ord-pairs", 100,
        "--scales", 2, "--receptive-field", 32, "--max-factor", 1, "-q"]


def test_train_toy_then_infer(scene_dir, tmp_path, run):
    """Both stages train, and their checkpoints drive two-stage inference."""
    ssi = run("train-toy", "--recipe", "ssi+so", "--out-dir", tmp_path / "ssi", *TINY)["result"]
    assert ssi["stage"] == "ssi"
    assert (tmp_path / "ssi" / ssi["files"]["checkpoint"]).is_file()
    assert json.loads((tmp_path / "ssi" / ssi["files"]["log"]).read_text())["recipe"] == "ssi+so"

    si = run("train-toy", "--recipe", "si", "--out-dir", tmp_path / "si", *TINY)["result"]
    assert si["stage"] == "si"

    depth_out = tmp_path / "depth.pfm"
    ply_out = tmp_path / "cloud.ply"
    result = run("infer", "--rgb", scene_dir / "rgb.png",
                 "--ssi-ckpt", tmp_path / "ssi" / "model.ckpt", "--si-ckpt", tmp_path / "si" / "model.ckpt",
                 "--out-depth", depth_out, "--out-ply", ply_out,
                 "--receptive-field", 32, "--max-factor", 1, "-q")["result"]
    assert result["ssi_source"] == "network"
    assert result["files"] == {"depth": "depth.pfm", "ply": "cloud.ply"}
    depth = read_grid(depth_out)
    assert depth.shape == (32, 32)
    assert np.all(depth.data > 0)
    assert len(read_ply(ply_out)) == result["points"]


def test_infer_rejects_swapped_checkpoints(tmp_path, run, scene_dir, capsys):
    """An SSI checkpoint cannot stand in for the SI network."""
    run("train-toy", "--recipe", "ssi", "--out-dir", tmp_path / "ssi", *TINY)
    ckpt = tmp_path / "ssi" / "model.ckpt"
    err = _expect_exit(capsys, ["infer", "--rgb", scene_dir / "rgb.png", "--ssi-ckpt", ckpt, "--si-ckpt", ckpt], 1)
    assert "'ssi' stage" in err


def test_ablate_writes_csv(tmp_path, run):
    """ablate runs the chosen recipes and writes the comparison table."""
    csv_path = tmp_path / "out" / "ablation.csv"
    result = run("ablate", "--stage", "ssi", "--recipes", "ssi", "ssi+so", "--csv", csv_path, *TINY)["result"]
    assert [row["recipe"] for row in result["rows"]] == ["ssi", "ssi+so"]
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("ssi,ssi,1,")


def test_evaluate_empty_manifest(tmp_path, run):
    """An empty manifest gives an empty report."""
    manifest = tmp_path / "m.json"
    manifest.write_text("[]")
    result = run("evaluate", "--manifest", manifest, "-q")["result"]
    assert result == {"per_image": [], "aggregate": {"images": 0, "metrics": {}}}


@pytest.mark.parametrize("command", ["synth", "loss", "evaluate", "infer"])
def test_help_per_subcommand(command, capsys):
    """Every subcommand documents its flags."""
    with pytest.raises(SystemExit) as exc:
        cli_main.dispatch([command, "--help"])
    assert exc.value.code == 0
    assert "--format" in capsys.readouterr().out
