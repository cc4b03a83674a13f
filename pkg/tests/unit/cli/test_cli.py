"""Unit tests for cli.py"""

import pytest

from ssidepth import constants as C
from ssidepth.cli.cli import COMMANDS, build_parser


@pytest.fixture
def parser():
    return build_parser()


def test_every_command_is_registered(parser):
    """Each subcommand parses with its required options."""
    required = {
        "synth": ["--out-dir", "d"],
        "loss": ["--name", "ssi", "--pred", "p.pfm"],
        "align": ["--pred", "p.pfm"],
        "normals": ["--depth", "d.pfm", "--out", "n.pfm"],
        "project": ["--depth", "d.pfm", "--out", "c.ply"],
        "evaluate": [],
        "train-toy": ["--recipe", "ssi", "--out-dir", "d"],
        "ablate": [],
        "infer": ["--rgb", "i.png", "--si-ckpt", "s.ckpt"],
    }
    assert set(required) == set(COMMANDS)
    for command, extra in required.items():
        args = parser.parse_args([command, *extra])
        assert args.command == command


def test_common_defaults(parser):
    """Tunables stay unset so config files are not overridden."""
    args = parser.parse_args(["evaluate"])
    assert args.format == "json"
    assert args.seed is None
    assert args.pairs is None
    assert args.clamp_scale is None
    assert args.no_ssig_aligned is False
    assert args.weight is None
    assert args.mode == "ssi"
    assert args.pred_space == "depth"


def test_common_options_after_subcommand(parser):
    """Shared options are accepted on every subcommand."""
    args = parser.parse_args(["loss", "--name", "so", "--pred", "p.pfm", "--seed", "9", "--pairs", "50",
                              "--weight", "so=0.5", "--weight", "ssig=0", "--format", "yaml", "-q"])
    assert args.seed == 9
    assert args.pairs == 50
    assert args.weight == ["so=0.5", "ssig=0"]
    assert args.format == "yaml"
    assert args.quiet


def test_synth_defaults(parser):
    """Scene flags have usable defaults."""
    args = parser.parse_args(["synth", "--out-dir", "d"])
    assert (args.width, args.height, args.primitives) == (64, 64, 3)
    assert (args.near, args.far) == (1.0, 10.0)
    assert args.focal is None


def test_benchmark_defaults(parser):
    """Training commands default to the standard benchmark."""
    args = parser.parse_args(["ablate", "--stage", "si"])
    assert args.scenes == C.BENCHMARK_SCENES
    assert args.heldout == C.BENCHMARK_HELDOUT
    assert args.size == C.BENCHMARK_SIZE
    assert args.recipes is None


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["loss", "--name", "nope", "--pred", "p.pfm"],
    ["synth"],
    ["evaluate", "--mode", "metric"],
    ["align", "--pred", "p.pfm", "--bogus"],
])
def test_usage_errors_exit_2(parser, argv, capsys):
    """argparse rejects unknown commands, choices and flags with status 2."""
    with pytest.raises(SystemExit) as exc:
        parser.parse_args(argv)
    assert exc.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_version(parser, capsys):
    """--version prints the program name."""
    with pytest.raises(SystemExit) as exc:
        parser.parse_args(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("ssidepth ")
