import os
import subprocess
import sys
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def test_env():
    """Repository paths and an environment that runs ssidepth from the source tree."""
    root_dir = Path(__file__).resolve().parent.parent.parent
    src_dir = root_dir / "src"
    env = os.environ.copy()
    env["PYTHONPATH"] = str(src_dir)
    env.pop("SSIDEPTH_SEED", None)
    return {"root_dir": root_dir, "src_dir": src_dir, "env": env}


def run_cli(test_env: dict, args: list, cwd: Path | None = None, **env_overrides):
    env = dict(test_env["env"])
    env.update({k: str(v) for k, v in env_overrides.items()})
    return subprocess.run([sys.executable, "-m", "ssidepth", *[str(a) for a in args]],
                          cwd=str(cwd or test_env["root_dir"]), env=env,
                          stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)


@pytest.fixture
def cli(test_env, tmp_path):
    """Run the CLI with a private home so no user settings file is picked up."""
    home = tmp_path / "home"
    home.mkdir()

    def _cli(*args, **env_overrides):
        overrides = {"HOME": home, "XDG_CONFIG_HOME": home / ".config", **env_overrides}
        return run_cli(test_env, list(args), cwd=tmp_path, **overrides)

    return _cli
