from __future__ import annotations

import sys
from typing import Callable, Dict

from .align import run_align
from .common import ActionOutput
from .evaluate import run_evaluate
from .geometry import run_normals, run_project
from .infer import run_infer
from .loss import run_loss
from .synth import run_synth
from .train import run_ablate, run_train_toy
from ..cli import build_parser
from ..options_processor import validate_and_imply
from ...errors import SsiDepthError
from ...model.report_model import ReportEnvelope
from ...model.settings_model import ToolSettings
from ...utils import EXIT_DOMAIN_ERROR, EXIT_OK, EXIT_USAGE_ERROR, configure_logging, die

ACTIONS: Dict[str, Callable[..., ActionOutput]] = {
    "synth": run_synth,
    "loss": run_loss,
    "align": run_align,
    "normals": run_normals,
    "project": run_project,
    "evaluate": run_evaluate,
    "train-toy": run_train_toy,
    "ablate": run_ablate,
    "infer": run_infer,
}


def check_python_version():
    if sys.version_info < (3, 10):
        raise Exception("Must be using Python 3.10 or higher")


def dispatch(argv: list[str] | None = None) -> int:
    """Run one subcommand and print its report; returns the exit code."""
    check_python_version()
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        args = validate_and_imply(args)
    except ValueError as e:
        die(str(e), EXIT_USAGE_ERROR)

    configure_logging(verbose=args.verbose, quiet=args.quiet)
    try:
        settings = ToolSettings.resolve(vars(args))
        result, seeds = ACTIONS[args.command](args, settings)
    except (SsiDepthError, OSError) as e:
        die(str(e), EXIT_DOMAIN_ERROR)

    envelope = ReportEnvelope(command=args.command, config=settings.to_report_mapping(),
                              result=result, seeds=seeds)
    sys.stdout.write(envelope.render(args.format))
    return EXIT_OK


def main(argv: list[str] | None = None) -> None:
    sys.exit(dispatch(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
