# options_processor.py
from argparse import Namespace

# per subcommand: option -> options it cannot be combined with
INCOMPATIBLE_OPTIONS = {
    "evaluate": {
        "manifest": [
            "pred",
            "gt",
            "mask",
            "gt-normals",
            "intrinsics"
        ]
    },
    "infer": {
        "ssi-ckpt": [
            "ssi-low",
            "ssi-high"
        ]
    }
}

# per subcommand: option -> options that must accompany it
REQUIRES_OPTIONS = {
    "evaluate": {
        "pred": ["gt"],
        "gt": ["pred"],
        "mask": ["pred"],
        "gt-normals": ["pred"]
    },
    "infer": {
        "ssi-low": ["ssi-high"],
        "ssi-high": ["ssi-low"]
    },
    "loss": {
        "out-grad": ["pred"]
    }
}

# per subcommand: at least one of these must be given
ONE_OF_OPTIONS = {
    "evaluate": ["manifest", "pred"],
    "infer": ["ssi-ckpt", "ssi-low"]
}


def _opt_keys(command: str):
    keys = set(INCOMPATIBLE_OPTIONS.get(command, {}))
    for bad in INCOMPATIBLE_OPTIONS.get(command, {}).values():
        keys.update(bad)
    for opt, needed in REQUIRES_OPTIONS.get(command, {}).items():
        keys.add(opt)
        keys.update(needed)
    keys.update(ONE_OF_OPTIONS.get(command, []))
    return keys


def _active_options(args: Namespace):
    command = getattr(args, "command", None)
    keys = _opt_keys(command)
    active = set()
    for dest, val in vars(args).items():
        if dest.startswith("_"):
            continue
        opt = dest.replace("_", "-")
        if opt not in keys:
            continue
        if isinstance(val, bool):
            if val:
                active.add(opt)
        else:
            if val is not None:
                active.add(opt)
    return active


def _apply_implications(args: Namespace):
    if getattr(args, "quiet", False):
        args.verbose = False  # quiet wins


def validate_and_imply(args: Namespace):
    _apply_implications(args)
    command = getattr(args, "command", None)
    active = _active_options(args)
    errors = []
    for opt in sorted(active):
        for bad in INCOMPATIBLE_OPTIONS.get(command, {}).get(opt, []):
            if bad in active:
                errors.append(f"--{opt} is incompatible with --{bad}")
        for needed in REQUIRES_OPTIONS.get(command, {}).get(opt, []):
            if needed not in active:
                errors.append(f"--{opt} requires --{needed}")
    one_of = ONE_OF_OPTIONS.get(command)
    if one_of and not any(o in active for o in one_of):
        errors.append(f"{command} needs one of " + ", ".join(f"--{o}" for o in one_of))
    if errors:
        raise ValueError(", ".join(errors))
    return args
