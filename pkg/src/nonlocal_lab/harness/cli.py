"""Command-line entry point: ``nonlocal-lab <command> [flags]``."""

from __future__ import annotations

import argparse
import sys

from ..errors import ConsistencyError, InputError
from .config import COMMANDS, KEYS, ConfigError, ValidationError, build_spec, read_pairs
from .runner import run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERDICT = 3
EXIT_IO = 4

FLAG_HELP = {
    "model": "lhv-saw | quantum-singlet | superquantum-pr",
    "ramp": "superquantum ramp: smooth-sine | linear",
    "jam_form": "classical form used by jamming: saw | zero",
    "quad": "'canonical' or a,a_prime,b,b_prime in radians",
    "angle": "relative angle for `sample`",
    "n": "samples per setting pair (0 = analytic for `chsh`)",
    "seed": "root seed",
    "audit": "nonsignaling | empirical | unary | all",
    "grid": "grid points per setting for analytic audits",
    "alpha": "significance of the empirical audit",
    "method": "lhv | tsirelson | lp | all",
    "restarts": "random restarts for the Tsirelson search",
    "tolerance": "polish tolerance for the Tsirelson search",
    "dim": "number of spatial dimensions",
    "a": "Alice's event t,x1[,x2..]",
    "b": "Bob's event t,x1[,x2..]",
    "j": "jammer's event t,x1[,x2..]",
    "budget": "local descents for the d >= 2 search",
    "workers": "threads used for sampling",
    "format": "csv | json",
    "out": "result file path",
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-lab", description="CHSH, nonsignaling and jamming experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="flat key = value file; explicit flags override it")
        for key, help_text in FLAG_HELP.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS, help=help_text)
        p.add_argument("--jammed", action="store_const", const="true", default=argparse.SUPPRESS,
                       help="wrap the model in jamming")
        p.add_argument("--strict", action="store_const", const="true", default=argparse.SUPPRESS,
                       help="exit 3 when an audit or verdict fails")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = vars(_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        values: dict[str, str] = {}
        if config_path:
            with open(config_path) as fh:
                values = read_pairs(fh.read())
            if values.get("command", command) != command:
                raise ValidationError("command", f"config says {values['command']!r} but CLI says {command!r}")
        values.update({k: v for k, v in args.items() if k in KEYS})
        values["command"] = command
        spec = build_spec(values)
        manifest = run(spec)
    except (ConfigError, ValidationError, InputError) as exc:
        print(f"nonlocal-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nonlocal-lab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConsistencyError as exc:
        print(f"nonlocal-lab: internal error: {exc}", file=sys.stderr)
        return 1
    print(f"{command}: wrote {manifest.result_path}")
    for key, value in manifest.summary.items():
        print(f"  {key}: {value}")
    if spec.strict and not manifest.ok:
        return EXIT_VERDICT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
