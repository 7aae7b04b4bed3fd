"""koopnet command line: generate datasets, fit models, evaluate them."""
import argparse
import logging
import sys
from typing import get_args

from pydantic import ValidationError

from koopnet.cli.commands.evaluate_command import cmd_evaluate
from koopnet.cli.commands.fit_command import cmd_fit
from koopnet.cli.commands.generate_command import cmd_generate
from koopnet.cli.config import load_config
from koopnet.errors import ConfigError, KoopnetError, wrap
from koopnet.eval.experiments import GRIDS
from koopnet.log import setup_logging
from koopnet.models.specs import ModelKind

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2
MODEL_KINDS = get_args(ModelKind)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="koopnet", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("generate", "simulate a network system or collect training trajectories"),
        ("fit", "fit a model on the train split"),
        ("evaluate", "write prediction-loss, sweep or robustness reports"),
    ):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="JSON run configuration")
        sub.add_argument("--out", default=None, help="output root; overrides io.out_dir and KOOPNET_DATA_DIR")
        sub.add_argument("--seed", type=int, default=None, help="overrides every seed in the config")
        if name in ("fit", "evaluate"):
            sub.add_argument("--model", choices=MODEL_KINDS, default=None)
        if name == "evaluate":
            sub.add_argument("--sweep", default=None, metavar="dims=D1,D2,...")
            sub.add_argument("--robustness", choices=GRIDS, default=None)
    return parser


def run(args: argparse.Namespace) -> None:
    config = load_config(args.config).with_seed(args.seed)
    setup_logging(log_dir=config.io.log_dir)
    log.info("%s start config_hash=%s", args.command, config.config_hash)
    match args.command:
        case "generate":
            cmd_generate(config, args.out)
        case "fit":
            cmd_fit(config, args.out, args.model)
        case "evaluate":
            cmd_evaluate(config, args.out, args.model, args.sweep, args.robustness)
    log.info("%s done config_hash=%s", args.command, config.config_hash)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    where = f"cmd_{args.command}"
    try:
        run(args)
    except (ConfigError, ValidationError) as e:
        print(wrap(where, e), file=sys.stderr)
        return EXIT_CONFIG
    except (KoopnetError, OSError, ValueError) as e:
        log.error("%s failed: %s", where, e)
        print(wrap(where, e), file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
