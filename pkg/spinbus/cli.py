"""
Command-line interface

    spinbus <subcommand> --config <path> --out <dir> [--seed N] [--threads N] [--verbose]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

import argparse
import sys

from . import __version__
from .config import EXPERIMENTS, load_config_file
from .exceptions.errors import ConfigError, NumericalError, SpecError, StorageError
from .runner import Runner
from .storage import RunStorage
from .utils.logger import Logger

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

HELP = {
    "spectrum": "Lowest levels of the configured chain",
    "coupler-character": "Gap, persistent current and J_cc of the coupler versus f_x",
    "flux-propagation": "Symmetry-point shift of every unit for a +-offset source",
    "susceptibility": "End-to-end response curves and sigmoid midpoint slopes",
    "jeff-compare": "Susceptibility, splitting and perturbative J_eff side by side",
    "noise": "Quasistatic 1/f flux-noise level statistics and qubit linewidth",
    "hierarchy-bench": "Grouped-truncation error versus kept levels",
}


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (ConfigError, SpecError)):
        return EXIT_CONFIG
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (StorageError, OSError)):
        return EXIT_IO
    raise error


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinbus", description="Transverse-field Ising spin-bus simulator"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="YAML or JSON run config (defaults apply when omitted)")
        p.add_argument("--out", default="results", help="Output directory")
        p.add_argument("--seed", type=int, help="Master seed, overrides the config")
        p.add_argument("--threads", type=int,
                       help="Worker threads (default: $SPINBUS_THREADS or 1)")
        p.add_argument("--verbose", action="store_true", help="Log debug lines")
    return parser


def _report(out_dir, error, code, logger):
    logger.error(f"{type(error).__name__}: {error}")
    try:
        RunStorage(out_dir).fail(error, code)
    except StorageError:
        pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    console = Logger(verbose=args.verbose)

    try:
        config = load_config_file(args.experiment, args.config, out_dir=args.out,
                                  seed=args.seed, threads=args.threads)
    except (ConfigError, SpecError, StorageError) as e:
        code = exit_code_for(e)
        _report(args.out, e, code, console)
        return code

    runner = None
    try:
        runner = Runner(config, verbose=args.verbose)
        runner.run()
    except (ConfigError, SpecError, NumericalError, StorageError, OSError) as e:
        code = exit_code_for(e)
        logger = runner.logger if runner is not None else console
        if runner is not None:
            logger.error(f"{type(e).__name__}: {e}")
            runner.storage.fail(e, code)
        else:
            _report(args.out, e, code, logger)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
