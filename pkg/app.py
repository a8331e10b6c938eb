"""
SpinSim — Command-Line Front End
=================================
Simulates the topological (−1)^F phase of m=0 hyperfine states under a
magnetic-field reversal, from single reversals to full Ramsey campaigns.

Entry point: python app.py <subcommand> [--config FILE] [--preset NAME] ...

Exit codes:
    0  every output written and every fit converged
    1  a fit did not converge or a topological class was undefined
    2  configuration error
    3  runtime failure (partial outputs removed)
"""

import argparse
import logging
import sys

# ── Internal imports ──────────────────────────────────────────────────────────
from config.constants import TOOL_NAME, TOOL_VERSION
from config.experiment_config import ConfigError, load_config
from config.presets import PRESETS, get_preset_display_name, preset_layer
from pipeline.experiment_runner import ExperimentError, run_experiment

logger = logging.getLogger(TOOL_NAME)

SUBCOMMANDS = {
    "rabi": "rabi",
    "ramsey": "ramsey_scan",
    "reverse": "reversal_phase",
    "adiabaticity": "adiabaticity_report",
    "sweep": "visibility_sweep",
    "robustness": "robustness_suite",
}

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Spin-F field-reversal and Ramsey-fringe simulator",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    parser.add_argument("--list-presets", action="store_true", help="List named scenarios and exit")
    sub = parser.add_subparsers(dest="command")
    for name, kind in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run a {kind} experiment")
        p.add_argument("--config", type=str, default=None, help="YAML configuration file")
        p.add_argument("--preset", type=str, default=None,
                       help="Named scenario (key or unique fragment) applied under the config file")
        p.add_argument("--out", type=str, default=None, help="Output directory")
        p.add_argument("--seed", type=int, default=None, help="Seed for stochastic features")
        p.add_argument("--workers", type=int, default=None, help="Scan worker processes (0 = all CPUs)")
        p.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def flag_overrides(args: argparse.Namespace) -> dict:
    """Nested config layer from command-line flags; the subcommand fixes the experiment."""
    out: dict = {"experiment": SUBCOMMANDS[args.command]}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.workers is not None:
        out["numerics"] = {"workers": args.workers}
    if args.out is not None:
        out["output"] = {"directory": args.out}
    return out


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.list_presets:
        for key in PRESETS:
            print(get_preset_display_name(key))
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    configure_logging(args.verbose)
    try:
        preset = preset_layer(args.preset, SUBCOMMANDS[args.command]) if args.preset else None
        cfg = load_config(args.config, preset=preset, environ=environ, overrides=flag_overrides(args))
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG

    try:
        manifest = run_experiment(cfg)
    except ExperimentError as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME

    print(f"{manifest.experiment}: {len(manifest.outputs)} files in {cfg.output.directory} "
          f"(config {manifest.config_hash[:12]})")
    if not manifest.all_converged:
        logger.warning("run finished with a non-converged fit or undefined class")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
