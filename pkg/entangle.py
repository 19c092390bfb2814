import argparse
import logging
import sys

import yaml

from experiments import ExperimentConfig, cmd_witness, load_config
from experiments.commands import COMMANDS
from modeling.errors import ConfigError, SimulationError


logger = logging.getLogger("entangle")


def _add_common(parser, suppress: bool = False):
    # on subcommands an absent flag must not overwrite the value parsed before it
    parser.add_argument(
        "--config",
        type=str,
        default=argparse.SUPPRESS if suppress else None,
        help="YAML (or JSON) experiment file. Defaults apply when omitted.",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=argparse.SUPPRESS if suppress else None,
        help="Master seed (unsigned 64-bit); overrides net.seed.",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=argparse.SUPPRESS if suppress else None,
        help="Output directory; overrides output_dir.",
    )
    parser.add_argument(
        "--no-plots",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="Skip the SVG figures.",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="Log at DEBUG level.",
    )


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description="Hamilton-Jacobi learning dynamics, learning potential and two-qubit entanglement.")
    _add_common(parser)
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Integrate the network for the master seed.")
    sub.add_parser("potential", parents=[common], help="Ensemble-averaged learning potential.")
    sub.add_parser("entangle", parents=[common], help="Density-matrix evolution driven by the network coupling.")
    sub.add_parser("canonical", parents=[common], help="Canonical perturbation sweep of the pendulum.")
    witness = sub.add_parser("witness", parents=[common], help="Witnesses of every density matrix in an evolution CSV.")
    witness.add_argument("csv", type=str, help="CSV in the evolution format.")
    return parser.parse_args(argv)


def build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().check()
    # explicit flags win over the file
    if args.seed is not None:
        cfg = cfg.replace(net=cfg.net.replace(seed=args.seed))
    if args.out is not None:
        cfg = cfg.replace(output_dir=args.out)
    if args.no_plots:
        cfg = cfg.replace(emit_plots=False)
    return cfg.check()


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
    )
    try:
        cfg = build_config(args)
        if args.command == "witness":
            manifest = cmd_witness(args.csv, cfg)
        else:
            manifest = COMMANDS[args.command](cfg)
    except (ConfigError, yaml.YAMLError) as e:
        logger.error(str(e))
        return 2
    except SimulationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 3
    logger.info(f"done in {manifest.wall_time:.2f}s, config hash {manifest.config_hash:016x}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
