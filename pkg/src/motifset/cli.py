"""Command line driver.

Subcommands::

    motifset prepare --config c.cfg --cache-out data.bin
    motifset train   --preset fmnist-desk --out runs/desk
    motifset score   --baseline runs/a/manifest.txt --variant runs/b/manifest.txt
    motifset sweep   --baseline ... --variant ... --out runs/sweep
    motifset export-topology --checkpoint runs/b/checkpoint.bin --out topo.txt

Exit codes: 0 success, 2 configuration or usage error, 3 unreadable or
inconsistent input data, 4 numerical failure during training.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .checkpoint import load_checkpoint
from .config import (
    ExperimentConfig,
    apply_overrides,
    load_config,
    preset_path,
)
from .errors import ConfigError, DataError, MotifSetError, NonFiniteError
from .topology import BlockDensitySpec, build_topology, export_topology
from .train import run_prepare, run_score, run_sweep, run_train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _add_config_args(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="path to a config or manifest file")
    parser.add_argument("--preset", help="name of a bundled preset config")


def _add_override_args(parser: argparse.ArgumentParser):
    parser.add_argument("--motif-size", type=int, dest="motif_size")
    parser.add_argument("--weight-mode", dest="weight_mode",
                        choices=("shared", "independent"))
    parser.add_argument("--hidden-sizes", dest="hidden_sizes",
                        help="comma separated widths, e.g. 256,256")
    parser.add_argument("--epochs", type=int, dest="epochs")
    parser.add_argument("--learning-rate", type=float, dest="learning_rate")
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--density-mode", dest="density_mode",
                        choices=("erdos_renyi_set", "fixed_density"))
    parser.add_argument("--density-value", type=float, dest="density_value")
    parser.add_argument("--evolution-mode", dest="evolution_mode",
                        choices=("magnitude_set", "listing4", "none"))
    parser.add_argument("--zeta", type=float, dest="zeta")
    parser.add_argument("--csv-path", dest="csv_path")
    parser.add_argument("--cache-path", dest="cache_path")
    parser.add_argument("--train-limit", type=int, dest="train_limit")
    parser.add_argument("--test-limit", type=int, dest="test_limit")
    parser.add_argument("--seed", type=int,
                        help="sets every seed (topology/init/evolution/"
                             "split/shuffle) at once")
    parser.add_argument("--out", dest="out_dir", help="run output directory")


_OVERRIDE_FIELDS = (
    "motif_size", "weight_mode", "hidden_sizes", "epochs", "learning_rate",
    "batch_size", "density_mode", "density_value", "evolution_mode", "zeta",
    "csv_path", "cache_path", "train_limit", "test_limit", "out_dir",
)


def _resolve_config(args) -> ExperimentConfig:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise ConfigError("pass either --config or --preset, not both")
    config = ExperimentConfig()
    if getattr(args, "preset", None):
        config = load_config(preset_path(args.preset), config)
    elif getattr(args, "config", None):
        config = load_config(args.config, config)
    overrides = {name: getattr(args, name, None) for name in _OVERRIDE_FIELDS}
    apply_overrides(config, overrides)
    if getattr(args, "seed", None) is not None:
        for name in ("topology_seed", "init_seed", "evolution_seed",
                     "split_seed", "shuffle_seed"):
            setattr(config, name, args.seed)
    return config


def _cmd_prepare(args) -> int:
    config = _resolve_config(args)
    config.cache_path = ""  # prepare always rebuilds from the raw source
    dataset = run_prepare(config, args.cache_out)
    print(f"wrote {args.cache_out}: {dataset.x_train.shape[0]} train / "
          f"{dataset.x_test.shape[0]} test samples, "
          f"{dataset.n_features} features, {dataset.n_classes} classes")
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _resolve_config(args)
    run = run_train(config)
    print(f"done: final test accuracy {run.final_accuracy:.4f}, "
          f"training time {sum(run.per_epoch_time_s):.2f}s, "
          f"outputs in {config.out_dir}")
    return EXIT_OK


def _cmd_score(args) -> int:
    report = run_score(args.baseline, args.variant, w_eff=args.w_eff,
                       use_flops=args.use_flops, out_dir=args.out)
    print(f"R_r={report.r_r:.6f} A_r={report.a_r:.6f} "
          f"S={report.s:.6f} (w_eff={report.w_eff:g}, w_acc={report.w_acc:g})")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    grid = None
    if args.grid:
        grid = np.array([float(p) for p in args.grid.split(",")])
    elif args.grid_step:
        grid = np.arange(0.0, 1.0 + args.grid_step / 2, args.grid_step)
    result = run_sweep(args.baseline, args.variant, grid=grid,
                       use_flops=args.use_flops, out_dir=args.out)
    if result.crossover_w_eff is None:
        print("variant never beats the baseline on this grid")
    else:
        print(f"variant beats the baseline from w_eff = "
              f"{result.crossover_w_eff:g}")
    return EXIT_OK


def _cmd_export_topology(args) -> int:
    if args.checkpoint:
        network = load_checkpoint(args.checkpoint)
        topology = network.topology
    else:
        config = _resolve_config(args)
        if not config.hidden_sizes or args.input_size is None:
            raise ConfigError(
                "building a topology without a checkpoint needs "
                "--input-size (and --output-size)"
            )
        sizes = (args.input_size, *config.hidden_sizes, args.output_size)
        topology = build_topology(
            sizes, config.motif_size,
            BlockDensitySpec(config.density_mode, config.density_value),
            seed=config.topology_seed)
    text = export_topology(topology)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motifset",
        description="Motif-block sparse MLP training and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="build and cache a dataset")
    _add_config_args(p)
    _add_override_args(p)
    p.add_argument("--cache-out", required=True,
                   help="where to write the dataset container")
    p.set_defaults(func=_cmd_prepare)

    p = sub.add_parser("train", help="train one network")
    _add_config_args(p)
    _add_override_args(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("score", help="score a variant against a baseline")
    p.add_argument("--baseline", required=True, help="baseline manifest.txt")
    p.add_argument("--variant", required=True, help="variant manifest.txt")
    p.add_argument("--w-eff", type=float, default=0.1, dest="w_eff")
    p.add_argument("--use-flops", action="store_true",
                   help="use analytic MACs instead of wall time")
    p.add_argument("--out", help="directory for score.csv")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("sweep", help="sweep the efficiency weight over [0, 1]")
    p.add_argument("--baseline", required=True)
    p.add_argument("--variant", required=True)
    p.add_argument("--grid", help="explicit comma separated w_eff values")
    p.add_argument("--grid-step", type=float, default=None,
                   help="uniform grid step (default 0.01)")
    p.add_argument("--use-flops", action="store_true")
    p.add_argument("--out", help="directory for sweep.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("export-topology",
                       help="write a topology in the text format")
    p.add_argument("--checkpoint", help="read the topology from a checkpoint")
    _add_config_args(p)
    p.add_argument("--motif-size", type=int, dest="motif_size")
    p.add_argument("--hidden-sizes", dest="hidden_sizes")
    p.add_argument("--density-mode", dest="density_mode",
                   choices=("erdos_renyi_set", "fixed_density"))
    p.add_argument("--density-value", type=float, dest="density_value")
    p.add_argument("--seed", type=int)
    p.add_argument("--input-size", type=int)
    p.add_argument("--output-size", type=int, default=10)
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.set_defaults(func=_cmd_export_topology)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonFiniteError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MotifSetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
