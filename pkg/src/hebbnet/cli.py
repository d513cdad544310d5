"""Command-line interface: train, evaluate, sweep, and inspect networks.

Flag values override config-file values, which override preset defaults.
Results go to stdout; diagnostics go to stderr; the exit status is 0 only
when the command completed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .errors import HebbnetError
from .harness import (
    ExperimentConfig,
    experiment_config_from_dict,
    export_csv,
    resolve_network_config,
    run_experiment,
    sweep_ipd,
)
from .data import load_splits
from .network import Network, build_network
from .plasticity import RuleVariant

DATA_DIR_ENV = "HEBBNET_DATA_DIR"
DEFAULT_DATA_DIR = "data/mnist"


def _default_data_dir() -> str:
    return os.environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR)


def _load_experiment_config(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as handle:
            cfg = experiment_config_from_dict(json.load(handle))
    else:
        cfg = ExperimentConfig()
    overrides = {}
    if getattr(args, "preset", None) is not None:
        overrides["preset"] = args.preset
    if getattr(args, "ipd", None) is not None:
        overrides["ipd"] = args.ipd
    if getattr(args, "epochs", None) is not None:
        overrides["epochs"] = args.epochs
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "rule", None) is not None:
        overrides["rule"] = RuleVariant(args.rule)
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _print_result(result) -> None:
    print(
        f"preset={result.preset} ipd={result.ipd} epochs={result.epochs} "
        f"seed={result.seed}"
    )
    print(f"train_accuracy={result.train_accuracy:.4f}")
    print(f"test_accuracy={result.test_accuracy:.4f}")
    print(f"validation_accuracy={result.validation_accuracy:.4f}")
    print(f"train_seconds={result.train_wall_time:.3f}")
    print(f"examples_trained={result.examples_trained}")


def cmd_train(args) -> int:
    cfg = _load_experiment_config(args)
    splits = load_splits(args.data_dir)
    net = build_network(resolve_network_config(cfg))
    result = run_experiment(cfg, splits)
    if args.save_model:
        # re-run training into the fresh instance so the dump matches the
        # reported result exactly
        from .data import select_ipd

        subset = select_ipd(splits.train, cfg.ipd, cfg.seed)
        net.fit_arrays(subset.images, subset.labels, cfg.epochs)
        net.save(args.save_model)
        print(f"model saved to {args.save_model}", file=sys.stderr)
    _print_result(result)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_experiment_config(args)
    try:
        values = [int(v) for v in args.ipd_list.split(",") if v.strip()]
    except ValueError:
        print(f"invalid --ipd-list {args.ipd_list!r}", file=sys.stderr)
        return 2
    if not values:
        print("--ipd-list must contain at least one value", file=sys.stderr)
        return 2
    splits = load_splits(args.data_dir)
    results = sweep_ipd(cfg, values, splits, jobs=args.jobs)
    if args.out:
        export_csv(results, args.out)
        print(f"{'ipd':>6} {'train':>8} {'test':>8} {'val':>8} {'seconds':>9}")
        for r in results:
            print(
                f"{r.ipd:>6} {r.train_accuracy:>8.4f} {r.test_accuracy:>8.4f} "
                f"{r.validation_accuracy:>8.4f} {r.train_wall_time:>9.3f}"
            )
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        export_csv(results, sys.stdout)
    return 0


def cmd_eval(args) -> int:
    net = Network.load(args.model)
    splits = load_splits(args.data_dir)
    split = getattr(splits, args.split)
    accuracy = net.evaluate_arrays(split.images, split.labels)
    print(f"{args.split}_accuracy={accuracy:.4f}")
    return 0


def cmd_inspect(args) -> int:
    net = Network.load(args.model)
    cfg = net.config
    print(f"layers={'-'.join(str(spec.size) for spec in cfg.layers)}")
    print(f"rule={cfg.plasticity.variant.value}")
    print(f"examples_trained={net.examples_trained}")
    for index, matrix in enumerate(net.weights):
        kind = type(cfg.connections[index]).__name__
        trainable = cfg.layers[index + 1].trainable_incoming
        nonzero = int((matrix != 0).sum())
        print(
            f"weights[{index}] {matrix.shape[0]}x{matrix.shape[1]} {kind} "
            f"trainable={trainable} nonzero={nonzero} "
            f"min={matrix.min():.4f} max={matrix.max():.4f}"
        )
    return 0


def _add_common(parser: argparse.ArgumentParser, with_data=True) -> None:
    if with_data:
        parser.add_argument(
            "--data-dir",
            default=_default_data_dir(),
            help=f"directory with the MNIST IDX files (default ${DATA_DIR_ENV} "
            f"or {DEFAULT_DATA_DIR})",
        )


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=["shallow", "medium", "deeper", "custom"])
    parser.add_argument("--config", help="JSON experiment config file")
    parser.add_argument("--ipd", type=int, help="training images per digit")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--seed", type=int, help="0 = first examples in file order")
    parser.add_argument("--rule", choices=["compressed", "extended", "plain"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hebbnet",
        description="Train and evaluate Hebbian feed-forward networks on MNIST",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one network and print accuracies")
    _add_common(p_train)
    _add_experiment_flags(p_train)
    p_train.add_argument("--save-model", help="write the trained network dump here")
    p_train.set_defaults(func=cmd_train)

    p_sweep = sub.add_parser("sweep", help="run a sweep over IPD values")
    _add_common(p_sweep)
    _add_experiment_flags(p_sweep)
    p_sweep.add_argument("--ipd-list", required=True, help="comma-separated IPD values")
    p_sweep.add_argument("--out", help="CSV output path (default: CSV to stdout)")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p_sweep.set_defaults(func=cmd_sweep)

    p_eval = sub.add_parser("eval", help="evaluate a saved network on a split")
    _add_common(p_eval)
    p_eval.add_argument("--model", required=True, help="network dump from --save-model")
    p_eval.add_argument(
        "--split", choices=["train", "test", "validation"], default="test"
    )
    p_eval.set_defaults(func=cmd_eval)

    p_inspect = sub.add_parser("inspect", help="describe a saved network dump")
    p_inspect.add_argument("--model", required=True)
    p_inspect.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HebbnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
