"""Experiment presets and runners: the shallow / medium / deeper MNIST
configurations, accuracy-vs-IPD sweeps, assisted learning, and CSV export.

Each preset bundles a network shape with the tuned hyperparameters that
go with it. Runs are deterministic for a fixed (config, data, seed); the
reported wall time covers the training loop only.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .activations import ActivationKind
from .data import DIGITS, Dataset, DatasetSplits, select_ipd
from .errors import ConfigError, DataError
from .network import (
    FullyConnected,
    LayerSpec,
    Network,
    NetworkConfig,
    Pooled,
    build_network,
    config_from_dict,
    plasticity_from_dict,
    plasticity_to_dict,
)
from .plasticity import PlasticityParams, RuleVariant, Squash
from .pooling import connectivity_from_factor

PRESET_NAMES = ("shallow", "medium", "deeper")

CSV_HEADER = (
    "preset,ipd,epochs,seed,train_acc,test_acc,val_acc,train_seconds,examples_trained"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """A named preset (or custom network) plus dataset selection knobs."""

    preset: str = "shallow"
    ipd: int = 60
    epochs: int = 1
    seed: int = 0
    rule: RuleVariant | None = None
    plasticity_overrides: dict | None = None
    network: NetworkConfig | None = None

    def __post_init__(self):
        if self.preset not in PRESET_NAMES and self.preset != "custom":
            raise ConfigError(
                f"unknown preset {self.preset!r}; expected one of "
                f"{PRESET_NAMES + ('custom',)}"
            )
        if self.preset == "custom" and self.network is None:
            raise ConfigError("custom preset requires a network configuration")
        if self.ipd < 1:
            raise ConfigError(f"ipd must be >= 1, got {self.ipd}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class RunResult:
    preset: str
    ipd: int
    epochs: int
    seed: int
    train_accuracy: float
    test_accuracy: float
    validation_accuracy: float
    train_wall_time: float
    examples_trained: int


def resolve_preset(name: str) -> NetworkConfig:
    """Network configuration and tuned hyperparameters for a named preset."""
    if name == "shallow":
        # 784 -> 10, all weights start absent; the single output layer
        # learns everything
        return NetworkConfig(
            layers=(
                LayerSpec(784),
                LayerSpec(10, bias=0.95, activation=ActivationKind.relu()),
            ),
            connections=(FullyConnected(0.0),),
            plasticity=PlasticityParams(
                eta_ltp=0.001,
                eta_ltd=0.0001,
                threshold=0.25,
                creation_value=0.50,
                bounding=Squash(0.50),
            ),
        )
    if name == "medium":
        # a frozen 2x2 pooling stage halves each image side before the
        # trainable output layer
        return NetworkConfig(
            layers=(
                LayerSpec(784),
                LayerSpec(
                    196,
                    bias=0.95,
                    activation=ActivationKind.rectified_tanh(0.50),
                    trainable_incoming=False,
                ),
                LayerSpec(10, bias=0.00, activation=ActivationKind.relu()),
            ),
            connections=(
                Pooled(connectivity=0, weight_value=0.50),
                FullyConnected(0.0),
            ),
            plasticity=PlasticityParams(
                eta_ltp=0.01,
                eta_ltd=0.0005,
                threshold=0.25,
                creation_value=0.50,
                bounding=Squash(0.50),
            ),
        )
    if name == "deeper":
        # two frozen pooling stages (connectivity factors 0.75 and 0.25
        # truncate to radius 0), then a 49 -> 10 trainable layer
        return NetworkConfig(
            layers=(
                LayerSpec(784),
                LayerSpec(
                    196,
                    bias=0.35,
                    activation=ActivationKind.rectified_tanh(1.0),
                    trainable_incoming=False,
                ),
                LayerSpec(
                    49,
                    bias=0.05,
                    activation=ActivationKind.rectified_tanh(1.0),
                    trainable_incoming=False,
                ),
                LayerSpec(10, bias=0.00, activation=ActivationKind.relu()),
            ),
            connections=(
                Pooled(connectivity=connectivity_from_factor(0.75), weight_value=0.50),
                Pooled(connectivity=connectivity_from_factor(0.25), weight_value=0.60),
                FullyConnected(0.0),
            ),
            plasticity=PlasticityParams(
                eta_ltp=0.001,
                eta_ltd=0.0001,
                threshold=0.25,
                creation_value=0.50,
                bounding=Squash(0.50),
            ),
        )
    raise ConfigError(f"unknown preset {name!r}")


def resolve_network_config(cfg: ExperimentConfig) -> NetworkConfig:
    """Preset (or custom) network with the experiment's overrides applied."""
    base = cfg.network if cfg.preset == "custom" else resolve_preset(cfg.preset)
    plasticity = base.plasticity
    if cfg.plasticity_overrides:
        merged = plasticity_to_dict(plasticity)
        for key, value in cfg.plasticity_overrides.items():
            if key not in merged:
                raise ConfigError(f"unknown plasticity override {key!r}")
            merged[key] = value
        plasticity = plasticity_from_dict(merged)
    if cfg.rule is not None:
        plasticity = dataclasses.replace(plasticity, variant=cfg.rule)
    if plasticity is not base.plasticity:
        base = dataclasses.replace(base, plasticity=plasticity)
    return base


def run_experiment(cfg: ExperimentConfig, splits: DatasetSplits) -> RunResult:
    """Build, train, and score one network; wall time covers training only."""
    net = build_network(resolve_network_config(cfg))
    subset = select_ipd(splits.train, cfg.ipd, cfg.seed)
    start = time.perf_counter()
    net.fit_arrays(subset.images, subset.labels, cfg.epochs)
    elapsed = time.perf_counter() - start
    return RunResult(
        preset=cfg.preset,
        ipd=cfg.ipd,
        epochs=cfg.epochs,
        seed=cfg.seed,
        train_accuracy=net.evaluate_arrays(subset.images, subset.labels),
        test_accuracy=net.evaluate_arrays(splits.test.images, splits.test.labels),
        validation_accuracy=net.evaluate_arrays(
            splits.validation.images, splits.validation.labels
        ),
        train_wall_time=elapsed,
        examples_trained=len(subset) * cfg.epochs,
    )


_WORKER_SPLITS: DatasetSplits | None = None


def _run_in_worker(cfg: ExperimentConfig) -> RunResult:
    return run_experiment(cfg, _WORKER_SPLITS)


def _init_worker(splits: DatasetSplits) -> None:
    global _WORKER_SPLITS
    _WORKER_SPLITS = splits


def sweep_ipd(
    cfg: ExperimentConfig,
    ipd_values,
    splits: DatasetSplits,
    jobs: int = 1,
) -> list[RunResult]:
    """One independent run per IPD value, results in input order."""
    ipd_values = list(ipd_values)
    if not ipd_values:
        raise ValueError("ipd_values must be non-empty")
    configs = [dataclasses.replace(cfg, ipd=int(value)) for value in ipd_values]
    if jobs <= 1 or len(configs) == 1:
        return [run_experiment(c, splits) for c in configs]
    context = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(
        max_workers=min(jobs, len(configs)),
        mp_context=context,
        initializer=_init_worker,
        initargs=(splits,),
    ) as pool:
        return list(pool.map(_run_in_worker, configs))


def per_digit_accuracy(net: Network, examples: Dataset) -> np.ndarray:
    """Accuracy for each digit 0-9 over the given examples (NaN-free: a
    digit with no examples scores 0)."""
    predictions = net.predict_batch(examples.images)
    accuracies = np.zeros(DIGITS)
    for digit in range(DIGITS):
        mask = examples.labels == digit
        if mask.any():
            accuracies[digit] = float(np.mean(predictions[mask] == digit))
    return accuracies


def _ipd_indices(labels: np.ndarray, counts, seed: int, exclude=None):
    """Per-digit index picks honoring the file-order / seeded-draw rule."""
    rng = np.random.default_rng(seed) if seed != 0 else None
    exclude = exclude or {}
    picks = {}
    for digit, count in counts.items():
        if count == 0:
            continue
        candidates = np.flatnonzero(labels == digit)
        used = exclude.get(digit)
        if used is not None and len(used):
            candidates = candidates[~np.isin(candidates, used)]
        if candidates.size < count:
            raise DataError(
                f"digit {digit} has only {candidates.size} fresh examples, "
                f"need {count}"
            )
        if rng is None:
            picks[digit] = candidates[:count]
        else:
            picks[digit] = np.sort(rng.choice(candidates, size=count, replace=False))
    return picks


def assisted_learning(
    net: Network,
    cfg: ExperimentConfig,
    splits: DatasetSplits,
    rounds: int,
    top_k: int = 3,
) -> Network:
    """Retrain on the digits the network classifies worst.

    Each round scores per-digit accuracy on everything trained so far,
    picks the ``top_k`` worst digits, and trains on ``cfg.ipd`` fresh
    training examples of each (round-robin interleaved). Test and
    validation data are never touched.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if not 1 <= top_k <= DIGITS:
        raise ValueError(f"top_k must lie in 1..{DIGITS}, got {top_k}")
    if net.examples_trained == 0:
        raise ValueError("assisted learning needs an already-trained network")
    labels = splits.train.labels
    used = _ipd_indices(labels, {d: cfg.ipd for d in range(DIGITS)}, cfg.seed)
    trained = np.concatenate([used[d] for d in range(DIGITS)])
    for _ in range(rounds):
        pool = splits.train.subset(np.sort(trained))
        accuracies = per_digit_accuracy(net, pool)
        worst = np.lexsort((np.arange(DIGITS), accuracies))[:top_k]
        worst = np.sort(worst)
        fresh = _ipd_indices(
            labels, {int(d): cfg.ipd for d in worst}, cfg.seed, exclude=used
        )
        # interleave the selected digits round-robin, matching select_ipd
        order = np.stack([fresh[int(d)] for d in worst], axis=1).reshape(-1)
        batch = splits.train.subset(order)
        net.fit_arrays(batch.images, batch.labels, cfg.epochs)
        for digit, picks in fresh.items():
            used[digit] = np.concatenate([used[digit], picks])
        trained = np.concatenate([trained, order])
    return net


def export_csv(results, destination) -> None:
    """Write results as CSV: fixed header, reals at six decimal places."""
    results = list(results)
    if not results:
        raise ValueError("no results to export")
    rows = [CSV_HEADER.split(",")]
    for r in results:
        rows.append(
            [
                r.preset,
                str(r.ipd),
                str(r.epochs),
                str(r.seed),
                f"{r.train_accuracy:.6f}",
                f"{r.test_accuracy:.6f}",
                f"{r.validation_accuracy:.6f}",
                f"{r.train_wall_time:.6f}",
                str(r.examples_trained),
            ]
        )
    if hasattr(destination, "write"):
        writer = csv.writer(destination, lineterminator="\n")
        writer.writerows(rows)
    else:
        with open(destination, "w", newline="") as handle:
            csv.writer(handle, lineterminator="\n").writerows(rows)


def experiment_config_to_dict(cfg: ExperimentConfig) -> dict:
    data = {
        "preset": cfg.preset,
        "ipd": cfg.ipd,
        "epochs": cfg.epochs,
        "seed": cfg.seed,
    }
    if cfg.rule is not None:
        data["rule"] = cfg.rule.value
    if cfg.plasticity_overrides:
        data["plasticity"] = dict(cfg.plasticity_overrides)
    if cfg.network is not None:
        from .network import config_to_dict

        data["network"] = config_to_dict(cfg.network)
    return data


def experiment_config_from_dict(data: dict) -> ExperimentConfig:
    known = {"preset", "ipd", "epochs", "seed", "rule", "plasticity", "network"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
    return ExperimentConfig(
        preset=data.get("preset", "shallow"),
        ipd=int(data.get("ipd", 60)),
        epochs=int(data.get("epochs", 1)),
        seed=int(data.get("seed", 0)),
        rule=RuleVariant(data["rule"]) if "rule" in data else None,
        plasticity_overrides=data.get("plasticity"),
        network=config_from_dict(data["network"]) if "network" in data else None,
    )
