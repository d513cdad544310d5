"""Feed-forward network: construction, forward passes, training, evaluation.

Training follows the single-trace discipline: one clamped forward pass per
example (the output layer's activations are replaced by the one-hot
target), then every trainable weight layer is updated in forward order
against that fixed trace. Activations are never recomputed between layer
updates. Biases are per-layer constants and never learn.

A Network is single-writer: training mutates its weight matrices in place.
Distinct instances can be trained or evaluated concurrently; one instance
must not be shared while it is being trained.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import engine
from .activations import ActivationKind, ActivationVariant
from .errors import ConfigError
from .plasticity import (
    Bounding,
    HardReset,
    PlasticityParams,
    RuleVariant,
    Squash,
)
from .pooling import PoolingSpec, build_pooling_matrix


@dataclass(frozen=True)
class LayerSpec:
    """One layer: neuron count, fixed bias, activation, and whether the
    weight matrix feeding it learns. Bias and activation are ignored on
    the input layer."""

    size: int
    bias: float = 0.0
    activation: ActivationKind | None = None
    trainable_incoming: bool = True

    def __post_init__(self):
        if self.size < 1:
            raise ConfigError(f"layer size must be >= 1, got {self.size}")
        if not math.isfinite(self.bias):
            raise ConfigError(f"layer bias must be finite, got {self.bias}")


@dataclass(frozen=True)
class FullyConnected:
    """Dense connection with every weight set to one initial value."""

    initial_weight: float = 0.0

    def __post_init__(self):
        if not -1 <= self.initial_weight <= 1:
            raise ConfigError(
                f"initial weight must lie in [-1, 1], got {self.initial_weight}"
            )


@dataclass(frozen=True)
class Pooled:
    """Block-pooling connection (see :mod:`hebbnet.pooling`)."""

    connectivity: int = 0
    weight_value: float = 0.50


Connection = FullyConnected | Pooled


@dataclass(frozen=True)
class NetworkConfig:
    layers: tuple[LayerSpec, ...]
    connections: tuple[Connection, ...]
    plasticity: PlasticityParams = field(default_factory=PlasticityParams)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "connections", tuple(self.connections))
        if len(self.layers) < 2:
            raise ConfigError("a network needs an input layer and an output layer")
        if len(self.connections) != len(self.layers) - 1:
            raise ConfigError(
                f"{len(self.layers)} layers require {len(self.layers) - 1} "
                f"connections, got {len(self.connections)}"
            )
        for spec in self.layers[1:]:
            if spec.activation is None:
                raise ConfigError(
                    f"non-input layer of size {spec.size} needs an activation"
                )
        # pooled connections must fit the adjacent layer geometry
        for index, conn in enumerate(self.connections):
            if isinstance(conn, Pooled):
                self.pooling_spec(index)

    def pooling_spec(self, index: int) -> PoolingSpec:
        conn = self.connections[index]
        if not isinstance(conn, Pooled):
            raise ConfigError(f"connection {index} is not a pooling connection")
        return PoolingSpec(
            source_size=self.layers[index].size,
            dest_size=self.layers[index + 1].size,
            connectivity=conn.connectivity,
            weight_value=conn.weight_value,
        )


@dataclass
class ForwardTrace:
    """Per-layer activation vectors for one example, input layer included."""

    activations: list[np.ndarray]
    clamped: bool


_FORMAT_VERSION = 1


class Network:
    """Layer stack plus one dense weight matrix per adjacent layer pair.

    Weight entry ``weights[L][j, i]`` connects neuron i of layer L to
    neuron j of layer L+1 and always lies in [-1, 1].
    """

    def __init__(self, config: NetworkConfig):
        self.config = config
        self.weights: list[np.ndarray] = []
        self.examples_trained = 0
        for index, conn in enumerate(config.connections):
            dest = config.layers[index + 1].size
            src = config.layers[index].size
            if isinstance(conn, FullyConnected):
                matrix = np.full((dest, src), float(conn.initial_weight))
            else:
                matrix = build_pooling_matrix(config.pooling_spec(index))
            self.weights.append(matrix)
        self._meta = self._build_meta()
        self._plast = engine.plasticity_scalars(config.plasticity)

    def _build_meta(self) -> engine.LayerMeta:
        cfg = self.config
        conn_kind, side_in, side_out, pool_v, pool_c = [], [], [], [], []
        bias, act_code, act_coef, trainable = [], [], [], []
        for index, conn in enumerate(cfg.connections):
            dest_spec = cfg.layers[index + 1]
            frozen_pool = isinstance(conn, Pooled) and not dest_spec.trainable_incoming
            if frozen_pool:
                spec = cfg.pooling_spec(index)
                conn_kind.append(engine.CONN_POOL)
                side_in.append(spec.source_side)
                side_out.append(spec.dest_side)
                pool_v.append(spec.connectivity)
                pool_c.append(spec.weight_value)
            else:
                conn_kind.append(engine.CONN_DENSE)
                side_in.append(0)
                side_out.append(0)
                pool_v.append(0)
                pool_c.append(0.0)
            bias.append(dest_spec.bias)
            kind = dest_spec.activation
            if kind.variant is ActivationVariant.RECTIFIED_TANH:
                act_code.append(engine.ACT_RECTIFIED_TANH)
                act_coef.append(kind.coefficient)
            else:
                act_code.append(engine.ACT_RELU)
                act_coef.append(1.0)
            trainable.append(1 if dest_spec.trainable_incoming else 0)
        return engine.LayerMeta(
            conn_kind, side_in, side_out, pool_v, pool_c,
            bias, act_code, act_coef, trainable,
            [spec.size for spec in cfg.layers],
        )

    # -- forward passes ----------------------------------------------------

    @property
    def input_size(self) -> int:
        return self.config.layers[0].size

    @property
    def output_size(self) -> int:
        return self.config.layers[-1].size

    def _check_input(self, x) -> np.ndarray:
        vec = np.ascontiguousarray(x, dtype=np.float64)
        if vec.shape != (self.input_size,):
            raise ValueError(
                f"input length {vec.shape} does not match input layer "
                f"size {self.input_size}"
            )
        if vec.min() < 0 or vec.max() > 1:
            raise ValueError("input values must lie in [0, 1]")
        return vec

    def _check_target(self, target) -> int:
        vec = np.asarray(target, dtype=np.float64)
        if vec.shape != (self.output_size,):
            raise ValueError(
                f"target length {vec.shape} does not match output layer "
                f"size {self.output_size}"
            )
        on = np.flatnonzero(vec == 1.0)
        if on.size != 1 or np.count_nonzero(vec) != 1:
            raise ValueError("target must be one-hot: exactly one 1.0, rest 0.0")
        return int(on[0])

    def forward(self, x) -> ForwardTrace:
        """Unclamped forward pass; returns the full activation trace."""
        vec = self._check_input(x)
        acts = engine.run_forward(self.weights, self._meta, vec)
        return ForwardTrace(activations=acts, clamped=False)

    def forward_clamped(self, x, target) -> ForwardTrace:
        """Forward pass with the output activations replaced by the target."""
        vec = self._check_input(x)
        label = self._check_target(target)
        acts = engine.run_forward(
            self.weights, self._meta, vec, upto=len(self.weights) - 1
        )
        clamp = np.zeros(self.output_size)
        clamp[label] = 1.0
        acts[-1] = clamp
        return ForwardTrace(activations=acts, clamped=True)

    # -- training ----------------------------------------------------------

    def train_on_example(self, x, target) -> "Network":
        """One clamped trace plus one update sweep; mutates the network."""
        vec = self._check_input(x)
        label = self._check_target(target)
        images = vec.reshape(1, -1)
        labels = np.array([label], dtype=np.int64)
        engine.run_train(self.weights, self._meta, images, labels, 1, self._plast)
        self.examples_trained += 1
        return self

    def fit(self, examples: Sequence[tuple], epochs: int = 1) -> "Network":
        """Train on (input, one-hot target) pairs in order, ``epochs`` times."""
        examples = list(examples)
        if not examples:
            raise ValueError("cannot fit on an empty example list")
        images = np.ascontiguousarray(
            [np.asarray(x, dtype=np.float64) for x, _ in examples]
        )
        labels = np.array(
            [self._check_target(t) for _, t in examples], dtype=np.int64
        )
        return self.fit_arrays(images, labels, epochs)

    def fit_arrays(self, images: np.ndarray, labels: np.ndarray, epochs: int = 1) -> "Network":
        """Array form of :meth:`fit`: images (n, input_size), integer labels."""
        if epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {epochs}")
        images = np.ascontiguousarray(images, dtype=np.float64)
        labels = np.ascontiguousarray(labels, dtype=np.int64)
        if images.ndim != 2 or images.shape[1] != self.input_size:
            raise ValueError(
                f"images must have shape (n, {self.input_size}), got {images.shape}"
            )
        if images.shape[0] == 0:
            raise ValueError("cannot fit on an empty example list")
        if labels.shape != (images.shape[0],):
            raise ValueError("labels must match images one to one")
        if labels.min() < 0 or labels.max() >= self.output_size:
            raise ValueError(f"labels must lie in [0, {self.output_size - 1}]")
        if images.min() < 0 or images.max() > 1:
            raise ValueError("input values must lie in [0, 1]")
        engine.run_train(self.weights, self._meta, images, labels, epochs, self._plast)
        self.examples_trained += images.shape[0] * epochs
        return self

    # -- inference ---------------------------------------------------------

    def predict(self, x) -> int:
        """Digit with the highest output activation; ties go to the lowest index."""
        vec = self._check_input(x)
        return int(engine.run_predict(self.weights, self._meta, vec.reshape(1, -1))[0])

    def predict_batch(self, images: np.ndarray) -> np.ndarray:
        images = np.ascontiguousarray(images, dtype=np.float64)
        if images.ndim != 2 or images.shape[1] != self.input_size:
            raise ValueError(
                f"images must have shape (n, {self.input_size}), got {images.shape}"
            )
        return engine.run_predict(self.weights, self._meta, images)

    def evaluate(self, examples: Iterable[tuple]) -> float:
        """Fraction of (input, label) pairs classified correctly."""
        examples = list(examples)
        if not examples:
            raise ValueError("cannot evaluate on an empty example list")
        images = np.ascontiguousarray(
            [np.asarray(x, dtype=np.float64) for x, _ in examples]
        )
        labels = np.array([int(label) for _, label in examples], dtype=np.int64)
        return self.evaluate_arrays(images, labels)

    def evaluate_arrays(self, images: np.ndarray, labels: np.ndarray) -> float:
        if images.shape[0] == 0:
            raise ValueError("cannot evaluate on an empty example list")
        predictions = self.predict_batch(images)
        return float(np.mean(predictions == np.asarray(labels)))

    # -- serialization -----------------------------------------------------

    def save(self, path) -> None:
        """Dump config and weights to an .npz archive (format version 1).

        Weights are stored row-major as float64, so a load restores them
        bit for bit.
        """
        payload = {
            "format_version": np.array(_FORMAT_VERSION),
            "config_json": np.array(json.dumps(config_to_dict(self.config))),
            "examples_trained": np.array(self.examples_trained),
        }
        for index, matrix in enumerate(self.weights):
            payload[f"weights_{index}"] = matrix
        with open(path, "wb") as handle:
            np.savez(handle, **payload)

    @classmethod
    def load(cls, path) -> "Network":
        try:
            archive = np.load(path, allow_pickle=False)
        except Exception as exc:
            raise ConfigError(f"cannot read network dump {path}: {exc}") from exc
        if "format_version" not in archive:
            raise ConfigError(f"{path} is not a network dump (missing version)")
        version = int(archive["format_version"])
        if version != _FORMAT_VERSION:
            raise ConfigError(f"unsupported dump format version {version}")
        config = config_from_dict(json.loads(str(archive["config_json"])))
        net = cls(config)
        for index in range(len(net.weights)):
            stored = archive[f"weights_{index}"]
            if stored.shape != net.weights[index].shape:
                raise ConfigError(
                    f"weight matrix {index} has shape {stored.shape}, "
                    f"expected {net.weights[index].shape}"
                )
            net.weights[index] = np.ascontiguousarray(stored, dtype=np.float64)
        net.examples_trained = int(archive.get("examples_trained", 0))
        return net


def build_network(config: NetworkConfig) -> Network:
    """Deterministically build a network from its configuration."""
    return Network(config)


# -- config (de)serialization ----------------------------------------------


def _activation_to_dict(kind: ActivationKind | None):
    if kind is None:
        return None
    return {"variant": kind.variant.value, "coefficient": kind.coefficient}


def _activation_from_dict(data) -> ActivationKind | None:
    if data is None:
        return None
    return ActivationKind(ActivationVariant(data["variant"]), data.get("coefficient", 1.0))


def _bounding_to_dict(bounding: Bounding):
    if isinstance(bounding, HardReset):
        return {"mode": "hard_reset", "reset_magnitude": bounding.reset_magnitude}
    return {"mode": "squash", "c_weights": bounding.c_weights}


def _bounding_from_dict(data) -> Bounding:
    if data["mode"] == "hard_reset":
        return HardReset(data["reset_magnitude"])
    if data["mode"] == "squash":
        return Squash(data["c_weights"])
    raise ConfigError(f"unknown bounding mode {data['mode']!r}")


def plasticity_to_dict(params: PlasticityParams) -> dict:
    return {
        "eta_ltp": params.eta_ltp,
        "eta_ltd": params.eta_ltd,
        "eta_ltp2": params.eta_ltp2,
        "threshold": params.threshold,
        "creation_value": params.creation_value,
        "creation_requires_threshold": params.creation_requires_threshold,
        "variant": params.variant.value,
        "bounding": _bounding_to_dict(params.bounding),
    }


def plasticity_from_dict(data: dict) -> PlasticityParams:
    return PlasticityParams(
        eta_ltp=data["eta_ltp"],
        eta_ltd=data["eta_ltd"],
        eta_ltp2=data.get("eta_ltp2"),
        threshold=data.get("threshold", 0.25),
        creation_value=data.get("creation_value", 0.50),
        creation_requires_threshold=data.get("creation_requires_threshold", True),
        variant=RuleVariant(data.get("variant", "compressed")),
        bounding=_bounding_from_dict(
            data.get("bounding", {"mode": "hard_reset", "reset_magnitude": 0.90})
        ),
    )


def config_to_dict(config: NetworkConfig) -> dict:
    layers = [
        {
            "size": spec.size,
            "bias": spec.bias,
            "activation": _activation_to_dict(spec.activation),
            "trainable_incoming": spec.trainable_incoming,
        }
        for spec in config.layers
    ]
    connections = []
    for conn in config.connections:
        if isinstance(conn, FullyConnected):
            connections.append(
                {"type": "fully_connected", "initial_weight": conn.initial_weight}
            )
        else:
            connections.append(
                {
                    "type": "pooled",
                    "connectivity": conn.connectivity,
                    "weight_value": conn.weight_value,
                }
            )
    return {
        "layers": layers,
        "connections": connections,
        "plasticity": plasticity_to_dict(config.plasticity),
    }


def config_from_dict(data: dict) -> NetworkConfig:
    layers = tuple(
        LayerSpec(
            size=entry["size"],
            bias=entry.get("bias", 0.0),
            activation=_activation_from_dict(entry.get("activation")),
            trainable_incoming=entry.get("trainable_incoming", True),
        )
        for entry in data["layers"]
    )
    connections = []
    for entry in data["connections"]:
        if entry["type"] == "fully_connected":
            connections.append(FullyConnected(entry.get("initial_weight", 0.0)))
        elif entry["type"] == "pooled":
            connections.append(
                Pooled(entry.get("connectivity", 0), entry.get("weight_value", 0.50))
            )
        else:
            raise ConfigError(f"unknown connection type {entry['type']!r}")
    return NetworkConfig(
        layers=layers,
        connections=tuple(connections),
        plasticity=plasticity_from_dict(data.get("plasticity", {})) if data.get("plasticity") else PlasticityParams(),
    )
