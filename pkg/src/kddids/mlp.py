"""Feed-forward multilayer perceptron trained by backpropagation.

Layers compute a weighted sum plus bias followed by a transfer function;
training is per-instance stochastic gradient descent with momentum on the
summed-squared-error loss, fully deterministic under a seed.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import EncodedDataset, MLP as MLP_MODE

logger = logging.getLogger(__name__)


class MlpError(ValueError):
    pass


class ShapeMismatch(MlpError):
    pass


class NonDifferentiableTransfer(MlpError):
    pass


class EmptyTrainingSet(MlpError):
    pass


class TransferKind(enum.Enum):
    LINEAR = "linear"
    SIGMOID = "sigmoid"
    HYPERBOLIC = "hyperbolic"
    HARD_LIMIT = "hard_limit"
    SYMMETRIC_HARD_LIMIT = "symmetric_hard_limit"


DIFFERENTIABLE = (TransferKind.LINEAR, TransferKind.SIGMOID, TransferKind.HYPERBOLIC)


def transfer_eval(kind: TransferKind, x: float) -> float:
    """Evaluate one transfer function at a scalar."""
    if kind is TransferKind.LINEAR:
        return x
    if kind is TransferKind.SIGMOID:
        return 1.0 / (1.0 + math.exp(-x))
    if kind is TransferKind.HYPERBOLIC:
        return math.tanh(x)
    if kind is TransferKind.HARD_LIMIT:
        return 0.0 if x < 0 else 1.0
    if kind is TransferKind.SYMMETRIC_HARD_LIMIT:
        return -1.0 if x < 0 else 1.0
    raise MlpError(f"unknown transfer {kind!r}")


def _apply(kind: TransferKind, x: np.ndarray) -> np.ndarray:
    if kind is TransferKind.LINEAR:
        return x
    if kind is TransferKind.SIGMOID:
        return 1.0 / (1.0 + np.exp(-x))
    if kind is TransferKind.HYPERBOLIC:
        return np.tanh(x)
    if kind is TransferKind.HARD_LIMIT:
        return np.where(x < 0, 0.0, 1.0)
    return np.where(x < 0, -1.0, 1.0)


def _derivative_from_output(kind: TransferKind, y: np.ndarray) -> np.ndarray:
    """Transfer derivative expressed through the activated output."""
    if kind is TransferKind.LINEAR:
        return np.ones_like(y)
    if kind is TransferKind.SIGMOID:
        return y * (1.0 - y)
    if kind is TransferKind.HYPERBOLIC:
        return 1.0 - y * y
    raise NonDifferentiableTransfer(f"{kind.value} has no usable derivative")


@dataclass(frozen=True)
class MlpTopology:
    """Layer widths plus the transfer function of each computing layer."""

    input_width: int
    hidden_widths: tuple[int, ...]
    output_width: int
    transfers: tuple[TransferKind, ...] = ()

    def __post_init__(self):
        widths = (self.input_width, *self.hidden_widths, self.output_width)
        if any(w < 1 for w in widths):
            raise MlpError("all layer widths must be >= 1")
        n_layers = len(self.hidden_widths) + 1
        if not self.transfers:
            object.__setattr__(
                self, "transfers", (TransferKind.SIGMOID,) * n_layers
            )
        elif len(self.transfers) != n_layers:
            raise MlpError(
                f"need {n_layers} transfers, got {len(self.transfers)}"
            )

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        widths = [self.input_width, *self.hidden_widths, self.output_width]
        return list(zip(widths[:-1], widths[1:]))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.3
    momentum: float = 0.2
    epochs: int = 100
    seed: int = 0
    shuffle: bool = True
    init_scale: float = 0.5

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise MlpError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise MlpError("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise MlpError("epochs must be >= 1")


@dataclass
class MlpModel:
    topology: MlpTopology
    weights: list  # per layer, shape (fan_in, fan_out)
    biases: list  # per layer, shape (fan_out,)
    seed: int = 0
    epochs_run: int = 0
    final_error: float = float("nan")
    class_order: tuple[str, ...] = ()
    encoder_fingerprint: str = ""


def init_model(topology: MlpTopology, seed: int, init_scale: float = 0.5,
               class_order: tuple[str, ...] = (),
               encoder_fingerprint: str = "") -> MlpModel:
    """Fresh model with weights and biases uniform in +-init_scale."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in topology.layer_shapes:
        weights.append(rng.uniform(-init_scale, init_scale, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-init_scale, init_scale, size=fan_out))
    return MlpModel(topology, weights, biases, seed=seed,
                    class_order=class_order,
                    encoder_fingerprint=encoder_fingerprint)


def default_hidden_width(input_width: int, n_classes: int) -> int:
    return max(1, (input_width + n_classes) // 2)


def forward(model: MlpModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Propagate one input (or a batch) through every layer.

    Returns the activation of each layer, input included, and the output.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.topology.input_width:
        raise ShapeMismatch(
            f"input width {x.shape[-1]}, expected {model.topology.input_width}"
        )
    activations = [x]
    a = x
    for w, b, kind in zip(model.weights, model.biases, model.topology.transfers):
        a = _apply(kind, a @ w + b)
        activations.append(a)
    return activations, a


def mse(targets: np.ndarray, outputs: np.ndarray) -> float:
    """Per-instance sum of squared output errors, averaged over instances."""
    targets = np.asarray(targets, dtype=np.float64)
    outputs = np.asarray(outputs, dtype=np.float64)
    if targets.shape != outputs.shape:
        raise ShapeMismatch(f"targets {targets.shape} vs outputs {outputs.shape}")
    if targets.ndim == 1:
        targets = targets[None, :]
        outputs = outputs[None, :]
    return float(((targets - outputs) ** 2).sum(axis=1).mean())


def _check_trainable(model: MlpModel) -> None:
    for kind in model.topology.transfers:
        if kind not in DIFFERENTIABLE:
            raise NonDifferentiableTransfer(
                f"cannot backpropagate through {kind.value}"
            )


def batch_gradients(model: MlpModel, X: np.ndarray, Y: np.ndarray
                    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Analytic gradient of the batch mse w.r.t. every weight and bias."""
    _check_trainable(model)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    n = len(X)
    activations, out = forward(model, X)
    delta = 2.0 * (out - Y) * _derivative_from_output(
        model.topology.transfers[-1], out
    )
    d_weights = [None] * len(model.weights)
    d_biases = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        a_prev = activations[layer]
        d_weights[layer] = a_prev.T @ delta / n
        d_biases[layer] = delta.sum(axis=0) / n
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * _derivative_from_output(
                model.topology.transfers[layer - 1], activations[layer]
            )
    return d_weights, d_biases


def one_hot_targets(y: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(y), n_classes), dtype=np.float64)
    out[np.arange(len(y)), y] = 1.0
    return out


def train(model: MlpModel, dataset: EncodedDataset,
          config: TrainConfig | None = None) -> MlpModel:
    """Backpropagation training: fresh seeded init, then per-instance
    gradient descent with momentum for the configured number of epochs.

    Deterministic: identical data, config, and seed give identical weights.
    """
    config = config or TrainConfig()
    if dataset.spec.mode != MLP_MODE:
        raise MlpError("mlp training needs an mlp-mode encoding")
    n = len(dataset)
    if n == 0:
        raise EmptyTrainingSet("no training records")
    _check_trainable(model)

    model = init_model(model.topology, config.seed, config.init_scale,
                       class_order=dataset.spec.class_order,
                       encoder_fingerprint=dataset.spec.fingerprint())
    X = dataset.matrix
    Y = one_hot_targets(dataset.y, dataset.n_classes)
    transfers = model.topology.transfers
    n_layers = len(model.weights)
    rng = np.random.default_rng(config.seed + 1)

    initial = mse(Y, forward(model, X)[1])
    logger.info("epoch=0 mse=%.6f", initial)

    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    lr, mom = config.learning_rate, config.momentum

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        for i in order:
            acts, out = forward(model, X[i])
            delta = 2.0 * (out - Y[i]) * _derivative_from_output(
                transfers[-1], out
            )
            for layer in range(n_layers - 1, -1, -1):
                a_prev = acts[layer]
                vw, vb = vel_w[layer], vel_b[layer]
                vw *= mom
                vw -= lr * np.outer(a_prev, delta)
                vb *= mom
                vb -= lr * delta
                if layer > 0:
                    delta = (delta @ model.weights[layer].T) * \
                        _derivative_from_output(transfers[layer - 1], a_prev)
                model.weights[layer] += vw
                model.biases[layer] += vb
        err = mse(Y, forward(model, X)[1])
        logger.info("epoch=%d mse=%.6f", epoch, err)

    model.epochs_run = config.epochs
    model.final_error = mse(Y, forward(model, X)[1])
    return model


def predict_dist(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Output activations normalized to a distribution (uniform when all 0)."""
    _, out = forward(model, x)
    out = np.maximum(out, 0.0)
    s = out.sum()
    k = model.topology.output_width
    if s <= 0:
        return np.full(k, 1.0 / k)
    return out / s


def predict_proba(model: MlpModel, dataset: EncodedDataset) -> np.ndarray:
    """Normalized output vectors for every record of an mlp-mode dataset."""
    _, out = forward(model, dataset.matrix)
    out = np.maximum(out, 0.0)
    sums = out.sum(axis=1, keepdims=True)
    k = model.topology.output_width
    uniform = np.full(k, 1.0 / k)
    with np.errstate(divide="ignore", invalid="ignore"):
        proba = np.where(sums > 0, out / np.maximum(sums, 1e-300), uniform)
    return proba


def gradient_check(model: MlpModel, X: np.ndarray, Y: np.ndarray,
                   h: float = 1e-5) -> float:
    """Max relative error between analytic and central-finite-difference
    gradients of the batch mse, over every weight and bias."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    d_weights, d_biases = batch_gradients(model, X, Y)

    def loss() -> float:
        return mse(Y, forward(model, X)[1])

    worst = 0.0
    for params, grads in ((model.weights, d_weights), (model.biases, d_biases)):
        for arr, grad in zip(params, grads):
            flat = arr.ravel()
            gflat = grad.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                up = loss()
                flat[j] = orig - h
                down = loss()
                flat[j] = orig
                fd = (up - down) / (2 * h)
                denom = max(1e-6, abs(fd), abs(gflat[j]))
                worst = max(worst, abs(fd - gflat[j]) / denom)
    return worst
