"""Feature expansion and a small tanh MLP trained with full-batch Adam.

The classifier is meant to overfit: it is trained on pins and handles and
then queried on every cell center to paint the board.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

N_FEATURES = 15
TWO_PI = 2.0 * np.pi
THREE_PI = 3.0 * np.pi


class TrainingDiverged(RuntimeError):
    pass


def expand_features(points) -> np.ndarray:
    """Lift ``(x, y)`` points to the 15-term feature vector.

    Order: x, y, xy, sin 2πx, cos 2πx, x², sin 2πy, cos 2πy, y²,
    sin 3πx, cos 3πx, x³, sin 3πy, cos 3πy, y³.  A single point returns a
    vector of length 15, an (n, 2) array returns (n, 15).
    """
    p = np.asarray(points, dtype=float)
    single = p.ndim == 1
    p = p.reshape(-1, 2)
    x, y = p[:, 0], p[:, 1]
    out = np.empty((len(p), N_FEATURES))
    out[:, 0] = x
    out[:, 1] = y
    out[:, 2] = x * y
    out[:, 3] = np.sin(TWO_PI * x)
    out[:, 4] = np.cos(TWO_PI * x)
    out[:, 5] = x * x
    out[:, 6] = np.sin(TWO_PI * y)
    out[:, 7] = np.cos(TWO_PI * y)
    out[:, 8] = y * y
    out[:, 9] = np.sin(THREE_PI * x)
    out[:, 10] = np.cos(THREE_PI * x)
    out[:, 11] = x * x * x
    out[:, 12] = np.sin(THREE_PI * y)
    out[:, 13] = np.cos(THREE_PI * y)
    out[:, 14] = y * y * y
    return out[0] if single else out


def raw_features(points) -> np.ndarray:
    return np.asarray(points, dtype=float).reshape(-1, 2).copy()


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.002
    max_epochs: int = 300
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    early_stop_on_full_accuracy: bool = True
    hidden_layers: Tuple[int, ...] = (50, 50, 50)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")


@dataclass(frozen=True, eq=False)
class MlpClassifier:
    """tanh hidden layers and a linear score layer; class ``j`` is net ``j+1``."""

    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    expand: bool = True
    epochs_run: int = 0
    train_accuracy: float = 0.0

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def input_width(self) -> int:
        return self.weights[0].shape[0]

    def features(self, points) -> np.ndarray:
        return expand_features(points) if self.expand else raw_features(points)

    def scores(self, points) -> np.ndarray:
        return forward(self.weights, self.biases, self.features(points))[-1]

    def predict_proba(self, points) -> np.ndarray:
        return softmax(self.scores(points))

    def predict(self, points) -> np.ndarray:
        """Net ids (1-based); ties go to the lowest id."""
        return np.argmax(self.scores(points), axis=1) + 1

    def dump(self, path) -> None:
        """Write every parameter to a flat text file, one tensor per block."""
        with open(path, "w") as fh:
            fh.write(f"# expand={self.expand} epochs={self.epochs_run}\n")
            for i, (w, b) in enumerate(zip(self.weights, self.biases)):
                fh.write(f"# layer {i} W {w.shape[0]}x{w.shape[1]}\n")
                np.savetxt(fh, w, fmt="%.17g")
                fh.write(f"# layer {i} b {b.shape[0]}\n")
                np.savetxt(fh, b[None, :], fmt="%.17g")


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(weights, biases, x) -> List[np.ndarray]:
    """Activations of every layer, input first, final scores last."""
    acts = [x]
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        acts.append(z if i == last else np.tanh(z))
    return acts


def loss_and_gradients(weights, biases, x, y_index):
    """Mean cross-entropy over the batch and its parameter gradients.

    ``y_index`` holds 0-based class indices.
    """
    acts = forward(weights, biases, x)
    n = len(x)
    z = acts[-1]
    z = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(logsum - z[rows, y_index]))

    delta = np.exp(z - logsum[:, None])
    delta[rows, y_index] -= 1.0
    delta /= n
    gw: List[np.ndarray] = [None] * len(weights)
    gb: List[np.ndarray] = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ weights[i].T) * (1.0 - acts[i] ** 2)
    return loss, gw, gb


def init_parameters(layer_sizes: Sequence[int], rng: np.random.Generator):
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def train(
    points,
    labels,
    config: TrainConfig = TrainConfig(),
    rng_seed=0,
    n_classes: Optional[int] = None,
    expand: bool = True,
    fit_mask=None,
) -> MlpClassifier:
    """Fit an MLP to labelled points with full-batch Adam.

    ``labels`` are net ids starting at 1.  With early stopping enabled the
    loop ends at the first epoch whose forward pass classifies every point
    correctly, before that epoch's update.  ``fit_mask`` narrows "every
    point" to the masked subset; all points still contribute to the loss.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    y = np.asarray(labels, dtype=int) - 1
    if len(pts) == 0 or len(pts) != len(y):
        raise ValueError("need one label per training point")
    if y.min() < 0:
        raise ValueError("labels are net ids starting at 1")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if y.max() >= n_classes:
        raise ValueError("label exceeds n_classes")

    x = expand_features(pts) if expand else raw_features(pts)
    rng = np.random.default_rng(rng_seed)
    sizes = [x.shape[1], *config.hidden_layers, n_classes]
    weights, biases = init_parameters(sizes, rng)
    params = weights + biases
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    lr, b1, b2, eps = (
        config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon,
    )
    rows = np.arange(len(y))
    watch = slice(None) if fit_mask is None else np.asarray(fit_mask, dtype=bool)
    n_layers = len(weights)
    epochs = 0
    accuracy = 0.0

    for epoch in range(1, config.max_epochs + 1):
        # forward pass inlined: this loop is the solver's hot path
        acts = [x]
        for i in range(n_layers):
            z = acts[-1] @ weights[i] + biases[i]
            acts.append(z if i == n_layers - 1 else np.tanh(z))
        z = acts[-1]
        correct = np.argmax(z, axis=1) == y
        accuracy = float(correct.mean())
        if config.early_stop_on_full_accuracy and correct[watch].all():
            break
        z = z - z.max(axis=1, keepdims=True)
        ez = np.exp(z)
        sums = ez.sum(axis=1)
        loss = np.mean(np.log(sums) - z[rows, y])
        if not np.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
        delta = ez / sums[:, None]
        delta[rows, y] -= 1.0
        delta /= len(y)
        grads = [None] * (2 * n_layers)
        for i in range(n_layers - 1, -1, -1):
            grads[i] = acts[i].T @ delta
            grads[n_layers + i] = delta.sum(axis=0)
            if i:
                delta = (delta @ weights[i].T) * (1.0 - acts[i] * acts[i])

        step = lr * np.sqrt(1.0 - b2 ** epoch) / (1.0 - b1 ** epoch)
        for p, g, s1, s2 in zip(params, grads, m1, m2):
            s1 *= b1
            s1 += (1.0 - b1) * g
            s2 *= b2
            s2 += (1.0 - b2) * (g * g)
            p -= step * s1 / (np.sqrt(s2) + eps)
        epochs = epoch
    else:
        acts = forward(weights, biases, x)
        accuracy = float((np.argmax(acts[-1], axis=1) == y).mean())

    if not all(np.isfinite(p).all() for p in params):
        raise TrainingDiverged("non-finite parameters after training")
    return MlpClassifier(
        weights=tuple(weights),
        biases=tuple(biases),
        expand=expand,
        epochs_run=epochs,
        train_accuracy=accuracy,
    )


def predict_grid(classifier: MlpClassifier, resolution: int, chunk: int = 4096) -> np.ndarray:
    """Label of every cell center; ``out[row, col]`` with row along y."""
    c = (np.arange(resolution) + 0.5) / resolution
    xx, yy = np.meshgrid(c, c)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    out = np.empty(len(pts), dtype=np.int64)
    for start in range(0, len(pts), chunk):
        out[start:start + chunk] = classifier.predict(pts[start:start + chunk])
    return out.reshape(resolution, resolution)
