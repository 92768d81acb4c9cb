"""Small differentiable classifiers with hand-derived gradients.

Two architectures: plain linear-softmax and one hidden tanh layer. Both
expose analytic input gradients for the attack loop; no autograd anywhere,
so every gradient here is checked against finite differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..embeddings import EmbeddingSet
from ..errors import TrainingGateError, ValidationError
from ..metrics import ClassTemplates
from .synthetic import Dataset, SyntheticTask

ARCHITECTURES = ("linear", "tanh")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _logsumexp(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=-1, keepdims=True)
    return (m + np.log(np.exp(z - m).sum(axis=-1, keepdims=True))).squeeze(-1)


@dataclass
class ToyClassifier:
    architecture: str
    weights: dict[str, np.ndarray]
    model_name: str

    def __post_init__(self) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ValidationError(f"unknown architecture {self.architecture!r}")

    @property
    def num_classes(self) -> int:
        key = "W" if self.architecture == "linear" else "W2"
        return int(self.weights[key].shape[0])

    @property
    def input_dim(self) -> int:
        key = "W" if self.architecture == "linear" else "W1"
        return int(self.weights[key].shape[1])

    def logits(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.architecture == "linear":
            return x @ self.weights["W"].T + self.weights["b"]
        h = np.tanh(x @ self.weights["W1"].T + self.weights["b1"])
        return h @ self.weights["W2"].T + self.weights["b2"]

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.logits(np.atleast_2d(np.asarray(x, dtype=np.float64)))
        return np.argmax(z, axis=-1)

    def predict_one(self, x: np.ndarray) -> int:
        return int(np.argmax(self.logits(x)))

    def templates(self) -> np.ndarray:
        """Final-layer weight rows, one per class."""
        key = "W" if self.architecture == "linear" else "W2"
        return self.weights[key].copy()

    def class_templates(self) -> ClassTemplates:
        return ClassTemplates(model_name=self.model_name, templates=self.templates())

    def template_embeddings(self, labels: list[str]) -> EmbeddingSet:
        return EmbeddingSet(
            source_name=self.model_name, labels=tuple(labels), vectors=self.templates()
        )


def loss_value(model: ToyClassifier, x: np.ndarray, loss_spec: tuple) -> float:
    """Forward-only loss evaluation; the only model access SPSA gets."""
    z = model.logits(np.asarray(x, dtype=np.float64))
    kind = loss_spec[0]
    if kind == "ce":
        target = loss_spec[1]
        return float(_logsumexp(z) - z[target])
    if kind == "cw":
        target, kappa = loss_spec[1], loss_spec[2]
        others = np.delete(z, target)
        return float(max(others.max() - z[target], -kappa))
    raise ValidationError(f"unknown loss spec {kind!r}")


def _dloss_dlogits(z: np.ndarray, loss_spec: tuple) -> np.ndarray:
    kind = loss_spec[0]
    C = z.shape[-1]
    if kind == "ce":
        target = loss_spec[1]
        g = _softmax(z)
        g[target] -= 1.0
        return g
    if kind == "cw":
        target, kappa = loss_spec[1], loss_spec[2]
        masked = z.copy()
        masked[target] = -np.inf
        j = int(np.argmax(masked))
        g = np.zeros(C)
        if masked[j] - z[target] > -kappa:
            g[j] = 1.0
            g[target] = -1.0
        return g
    raise ValidationError(f"unknown loss spec {kind!r}")


def grad_input(model: ToyClassifier, x: np.ndarray, loss_spec: tuple) -> np.ndarray:
    """Analytic d(loss)/d(input) at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.input_dim:
        raise ValidationError(f"expected input of shape ({model.input_dim},), got {x.shape}")
    if model.architecture == "linear":
        z = model.logits(x)
        return _dloss_dlogits(z, loss_spec) @ model.weights["W"]
    a = x @ model.weights["W1"].T + model.weights["b1"]
    h = np.tanh(a)
    z = h @ model.weights["W2"].T + model.weights["b2"]
    dh = _dloss_dlogits(z, loss_spec) @ model.weights["W2"]
    da = dh * (1.0 - h * h)
    return da @ model.weights["W1"]


def accuracy(model: ToyClassifier, X: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(model.predict(X) == y))


def train(
    task: SyntheticTask,
    data: Dataset,
    architecture: str = "linear",
    hidden: int = 24,
    steps: int = 600,
    lr: float = 2.0,
    accuracy_gate: float = 0.95,
    seed: int | None = None,
) -> ToyClassifier:
    """Full-batch gradient descent on cross-entropy, fixed step count.

    Raises TrainingGateError when test accuracy misses the gate; the
    exception carries the achieved accuracy.
    """
    if architecture not in ARCHITECTURES:
        raise ValidationError(f"unknown architecture {architecture!r}")
    if seed is None:
        seed = task.seed
    C, d = task.C, task.d
    X, y = data.X_train, data.y_train
    N = X.shape[0]
    Y = np.zeros((N, C))
    Y[np.arange(N), y] = 1.0

    arch_code = 11 if architecture == "linear" else 13
    rng = np.random.default_rng(np.random.SeedSequence([seed, arch_code]))

    if architecture == "linear":
        W = 0.01 * rng.normal(0.0, 1.0, (C, d))
        b = np.zeros(C)
        for _ in range(steps):
            P = _softmax(X @ W.T + b)
            G = (P - Y) / N
            W -= lr * (G.T @ X)
            b -= lr * G.sum(axis=0)
        weights = {"W": W, "b": b}
    else:
        W1 = rng.normal(0.0, 1.0, (hidden, d)) / np.sqrt(d)
        b1 = np.zeros(hidden)
        W2 = 0.01 * rng.normal(0.0, 1.0, (C, hidden))
        b2 = np.zeros(C)
        for _ in range(steps):
            A = X @ W1.T + b1
            H = np.tanh(A)
            P = _softmax(H @ W2.T + b2)
            G = (P - Y) / N
            dH = G @ W2
            dA = dH * (1.0 - H * H)
            W2 -= lr * (G.T @ H)
            b2 -= lr * G.sum(axis=0)
            W1 -= lr * (dA.T @ X)
            b1 -= lr * dA.sum(axis=0)
        weights = {"W1": W1, "b1": b1, "W2": W2, "b2": b2}

    model = ToyClassifier(
        architecture=architecture, weights=weights, model_name=f"lab-{architecture}"
    )
    acc = accuracy(model, data.X_test, data.y_test)
    if acc < accuracy_gate:
        raise TrainingGateError(
            f"test accuracy {acc:.4f} below gate {accuracy_gate:.2f}", accuracy=acc
        )
    return model
