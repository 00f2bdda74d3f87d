"""Surrogate performance predictor: a small fully-connected net on raw numpy.

The net maps a flat adjacency encoding through two ReLU layers to a single
sigmoid output, trained with minibatch SGD (momentum, cosine learning-rate
decay, L2 on the weight matrices). Everything is deterministic given the
config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import graphs
from .errors import DegenerateVariance, DimensionMismatch, EmptyDataset
from .graphs import MetaGraph

HIDDEN_WIDTHS = (256, 256)


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 128
    learning_rate: float = 0.1
    weight_decay: float = 1e-4
    momentum: float = 0.9
    cosine_decay: bool = True
    seed: int = 0


@dataclass
class Dataset:
    """Encoded graphs (rows) and their performance targets in [0, 1]."""

    x: np.ndarray
    y: np.ndarray
    split: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.x.ndim != 2 or self.x.shape[0] != self.y.shape[0]:
            raise ValueError("x must be (n, d) aligned with y")
        if self.y.size and (self.y.min() < 0.0 or self.y.max() > 1.0):
            raise ValueError("targets must lie in [0, 1]")

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass
class RankingMetrics:
    pearson: float
    kendall: float
    mse: float


class PredictorModel:
    """Weights plus activation choices; use initialized() or load()."""

    def __init__(self, weights, biases, hidden_activation="relu", output_activation="sigmoid"):
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        if hidden_activation not in ("relu", "identity"):
            raise ValueError("hidden_activation must be relu or identity")
        if output_activation not in ("sigmoid", "identity"):
            raise ValueError("output_activation must be sigmoid or identity")
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError("weight/bias shapes are inconsistent")
        if self.weights[-1].shape[1] != 1:
            raise ValueError("output layer must have a single unit")

    @classmethod
    def initialized(
        cls,
        input_dim: int,
        hidden=HIDDEN_WIDTHS,
        seed: int = 0,
        hidden_activation: str = "relu",
        output_activation: str = "sigmoid",
    ) -> "PredictorModel":
        """Uniform fan-in scaled init (He-style bounds), biases at zero."""
        rng = np.random.default_rng(seed)
        dims = [input_dim, *hidden, 1]
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = math.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, hidden_activation, output_activation)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def parameters(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Batch forward pass; returns a vector of scores."""
        h, _ = self._forward_cached(np.asarray(x, dtype=np.float64))
        return h[-1].ravel()

    def _forward_cached(self, x):
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimensionMismatch(
                f"input has width {x.shape[-1]}, model expects {self.input_dim}"
            )
        acts = [x]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            if i < len(self.weights) - 1:
                acts.append(np.maximum(z, 0.0) if self.hidden_activation == "relu" else z)
            else:
                acts.append(_sigmoid(z) if self.output_activation == "sigmoid" else z)
        return acts, None

    def save(self, path) -> None:
        arrays = {"version": np.int64(1)}
        arrays["meta"] = np.array([self.hidden_activation, self.output_activation])
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"w{i}"] = w
            arrays[f"b{i}"] = b
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "PredictorModel":
        with np.load(path, allow_pickle=False) as data:
            if int(data["version"]) != 1:
                raise ValueError("unsupported checkpoint version")
            hidden_act, output_act = (str(s) for s in data["meta"])
            weights, biases = [], []
            i = 0
            while f"w{i}" in data:
                weights.append(data[f"w{i}"])
                biases.append(data[f"b{i}"])
                i += 1
        return cls(weights, biases, hidden_act, output_act)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grads(model: PredictorModel, x: np.ndarray, y: np.ndarray):
    """Mean squared error and its gradients for one minibatch."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    acts, _ = model._forward_cached(x)
    pred = acts[-1].ravel()
    diff = pred - y
    n = x.shape[0]
    loss = float(diff @ diff / n)

    grad_out = (2.0 * diff / n).reshape(-1, 1)
    if model.output_activation == "sigmoid":
        grad_out = grad_out * acts[-1] * (1.0 - acts[-1])
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = grad_out
    for i in reversed(range(len(model.weights))):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.weights[i].T
            if model.hidden_activation == "relu":
                delta = delta * (acts[i] > 0.0)
    return loss, grads_w, grads_b


def train(data: Dataset, cfg: TrainConfig, hidden=HIDDEN_WIDTHS) -> PredictorModel:
    """Minibatch SGD with momentum; deterministic given cfg.seed."""
    if len(data) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    model = PredictorModel.initialized(data.x.shape[1], hidden=hidden, seed=(cfg.seed, 0))
    shuffle_rng = np.random.default_rng((cfg.seed, 1))
    vel_w = [np.zeros_like(w) for w in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    n = len(data)
    for epoch in range(cfg.epochs):
        if cfg.cosine_decay:
            lr = cfg.learning_rate * 0.5 * (1.0 + math.cos(math.pi * (epoch / cfg.epochs)))
        else:
            lr = cfg.learning_rate
        order = shuffle_rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, gw, gb = loss_and_grads(model, data.x[idx], data.y[idx])
            for i in range(len(model.weights)):
                gw[i] += cfg.weight_decay * model.weights[i]
                vel_w[i] = cfg.momentum * vel_w[i] - lr * gw[i]
                vel_b[i] = cfg.momentum * vel_b[i] - lr * gb[i]
                model.weights[i] += vel_w[i]
                model.biases[i] += vel_b[i]
        if not all(np.isfinite(w).all() for w in model.weights):
            raise FloatingPointError(f"weights diverged at epoch {epoch}")
    return model


def predict(model: PredictorModel, meta: MetaGraph) -> float:
    """Score one meta-graph; encoding width must match the model."""
    vec = graphs.encode(meta).reshape(1, -1)
    return float(model.forward(vec)[0])


def predict_batch(model: PredictorModel, metas) -> np.ndarray:
    vecs = np.stack([graphs.encode(m) for m in metas])
    return model.forward(vecs)


def ranking_metrics(predicted: np.ndarray, actual: np.ndarray) -> RankingMetrics:
    """Pearson correlation, Kendall tau-b, and MSE between score vectors."""
    p = np.asarray(predicted, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.shape != a.shape or p.size < 2:
        raise ValueError("need two aligned vectors with at least two entries")
    mse = float(np.mean((p - a) ** 2))
    if np.ptp(p) == 0.0 or np.ptp(a) == 0.0:
        raise DegenerateVariance("correlations are undefined for a constant vector", mse=mse)
    pearson = float(stats.pearsonr(p, a).statistic)
    kendall = float(stats.kendalltau(p, a).statistic)
    return RankingMetrics(pearson, kendall, mse)


def evaluate_model(model: PredictorModel, data: Dataset) -> RankingMetrics:
    return ranking_metrics(model.forward(data.x), data.y)


def gradient_check(model: PredictorModel, x: np.ndarray, y: np.ndarray) -> float:
    """Max relative gap between analytic and central-difference gradients.

    Steps are 1e-4 relative to each parameter's magnitude. The denominator
    is floored at 1e-3, which treats near-zero gradients on an absolute
    scale instead of amplifying rounding noise.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    _, gw, gb = loss_and_grads(model, x, y)
    analytic = [g for pair in zip(gw, gb) for g in pair]
    worst = 0.0
    for param, grad in zip(model.parameters(), analytic):
        flat = param.ravel()
        gflat = np.asarray(grad).ravel()
        for i in range(flat.size):
            h = 1e-4 * max(1.0, abs(flat[i]))
            orig = flat[i]
            flat[i] = orig + h
            up, _, _ = loss_and_grads(model, x, y)
            flat[i] = orig - h
            down, _, _ = loss_and_grads(model, x, y)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            rel = abs(numeric - gflat[i]) / max(abs(numeric), abs(gflat[i]), 1e-3)
            worst = max(worst, rel)
    return worst
