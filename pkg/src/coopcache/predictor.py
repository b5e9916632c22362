"""From-scratch fully connected feed-forward network with sigmoid hidden
layers, a linear output head, and full-batch backpropagation. Used for
user-mobility forecasting (2 hidden layers) and content-popularity
forecasting (3 hidden layers).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MOBILITY_SHAPE = [24, 16, 16, 2]          # 12 (x,y) pairs in, next (x,y) out
POPULARITY_SHAPE = [5, 16, 16, 16, 1]     # 5 past slots in, next slot out


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, rmse_value: float):
        super().__init__(f"training diverged at epoch {epoch} (RMSE={rmse_value})")
        self.epoch = epoch


@dataclass
class Mlp:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 100
    rmse_goal: float | None = None
    rng_seed: int = 0
    layerwise_pretrain: bool = False
    pretrain_epochs: int = 50

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainReport:
    epoch_rmse: list[float] = field(default_factory=list)
    stopped_early: bool = False


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def init(layer_sizes: list[int], seed: int) -> Mlp:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    if len(layer_sizes) < 3:
        raise ValueError("need input, at least one hidden, and output layer")
    if any(n < 1 for n in layer_sizes):
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes, layer_sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return Mlp(layer_sizes=list(layer_sizes), weights=weights, biases=biases)


def _forward_all(net: Mlp, x: np.ndarray):
    """Activations of every layer for a batch (n_samples x n_in)."""
    acts = [x]
    a = x
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        a = z if l == last else _sigmoid(z)  # linear output head
        acts.append(a)
    return acts


def forward(net: Mlp, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.layer_sizes[0]:
        raise ValueError(
            f"input size {x.shape[1]} != network input {net.layer_sizes[0]}"
        )
    y = _forward_all(net, x)[-1]
    return y[0] if single else y


def rmse(outputs, targets) -> float:
    """Mean over samples of the per-sample root-mean-square error."""
    o = np.atleast_2d(np.asarray(outputs, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    if o.shape != t.shape:
        raise ValueError("outputs and targets must have equal shapes")
    if o.size == 0:
        raise ValueError("empty input")
    return float(np.sqrt(np.mean((o - t) ** 2, axis=1)).mean())


def _gradients(net: Mlp, x: np.ndarray, y: np.ndarray):
    """Backprop gradients of the mean squared-error loss over the batch.

    loss = 1/(2N) * sum over samples and outputs of (out - y)^2
    """
    n = x.shape[0]
    acts = _forward_all(net, x)
    delta = (acts[-1] - y) / n
    grads_w, grads_b = [], []
    for l in range(len(net.weights) - 1, -1, -1):
        grads_w.insert(0, delta.T @ acts[l])
        grads_b.insert(0, delta.sum(axis=0))
        if l > 0:
            a = acts[l]
            delta = (delta @ net.weights[l]) * a * (1.0 - a)
    return grads_w, grads_b


def _loss(net: Mlp, x: np.ndarray, y: np.ndarray) -> float:
    out = _forward_all(net, x)[-1]
    return float(0.5 * np.sum((out - y) ** 2) / x.shape[0])


def train(net: Mlp, dataset, config: TrainConfig) -> TrainReport:
    """Full-batch gradient descent; mutates `net` in place.

    Records the RMSE of each epoch's pre-update forward pass and stops
    early once `rmse_goal` is reached.
    """
    x = np.atleast_2d(np.asarray(dataset.inputs, dtype=float))
    y = np.atleast_2d(np.asarray(dataset.targets, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("empty dataset")

    if config.layerwise_pretrain:
        _layerwise_pretrain(net, x, y, config)

    report = TrainReport()
    for epoch in range(config.epochs):
        outputs = _forward_all(net, x)[-1]
        e = rmse(outputs, y)
        if not np.isfinite(e) or e > 1e6:
            raise TrainingDivergedError(epoch, e)
        report.epoch_rmse.append(e)
        if config.rmse_goal is not None and e <= config.rmse_goal:
            report.stopped_early = True
            return report
        gw, gb = _gradients(net, x, y)
        for l in range(len(net.weights)):
            net.weights[l] -= config.learning_rate * gw[l]
            net.biases[l] -= config.learning_rate * gb[l]
    return report


def _layerwise_pretrain(net: Mlp, x: np.ndarray, y: np.ndarray, config: TrainConfig):
    """Greedy supervised stacking: grow the net one hidden layer at a time,
    training each partial net (frozen prefix + fresh linear head) briefly."""
    sizes = net.layer_sizes
    for depth in range(1, len(sizes) - 1):
        sub_sizes = sizes[: depth + 1] + [sizes[-1]]
        sub = init(sub_sizes, config.rng_seed + depth)
        for l in range(depth):
            sub.weights[l] = net.weights[l]
            sub.biases[l] = net.biases[l]
        sub_cfg = TrainConfig(learning_rate=config.learning_rate,
                              epochs=config.pretrain_epochs,
                              rng_seed=config.rng_seed)

        class _DS:  # minimal duck-typed dataset
            inputs = x
            targets = y

        train(sub, _DS, sub_cfg)
        for l in range(depth):
            net.weights[l] = sub.weights[l]
            net.biases[l] = sub.biases[l]


def evaluate(net: Mlp, dataset) -> float:
    """RMSE of the network on a (test) dataset."""
    x = np.atleast_2d(np.asarray(dataset.inputs, dtype=float))
    y = np.atleast_2d(np.asarray(dataset.targets, dtype=float))
    return rmse(_forward_all(net, x)[-1], y)


def gradient_check(net: Mlp, sample, epsilon: float = 1e-5) -> float:
    """Max relative error of analytic vs central finite-difference gradients
    for one (input, target) sample."""
    x = np.atleast_2d(np.asarray(sample[0], dtype=float))
    y = np.atleast_2d(np.asarray(sample[1], dtype=float))
    gw, gb = _gradients(net, x, y)

    worst = 0.0
    for params, grads in ((net.weights, gw), (net.biases, gb)):
        for arr, g in zip(params, grads):
            flat, gflat = arr.ravel(), np.asarray(g).ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + epsilon
                lp = _loss(net, x, y)
                flat[idx] = orig - epsilon
                lm = _loss(net, x, y)
                flat[idx] = orig
                numeric = (lp - lm) / (2.0 * epsilon)
                analytic = gflat[idx]
                rel = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
                worst = max(worst, rel)
    return worst


def save_snapshot(net: Mlp, path):
    """Flat text format: layer sizes line, then one line per weight matrix
    (row-major) and per bias vector."""
    with open(path, "w") as fh:
        fh.write(" ".join(str(n) for n in net.layer_sizes) + "\n")
        for w, b in zip(net.weights, net.biases):
            fh.write(" ".join(repr(float(v)) for v in w.ravel()) + "\n")
            fh.write(" ".join(repr(float(v)) for v in b) + "\n")


def load_snapshot(path) -> Mlp:
    with open(path) as fh:
        sizes = [int(tok) for tok in fh.readline().split()]
        weights, biases = [], []
        for n_in, n_out in zip(sizes, sizes[1:]):
            w = np.array([float(t) for t in fh.readline().split()]).reshape(n_out, n_in)
            b = np.array([float(t) for t in fh.readline().split()])
            weights.append(w)
            biases.append(b)
    return Mlp(layer_sizes=sizes, weights=weights, biases=biases)
