"""Fully connected autoencoders trained by plain reverse-mode backprop.

Rows are samples: a layer computes ``act(x @ W + b)`` with ``W`` of shape
(fan_in, fan_out). The training loss is the mean squared error over all
entries of the batch, the same quantity ``metrics.mse`` reports.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch
from ..training import TrainConfig, fit, split_indices

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


def activate(name: str, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        # split by sign so exp never overflows
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        e = np.exp(z[~pos])
        out[~pos] = e / (1.0 + e)
        return out
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def activation_grad(name: str, z, a):
    """d act / dz given pre-activation z and output a."""
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class AEModel:
    weights: list = field(repr=False)
    biases: list = field(repr=False)
    activations: list
    code_index: int  # number of encoder layers; the code is their output

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("weights, biases and activations must have equal length")
        if not 1 <= self.code_index < len(self.weights):
            raise ValueError("code_index must leave at least one decoder layer")
        for w_prev, w in zip(self.weights, self.weights[1:]):
            if w_prev.shape[1] != w.shape[0]:
                raise DimensionMismatch("layer dimension chain is inconsistent")
        for w, b in zip(self.weights, self.biases):
            if b.shape != (w.shape[1],):
                raise DimensionMismatch("bias length must match fan_out")
        if self.layer_dims[0] != self.layer_dims[-1]:
            raise DimensionMismatch("autoencoder output width must equal input width")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")

    @property
    def layer_dims(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def code_dim(self) -> int:
        return self.weights[self.code_index - 1].shape[1]

    @property
    def params(self) -> list:
        return list(self.weights) + list(self.biases)

    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "AEModel":
        return AEModel([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                       list(self.activations), self.code_index)

    def _run(self, x, layers):
        for l in layers:
            x = activate(self.activations[l], x @ self.weights[l] + self.biases[l])
        return x

    def encode(self, x):
        x = _as_rows(x, self.input_dim)
        return self._run(x, range(self.code_index))

    def decode(self, h):
        h = _as_rows(h, self.code_dim)
        return self._run(h, range(self.code_index, len(self.weights)))


def _as_rows(x, width):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != width:
        raise DimensionMismatch(f"expected width {width}, got {x.shape[-1]}")
    return x


def glorot_uniform(rng, fan_in, fan_out):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def hidden_widths(input_dim: int, code_dim: int, n_hidden: int) -> list:
    """Geometric interpolation of ``n_hidden`` widths from input to code."""
    if n_hidden <= 0:
        return []
    r = np.geomspace(input_dim, code_dim, n_hidden + 2)[1:-1]
    return [int(round(v)) for v in r]


def symmetric_dims(input_dim: int, code_dim: int, n_hidden: int = 0) -> tuple:
    """Layer widths input -> hidden... -> code -> ...hidden -> input."""
    enc = [input_dim] + hidden_widths(input_dim, code_dim, n_hidden) + [code_dim]
    return enc + enc[-2::-1], len(enc) - 1


def init_ae(layer_dims, code_index: int, hidden_activation: str = "relu",
            output_activation: str = "sigmoid", seed: int = 0,
            code_activation: str | None = None) -> AEModel:
    """Glorot-uniform weights, zero biases.

    Every layer uses ``hidden_activation`` except the last one
    (``output_activation``) and, if given, the code layer.
    """
    dims = list(layer_dims)
    n_layers = len(dims) - 1
    rng = np.random.default_rng([seed, 10])
    weights = [glorot_uniform(rng, a, b) for a, b in zip(dims[:-1], dims[1:])]
    biases = [np.zeros(b) for b in dims[1:]]
    acts = [hidden_activation] * n_layers
    acts[-1] = output_activation
    if code_activation is not None:
        acts[code_index - 1] = code_activation
    return AEModel(weights, biases, acts, code_index)


def ae_forward(model: AEModel, x):
    """Returns (code, reconstruction) for a vector or a batch of rows."""
    h = model.encode(x)
    return h, model.decode(h)


def ae_loss(model: AEModel, batch) -> float:
    x = _as_rows(batch, model.input_dim)
    _, xr = ae_forward(model, x)
    return float(np.mean((xr - x) ** 2))


def ae_gradients(model: AEModel, batch):
    """(loss, grads) of the batch MSE; grads ordered like ``model.params``."""
    x = np.atleast_2d(_as_rows(batch, model.input_dim))
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    inputs, pre, outs = [], [], []
    a = x
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(a)
        z = a @ w + b
        a = activate(model.activations[l], z)
        pre.append(z)
        outs.append(a)
    diff = a - x
    loss = float(np.mean(diff * diff))
    delta = 2.0 * diff / diff.size
    gw = [None] * len(model.weights)
    gb = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        dz = delta * activation_grad(model.activations[l], pre[l], outs[l])
        gw[l] = inputs[l].T @ dz
        gb[l] = dz.sum(axis=0)
        if l:
            delta = dz @ model.weights[l].T
    return loss, gw + gb


def ae_train(data, model: AEModel, config: TrainConfig, verbose: bool = False):
    """Train a copy of ``model`` on the rows of ``data``.

    Returns (best-validation model, History).
    """
    x = _as_rows(data, model.input_dim)
    if x.ndim != 2:
        raise DimensionMismatch("ae_train needs an [n x m] matrix")
    if x.shape[0] < 2 * config.batch_size:
        raise ValueError(f"need at least 2*batch_size={2 * config.batch_size} rows, got {x.shape[0]}")
    model = model.copy()
    train_idx, val_idx = split_indices(x.shape[0], config.validation_fraction, config.seed)
    xt, xv = x[train_idx], x[val_idx]
    params = model.params

    def loss_and_grads(idx):
        return ae_gradients(model, xt[idx])

    history = fit(params, loss_and_grads, lambda: ae_loss(model, xv), len(xt), config, verbose)
    return model, history
