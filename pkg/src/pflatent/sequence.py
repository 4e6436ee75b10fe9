"""Stacked LSTM / GRU forecasters over latent trajectories.

Every input row is ``[latent code, x0, M, kappa]``. The network reads
``context_len`` rows, predicts the next latent code through an affine head,
then rolls forward autoregressively: each prediction is fed back as the next
input with the sample's three static parameters re-appended. Gradients are
exact reverse-mode through the whole unrolled graph, feedback path included.

Gate blocks are concatenated along the last axis: LSTM uses (i, f, o, g),
GRU uses (z, r, n).

With ``residual=True`` the head predicts an increment: the output is the
latent part of the current input plus the affine map of the top hidden
state, so an all-zero head reproduces the persistence forecast.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch
from .training import TrainConfig, fit, split_indices

N_STATIC = 3
CELL_KINDS = ("lstm", "gru")
STRIDE_POLICIES = ("all", "even_indices")
_GATES = {"lstm": 4, "gru": 3}


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class SeqSample:
    features: np.ndarray  # (T, latent_dim + 3)
    params: tuple = ()

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        if f.ndim != 2 or f.shape[0] < 2 or f.shape[1] <= N_STATIC:
            raise DimensionMismatch("SeqSample needs a [T x F] matrix with T >= 2, F > 3")
        self.features = f
        if not self.params:
            self.params = tuple(float(v) for v in f[0, -N_STATIC:])

    @classmethod
    def from_latents(cls, latents, params):
        """Append the static (x0, M, kappa) triple to every latent row."""
        z = np.asarray(latents, dtype=np.float64)
        p = np.asarray(params, dtype=np.float64)
        return cls(np.hstack([z, np.broadcast_to(p, (z.shape[0], N_STATIC))]), tuple(p))

    @property
    def latent(self) -> np.ndarray:
        return self.features[:, :-N_STATIC]


@dataclass(frozen=True)
class RolloutSpec:
    horizon: int = 5
    context_len: Optional[int] = None  # None: T - horizon
    stride_policy: str = "all"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.context_len is not None and self.context_len < 1:
            raise ValueError("context_len must be >= 1")
        if self.stride_policy not in STRIDE_POLICIES:
            raise ValueError(f"unknown stride_policy {self.stride_policy!r}")

    def context_for(self, length: int) -> int:
        c = length - self.horizon if self.context_len is None else self.context_len
        if c < 1 or c + self.horizon > length:
            raise DimensionMismatch(
                f"context {c} + horizon {self.horizon} does not fit a sequence of {length}")
        return c


def subsample_sequence(sample, policy: str = "even_indices"):
    """Keep rows 0, 2, 4, ... (``even_indices``) or everything (``all``)."""
    if policy == "all":
        return sample
    if policy != "even_indices":
        raise ValueError(f"unknown stride_policy {policy!r}")
    if isinstance(sample, SeqSample):
        return SeqSample(sample.features[::2], sample.params)
    return np.asarray(sample)[..., ::2, :]


@dataclass
class SeqModel:
    cell_kind: str
    layers: list = field(repr=False)  # per layer: [W (in, G*H), U (H, G*H), b (G*H,)]
    head_w: np.ndarray = field(repr=False)  # (H, latent_dim)
    head_b: np.ndarray = field(repr=False)
    residual: bool = False

    def __post_init__(self):
        if self.cell_kind not in CELL_KINDS:
            raise ValueError(f"unknown cell kind {self.cell_kind!r}")
        g = _GATES[self.cell_kind]
        h = self.hidden_size
        width = self.input_size
        for w, u, b in self.layers:
            if w.shape != (width, g * h) or u.shape != (h, g * h) or b.shape != (g * h,):
                raise DimensionMismatch("gate parameter shapes do not match cell kind / sizes")
            width = h
        if self.head_w.shape != (h, self.latent_dim) or self.head_b.shape != (self.latent_dim,):
            raise DimensionMismatch("output head shape mismatch")
        if self.input_size != self.latent_dim + N_STATIC:
            raise DimensionMismatch("input width must be latent_dim + 3")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def hidden_size(self) -> int:
        return self.layers[0][1].shape[0]

    @property
    def input_size(self) -> int:
        return self.layers[0][0].shape[0]

    @property
    def latent_dim(self) -> int:
        return self.head_w.shape[1]

    @property
    def params(self) -> list:
        return [p for layer in self.layers for p in layer] + [self.head_w, self.head_b]

    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "SeqModel":
        return SeqModel(self.cell_kind, [[p.copy() for p in l] for l in self.layers],
                        self.head_w.copy(), self.head_b.copy(), self.residual)


def init_seq_model(cell_kind: str, latent_dim: int, hidden_size: int, n_layers: int = 2,
                   seed: int = 0, forget_bias: float = 1.0, residual: bool = False) -> SeqModel:
    """Glorot-uniform gate blocks, zero biases except the LSTM forget gate.

    A residual head starts at zero so the untrained model is the persistence forecast.
    """
    if cell_kind not in CELL_KINDS:
        raise ValueError(f"unknown cell kind {cell_kind!r}")
    rng = np.random.default_rng([seed, 20])
    g = _GATES[cell_kind]
    h = hidden_size

    def block(fan_in):
        lim = np.sqrt(6.0 / (fan_in + h))
        return rng.uniform(-lim, lim, size=(fan_in, g * h))

    layers = []
    width = latent_dim + N_STATIC
    for _ in range(n_layers):
        b = np.zeros(g * h)
        if cell_kind == "lstm":
            b[h:2 * h] = forget_bias
        layers.append([block(width), block(h), b])
        width = h
    lim = np.sqrt(6.0 / (h + latent_dim))
    head_w = rng.uniform(-lim, lim, size=(h, latent_dim))
    if residual:
        head_w[...] = 0.0
    return SeqModel(cell_kind, layers, head_w, np.zeros(latent_dim), residual)


def lstm_cell(x, h_prev, c_prev, params):
    """One LSTM step; params = (W, U, b). Returns (h, c)."""
    h, c, _ = _lstm_step(np.asarray(x, dtype=np.float64), h_prev, c_prev, params)
    return h, c


def gru_cell(x, h_prev, params):
    """One GRU step; params = (W, U, b). Returns h."""
    h, _ = _gru_step(np.asarray(x, dtype=np.float64), h_prev, params)
    return h


def _lstm_step(x, h_prev, c_prev, params):
    w, u, b = params
    n = u.shape[0]
    a = x @ w + h_prev @ u + b
    i = sigmoid(a[..., :n])
    f = sigmoid(a[..., n:2 * n])
    o = sigmoid(a[..., 2 * n:3 * n])
    g = np.tanh(a[..., 3 * n:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc)


def _lstm_back(dh, dc, cache, params, grads):
    x, h_prev, c_prev, i, f, o, g, tc = cache
    w, u, _ = params
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    da = np.concatenate([
        dc * g * i * (1.0 - i),
        dc * c_prev * f * (1.0 - f),
        do * o * (1.0 - o),
        dc * i * (1.0 - g * g),
    ], axis=-1)
    grads[0] += x.T @ da
    grads[1] += h_prev.T @ da
    grads[2] += da.sum(axis=0)
    return da @ w.T, da @ u.T, dc * f


def _gru_step(x, h_prev, params):
    w, u, b = params
    n = u.shape[0]
    ax = x @ w + b
    ah = h_prev @ u[:, :2 * n]
    z = sigmoid(ax[..., :n] + ah[..., :n])
    r = sigmoid(ax[..., n:2 * n] + ah[..., n:])
    rh = r * h_prev
    cand = np.tanh(ax[..., 2 * n:] + rh @ u[:, 2 * n:])
    h = (1.0 - z) * h_prev + z * cand
    return h, (x, h_prev, z, r, rh, cand)


def _gru_back(dh, cache, params, grads):
    x, h_prev, z, r, rh, cand = cache
    w, u, _ = params
    n = u.shape[0]
    dan = dh * z * (1.0 - cand * cand)
    drh = dan @ u[:, 2 * n:].T
    daz = dh * (cand - h_prev) * z * (1.0 - z)
    dar = drh * h_prev * r * (1.0 - r)
    dzr = np.concatenate([daz, dar], axis=-1)
    da = np.concatenate([dzr, dan], axis=-1)
    grads[0] += x.T @ da
    grads[1][:, :2 * n] += h_prev.T @ dzr
    grads[1][:, 2 * n:] += rh.T @ dan
    grads[2] += da.sum(axis=0)
    dh_prev = dh * (1.0 - z) + drh * r + dzr @ u[:, :2 * n].T
    return da @ w.T, dh_prev


def _as_batch(samples) -> np.ndarray:
    if isinstance(samples, SeqSample):
        return samples.features[None]
    if isinstance(samples, np.ndarray):
        return np.asarray(samples, dtype=np.float64)
    return np.stack([s.features for s in samples])


def _prepare(model: SeqModel, samples, spec: RolloutSpec):
    x = _as_batch(samples)
    if spec.stride_policy == "even_indices":
        x = x[:, ::2]
    if x.ndim != 3 or x.shape[2] != model.input_size:
        raise DimensionMismatch(
            f"expected [B x T x {model.input_size}] features, got {x.shape}")
    return x, spec.context_for(x.shape[1])


def _unroll(model: SeqModel, x, context: int, horizon: int, keep_cache: bool):
    """Run the rollout; returns predictions (B, k, L) and per-step caches."""
    bsz = x.shape[0]
    hsz = model.hidden_size
    lat = model.latent_dim
    statics = x[:, 0, lat:]
    hs = [np.zeros((bsz, hsz)) for _ in model.layers]
    cs = [np.zeros((bsz, hsz)) for _ in model.layers]
    preds = np.empty((bsz, horizon, lat))
    caches = []
    n_steps = context + horizon - 1
    for t in range(n_steps):
        if t < context:
            inp = x[:, t]
        else:
            inp = np.concatenate([preds[:, t - context], statics], axis=1)
        last = inp[:, :lat]
        step_cache = []
        for l, params in enumerate(model.layers):
            if model.cell_kind == "lstm":
                hs[l], cs[l], cache = _lstm_step(inp, hs[l], cs[l], params)
            else:
                hs[l], cache = _gru_step(inp, hs[l], params)
            step_cache.append(cache)
            inp = hs[l]
        if t >= context - 1:
            preds[:, t - context + 1] = hs[-1] @ model.head_w + model.head_b
            if model.residual:
                preds[:, t - context + 1] += last
        if keep_cache:
            caches.append((step_cache, hs[-1]))
    return preds, caches


def predict(model: SeqModel, samples, spec: RolloutSpec) -> np.ndarray:
    """Batched rollout: (B, horizon, latent_dim) predictions."""
    x, context = _prepare(model, samples, spec)
    preds, _ = _unroll(model, x, context, spec.horizon, keep_cache=False)
    return preds


def seq_forward(model: SeqModel, sample: SeqSample, spec: RolloutSpec) -> np.ndarray:
    """Predicted latent frames [k x latent_dim] for one sample."""
    return predict(model, sample, spec)[0]


def targets_for(model: SeqModel, samples, spec: RolloutSpec) -> np.ndarray:
    x, context = _prepare(model, samples, spec)
    return x[:, context:context + spec.horizon, :model.latent_dim]


def seq_loss(model: SeqModel, samples, spec: RolloutSpec) -> float:
    x, context = _prepare(model, samples, spec)
    preds, _ = _unroll(model, x, context, spec.horizon, keep_cache=False)
    y = x[:, context:context + spec.horizon, :model.latent_dim]
    return float(np.mean((preds - y) ** 2))


def bptt_gradients(model: SeqModel, samples, spec: RolloutSpec):
    """(loss, grads) of the mean squared error over all predicted frames.

    grads are ordered like ``model.params``.
    """
    x, context = _prepare(model, samples, spec)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    k = spec.horizon
    lat = model.latent_dim
    preds, caches = _unroll(model, x, context, k, keep_cache=True)
    y = x[:, context:context + k, :lat]
    diff = preds - y
    loss = float(np.mean(diff * diff))

    dpred = 2.0 * diff / diff.size  # accumulates feedback contributions too
    layer_grads = [[np.zeros_like(p) for p in layer] for layer in model.layers]
    g_head_w = np.zeros_like(model.head_w)
    g_head_b = np.zeros_like(model.head_b)
    n_layers = model.n_layers
    dh = [np.zeros((x.shape[0], model.hidden_size)) for _ in range(n_layers)]
    dc = [np.zeros_like(d) for d in dh]
    for t in range(len(caches) - 1, -1, -1):
        step_cache, h_top = caches[t]
        if t >= context - 1:
            j = t - context + 1
            g_head_w += h_top.T @ dpred[:, j]
            g_head_b += dpred[:, j].sum(axis=0)
            dh[-1] = dh[-1] + dpred[:, j] @ model.head_w.T
        d_in = None
        for l in range(n_layers - 1, -1, -1):
            grad_h = dh[l] if d_in is None else dh[l] + d_in
            if model.cell_kind == "lstm":
                d_in, dh[l], dc[l] = _lstm_back(grad_h, dc[l], step_cache[l],
                                                 model.layers[l], layer_grads[l])
            else:
                d_in, dh[l] = _gru_back(grad_h, step_cache[l], model.layers[l], layer_grads[l])
        if t >= context:
            # this step's input was the previous prediction
            dpred[:, t - context] += d_in[:, :lat]
            if model.residual:
                dpred[:, t - context] += dpred[:, t - context + 1]
    grads = [g for layer in layer_grads for g in layer] + [g_head_w, g_head_b]
    return loss, grads


def seq_train(samples, model: SeqModel, config: TrainConfig, spec: RolloutSpec,
              verbose: bool = False):
    """Train a copy of ``model``; returns (best-validation model, History)."""
    x = _as_batch(samples)
    if x.shape[0] < 2:
        raise ValueError("seq_train needs at least 2 samples")
    _prepare(model, x[:1], spec)
    model = model.copy()
    train_idx, val_idx = split_indices(x.shape[0], config.validation_fraction, config.seed)
    xt, xv = x[train_idx], x[val_idx]

    def loss_and_grads(idx):
        return bptt_gradients(model, xt[idx], spec)

    history = fit(model.params, loss_and_grads, lambda: seq_loss(model, xv, spec),
                  len(xt), config, verbose)
    return model, history


def sliding_windows(samples: Sequence[SeqSample], length: int, step: int = 1) -> np.ndarray:
    """All contiguous sub-sequences of ``length`` rows, as a [N x length x F] array."""
    x = _as_batch(samples)
    starts = range(0, x.shape[1] - length + 1, step)
    return np.concatenate([x[:, s:s + length] for s in starts], axis=0)
