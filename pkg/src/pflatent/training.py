"""Minibatch optimization with early stopping, shared by the AE and RNN trainers."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteLoss

log = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd_momentum")


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    min_delta: float = 1e-5
    validation_fraction: float = 0.1
    seed: int = 0
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.patience < 1 or self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("patience, batch_size and max_epochs must be >= 1")


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = -1  # -1: no epoch beat the initial parameters
    initial_val: float = float("nan")

    @property
    def best_val(self) -> float:
        return self.initial_val if self.best_epoch < 0 else self.val_loss[self.best_epoch]


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class SGDMomentum:
    def __init__(self, params, lr, momentum=0.9):
        self.lr, self.mu = lr, momentum
        self.vel = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        for p, g, v in zip(params, grads, self.vel):
            v *= self.mu
            v -= self.lr * g
            p += v


def make_optimizer(params, config: TrainConfig):
    if config.optimizer == "adam":
        return Adam(params, config.learning_rate, config.beta1, config.beta2, config.eps)
    return SGDMomentum(params, config.learning_rate, config.momentum)


def split_indices(n: int, fraction: float, seed: int):
    """Seeded shuffle; the first round(fraction*n) rows go to validation."""
    perm = np.random.default_rng([seed, 2]).permutation(n)
    n_val = min(max(1, int(round(fraction * n))), n - 1)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def fit(params: Sequence[np.ndarray],
        loss_and_grads: Callable[[np.ndarray], tuple],
        val_loss: Callable[[], float],
        n_train: int,
        config: TrainConfig,
        verbose: bool = False):
    """Optimize ``params`` in place; restore the best-validation values.

    ``loss_and_grads(batch_idx)`` returns (loss, grads) for a batch of
    training rows, ``val_loss()`` the current validation loss.
    """
    opt = make_optimizer(params, config)
    rng = np.random.default_rng([config.seed, 3])
    history = History(initial_val=float(val_loss()))
    best = ref = history.initial_val
    best_params = [p.copy() for p in params]
    wait = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(n_train)
        total = 0.0
        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = loss_and_grads(idx)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"non-finite training loss at epoch {epoch}", epoch=epoch)
            total += loss * len(idx)
            opt.step(params, grads)
        v = float(val_loss())
        if not np.isfinite(v):
            raise NonFiniteLoss(f"non-finite validation loss at epoch {epoch}", epoch=epoch)
        history.train_loss.append(total / n_train)
        history.val_loss.append(v)
        if verbose:
            log.info("epoch %d train %.6g val %.6g", epoch, total / n_train, v)
        if v < best:
            best = v
            best_params = [p.copy() for p in params]
            history.best_epoch = epoch
        # patience counts epochs without a min_delta improvement
        if v < ref - config.min_delta:
            ref = v
            wait = 0
        else:
            wait += 1
            if wait >= config.patience:
                break
    for p, b in zip(params, best_params):
        p[...] = b
    return history
