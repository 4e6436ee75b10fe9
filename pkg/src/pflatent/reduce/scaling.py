"""Per-feature min-max and z-score scaling."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, ZeroSpreadWarning

SCALER_KINDS = ("minmax", "zscore")


@dataclass(frozen=True)
class ScalerModel:
    kind: str
    offset: np.ndarray  # min (minmax) or mean (zscore)
    scale: np.ndarray   # max - min (minmax) or population std (zscore)
    zero_spread: np.ndarray  # bool mask, these features pass through

    @property
    def n_features(self) -> int:
        return self.offset.shape[0]

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_features:
            raise DimensionMismatch(f"scaler expects {self.n_features} features, got {x.shape[-1]}")
        return x

    def apply(self, x):
        x = self._check(x)
        return np.where(self.zero_spread, x, (x - self.offset) / self._safe_scale)

    def invert(self, y):
        y = self._check(y)
        return np.where(self.zero_spread, y, y * self._safe_scale + self.offset)

    @property
    def _safe_scale(self):
        return np.where(self.zero_spread, 1.0, self.scale)


def fit_scaler(data, kind: str = "minmax") -> ScalerModel:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("fit_scaler needs a non-empty [n x m] matrix")
    if kind == "minmax":
        offset = x.min(axis=0)
        scale = x.max(axis=0) - offset
    elif kind == "zscore":
        offset = x.mean(axis=0)
        scale = x.std(axis=0)
    else:
        raise ValueError(f"unknown scaler kind {kind!r}")
    zero = scale <= 0.0
    if zero.any():
        warnings.warn(f"{int(zero.sum())} feature(s) have zero spread and are passed through",
                      ZeroSpreadWarning, stacklevel=2)
    return ScalerModel(kind, offset, scale, zero)
