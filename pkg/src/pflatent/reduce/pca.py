"""Principal component analysis through the SVD of the centered data."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, RankDeficientWarning


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray          # (m,)
    components: np.ndarray    # (k, m), orthonormal rows
    eigenvalues: np.ndarray   # (k,), descending
    total_variance: float     # sum over all m eigenvalues of the covariance
    n_samples: int = 0

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.components.shape[1]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance <= 0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / self.total_variance


def pca_fit(data, n_components: int) -> PCAModel:
    """Top eigenvectors of C = (Z - mean)^T (Z - mean) / (n - 1)."""
    z = np.asarray(data, dtype=np.float64)
    if z.ndim != 2:
        raise DimensionMismatch("pca_fit needs an [n x m] matrix")
    n, m = z.shape
    if n < 2:
        raise ValueError("pca_fit needs at least 2 samples")
    if not 1 <= n_components <= min(n - 1, m):
        raise ValueError(f"n_components must be in [1, {min(n - 1, m)}], got {n_components}")
    mean = z.mean(axis=0)
    _, s, vt = np.linalg.svd(z - mean, full_matrices=False)
    lam = s**2 / (n - 1)
    total = float(lam.sum())
    vt = vt[:n_components]
    # fix the sign so the largest-magnitude loading of each component is positive
    pivot = np.argmax(np.abs(vt), axis=1)
    vt = vt * np.sign(vt[np.arange(n_components), pivot])[:, None]
    lam_k = lam[:n_components]
    if lam_k[-1] < 1e-12 * lam[0]:
        warnings.warn(f"requested {n_components} components exceed the numerical rank",
                      RankDeficientWarning, stacklevel=2)
    return PCAModel(mean, vt, lam_k, total, n)


def _check(model: PCAModel, x, width: int, what: str):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != width:
        raise DimensionMismatch(f"{what} expects width {width}, got {x.shape[-1]}")
    return x


def pca_transform(model: PCAModel, data):
    x = _check(model, data, model.n_features, "pca_transform")
    return (x - model.mean) @ model.components.T


def pca_inverse(model: PCAModel, codes):
    c = _check(model, codes, model.n_components, "pca_inverse")
    return c @ model.components + model.mean
