"""Frame flattening and the two-stage reduction chain (AE -> AE or AE -> PCA)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import DimensionMismatch
from .autoencoder import AEModel
from .pca import PCAModel, pca_inverse, pca_transform
from .scaling import ScalerModel


def flatten_frame(frame, channels: int = 1) -> np.ndarray:
    """Row-major flatten; channels=3 repeats each pixel value three times."""
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    values = getattr(frame, "values", frame)
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    return np.repeat(v, channels) if channels == 3 else v


def flatten_frames(frames, channels: int = 1) -> np.ndarray:
    """[..., ny, nx] -> [N, ny*nx*channels]."""
    f = np.asarray(frames, dtype=np.float64)
    rows = f.reshape(-1, f.shape[-2] * f.shape[-1])
    return np.repeat(rows, channels, axis=1) if channels == 3 else rows


def unflatten_frames(rows, shape, channels: int = 1) -> np.ndarray:
    """Inverse of flatten_frames; the channel copies are averaged."""
    ny, nx = shape
    r = np.asarray(rows, dtype=np.float64)
    if r.shape[-1] != ny * nx * channels:
        raise DimensionMismatch(f"rows of width {r.shape[-1]} do not match {shape}x{channels}")
    if channels == 3:
        c = r.reshape(r.shape[:-1] + (ny * nx, 3))
        # offset form keeps replicated channels bit-exact
        r = c[..., 0] + ((c[..., 1] - c[..., 0]) + (c[..., 2] - c[..., 0])) / 3.0
    return r.reshape(r.shape[:-1] + (ny, nx))


@dataclass(frozen=True)
class PCAStage:
    scaler: ScalerModel
    pca: PCAModel

    @property
    def input_dim(self):
        return self.pca.n_features

    @property
    def code_dim(self):
        return self.pca.n_components

    def encode(self, x):
        return pca_transform(self.pca, self.scaler.apply(x))

    def decode(self, c):
        return self.scaler.invert(pca_inverse(self.pca, c))


Stage2 = Union[AEModel, PCAStage]


@dataclass
class ReductionPipeline:
    stage1: AEModel
    stage2: Stage2
    clamp: bool = True  # clip decoded images to [0, 1]

    @property
    def input_dim(self) -> int:
        return self.stage1.input_dim

    @property
    def code_dim(self) -> int:
        return self.stage2.code_dim

    @property
    def reduction_ratio(self) -> float:
        return self.input_dim / self.code_dim

    def encode(self, x):
        return self.stage2.encode(self.stage1.encode(x))

    def decode(self, codes):
        out = self.stage1.decode(self.stage2.decode(codes))
        return np.clip(out, 0.0, 1.0) if self.clamp else out

    def stage_residuals(self, x) -> dict:
        """MSE of each stage measured in image space, plus end to end.

        stage1: x vs D1(E1(x)); stage2: D1(E1(x)) vs D1(D2(E2(E1(x)))).
        """
        x = np.asarray(x, dtype=np.float64)
        h1 = self.stage1.encode(x)
        r1 = self.stage1.decode(h1)
        r12 = self.stage1.decode(self.stage2.decode(self.stage2.encode(h1)))
        if self.clamp:
            r1 = np.clip(r1, 0.0, 1.0)
            r12 = np.clip(r12, 0.0, 1.0)
        return {
            "stage1": float(np.mean((x - r1) ** 2)),
            "stage2": float(np.mean((r1 - r12) ** 2)),
            "end_to_end": float(np.mean((x - r12) ** 2)),
        }


def compose_pipeline(stage1: AEModel, stage2: Stage2, clamp: bool = True) -> ReductionPipeline:
    if stage1.code_dim != stage2.input_dim:
        raise DimensionMismatch(
            f"stage-1 code width {stage1.code_dim} != stage-2 input width {stage2.input_dim}")
    return ReductionPipeline(stage1, stage2, clamp)


def format_ratio(ratio: float) -> str:
    """Report a reduction ratio the way it is usually quoted, e.g. '1/196'."""
    return f"1/{int(ratio)}"
