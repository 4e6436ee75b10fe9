"""Periodic-grid Fourier transforms and wavenumber tables.

Convention used everywhere in the package: the forward transform is
unnormalized, the inverse divides by ``nx * ny``. Arrays are stored
row-major with shape ``(ny, nx)``, so element ``[j, i]`` is grid point
``(x_i, y_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ImaginaryResidueTooLarge

RESIDUE_LIMIT = 1e-6


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    dx: float = 1.0
    dy: float = 1.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {n}")
            if n % 2:
                raise ValueError(f"{name} must be even, got {n}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"grid spacing must be positive, got dx={self.dx}, dy={self.dy}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny


@dataclass(frozen=True)
class Field2D:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.size != self.grid.size:
            raise DimensionMismatch(f"expected {self.grid.size} values, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class Spectrum2D:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.size != self.grid.size:
            raise DimensionMismatch(f"expected {self.grid.size} modes, got {v.size}")
        object.__setattr__(self, "values", v.reshape(self.grid.shape))


@dataclass(frozen=True)
class WaveTable:
    k2: np.ndarray
    k4: np.ndarray


def wavenumbers(n: int, d: float) -> np.ndarray:
    """Angular wavenumbers 2*pi*f/(n*d) with f = 0..n/2, then -n/2+1..-1."""
    f = np.arange(n)
    f = np.where(f <= n // 2, f, f - n)
    return 2.0 * np.pi * f / (n * d)


def wave_table(grid: GridSpec) -> WaveTable:
    kx = wavenumbers(grid.nx, grid.dx)
    ky = wavenumbers(grid.ny, grid.dy)
    k2 = ky[:, None] ** 2 + kx[None, :] ** 2
    return WaveTable(k2=k2, k4=k2 * k2)


def dft2_forward(f: Field2D) -> Spectrum2D:
    return Spectrum2D(f.grid, np.fft.fft2(f.values))


def dft2_inverse(spec: Spectrum2D, *, with_residue: bool = False):
    """Normalized inverse transform, keeping the real part.

    Raises ImaginaryResidueTooLarge when the discarded imaginary part
    exceeds 1e-6, which means the spectrum was not conjugate-symmetric.
    With ``with_residue=True`` returns ``(field, max_abs_imag)``.
    """
    z = np.fft.ifft2(spec.values)
    residue = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if residue > RESIDUE_LIMIT:
        raise ImaginaryResidueTooLarge(f"max |Im| of inverse is {residue:.3e}")
    out = Field2D(spec.grid, z.real.copy())
    return (out, residue) if with_residue else out
