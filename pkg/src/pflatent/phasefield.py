"""Cahn-Hilliard spinodal decomposition on a periodic grid.

Dynamics are dX/dt = M lap(g'(X) - kappa lap X). Time stepping is the
first-order semi-implicit spectral splitting: the stiff kappa term is
implicit, the bulk term g'(X) explicit. Mass is conserved exactly because
the update never touches the k=0 mode.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import NumericalBlowup
from .spectral import Field2D, GridSpec, WaveTable, wave_table

log = logging.getLogger(__name__)

POTENTIAL_FORMS = ("standard_double_well", "as_written")
BLOWUP_LIMIT = 10.0
DEFAULT_RANGES = {"x0": (0.25, 0.75), "mobility": (0.8, 2.2), "kappa": (0.25, 0.75)}

_MASK64 = (1 << 64) - 1


def mix_seed(base_seed: int, index: int) -> int:
    """splitmix64 finalizer applied to base + (index+1)*golden gamma."""
    z = (int(base_seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class PFParams:
    x0: float = 0.5
    mobility: float = 1.0
    kappa: float = 0.5
    barrier_a: float = 1.0
    dt: float = 0.01
    n_steps: int = 20000
    snapshot_stride: int = 200
    noise_amp: float = 0.05
    seed: int = 0
    potential_form: str = "standard_double_well"

    def __post_init__(self):
        if not 0.0 < self.x0 < 1.0:
            raise ValueError(f"x0 must lie in (0, 1), got {self.x0}")
        if self.mobility <= 0 or self.kappa <= 0 or self.dt <= 0:
            raise ValueError("mobility, kappa and dt must be positive")
        if self.n_steps < 1 or self.snapshot_stride < 1:
            raise ValueError("n_steps and snapshot_stride must be >= 1")
        if self.n_steps % self.snapshot_stride:
            raise ValueError(
                f"snapshot_stride {self.snapshot_stride} does not divide n_steps {self.n_steps}")
        if self.noise_amp < 0:
            raise ValueError("noise_amp must be >= 0")
        if not (0.0 < self.x0 - self.noise_amp and self.x0 + self.noise_amp < 1.0):
            raise ValueError("x0 +/- noise_amp must stay inside (0, 1)")
        if self.potential_form not in POTENTIAL_FORMS:
            raise ValueError(f"unknown potential_form {self.potential_form!r}")

    @property
    def n_frames(self) -> int:
        return self.n_steps // self.snapshot_stride


@dataclass
class Trajectory:
    params: PFParams
    grid: GridSpec
    frames: np.ndarray = field(repr=False)  # (n_frames, ny, nx), float64

    def __len__(self):
        return self.frames.shape[0]

    def frame(self, t: int) -> Field2D:
        return Field2D(self.grid, self.frames[t])


@dataclass(frozen=True)
class SweepSpec:
    n_samples: int
    grid: GridSpec
    x0_range: tuple = DEFAULT_RANGES["x0"]
    mobility_range: tuple = DEFAULT_RANGES["mobility"]
    kappa_range: tuple = DEFAULT_RANGES["kappa"]
    base_seed: int = 0
    dt: float = 0.01
    n_steps: int = 20000
    snapshot_stride: int = 200
    noise_amp: float = 0.05
    barrier_a: float = 1.0
    potential_form: str = "standard_double_well"

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        for name in ("x0_range", "mobility_range", "kappa_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} has min > max")
        # validates the shared numerics and both corners of the box
        self.params_for(self.x0_range[0], self.mobility_range[0], self.kappa_range[0], 0)
        self.params_for(self.x0_range[1], self.mobility_range[1], self.kappa_range[1], 0)

    def params_for(self, x0, mobility, kappa, seed) -> PFParams:
        return PFParams(
            x0=float(x0), mobility=float(mobility), kappa=float(kappa),
            barrier_a=self.barrier_a, dt=self.dt, n_steps=self.n_steps,
            snapshot_stride=self.snapshot_stride, noise_amp=self.noise_amp,
            seed=seed, potential_form=self.potential_form,
        )

    def sample_params(self, index: int) -> PFParams:
        seed = mix_seed(self.base_seed, index)
        rng = np.random.default_rng([seed, 1])
        x0 = rng.uniform(*self.x0_range)
        m = rng.uniform(*self.mobility_range)
        k = rng.uniform(*self.kappa_range)
        return self.params_for(x0, m, k, seed)


@dataclass
class SampleRecord:
    sample_id: int
    params: PFParams
    status: str = "ok"
    error: str = ""


def init_field(grid: GridSpec, x0: float, noise_amp: float, seed: int) -> Field2D:
    """Uniform noise around x0, shifted so the field mean is x0."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-noise_amp, noise_amp, size=grid.shape)
    u -= u.mean()
    return Field2D(grid, x0 + u)


def bulk_energy(x, a: float, form: str = "standard_double_well"):
    if form == "standard_double_well":
        return a * x**2 * (1.0 - x) ** 2
    if form == "as_written":
        return a * x**2 * (1.0 - x**2)
    raise ValueError(f"unknown potential form {form!r}")


def bulk_potential_derivative(x, a: float, form: str = "standard_double_well"):
    """g'(X); works on scalars and arrays."""
    if form == "standard_double_well":
        return 2.0 * a * x * (1.0 - x) * (1.0 - 2.0 * x)
    if form == "as_written":
        return 2.0 * a * x - 4.0 * a * x**3
    raise ValueError(f"unknown potential form {form!r}")


class _Stepper:
    """Precomputed real-to-complex update factors for one (params, grid)."""

    def __init__(self, params: PFParams, grid: GridSpec, wt: Optional[WaveTable] = None):
        wt = wt if wt is not None else wave_table(grid)
        half = grid.nx // 2 + 1
        k2 = wt.k2[:, :half]
        k4 = wt.k4[:, :half]
        self.shape = grid.shape
        self.a = params.barrier_a
        self.form = params.potential_form
        self.num = params.dt * params.mobility * k2
        self.den = 1.0 + params.dt * params.mobility * params.kappa * k4

    def __call__(self, x: np.ndarray) -> np.ndarray:
        g = bulk_potential_derivative(x, self.a, self.form)
        xh = np.fft.rfft2(x)
        xh -= self.num * np.fft.rfft2(g)
        xh /= self.den
        return np.fft.irfft2(xh, s=self.shape)


def _check(x: np.ndarray, step) -> None:
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP_LIMIT:
        raise NumericalBlowup(f"solution diverged at step {step}", step=step)


def step_semi_implicit(f: Field2D, params: PFParams, wt: Optional[WaveTable] = None) -> Field2D:
    x = _Stepper(params, f.grid, wt)(f.values)
    _check(x, None)
    return Field2D(f.grid, x)


def free_energy(f: Field2D, params: PFParams) -> float:
    """Total free energy with periodic forward-difference gradients.

    Central differences are blind to the grid-scale noise the solver damps
    first, so they can report an energy rise during the first steps.
    """
    x = f.values
    g = f.grid
    gx = (np.roll(x, -1, axis=1) - x) / g.dx
    gy = (np.roll(x, -1, axis=0) - x) / g.dy
    dens = bulk_energy(x, params.barrier_a, params.potential_form) \
        + 0.5 * params.kappa * (gx * gx + gy * gy)
    return float(dens.sum() * g.dx * g.dy)


def simulate(params: PFParams, grid: GridSpec,
             on_step: Optional[Callable[[int, np.ndarray], None]] = None) -> Trajectory:
    """Run the solver, storing a frame after every ``snapshot_stride`` steps.

    ``on_step(step, x)`` is called with the initial state (step 0) and after
    every step; it must not modify ``x``.
    """
    stepper = _Stepper(params, grid)
    x = init_field(grid, params.x0, params.noise_amp, params.seed).values
    frames = np.empty((params.n_frames,) + grid.shape)
    if on_step is not None:
        on_step(0, x)
    for n in range(1, params.n_steps + 1):
        x = stepper(x)
        _check(x, n)
        if on_step is not None:
            on_step(n, x)
        if n % params.snapshot_stride == 0:
            frames[n // params.snapshot_stride - 1] = x
    return Trajectory(params, grid, frames)


def _run_sample(args):
    index, params, grid = args
    try:
        return index, simulate(params, grid), ""
    except NumericalBlowup as exc:
        return index, None, str(exc)


def generate_dataset(sweep: SweepSpec, jobs: int = 1, skip: frozenset = frozenset(),
                     on_result: Optional[Callable] = None):
    """Simulate every sample of a sweep.

    Returns ``(trajectories, records)`` ordered by sample index; a failed or
    skipped sample has ``None`` in ``trajectories``. Samples in ``skip`` are
    not simulated and get status ``skipped``. ``on_result(record, traj)`` is
    called as each sample completes (in index order).
    """
    params = [sweep.sample_params(i) for i in range(sweep.n_samples)]
    todo = [(i, params[i], sweep.grid) for i in range(sweep.n_samples) if i not in skip]
    trajectories = [None] * sweep.n_samples
    records = [SampleRecord(i, p, status="skipped" if i in skip else "ok")
               for i, p in enumerate(params)]

    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_run_sample, todo)
            _collect(results, trajectories, records, on_result)
    else:
        _collect(map(_run_sample, todo), trajectories, records, on_result)
    return trajectories, records


def _collect(results, trajectories, records, on_result):
    for index, traj, err in results:
        if traj is None:
            records[index].status = "failed"
            records[index].error = err
            log.warning("sample %d failed: %s", index, err)
        trajectories[index] = traj
        if on_result is not None:
            on_result(records[index], traj)


def reference_params(**overrides) -> PFParams:
    """The (0.5, 1.0, 0.5) configuration used for solver checks."""
    return replace(PFParams(), **overrides)
