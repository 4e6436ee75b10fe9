"""Error measures, explained-variance tables, baselines and run reports."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .reduce.pca import PCAModel


def mse(a, b) -> float:
    """Mean of squared elementwise differences (averaged over every element)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    d = a - b
    return float(np.mean(d * d))


def explained_variance_table(model: PCAModel) -> np.ndarray:
    """Cumulative explained-variance ratio for 1..n_components components."""
    return np.minimum(np.cumsum(model.explained_variance_ratio), 1.0)


def persistence_baseline(sample, context_len: int, horizon: int) -> np.ndarray:
    """Repeat the last context frame ``horizon`` times.

    ``sample`` is a [T x D] (or [B x T x D]) array of latent frames.
    """
    if context_len < 1:
        raise ValueError("context_len must be >= 1")
    x = np.asarray(sample, dtype=np.float64)
    last = x[..., context_len - 1:context_len, :]
    reps = [1] * x.ndim
    reps[-2] = horizon
    return np.tile(last, reps)


def linear_extrapolation_baseline(sample, context_len: int, horizon: int) -> np.ndarray:
    """Repeat the last observed step: x[c-1] + j * (x[c-1] - x[c-2]) for j = 1..horizon."""
    if context_len < 2:
        raise ValueError("context_len must be >= 2")
    x = np.asarray(sample, dtype=np.float64)
    last = x[..., context_len - 1:context_len, :]
    step = last - x[..., context_len - 2:context_len - 1, :]
    j = np.arange(1, horizon + 1, dtype=np.float64)[:, None]
    return last + j * step


@dataclass
class EvalReport:
    """Plain-text run report made of ``[section]`` blocks of key=value lines.

    Values are strings, ints or floats; floats are written with ``repr`` so
    they parse back exactly.
    """
    sections: dict = field(default_factory=dict)

    def set(self, section: str, key, value):
        self.sections.setdefault(section, {})[str(key)] = value
        return self

    def get(self, section: str, key, default=None):
        return self.sections.get(section, {}).get(str(key), default)

    def emit(self) -> str:
        lines = []
        for name, entries in self.sections.items():
            lines.append(f"[{name}]")
            for k, v in entries.items():
                lines.append(f"{k}={_fmt(v)}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str) -> "EvalReport":
        rep = cls()
        current = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                rep.sections.setdefault(current, {})
                continue
            if current is None or "=" not in line:
                raise ValueError(f"malformed report line: {raw!r}")
            k, v = line.split("=", 1)
            rep.sections[current][k] = _parse_value(v)
        return rep


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    s = str(v)
    if "\n" in s:
        raise ValueError("report values must be single-line")
    return s


def _parse_value(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def variance_report(report: EvalReport, model: PCAModel, section: str = "explained_variance"):
    for k, v in enumerate(explained_variance_table(model), start=1):
        report.set(section, k, float(v))
    return report
