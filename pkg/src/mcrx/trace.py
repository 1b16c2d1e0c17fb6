"""Uniformly sampled current record."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Trace:
    """Samples ``samples[k]`` taken at ``t0 + k * dt`` seconds.

    ``samples`` hold drain-source current in µA (or a dimensionless ratio for
    normalised traces); ``baseline`` is the resting current in µA.
    """

    t0: float
    dt: float
    samples: np.ndarray = field(repr=False)
    baseline: float = 0.0
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1:
            raise DataError("trace samples must be one-dimensional")
        if not self.dt > 0:
            raise DataError(f"sampling period must be positive, got {self.dt}")
        if not np.all(np.isfinite(arr)):
            raise DataError("trace contains non-finite samples")
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.dt * max(self.samples.size - 1, 0)

    def with_samples(self, samples, **changes) -> "Trace":
        return replace(self, samples=np.asarray(samples, dtype=float), **changes)
