"""Training data container shared by the MOS and NGR fitters.

A training set is an ordered sequence of (ensemble mean, ensemble
variance, observation) triples.  MOS ignores the variances; NGR uses
them.  Ordering matters for rolling-window cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = ["TrainingSet"]


@dataclass(frozen=True)
class TrainingSet:
    """Ordered (m, v, y) triples with m the ensemble mean, v the
    ensemble variance and y the verifying observation."""

    m: np.ndarray
    v: np.ndarray
    y: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        v = np.asarray(self.v, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if not (m.ndim == v.ndim == y.ndim == 1):
            raise InputError("m, v, y must be one-dimensional")
        if not (m.shape == v.shape == y.shape):
            raise InputError(
                f"length mismatch: m has {m.shape[0]}, v has {v.shape[0]}, "
                f"y has {y.shape[0]}"
            )
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(v)) and np.all(np.isfinite(y))):
            raise InputError("m, v, y must be finite")
        if np.any(v < 0.0):
            raise InputError("ensemble variances must be non-negative")
        for name, arr in (("m", m), ("v", v), ("y", y)):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        object.__setattr__(self, "n", m.shape[0])

    @classmethod
    def from_records(cls, records) -> "TrainingSet":
        """Build from an iterable of (m, v, y) triples."""
        arr = np.array(list(records), dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InputError("records must be (m, v, y) triples")
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def subset(self, idx) -> "TrainingSet":
        """New TrainingSet from an index array (order preserved)."""
        return TrainingSet(self.m[idx], self.v[idx], self.y[idx])

    def n_distinct_m(self) -> int:
        return int(np.unique(self.m).size)
