"""Skorokhod reflection of discretized net-input paths.

A storage or inventory level started at ``z0 >= 0`` and fed by a net input
``Y`` is the reflection of ``z0 + Y`` at the origin:

    Z(t) = z0 + Y(t) - min(0, inf_{s<=t} (z0 + Y(s)))

On a grid this is one running minimum, no iteration.  The same array also
yields the regulator (cumulative pushing at zero), the running maximum and
first-passage indices, which is all the Monte Carlo layer needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "SamplePath",
    "ReflectedPath",
    "reflect",
    "running_max",
    "first_passage_index",
]


@dataclass(frozen=True)
class SamplePath:
    """Net input sampled on a time grid.

    ``times`` must be strictly increasing and start at 0; ``values`` holds
    Y(t_i) with Y(0) = 0.  ``model`` records provenance when the path came
    out of a simulator and may be None for hand-built paths.
    """

    times: np.ndarray
    values: np.ndarray
    model: object = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or values.ndim != 1:
            raise ValueError("times and values must be one-dimensional")
        if times.shape != values.shape:
            raise ValueError(
                f"length mismatch: {times.shape[0]} times, {values.shape[0]} values"
            )
        if times.shape[0] == 0:
            raise ValueError("empty path")
        if times[0] != 0.0:
            raise ValueError("time grid must start at 0")
        if values[0] != 0.0:
            raise ValueError("net input must start at 0")
        if times.shape[0] > 1 and np.any(np.diff(times) <= 0.0):
            raise ValueError("time grid must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ReflectedPath:
    """Reflection of ``z0 + Y`` at zero.

    ``levels`` is Z(t_i); ``regulator`` is the cumulative amount added at
    the boundary, so levels = z0 + Y + regulator holds exactly.
    """

    path: SamplePath
    z0: float
    levels: np.ndarray
    regulator: np.ndarray


def reflect(path: SamplePath, z0: float) -> ReflectedPath:
    """Reflect the path at zero from initial level ``z0``."""
    if not np.isfinite(z0) or z0 < 0.0:
        raise ValueError(f"initial level must be finite and >= 0, got {z0}")
    shifted = path.values + z0
    # regulator(t) = max(0, -inf_{s<=t} shifted(s)); one running minimum.
    regulator = np.maximum(0.0, -np.minimum.accumulate(shifted))
    levels = shifted + regulator
    return ReflectedPath(path=path, z0=float(z0), levels=levels, regulator=regulator)


def running_max(reflected: ReflectedPath) -> np.ndarray:
    """Running maximum of the level, max_{j<=i} Z(t_j)."""
    return np.maximum.accumulate(reflected.levels)


def first_passage_index(reflected: ReflectedPath, u: float) -> Optional[int]:
    """Smallest grid index with Z(t_i) > u, or None if the level never
    exceeds ``u`` on the grid.  The comparison is strict, matching
    tau(u) = inf{t : Z(t) > u}."""
    if not np.isfinite(u):
        raise ValueError(f"threshold must be finite, got {u}")
    above = reflected.levels > u
    if not above.any():
        return None
    return int(np.argmax(above))
