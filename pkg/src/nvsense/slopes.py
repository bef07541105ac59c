"""Slope extraction shared by the three sensing schemes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SlopeResult:
    """Optimised slope C' in normalised contrast per MHz of drive frequency.

    Only the fields meaningful for the producing scheme are set; the rest stay
    ``None``.  ``auxiliary`` carries optimiser diagnostics (plain JSON types).
    """

    slope_per_mhz: float
    chosen_detuning: Optional[float] = None  # MHz
    tau_opt: Optional[float] = None  # us
    q_max: Optional[float] = None
    omega_r: Optional[float] = None  # MHz
    gamma_p: Optional[float] = None
    auxiliary: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.slope_per_mhz >= 0:
            raise ValueError(f"slope must be a non-negative magnitude, got {self.slope_per_mhz}")

    def to_dict(self) -> dict:
        return {
            "slope_per_mhz": self.slope_per_mhz,
            "chosen_detuning": self.chosen_detuning,
            "tau_opt": self.tau_opt,
            "q_max": self.q_max,
            "omega_r": self.omega_r,
            "gamma_p": self.gamma_p,
            "auxiliary": self.auxiliary,
        }


def central_differences(x, y, axis: int = -1) -> np.ndarray:
    """Interior central differences ``(y[i+1] - y[i-1]) / (x[i+1] - x[i-1])`` along ``axis``.

    The result has two fewer samples than ``y`` along ``axis``; endpoints are
    not estimated.
    """
    x = np.asarray(x, dtype=float)
    y = np.moveaxis(np.asarray(y, dtype=float), axis, -1)
    if x.ndim != 1 or x.shape[0] != y.shape[-1]:
        raise ValueError("x must be 1-D and match y along the differentiation axis")
    if x.shape[0] < 3:
        raise ValueError("central differences need at least 3 samples")
    d = (y[..., 2:] - y[..., :-2]) / (x[2:] - x[:-2])
    return np.moveaxis(d, -1, axis)


def max_abs_slope(x, y, axis: int = -1):
    """Largest ``|dy/dx|`` from interior central differences, and the abscissa where it occurs.

    Ties resolve to the first (smallest-index) sample.
    """
    d = np.abs(central_differences(x, y, axis))
    if d.ndim == 1:
        i = int(np.argmax(d))
        return float(d[i]), float(np.asarray(x)[i + 1])
    return d.max(axis=axis)
