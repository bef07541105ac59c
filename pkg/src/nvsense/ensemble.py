"""
Ensemble construction and averaging.

A synthetic ensemble is the Cartesian product of a transition-offset grid and a
drive-amplitude grid:

* offsets ``delta_i`` (MHz) are midpoint quantiles of a Gaussian of FWHM
  ``l_ihb`` truncated to ``[-l_ihb, +l_ihb]``;
* amplitude ratios ``alpha_i`` are evenly spaced over ``[1 - l_dav, 1]``.

Every member carries the same weight, so the ensemble contrast is the plain
mean of the member contrasts.  Measured offset histograms are loaded from a
two-column CSV and may carry arbitrary non-negative weights.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy.stats import norm

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

DEFAULT_N_DELTA = 41
DEFAULT_N_ALPHA = 21


class DistributionLoadError(ValueError):
    """Base class for problems reading a measured offset distribution."""


class DistributionFileNotFound(DistributionLoadError, FileNotFoundError):
    pass


class MalformedDistributionRow(DistributionLoadError):
    pass


class NegativeWeightError(DistributionLoadError):
    pass


class EmptyDistributionError(DistributionLoadError):
    pass


@dataclass(frozen=True)
class EnsembleMember:
    delta_i: float  # MHz
    alpha_i: float
    weight: float


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Immutable member collection stored as parallel arrays.

    ``delta_mhz``, ``alpha`` and ``weights`` all have one entry per member.
    """

    delta_mhz: np.ndarray
    alpha: np.ndarray
    weights: np.ndarray
    l_ihb: float
    l_dav: float
    source: str = "synthetic"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("delta_mhz", "alpha", "weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.delta_mhz.shape[0]
        if self.alpha.shape != (n,) or self.weights.shape != (n,):
            raise ValueError("delta_mhz, alpha and weights must be 1-D arrays of equal length")
        if n == 0:
            raise ValueError("ensemble must contain at least one member")
        if np.any(self.alpha <= 0) or np.any(self.alpha > 1):
            raise ValueError("alpha values must lie in (0, 1]")
        if np.any(self.weights < 0):
            raise ValueError("weights must be non-negative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    def __len__(self) -> int:
        return self.delta_mhz.shape[0]

    def __iter__(self) -> Iterator[EnsembleMember]:
        return iter(self.members)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ensemble):
            return NotImplemented
        return (
            np.array_equal(self.delta_mhz, other.delta_mhz)
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.weights, other.weights)
            and self.l_ihb == other.l_ihb
            and self.l_dav == other.l_dav
            and self.source == other.source
        )

    @property
    def members(self) -> list[EnsembleMember]:
        return [
            EnsembleMember(float(d), float(a), float(w))
            for d, a, w in zip(self.delta_mhz, self.alpha, self.weights)
        ]

    def mean_delta(self) -> float:
        return math.fsum(self.weights * self.delta_mhz)

    def delta_variance(self) -> float:
        mu = self.mean_delta()
        return math.fsum(self.weights * (self.delta_mhz - mu) ** 2)

    def fingerprint(self) -> dict:
        """JSON-friendly identity used for cache keys."""
        return {
            "delta_mhz": [float(x).hex() for x in self.delta_mhz],
            "alpha": [float(x).hex() for x in self.alpha],
            "weights": [float(x).hex() for x in self.weights],
        }


def gaussian_offsets(l_ihb: float, n_delta: int) -> np.ndarray:
    """Midpoint quantiles ``(k - 0.5)/n`` of a Gaussian with FWHM ``l_ihb`` truncated to ``+-l_ihb``."""
    if l_ihb == 0:
        return np.zeros(1)
    sigma = l_ihb * FWHM_TO_SIGMA
    lo = norm.cdf(-l_ihb / sigma)
    hi = norm.cdf(l_ihb / sigma)
    u = lo + (np.arange(1, n_delta + 1) - 0.5) / n_delta * (hi - lo)
    d = sigma * norm.ppf(u)
    # enforce exact mirror symmetry so the mean is zero to round-off
    d = 0.5 * (d - d[::-1])
    return np.clip(d, -l_ihb, l_ihb)


def alpha_grid(l_dav: float, n_alpha: int) -> np.ndarray:
    if l_dav == 0:
        return np.ones(1)
    return np.linspace(1.0 - l_dav, 1.0, n_alpha)


def _check_l_dav(l_dav: float) -> None:
    if not 0 <= l_dav < 1:
        raise ValueError(f"l_dav must lie in [0, 1), got {l_dav}")


def _product(deltas, delta_weights, alphas) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = np.repeat(deltas, len(alphas))
    a = np.tile(alphas, len(deltas))
    w = np.repeat(delta_weights, len(alphas)) / len(alphas)
    return d, a, w


def build_ensemble(
    l_ihb: float,
    l_dav: float = 0.0,
    n_delta: int = DEFAULT_N_DELTA,
    n_alpha: int = DEFAULT_N_ALPHA,
) -> Ensemble:
    """Synthetic ensemble for broadening ``l_ihb`` (MHz) and drive variation ``l_dav``.

    Degenerate levels collapse their grid to a single point: ``l_ihb = 0`` gives
    ``delta = 0`` and ``l_dav = 0`` gives ``alpha = 1``.
    """
    if l_ihb < 0:
        raise ValueError(f"l_ihb must be >= 0, got {l_ihb}")
    _check_l_dav(l_dav)
    if n_delta < 1 or n_alpha < 1:
        raise ValueError("n_delta and n_alpha must be >= 1")
    deltas = gaussian_offsets(float(l_ihb), int(n_delta))
    alphas = alpha_grid(float(l_dav), int(n_alpha))
    d, a, w = _product(deltas, np.full(len(deltas), 1.0 / len(deltas)), alphas)
    return Ensemble(d, a, w, float(l_ihb), float(l_dav), "synthetic")


def ensemble_average(values, weights, axis: int = 0) -> np.ndarray:
    """Weighted mean of an array of member values along ``axis`` (fixed summation order)."""
    values = np.asarray(values, dtype=float)
    values = np.moveaxis(values, axis, -1)
    return values @ np.asarray(weights, dtype=float)


def ensemble_contrast(per_member, ensemble: Ensemble) -> float:
    """Weighted ensemble mean of per-member contrasts, using compensated summation."""
    c = np.asarray(per_member, dtype=float)
    if c.shape != (len(ensemble),):
        raise ValueError(
            f"expected {len(ensemble)} member contrasts, got shape {c.shape}"
        )
    return math.fsum(c * ensemble.weights)


def _parse_rows(path: Path) -> list[tuple[float, float]]:
    rows = []
    first = True
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in raw]
            if not cells or all(not c for c in cells) or cells[0].startswith("#"):
                continue
            is_first, first = first, False
            if len(cells) != 2:
                raise MalformedDistributionRow(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
            try:
                delta, weight = float(cells[0]), float(cells[1])
            except ValueError:
                if is_first:
                    continue  # header
                raise MalformedDistributionRow(f"{path}:{lineno}: non-numeric row {raw!r}") from None
            if not (math.isfinite(delta) and math.isfinite(weight)):
                raise MalformedDistributionRow(f"{path}:{lineno}: non-finite value")
            if weight < 0:
                raise NegativeWeightError(f"{path}:{lineno}: negative weight {weight}")
            rows.append((delta, weight))
    return rows


def load_measured_distribution(path, l_dav: float = 0.0, n_alpha: int = DEFAULT_N_ALPHA) -> Ensemble:
    """Ensemble from a ``delta_mhz,weight`` CSV with the usual amplitude grid attached.

    An optional header row and ``#`` comment lines are skipped.  Weights are
    normalised to sum to one.
    """
    path = Path(path)
    _check_l_dav(l_dav)
    if not path.is_file():
        raise DistributionFileNotFound(f"distribution file not found: {path}")
    rows = _parse_rows(path)
    if not rows:
        raise EmptyDistributionError(f"{path}: no data rows")
    deltas = np.array([r[0] for r in rows])
    weights = np.array([r[1] for r in rows])
    total = math.fsum(weights)
    if total <= 0:
        raise EmptyDistributionError(f"{path}: weights sum to zero")
    weights = weights / total
    alphas = alpha_grid(float(l_dav), int(n_alpha))
    d, a, w = _product(deltas, weights, alphas)
    # re-normalise away the last ulp so the sum invariant holds to 1e-12
    w = w / math.fsum(w)
    l_ihb = float(np.max(np.abs(deltas)))
    return Ensemble(d, a, w, l_ihb, float(l_dav), "measured", {"path": str(path)})
