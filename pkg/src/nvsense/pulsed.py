"""
pi-pulse ODMR.

Each member starts in |0> and is driven for the fixed duration
``T_p = pi / Omega_R`` set by the *intended* Rabi frequency, so members with
``alpha_i < 1`` or a detuning receive an imperfect rotation.  The spectrum is
the ensemble contrast versus drive offset; its steepest flank gives C'.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spin
from .ensemble import Ensemble, EnsembleMember, ensemble_average
from .slopes import SlopeResult, max_abs_slope
from .units import TWO_PI

DEFAULT_F_GRID = np.linspace(-8.0, 8.0, 1601)
DEFAULT_OMEGA_R_GRID = np.geomspace(0.1, 5.0, 25)


@dataclass(frozen=True, eq=False)
class PulsedOdmrParams:
    omega_r: float  # MHz
    f_grid: np.ndarray = field(default_factory=lambda: DEFAULT_F_GRID.copy())  # MHz offsets from f0
    gamma_pure: float = 0.0  # 1/us
    dephasing_form: str = spin.TRACE_PRESERVING

    def __post_init__(self):
        if not self.omega_r > 0:
            raise ValueError(f"omega_r must be > 0, got {self.omega_r}")
        f = np.asarray(self.f_grid, dtype=float)
        if f.ndim != 1 or f.size == 0:
            raise ValueError("f_grid must be a non-empty 1-D array")
        if np.any(np.diff(f) <= 0):
            raise ValueError("f_grid must be strictly increasing")
        if self.gamma_pure < 0:
            raise ValueError("gamma_pure must be >= 0")
        object.__setattr__(self, "f_grid", f)
        object.__setattr__(
            self, "dephasing_form", spin.canonical_dephasing_form(self.dephasing_form)
        )

    @property
    def pulse_duration(self) -> float:
        """pi pulse length in us."""
        return 0.5 / self.omega_r


@dataclass(frozen=True, eq=False)
class Spectrum:
    f_grid: np.ndarray
    contrast: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.f_grid, dtype=float)
        c = np.asarray(self.contrast, dtype=float)
        if f.ndim != 1 or f.shape != c.shape:
            raise ValueError("f_grid and contrast must be 1-D of equal length")
        object.__setattr__(self, "f_grid", f)
        object.__setattr__(self, "contrast", c)


def _member_grid(delta_mhz, alpha, omega_r, f_mhz, t_p, gamma_pure, form):
    delta = TWO_PI * (np.asarray(delta_mhz, dtype=float)[:, None] - np.asarray(f_mhz, dtype=float)[None, :])
    rabi = TWO_PI * omega_r * np.asarray(alpha, dtype=float)[:, None]
    if gamma_pure > 0:
        s = spin.superpropagator(delta, np.broadcast_to(rabi, delta.shape), gamma_pure, t_p, form)
        return s[..., 3, 0].real
    return spin.transition_probability(delta, rabi, t_p)


def pi_pulse_member_contrast(member: EnsembleMember, params: PulsedOdmrParams, f_mw_offset: float) -> float:
    """Contrast of one member after a single pi pulse at drive offset ``f_mw_offset`` (MHz)."""
    delta = TWO_PI * (member.delta_i - f_mw_offset)
    drive = spin.DriveSettings(
        delta, TWO_PI * member.alpha_i * params.omega_r, params.gamma_pure, params.dephasing_form
    )
    if params.gamma_pure > 0:
        out = spin.evolve_density(spin.DensityMatrix2.ground(), drive, params.pulse_duration)
    else:
        out = spin.evolve_pure(spin.SpinState.ground(), drive, params.pulse_duration)
    return spin.contrast(out)


def member_spectra(ensemble: Ensemble, params: PulsedOdmrParams) -> np.ndarray:
    """Per-member contrast, shape (members, len(f_grid))."""
    return _member_grid(
        ensemble.delta_mhz,
        ensemble.alpha,
        params.omega_r,
        params.f_grid,
        params.pulse_duration,
        params.gamma_pure,
        params.dephasing_form,
    )


def pulsed_spectrum(ensemble: Ensemble, params: PulsedOdmrParams) -> Spectrum:
    c = ensemble_average(member_spectra(ensemble, params), ensemble.weights, axis=0)
    return Spectrum(
        params.f_grid,
        c,
        {
            "scheme": "pulsed",
            "omega_r_mhz": params.omega_r,
            "gamma_pure_per_us": params.gamma_pure,
            "l_ihb_mhz": ensemble.l_ihb,
            "l_dav": ensemble.l_dav,
        },
    )


def pulsed_max_slope(spectrum: Spectrum) -> SlopeResult:
    """Steepest flank of a spectrum by interior central differences."""
    if spectrum.f_grid.size < 3:
        raise ValueError("spectrum needs at least 3 points for a slope")
    slope, f_at = max_abs_slope(spectrum.f_grid, spectrum.contrast)
    return SlopeResult(
        slope_per_mhz=slope,
        omega_r=spectrum.metadata.get("omega_r_mhz"),
        auxiliary={"f_at_max_mhz": f_at},
    )


def optimize_pulsed(
    ensemble: Ensemble,
    omega_r_grid=DEFAULT_OMEGA_R_GRID,
    f_grid=DEFAULT_F_GRID,
    gamma_pure: float = 0.0,
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> SlopeResult:
    """Scan the Rabi frequency; the steepest spectrum wins, ties going to the smaller Omega_R."""
    grid = np.sort(np.asarray(omega_r_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("omega_r grid is empty")
    f_grid = np.asarray(f_grid, dtype=float)
    best = None
    slopes = []
    for om in grid:
        spec = pulsed_spectrum(ensemble, PulsedOdmrParams(float(om), f_grid, gamma_pure, dephasing_form))
        res = pulsed_max_slope(spec)
        slopes.append(res.slope_per_mhz)
        if best is None or res.slope_per_mhz > best.slope_per_mhz:
            best = res
    return SlopeResult(
        slope_per_mhz=best.slope_per_mhz,
        omega_r=best.omega_r,
        auxiliary={
            "f_at_max_mhz": best.auxiliary["f_at_max_mhz"],
            "omega_r_grid": [float(x) for x in grid],
            "slopes": [float(s) for s in slopes],
        },
    )
