"""
Ramsey interferometry on an inhomogeneous ensemble.

Sequence per member: pi/2 pulse of duration ``pi / (2 Omega_R)`` at effective
Rabi frequency ``alpha_i Omega_R``, free precession for ``tau``, identical
second pulse, readout of the |1> population.  A static field ``B`` shifts the
total detuning of every step by ``2 pi gamma_e B`` (m_s = +1 branch).

The sweep engine exploits that free precession is diagonal in Liouville space:
after the first pulse and with the second pulse fixed, the readout is

    C(tau) = Re c00 e^{r00 tau} + Re c11 e^{r11 tau} + 2 Re(c01 e^{r01 tau})

with member coefficients ``c`` computed once, so a whole tau grid costs one
complex exponential per (member, tau).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spin
from .ensemble import Ensemble, EnsembleMember, ensemble_average
from .slopes import SlopeResult, central_differences
from .units import GAMMA_E_MHZ_PER_UT, TWO_PI

DEFAULT_TAU_GRID = np.linspace(0.0, 5.0, 1001)
DEFAULT_B_GRID = np.linspace(-3.6, 3.6, 49)
DEFAULT_DETUNING_GRID = np.linspace(0.0, 5.0, 51)

OBJECTIVES = ("q", "slope")


@dataclass(frozen=True)
class RamseyParams:
    omega_r: float  # MHz, intended Rabi frequency / 2 pi
    drive_detuning: float = 0.0  # MHz, f_MW - f0
    gamma_pure: float = 0.0  # 1/us
    tau: float = 0.0  # us
    dephasing_form: str = spin.TRACE_PRESERVING

    def __post_init__(self):
        if not self.omega_r > 0:
            raise ValueError(f"omega_r must be > 0, got {self.omega_r}")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.gamma_pure < 0:
            raise ValueError(f"gamma_pure must be >= 0, got {self.gamma_pure}")
        object.__setattr__(
            self, "dephasing_form", spin.canonical_dephasing_form(self.dephasing_form)
        )

    @property
    def pulse_duration(self) -> float:
        """pi/2 pulse length in us: pi / (2 * 2 pi omega_r)."""
        return 0.25 / self.omega_r


@dataclass(frozen=True, eq=False)
class FringeCurve:
    tau_grid: np.ndarray
    contrast: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        c = np.asarray(self.contrast, dtype=float)
        if tau.ndim != 1 or tau.shape != c.shape:
            raise ValueError("tau_grid and contrast must be 1-D of equal length")
        if tau.size > 1 and np.any(np.diff(tau) <= 0):
            raise ValueError("tau_grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "contrast", c)


def total_detuning(delta_mhz, drive_detuning_mhz, b_ut=0.0):
    """Total detuning in rad/us: 2 pi (delta_i - (f_MW - f0) + gamma_e B)."""
    return TWO_PI * (
        np.asarray(delta_mhz, dtype=float)
        - drive_detuning_mhz
        + GAMMA_E_MHZ_PER_UT * np.asarray(b_ut, dtype=float)
    )


# ---------------------------------------------------------------------------
# Reference (object-level) path
# ---------------------------------------------------------------------------

def ramsey_member_contrast(member: EnsembleMember, params: RamseyParams, b_field: float = 0.0) -> float:
    """Contrast of one member after the three-step sequence, composed step by step."""
    delta = float(total_detuning(member.delta_i, params.drive_detuning, b_field))
    rabi = TWO_PI * member.alpha_i * params.omega_r
    t_p = params.pulse_duration
    pulse = spin.DriveSettings(delta, rabi, params.gamma_pure, params.dephasing_form)
    free = spin.DriveSettings(delta, 0.0, params.gamma_pure, params.dephasing_form)
    if params.gamma_pure > 0:
        state = spin.DensityMatrix2.ground()
        for drive, t in ((pulse, t_p), (free, params.tau), (pulse, t_p)):
            state = spin.evolve_density(state, drive, t)
    else:
        state = spin.SpinState.ground()
        for drive, t in ((pulse, t_p), (free, params.tau), (pulse, t_p)):
            state = spin.evolve_pure(state, drive, t)
    return spin.contrast(state)


# ---------------------------------------------------------------------------
# Vectorised engine
# ---------------------------------------------------------------------------

def _readout_coefficients(delta, rabi, t_p, gamma_pure, form):
    """Coefficients ``c`` (shape (..., 4)) and free-precession rates ``r`` (..., 4)."""
    if gamma_pure > 0:
        s = spin.superpropagator(delta, rabi, gamma_pure, t_p, form)
        rho1 = s[..., :, 0]  # first pulse applied to |0><0|
        c = s[..., 3, :] * rho1
    else:
        u = spin.rabi_propagator(delta, rabi, t_p)
        u00, u10, u11 = u[..., 0, 0], u[..., 1, 0], u[..., 1, 1]
        rho1 = np.stack(
            [np.abs(u00) ** 2, u00 * np.conj(u10), u10 * np.conj(u00), np.abs(u10) ** 2], axis=-1
        )
        row = np.stack(
            [np.abs(u10) ** 2, u10 * np.conj(u11), u11 * np.conj(u10), np.abs(u11) ** 2], axis=-1
        )
        c = row * rho1
    rates = spin.free_precession_rates(delta, gamma_pure, form)
    return c, rates


def _evaluate(c, rates, taus):
    """Member contrasts on a tau grid; ``c`` and ``rates`` have shape (M, 4), result (M, T)."""
    taus = np.asarray(taus, dtype=float)
    pops = c[:, 0].real[:, None] * np.exp(rates[:, 0].real[:, None] * taus)
    pops += c[:, 3].real[:, None] * np.exp(rates[:, 3].real[:, None] * taus)
    coh = c[:, 1][:, None] * np.exp(rates[:, 1][:, None] * taus)
    return pops + 2.0 * coh.real


def member_contrasts(
    ensemble: Ensemble,
    omega_r: float,
    drive_detuning: float,
    taus,
    b_ut: float = 0.0,
    gamma_pure: float = 0.0,
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> np.ndarray:
    """Per-member contrast, shape (members, len(taus))."""
    delta = total_detuning(ensemble.delta_mhz, drive_detuning, b_ut)
    rabi = TWO_PI * ensemble.alpha * omega_r
    c, rates = _readout_coefficients(delta, rabi, 0.25 / omega_r, gamma_pure, dephasing_form)
    return _evaluate(c, rates, taus)


def ensemble_fringes(
    ensemble: Ensemble,
    omega_r: float,
    drive_detuning: float,
    taus,
    b_ut: float = 0.0,
    gamma_pure: float = 0.0,
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> np.ndarray:
    """Ensemble contrast versus tau as a bare array."""
    per = member_contrasts(ensemble, omega_r, drive_detuning, taus, b_ut, gamma_pure, dephasing_form)
    return ensemble_average(per, ensemble.weights, axis=0)


def fringe_curve(
    ensemble: Ensemble,
    omega_r: float,
    drive_detuning: float,
    tau_grid=DEFAULT_TAU_GRID,
    gamma_pure: float = 0.0,
    b_field: float = 0.0,
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> FringeCurve:
    tau_grid = np.asarray(tau_grid, dtype=float)
    c = ensemble_fringes(ensemble, omega_r, drive_detuning, tau_grid, b_field, gamma_pure, dephasing_form)
    meta = {
        "omega_r_mhz": omega_r,
        "drive_detuning_mhz": drive_detuning,
        "gamma_pure_per_us": gamma_pure,
        "l_ihb_mhz": ensemble.l_ihb,
        "l_dav": ensemble.l_dav,
    }
    return FringeCurve(tau_grid, c, meta)


# ---------------------------------------------------------------------------
# Figure of merit
# ---------------------------------------------------------------------------

def fringe_extrema(values) -> tuple[np.ndarray, np.ndarray]:
    """Indices of interior local maxima and minima.

    Runs of equal samples are collapsed first and represented by their middle
    sample; runs touching either end of the curve never count.
    """
    v = np.asarray(values, dtype=float)
    starts = np.flatnonzero(np.r_[True, v[1:] != v[:-1]])
    lengths = np.diff(np.r_[starts, v.size])
    rv = v[starts]
    mid = starts + (lengths - 1) // 2
    if rv.size < 3:
        return np.array([], dtype=int), np.array([], dtype=int)
    inner, left, right = rv[1:-1], rv[:-2], rv[2:]
    is_max = (inner > left) & (inner > right)
    is_min = (inner < left) & (inner < right)
    return mid[1:-1][is_max], mid[1:-1][is_min]


def fringe_quality_q(curve) -> float:
    """Gap between the second-highest fringe maximum and the second-lowest minimum.

    Accepts a :class:`FringeCurve` or a bare contrast array.  Returns 0 when
    fewer than two maxima or two minima exist.
    """
    values = curve.contrast if isinstance(curve, FringeCurve) else np.asarray(curve, dtype=float)
    if values.size < 5:
        raise ValueError(f"need at least 5 samples to grade fringes, got {values.size}")
    imax, imin = fringe_extrema(values)
    if imax.size < 2 or imin.size < 2:
        return 0.0
    second_max = np.sort(values[imax])[-2]
    second_min = np.sort(values[imin])[1]
    return float(min(1.0, max(0.0, second_max - second_min)))


def q_scan(
    ensemble: Ensemble,
    omega_r: float,
    detuning_grid=DEFAULT_DETUNING_GRID,
    tau_grid=DEFAULT_TAU_GRID,
    gamma_pure: float = 0.0,
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> np.ndarray:
    """q at B = 0 for every detuning of ``detuning_grid``."""
    return np.array(
        [
            fringe_quality_q(
                ensemble_fringes(ensemble, omega_r, float(d), tau_grid, 0.0, gamma_pure, dephasing_form)
            )
            for d in np.asarray(detuning_grid, dtype=float)
        ]
    )


def _first_argmax(values) -> int:
    """Index of the first maximum; with an ascending grid this breaks ties toward the smaller value."""
    return int(np.argmax(np.asarray(values)))


def optimize_drive_detuning(
    ensemble: Ensemble,
    omega_r: float,
    gamma_pure: float = 0.0,
    detuning_grid=DEFAULT_DETUNING_GRID,
    tau_grid=DEFAULT_TAU_GRID,
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> tuple[float, float]:
    """Exhaustive scan for the detuning maximising q; returns ``(detuning, q_max)``."""
    grid = np.sort(np.asarray(detuning_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("detuning grid is empty")
    q = q_scan(ensemble, omega_r, grid, tau_grid, gamma_pure, dephasing_form)
    i = _first_argmax(q)
    return float(grid[i]), float(q[i])


# ---------------------------------------------------------------------------
# Field sweep and slope
# ---------------------------------------------------------------------------

def contrast_map(
    ensemble: Ensemble,
    omega_r: float,
    drive_detuning: float,
    b_grid,
    tau_grid,
    gamma_pure: float = 0.0,
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> np.ndarray:
    """Ensemble contrast on the (B, tau) grid, shape (len(b_grid), len(tau_grid))."""
    return np.stack(
        [
            ensemble_fringes(ensemble, omega_r, drive_detuning, tau_grid, float(b), gamma_pure, dephasing_form)
            for b in np.asarray(b_grid, dtype=float)
        ]
    )


def slope_from_map(cmap, b_grid, tau_grid) -> dict:
    """Best ``|dC/dB|`` over the (B, tau) map, converted to contrast per MHz."""
    b_grid = np.asarray(b_grid, dtype=float)
    tau_grid = np.asarray(tau_grid, dtype=float)
    d = np.abs(central_differences(b_grid, cmap, axis=0))  # (B-2, T)
    per_tau = d.max(axis=0)
    it = _first_argmax(per_tau)
    ib = int(np.argmax(d[:, it])) + 1
    return {
        "slope_per_mhz": float(per_tau[it] / GAMMA_E_MHZ_PER_UT),
        "dc_db_per_ut": float(per_tau[it]),
        "tau_opt": float(tau_grid[it]),
        "b_at_max_ut": float(b_grid[ib]),
    }


def _check_b_grid(b_grid) -> np.ndarray:
    b = np.sort(np.asarray(b_grid, dtype=float))
    if b.size < 3:
        raise ValueError("b_grid needs at least 3 points")
    if not np.allclose(b, -b[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(b).max())):
        raise ValueError("b_grid must be symmetric about 0")
    return b


def ramsey_slope(
    ensemble: Ensemble,
    omega_r: float,
    gamma_pure: float = 0.0,
    b_grid=DEFAULT_B_GRID,
    tau_grid=DEFAULT_TAU_GRID,
    detuning_grid=DEFAULT_DETUNING_GRID,
    objective: str = "q",
    dephasing_form: str = spin.TRACE_PRESERVING,
) -> SlopeResult:
    """Maximum Ramsey slope C' = (dC/dB) / gamma_e.

    With ``objective="q"`` the drive detuning is fixed beforehand by
    maximising q at zero field; with ``objective="slope"`` every detuning on
    the grid is tried and the one giving the steepest slope wins.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    tau_grid = np.asarray(tau_grid, dtype=float)
    detuning_grid = np.sort(np.asarray(detuning_grid, dtype=float))
    if tau_grid.size == 0 or detuning_grid.size == 0:
        raise ValueError("tau and detuning grids must be non-empty")
    b_grid = _check_b_grid(b_grid)

    q = q_scan(ensemble, omega_r, detuning_grid, tau_grid, gamma_pure, dephasing_form)
    if objective == "q":
        i = _first_argmax(q)
        cmap = contrast_map(ensemble, omega_r, detuning_grid[i], b_grid, tau_grid, gamma_pure, dephasing_form)
        best = slope_from_map(cmap, b_grid, tau_grid)
    else:
        scans = [
            slope_from_map(
                contrast_map(ensemble, omega_r, d, b_grid, tau_grid, gamma_pure, dephasing_form),
                b_grid,
                tau_grid,
            )
            for d in detuning_grid
        ]
        i = _first_argmax([s["slope_per_mhz"] for s in scans])
        best = scans[i]
    return SlopeResult(
        slope_per_mhz=best["slope_per_mhz"],
        chosen_detuning=float(detuning_grid[i]),
        tau_opt=best["tau_opt"],
        q_max=float(q[i]),
        omega_r=float(omega_r),
        auxiliary={
            "objective": objective,
            "dc_db_per_ut": best["dc_db_per_ut"],
            "b_at_max_ut": best["b_at_max_ut"],
            "q_of_detuning_max": float(np.max(q)),
        },
    )


def fringe_envelope(curve: FringeCurve) -> tuple[np.ndarray, np.ndarray]:
    """Half peak-to-peak amplitude between successive extrema, located at their midpoints.

    A coarse envelope used for decay checks: for each pair of adjacent
    extrema (max then min or vice versa) the half difference is reported at
    the mean of their times.
    """
    imax, imin = fringe_extrema(curve.contrast)
    idx = np.sort(np.r_[imax, imin])
    if idx.size < 2:
        return np.array([]), np.array([])
    c = curve.contrast[idx]
    t = curve.tau_grid[idx]
    return 0.5 * (t[1:] + t[:-1]), 0.5 * np.abs(np.diff(c))

