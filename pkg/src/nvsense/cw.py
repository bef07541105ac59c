"""
CW ODMR from the closed-form five-level steady state.

Levels: 1 = ground m_s=0, 2 = ground m_s=+-1, 3/4 = the corresponding
excited states, 5 = metastable singlet.  The microwave drive enters only through
the saturation rate

    W = (alpha Omega_R)^2 gamma2' / (2 (gamma2'^2 + Delta^2))

with ``gamma2' = 2 pi / T2* + k21 / 2 + Gamma_p / 2``.  The ground-state
population ratio ``Xi = rho22 / rho11`` is a ratio of two affine functions of
W and the fluorescence ``I = beta3 rho33 + beta4 rho44`` turns out to be a
Moebius function of W as well, which the sweep code uses directly.

Contrast is normalised per parameter set: zero far off resonance and one in the
strong-drive limit on resonance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .ensemble import Ensemble, EnsembleMember, ensemble_average
from .pulsed import Spectrum
from .slopes import SlopeResult, max_abs_slope
from .units import TWO_PI

DEFAULT_F_GRID = np.linspace(-8.0, 8.0, 1601)
DEFAULT_OMEGA_R_GRID = np.geomspace(0.1, 5.0, 25)
DEFAULT_GAMMA_P_GRID = np.geomspace(0.05, 5.0, 25)
# Reference points for the normalisation.  The residual drive at the
# off-resonance point falls as (Omega_R / offset)^2, so 500 MHz keeps it
# below 1e-4 in contrast for Omega_R up to 5 MHz.
DEFAULT_OFF_RESONANCE_MHZ = 500.0
DEFAULT_ASYMPTOTIC_OMEGA_R_MHZ = 200.0

RATE_NAMES = ("k31", "k32", "k41", "k42", "k35", "k45", "k51", "k52", "k21")
GAMMA_P_UNITS = ("angular", "cyclic")


class RatesFileError(ValueError):
    pass


class DegenerateContrastError(ArithmeticError):
    """The off-resonance and saturated intensities coincide, so contrast is undefined."""


@dataclass(frozen=True)
class FiveLevelRates:
    """Decay rates k_nm from level n to level m, in 1/us."""

    k31: float
    k32: float
    k41: float
    k42: float
    k35: float
    k45: float
    k51: float
    k52: float
    k21: float
    provenance: str = ""

    def __post_init__(self):
        for name in RATE_NAMES:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)) or v < 0:
                raise RatesFileError(f"rate {name} must be a finite non-negative number, got {v!r}")
        if self.K3 <= 0 or self.K4 <= 0 or self.K5 <= 0:
            raise RatesFileError("total decay rates K3, K4 and K5 must all be positive")

    @property
    def K3(self) -> float:
        return self.k35 + self.k31 + self.k32

    @property
    def K4(self) -> float:
        return self.k41 + self.k42 + self.k45

    @property
    def K5(self) -> float:
        return self.k51 + self.k52

    @property
    def beta3(self) -> float:
        return (self.k31 + self.k32) / self.K3

    @property
    def beta4(self) -> float:
        return (self.k41 + self.k42) / self.K4

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_rates(path=None) -> FiveLevelRates:
    """Read a rates JSON file; ``None`` loads the bundled bulk-diamond defaults."""
    try:
        if path is None:
            text = resources.files("nvsense.data").joinpath("rates_bulk_nv.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RatesFileError(f"cannot read rates file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RatesFileError(f"rates file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise RatesFileError("rates file must hold a JSON object")
    missing = [k for k in RATE_NAMES if k not in raw]
    unknown = sorted(set(raw) - set(RATE_NAMES) - {"provenance"})
    if missing:
        raise RatesFileError(f"rates file lacks {missing}")
    if unknown:
        raise RatesFileError(f"unknown keys in rates file: {unknown}")
    return FiveLevelRates(**{k: raw[k] for k in RATE_NAMES}, provenance=str(raw.get("provenance", "")))


_DEFAULT_RATES: Optional[FiveLevelRates] = None


def default_rates() -> FiveLevelRates:
    global _DEFAULT_RATES
    if _DEFAULT_RATES is None:
        _DEFAULT_RATES = load_rates()
    return _DEFAULT_RATES


@dataclass(frozen=True)
class CwParams:
    gamma_p: float  # pumping rate value, interpreted via gamma_p_units
    omega_r: float  # MHz
    t2_star: float = math.inf  # us
    rates: FiveLevelRates = field(default_factory=default_rates)
    gamma_p_units: str = "angular"
    off_resonance_mhz: float = DEFAULT_OFF_RESONANCE_MHZ
    asymptotic_omega_r_mhz: float = DEFAULT_ASYMPTOTIC_OMEGA_R_MHZ

    def __post_init__(self):
        if self.gamma_p < 0:
            raise ValueError(f"gamma_p must be >= 0, got {self.gamma_p}")
        if self.omega_r < 0:
            raise ValueError(f"omega_r must be >= 0, got {self.omega_r}")
        if not self.t2_star > 0:
            raise ValueError(f"t2_star must be > 0, got {self.t2_star}")
        if self.gamma_p_units not in GAMMA_P_UNITS:
            raise ValueError(f"gamma_p_units must be one of {GAMMA_P_UNITS}")

    @property
    def pump_rate(self) -> float:
        """Gamma_p as a rate in 1/us."""
        return TWO_PI * self.gamma_p if self.gamma_p_units == "angular" else float(self.gamma_p)

    @property
    def gamma2(self) -> float:
        return TWO_PI / self.t2_star + 0.5 * self.rates.k21

    @property
    def gamma2_prime(self) -> float:
        return self.gamma2 + 0.5 * self.pump_rate


class SteadyState(NamedTuple):
    rho11: np.ndarray
    rho22: np.ndarray
    rho33: np.ndarray
    rho44: np.ndarray
    rho55: np.ndarray
    xi: np.ndarray


def drive_saturation_rate(delta, rabi, gamma2p):
    """W = rabi^2 gamma2' / (2 (gamma2'^2 + delta^2)); angular inputs."""
    delta = np.asarray(delta, dtype=float)
    rabi = np.asarray(rabi, dtype=float)
    return rabi**2 * gamma2p / (2.0 * (gamma2p**2 + delta**2))


def five_level_steady_state(delta, rabi, pump, gamma2p, rates: FiveLevelRates) -> SteadyState:
    """Closed-form steady-state populations for total detuning ``delta`` and drive ``rabi`` (rad/us)."""
    r = rates
    K3, K4, K5 = r.K3, r.K4, r.K5
    w = drive_saturation_rate(delta, rabi, gamma2p)
    num = 0.5 * r.k21 + pump * (r.k32 * K5 + r.k52 * r.k35) / (K3 * K5) + w
    den = pump + 0.5 * r.k21 - pump * (r.k42 * K5 + r.k52 * r.k45) / (K4 * K5) + w
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = num / den
    rho11 = 1.0 / (
        1.0 + xi + pump / K3 + pump * xi / K4 + r.k35 * pump / (K3 * K5) + r.k45 * pump * xi / (K4 * K5)
    )
    # rho22 = Xi rho11 is the same bracket as the 1/Xi form, without dividing by Xi
    rho22 = xi * rho11
    rho33 = pump / K3 * rho11
    rho44 = pump / K4 * rho22
    rho55 = (r.k35 * rho33 + r.k45 * rho44) / K5
    return SteadyState(rho11, rho22, rho33, rho44, rho55, xi)


def cw_intensity(delta, rabi, pump, gamma2p, rates: FiveLevelRates):
    """Fluorescence ``beta3 rho33 + beta4 rho44``; zero without pumping."""
    shape = np.broadcast(np.asarray(delta), np.asarray(rabi)).shape
    if pump == 0:
        return np.zeros(shape) if shape else 0.0
    ss = five_level_steady_state(delta, rabi, pump, gamma2p, rates)
    out = rates.beta3 * ss.rho33 + rates.beta4 * ss.rho44
    return out if shape else float(out)


def _intensity_moebius(pump, rates: FiveLevelRates) -> tuple[float, float, float, float]:
    """Coefficients with I(W) = (n0 + n1 W) / (d0 + d1 W)."""
    r = rates
    K3, K4, K5 = r.K3, r.K4, r.K5
    a = 0.5 * r.k21 + pump * (r.k32 * K5 + r.k52 * r.k35) / (K3 * K5)
    b = pump + 0.5 * r.k21 - pump * (r.k42 * K5 + r.k52 * r.k45) / (K4 * K5)
    p = 1.0 + pump / K3 + r.k35 * pump / (K3 * K5)
    q = 1.0 + pump / K4 + r.k45 * pump / (K4 * K5)
    big_a = r.beta3 * pump / K3
    big_b = r.beta4 * pump / K4
    return big_a * b + big_b * a, big_a + big_b, p * b + q * a, p + q


def member_intensity(member: EnsembleMember, params: CwParams, f_mw_offset: float) -> float:
    delta = TWO_PI * (member.delta_i - f_mw_offset)
    rabi = TWO_PI * member.alpha_i * params.omega_r
    return cw_intensity(delta, rabi, params.pump_rate, params.gamma2_prime, params.rates)


def cw_steady_state_intensity(member: EnsembleMember, params: CwParams, f_mw_offset: float) -> float:
    """I_CW of one member at drive offset ``f_mw_offset`` (MHz)."""
    return member_intensity(member, params, f_mw_offset)


def reference_intensities(params: CwParams) -> tuple[float, float]:
    """``(I_off, I_sat)``: far off resonance at the set Omega_R, and on resonance at the asymptotic Omega_R."""
    pump, g2p, rates = params.pump_rate, params.gamma2_prime, params.rates
    i_off = cw_intensity(TWO_PI * params.off_resonance_mhz, TWO_PI * params.omega_r, pump, g2p, rates)
    i_sat = cw_intensity(0.0, TWO_PI * params.asymptotic_omega_r_mhz, pump, g2p, rates)
    if not i_off - i_sat > 0:
        raise DegenerateContrastError(
            f"no contrast between off-resonance ({i_off}) and saturated ({i_sat}) intensity"
        )
    return i_off, i_sat


def _normalise(intensity, i_off, i_sat):
    return np.clip((i_off - intensity) / (i_off - i_sat), 0.0, 1.0)


def cw_normalized_contrast(member: EnsembleMember, params: CwParams, f_mw_offset: float) -> float:
    i_off, i_sat = reference_intensities(params)
    return float(_normalise(member_intensity(member, params, f_mw_offset), i_off, i_sat))


def member_spectra(ensemble: Ensemble, params: CwParams, f_grid=DEFAULT_F_GRID) -> np.ndarray:
    """Per-member normalised contrast, shape (members, len(f_grid))."""
    f_grid = np.asarray(f_grid, dtype=float)
    i_off, i_sat = reference_intensities(params)
    delta = TWO_PI * (ensemble.delta_mhz[:, None] - f_grid[None, :])
    rabi = TWO_PI * params.omega_r * ensemble.alpha[:, None]
    inten = cw_intensity(delta, rabi, params.pump_rate, params.gamma2_prime, params.rates)
    return _normalise(inten, i_off, i_sat)


def cw_spectrum(ensemble: Ensemble, params: CwParams, f_grid=DEFAULT_F_GRID) -> Spectrum:
    f_grid = np.asarray(f_grid, dtype=float)
    c = ensemble_average(member_spectra(ensemble, params, f_grid), ensemble.weights, axis=0)
    return Spectrum(
        f_grid,
        c,
        {
            "scheme": "cw",
            "omega_r_mhz": params.omega_r,
            "gamma_p": params.gamma_p,
            "gamma_p_units": params.gamma_p_units,
            "l_ihb_mhz": ensemble.l_ihb,
            "l_dav": ensemble.l_dav,
        },
    )


def cw_max_slope(spectrum: Spectrum) -> SlopeResult:
    if spectrum.f_grid.size < 3:
        raise ValueError("spectrum needs at least 3 points for a slope")
    slope, f_at = max_abs_slope(spectrum.f_grid, spectrum.contrast)
    return SlopeResult(
        slope_per_mhz=slope,
        omega_r=spectrum.metadata.get("omega_r_mhz"),
        gamma_p=spectrum.metadata.get("gamma_p"),
        auxiliary={"f_at_max_mhz": f_at},
    )


def _slope_surface(ensemble, omega_grid, gamma_p_grid, f_grid, t2_star, rates, units, off_mhz, asym_mhz):
    """Max slope for every (Omega_R, Gamma_p) cell, shape (len(omega_grid), len(gamma_p_grid))."""
    delta_sq = (TWO_PI * (ensemble.delta_mhz[:, None] - f_grid[None, :])) ** 2
    alpha_sq = (ensemble.alpha**2)[:, None]
    w_weights = ensemble.weights
    df = f_grid[2:] - f_grid[:-2]
    out = np.empty((omega_grid.size, gamma_p_grid.size))
    f_at = np.empty_like(out)
    for j, gp in enumerate(gamma_p_grid):
        ref = CwParams(float(gp), 1.0, t2_star, rates, units, off_mhz, asym_mhz)
        pump, g2p = ref.pump_rate, ref.gamma2_prime
        if pump == 0:
            raise DegenerateContrastError("Gamma_p = 0 gives no fluorescence contrast")
        n0, n1, d0, d1 = _intensity_moebius(pump, rates)
        lorentz = g2p / (2.0 * (g2p**2 + delta_sq))  # W / rabi^2
        for i, om in enumerate(omega_grid):
            params = CwParams(float(gp), float(om), t2_star, rates, units, off_mhz, asym_mhz)
            i_off, i_sat = reference_intensities(params)
            w = (TWO_PI * om) ** 2 * alpha_sq * lorentz
            inten = (n0 + n1 * w) / (d0 + d1 * w)
            c = _normalise(inten, i_off, i_sat)
            spec = w_weights @ c
            d = np.abs(spec[2:] - spec[:-2]) / df
            k = int(np.argmax(d))
            out[i, j] = d[k]
            f_at[i, j] = f_grid[k + 1]
    return out, f_at


def optimize_cw(
    ensemble: Ensemble,
    omega_r_grid=DEFAULT_OMEGA_R_GRID,
    gamma_p_grid=DEFAULT_GAMMA_P_GRID,
    f_grid=DEFAULT_F_GRID,
    t2_star: float = math.inf,
    rates: Optional[FiveLevelRates] = None,
    gamma_p_units: str = "angular",
    off_resonance_mhz: float = DEFAULT_OFF_RESONANCE_MHZ,
    asymptotic_omega_r_mhz: float = DEFAULT_ASYMPTOTIC_OMEGA_R_MHZ,
) -> SlopeResult:
    """Exhaustive (Omega_R, Gamma_p) scan for the steepest normalised CW spectrum.

    Ties go to the smaller Omega_R, then to the smaller Gamma_p.
    """
    rates = rates or default_rates()
    om = np.sort(np.asarray(omega_r_grid, dtype=float))
    gp = np.sort(np.asarray(gamma_p_grid, dtype=float))
    f_grid = np.asarray(f_grid, dtype=float)
    if om.size == 0 or gp.size == 0:
        raise ValueError("omega_r and gamma_p grids must be non-empty")
    if f_grid.size < 3:
        raise ValueError("f_grid needs at least 3 points")
    surface, f_at = _slope_surface(
        ensemble, om, gp, f_grid, t2_star, rates, gamma_p_units, off_resonance_mhz, asymptotic_omega_r_mhz
    )
    # row-major argmax: first over omega, then gamma_p
    i, j = np.unravel_index(int(np.argmax(surface)), surface.shape)
    return SlopeResult(
        slope_per_mhz=float(surface[i, j]),
        omega_r=float(om[i]),
        gamma_p=float(gp[j]),
        auxiliary={
            "f_at_max_mhz": float(f_at[i, j]),
            "gamma_p_units": gamma_p_units,
            "omega_r_grid": [float(x) for x in om],
            "gamma_p_grid": [float(x) for x in gp],
            "slope_surface": surface.tolist(),
        },
    )


def reference_convergence(params: CwParams, f_grid=None, delta_mhz: float = 0.0) -> float:
    """Largest change in single-member contrast when either reference point is doubled."""
    if f_grid is None:
        f_grid = np.linspace(-5.0, 5.0, 201)
    member = EnsembleMember(delta_mhz, 1.0, 1.0)
    base = np.array([cw_normalized_contrast(member, params, f) for f in f_grid])
    worst = 0.0
    for p in (
        CwParams(params.gamma_p, params.omega_r, params.t2_star, params.rates, params.gamma_p_units,
                 2 * params.off_resonance_mhz, params.asymptotic_omega_r_mhz),
        CwParams(params.gamma_p, params.omega_r, params.t2_star, params.rates, params.gamma_p_units,
                 params.off_resonance_mhz, 2 * params.asymptotic_omega_r_mhz),
    ):
        other = np.array([cw_normalized_contrast(member, p, f) for f in f_grid])
        worst = max(worst, float(np.max(np.abs(other - base))))
    return worst
