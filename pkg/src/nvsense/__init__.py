"""Contrast-slope comparison of Ramsey, pi-pulse ODMR and CW ODMR for NV-center ensembles."""

from .comparison import ComparisonConfig, ComparisonRow, rabi_plateau_scan, run_comparison
from .cw import CwParams, FiveLevelRates, cw_spectrum, default_rates, optimize_cw
from .ensemble import Ensemble, EnsembleMember, build_ensemble, load_measured_distribution
from .pulsed import PulsedOdmrParams, Spectrum, optimize_pulsed, pulsed_spectrum
from .ramsey import RamseyParams, fringe_curve, fringe_quality_q, ramsey_slope
from .slopes import SlopeResult

__version__ = "0.1.0"

__all__ = [
    "ComparisonConfig",
    "ComparisonRow",
    "CwParams",
    "Ensemble",
    "EnsembleMember",
    "FiveLevelRates",
    "PulsedOdmrParams",
    "RamseyParams",
    "SlopeResult",
    "Spectrum",
    "build_ensemble",
    "cw_spectrum",
    "default_rates",
    "fringe_curve",
    "fringe_quality_q",
    "load_measured_distribution",
    "optimize_cw",
    "optimize_pulsed",
    "pulsed_spectrum",
    "rabi_plateau_scan",
    "ramsey_slope",
    "run_comparison",
]
