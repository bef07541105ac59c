"""
Scheme comparison runs.

Every (L_IHB, L_DAV) cell builds its ensemble once and optimises the three
schemes independently: Ramsey at a fixed Rabi frequency (detuning chosen by
q or directly by slope), pi-pulse ODMR over Omega_R, CW ODMR over
(Omega_R, Gamma_p).  Cells are independent, so they can run in a process pool
and be cached on disk by a content hash of everything that determines them.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import cw, pulsed, ramsey, spin
from .ensemble import DEFAULT_N_ALPHA, DEFAULT_N_DELTA, Ensemble, build_ensemble, load_measured_distribution

log = logging.getLogger(__name__)

DEFAULT_L_IHB_GRID = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0)
DEFAULT_L_DAV_GRID = (0.0, 0.1, 0.3, 0.5, 0.7, 0.8, 0.9)

CSV_COLUMNS = (
    "l_ihb_mhz",
    "l_dav",
    "slope_ramsey",
    "slope_pulsed",
    "slope_cw",
    "ratio_pulsed",
    "ratio_cw",
    "detuning_mhz",
    "tau_opt_us",
    "omega_r_pulsed_mhz",
    "omega_r_cw_mhz",
    "gamma_p_cw_mhz",
)


class CellError(RuntimeError):
    """A scheme failed inside one comparison cell."""

    def __init__(self, l_ihb, l_dav, cause):
        super().__init__(f"cell (l_ihb={l_ihb} MHz, l_dav={l_dav}) failed: {cause}")
        self.l_ihb = l_ihb
        self.l_dav = l_dav


def _tuple(x) -> tuple:
    return tuple(float(v) for v in np.asarray(x, dtype=float).ravel())


@dataclass(frozen=True)
class ComparisonConfig:
    l_ihb_grid: tuple = DEFAULT_L_IHB_GRID
    l_dav_grid: tuple = DEFAULT_L_DAV_GRID
    ramsey_omega_r: float = 10.0
    ramsey_tau_grid: tuple = _tuple(ramsey.DEFAULT_TAU_GRID)
    ramsey_b_grid: tuple = _tuple(ramsey.DEFAULT_B_GRID)
    ramsey_detuning_grid: tuple = _tuple(ramsey.DEFAULT_DETUNING_GRID)
    ramsey_objective: str = "q"
    pulsed_omega_r_grid: tuple = _tuple(pulsed.DEFAULT_OMEGA_R_GRID)
    cw_omega_r_grid: tuple = _tuple(cw.DEFAULT_OMEGA_R_GRID)
    cw_gamma_p_grid: tuple = _tuple(cw.DEFAULT_GAMMA_P_GRID)
    f_grid: tuple = _tuple(pulsed.DEFAULT_F_GRID)
    gamma_pure: float = 0.0  # 1/us; CW uses T2* = 1 / gamma_pure
    dephasing_form: str = spin.TRACE_PRESERVING
    n_delta: int = DEFAULT_N_DELTA
    n_alpha: int = DEFAULT_N_ALPHA
    rates: cw.FiveLevelRates = field(default_factory=cw.default_rates)
    gamma_p_units: str = "angular"
    off_resonance_mhz: float = cw.DEFAULT_OFF_RESONANCE_MHZ
    asymptotic_omega_r_mhz: float = cw.DEFAULT_ASYMPTOTIC_OMEGA_R_MHZ

    def __post_init__(self):
        for name in (
            "l_ihb_grid", "l_dav_grid", "ramsey_tau_grid", "ramsey_b_grid", "ramsey_detuning_grid",
            "pulsed_omega_r_grid", "cw_omega_r_grid", "cw_gamma_p_grid", "f_grid",
        ):
            value = _tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, value)
        if any(not 0 <= d < 1 for d in self.l_dav_grid):
            raise ValueError("l_dav values must lie in [0, 1)")
        if any(l < 0 for l in self.l_ihb_grid):
            raise ValueError("l_ihb values must be >= 0")
        if self.ramsey_objective not in ramsey.OBJECTIVES:
            raise ValueError(f"ramsey_objective must be one of {ramsey.OBJECTIVES}")
        object.__setattr__(self, "dephasing_form", spin.canonical_dephasing_form(self.dephasing_form))

    @property
    def t2_star(self) -> float:
        return math.inf if self.gamma_pure == 0 else 1.0 / self.gamma_pure

    def scheme_dict(self) -> dict:
        """Everything except the cell grids: what determines a cell's result besides its ensemble."""
        d = asdict(self)
        d.pop("l_ihb_grid")
        d.pop("l_dav_grid")
        d["rates"] = self.rates.as_dict()
        return d


@dataclass(frozen=True)
class ComparisonRow:
    l_ihb: float
    l_dav: float
    slope_ramsey: float
    slope_pulsed: float
    slope_cw: float
    ratio_pulsed: float
    ratio_cw: float
    detuning_mhz: float
    tau_opt_us: float
    omega_r_pulsed_mhz: float
    omega_r_cw_mhz: float
    gamma_p_cw_mhz: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def csv_values(self) -> list:
        return [
            self.l_ihb, self.l_dav, self.slope_ramsey, self.slope_pulsed, self.slope_cw,
            self.ratio_pulsed, self.ratio_cw, self.detuning_mhz, self.tau_opt_us,
            self.omega_r_pulsed_mhz, self.omega_r_cw_mhz, self.gamma_p_cw_mhz,
        ]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonRow":
        return cls(**d)


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return math.inf if num > 0 else math.nan
    return num / den


def evaluate_schemes(ensemble: Ensemble, config: ComparisonConfig) -> dict:
    """Optimised slope of all three schemes for one ensemble, as SlopeResults."""
    r = ramsey.ramsey_slope(
        ensemble,
        config.ramsey_omega_r,
        config.gamma_pure,
        config.ramsey_b_grid,
        config.ramsey_tau_grid,
        config.ramsey_detuning_grid,
        config.ramsey_objective,
        config.dephasing_form,
    )
    p = pulsed.optimize_pulsed(
        ensemble, config.pulsed_omega_r_grid, config.f_grid, config.gamma_pure, config.dephasing_form
    )
    c = cw.optimize_cw(
        ensemble,
        config.cw_omega_r_grid,
        config.cw_gamma_p_grid,
        config.f_grid,
        config.t2_star,
        config.rates,
        config.gamma_p_units,
        config.off_resonance_mhz,
        config.asymptotic_omega_r_mhz,
    )
    return {"ramsey": r, "pulsed": p, "cw": c}


def row_from_results(l_ihb: float, l_dav: float, res: dict) -> ComparisonRow:
    r, p, c = res["ramsey"], res["pulsed"], res["cw"]
    cw_diag = {k: v for k, v in c.to_dict().items() if k != "auxiliary"}
    cw_diag["f_at_max_mhz"] = c.auxiliary.get("f_at_max_mhz")
    return ComparisonRow(
        l_ihb=float(l_ihb),
        l_dav=float(l_dav),
        slope_ramsey=r.slope_per_mhz,
        slope_pulsed=p.slope_per_mhz,
        slope_cw=c.slope_per_mhz,
        ratio_pulsed=_ratio(p.slope_per_mhz, r.slope_per_mhz),
        ratio_cw=_ratio(c.slope_per_mhz, r.slope_per_mhz),
        detuning_mhz=r.chosen_detuning,
        tau_opt_us=r.tau_opt,
        omega_r_pulsed_mhz=p.omega_r,
        omega_r_cw_mhz=c.omega_r,
        gamma_p_cw_mhz=c.gamma_p,
        diagnostics={"ramsey": r.to_dict(), "pulsed": p.to_dict(), "cw": cw_diag},
    )


def cell_key(ensemble: Ensemble, config: ComparisonConfig) -> str:
    payload = json.dumps(
        {"ensemble": ensemble.fingerprint(), "schemes": config.scheme_dict()},
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CellCache:
    """One JSON file per cell, written atomically (temp file + rename)."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[ComparisonRow]:
        path = self._path(key)
        if not path.is_file():
            return None
        try:
            return ComparisonRow.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError) as exc:
            log.warning("ignoring unreadable cache entry %s: %s", path, exc)
            return None

    def put(self, key: str, row: ComparisonRow) -> None:
        text = json.dumps(row.to_dict(), sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".cell-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def evaluate_cell(l_ihb: float, l_dav: float, config: ComparisonConfig, cache_dir=None) -> ComparisonRow:
    ens = build_ensemble(l_ihb, l_dav, config.n_delta, config.n_alpha)
    cache = CellCache(cache_dir) if cache_dir is not None else None
    key = cell_key(ens, config) if cache else None
    if cache:
        hit = cache.get(key)
        if hit is not None:
            return hit
    try:
        row = row_from_results(l_ihb, l_dav, evaluate_schemes(ens, config))
    except (ArithmeticError, ValueError) as exc:
        raise CellError(l_ihb, l_dav, exc) from exc
    if cache:
        cache.put(key, row)
    return row


def _evaluate_cell_args(args):
    return evaluate_cell(*args)


def run_comparison(config: ComparisonConfig, jobs: int = 1, cache_dir=None) -> list[ComparisonRow]:
    """All cells of the (L_DAV x L_IHB) grid, in grid order (L_DAV outer, L_IHB inner)."""
    cells = [(l_ihb, l_dav) for l_dav in config.l_dav_grid for l_ihb in config.l_ihb_grid]
    tasks = [(l_ihb, l_dav, config, cache_dir) for l_ihb, l_dav in cells]
    if jobs <= 1 or len(tasks) == 1:
        rows = []
        for t in tasks:
            rows.append(_evaluate_cell_args(t))
            log.info("cell l_ihb=%s l_dav=%s done", t[0], t[1])
        return rows
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_evaluate_cell_args, tasks))


# ---------------------------------------------------------------------------
# Rabi-frequency plateau
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PlateauTable:
    l_ihb_values: tuple
    omega_r_grid: tuple
    slopes: np.ndarray  # (len(l_ihb_values), len(omega_r_grid))
    detunings: np.ndarray
    tau_opt: np.ndarray

    def relative_gain(self, l_ihb: float, omega_lo: float, omega_hi: float) -> float:
        i = self.l_ihb_values.index(l_ihb)
        lo = self.omega_r_grid.index(omega_lo)
        hi = self.omega_r_grid.index(omega_hi)
        return float(self.slopes[i, hi] / self.slopes[i, lo] - 1.0)

    def rows(self) -> list[tuple]:
        return [
            (l, om, float(self.slopes[i, j]), float(self.detunings[i, j]), float(self.tau_opt[i, j]))
            for i, l in enumerate(self.l_ihb_values)
            for j, om in enumerate(self.omega_r_grid)
        ]


def _plateau_cell(args):
    l_ihb, om, config = args
    ens = build_ensemble(l_ihb, 0.0, config.n_delta, config.n_alpha)
    return ramsey.ramsey_slope(
        ens, om, config.gamma_pure, config.ramsey_b_grid, config.ramsey_tau_grid,
        config.ramsey_detuning_grid, config.ramsey_objective, config.dephasing_form,
    )


def rabi_plateau_scan(
    l_ihb_values: Sequence[float],
    omega_r_grid: Sequence[float],
    config: Optional[ComparisonConfig] = None,
    jobs: int = 1,
) -> PlateauTable:
    """Ramsey slope versus Rabi frequency for each broadening level (no drive variation)."""
    config = config or ComparisonConfig()
    l_vals, om_vals = _tuple(l_ihb_values), _tuple(omega_r_grid)
    if not l_vals or not om_vals:
        raise ValueError("l_ihb_values and omega_r_grid must be non-empty")
    tasks = [(l, om, config) for l in l_vals for om in om_vals]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_plateau_cell, tasks))
    else:
        results = [_plateau_cell(t) for t in tasks]
    shape = (len(l_vals), len(om_vals))
    return PlateauTable(
        l_vals,
        om_vals,
        np.array([r.slope_per_mhz for r in results]).reshape(shape),
        np.array([r.chosen_detuning for r in results]).reshape(shape),
        np.array([r.tau_opt for r in results]).reshape(shape),
    )


# ---------------------------------------------------------------------------
# Measured offset distribution
# ---------------------------------------------------------------------------

MEASURED_COLUMNS = (
    "l_dav",
    "ramsey_omega_r_mhz",
    "slope_ramsey",
    "slope_pulsed",
    "slope_cw",
    "ratio_pulsed",
    "ratio_cw",
    "detuning_mhz",
    "tau_opt_us",
)


def measured_distribution_run(
    distribution_path,
    l_dav_values: Sequence[float],
    ramsey_omega_r_grid: Sequence[float],
    config: Optional[ComparisonConfig] = None,
) -> list[dict]:
    """ODMR-to-Ramsey slope ratios for a measured offset histogram.

    The ODMR schemes are optimised once per drive-variation level; the Ramsey
    slope is recomputed for every Rabi frequency of ``ramsey_omega_r_grid``.
    """
    config = config or ComparisonConfig()
    rows = []
    for l_dav in _tuple(l_dav_values):
        ens = load_measured_distribution(distribution_path, l_dav, config.n_alpha)
        p = pulsed.optimize_pulsed(ens, config.pulsed_omega_r_grid, config.f_grid, config.gamma_pure,
                                   config.dephasing_form)
        c = cw.optimize_cw(ens, config.cw_omega_r_grid, config.cw_gamma_p_grid, config.f_grid,
                           config.t2_star, config.rates, config.gamma_p_units,
                           config.off_resonance_mhz, config.asymptotic_omega_r_mhz)
        for om in _tuple(ramsey_omega_r_grid):
            r = ramsey.ramsey_slope(ens, om, config.gamma_pure, config.ramsey_b_grid, config.ramsey_tau_grid,
                                    config.ramsey_detuning_grid, config.ramsey_objective, config.dephasing_form)
            rows.append(
                {
                    "l_dav": l_dav,
                    "ramsey_omega_r_mhz": om,
                    "slope_ramsey": r.slope_per_mhz,
                    "slope_pulsed": p.slope_per_mhz,
                    "slope_cw": c.slope_per_mhz,
                    "ratio_pulsed": _ratio(p.slope_per_mhz, r.slope_per_mhz),
                    "ratio_cw": _ratio(c.slope_per_mhz, r.slope_per_mhz),
                    "detuning_mhz": r.chosen_detuning,
                    "tau_opt_us": r.tau_opt,
                }
            )
    return rows


def ratio_crossings(rows: Sequence[ComparisonRow], attr: str = "ratio_pulsed") -> list[tuple[float, float]]:
    """Brackets ``(l_lo, l_hi)`` of consecutive L_IHB points where ``attr - 1`` changes sign."""
    rows = sorted(rows, key=lambda r: r.l_ihb)
    out = []
    for a, b in zip(rows, rows[1:]):
        fa, fb = getattr(a, attr) - 1.0, getattr(b, attr) - 1.0
        if (fa < 0) != (fb < 0):
            out.append((a.l_ihb, b.l_ihb))
    return out
