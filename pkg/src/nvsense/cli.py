"""
Command-line front end.

A run is described by one JSON document (see ``DEFAULT_CONFIG``) plus
``--set section.key=value`` overrides.  Unknown keys are rejected and every
physical quantity carries its unit in the key name.  Grids are given either
as an explicit list or as ``{"start": a, "stop": b, "num": n, "spacing":
"linear" | "log"}``.

Exit codes: 0 ok, 2 configuration error, 3 computation error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import comparison, cw, pulsed, ramsey, spin
from .ensemble import DistributionFileNotFound, DistributionLoadError, build_ensemble

log = logging.getLogger("nvsense")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_IO = 4

SUBCOMMANDS = ("fringes", "qmap", "spectra", "compare", "validate")
COMPARE_MODES = ("grid", "plateau", "measured")


def _lin(start, stop, num):
    return {"start": start, "stop": stop, "num": num, "spacing": "linear"}


def _log(start, stop, num):
    return {"start": start, "stop": stop, "num": num, "spacing": "log"}


DEFAULT_CONFIG: dict = {
    "ensemble": {"n_delta": 41, "n_alpha": 21},
    "dephasing": {"gamma_pure_per_us": 0.0, "form": spin.TRACE_PRESERVING},
    "ramsey": {
        "omega_r_mhz": 10.0,
        "tau_grid_us": _lin(0.0, 5.0, 1001),
        "b_grid_ut": _lin(-3.6, 3.6, 49),
        "detuning_grid_mhz": _lin(0.0, 5.0, 51),
        "objective": "q",
    },
    "pulsed": {"omega_r_grid_mhz": _log(0.1, 5.0, 25)},
    "cw": {
        "omega_r_grid_mhz": _log(0.1, 5.0, 25),
        "gamma_p_grid_mhz": _log(0.05, 5.0, 25),
        "gamma_p_units": "angular",
        "rates_file": None,
        "off_resonance_mhz": cw.DEFAULT_OFF_RESONANCE_MHZ,
        "asymptotic_omega_r_mhz": cw.DEFAULT_ASYMPTOTIC_OMEGA_R_MHZ,
    },
    "spectrum": {"f_grid_mhz": _lin(-8.0, 8.0, 1601)},
    "fringes": {
        "l_ihb_mhz": [0.1, 0.3, 1.0],
        "l_dav": 0.0,
        "omega_r_mhz": 5.0,
        "drive_detuning_mhz": 1.2,
        "b_field_ut": 0.0,
    },
    "qmap": {
        "l_ihb_grid_mhz": _lin(0.0, 1.5, 16),
        "detuning_grid_mhz": _lin(0.0, 5.0, 51),
        "l_dav": 0.0,
        "omega_r_mhz": 3.0,
    },
    "spectra": {
        "l_ihb_mhz": 0.0,
        "l_dav": 0.0,
        "pulsed_omega_r_mhz": 2.0,
        "cw_omega_r_mhz": 2.0,
        "cw_gamma_p_mhz": 1.0,
    },
    "compare": {
        "mode": "grid",
        "l_ihb_grid_mhz": list(comparison.DEFAULT_L_IHB_GRID),
        "l_dav_grid": list(comparison.DEFAULT_L_DAV_GRID),
        "plateau_l_ihb_mhz": [0.1, 0.3, 1.0],
        "plateau_omega_r_grid_mhz": [1.0, 2.0, 3.0, 5.0, 10.0],
        "distribution_file": None,
        "measured_l_dav_grid": [0.0, 0.3, 0.5, 0.8],
        "measured_ramsey_omega_r_grid_mhz": [1.0, 3.0, 10.0],
    },
    "output": {"dir": "out", "cache_dir": None},
    "jobs": 1,
}


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# Config loading and validation
# ---------------------------------------------------------------------------

def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and not _is_grid_spec(base[key]):
            if not isinstance(value, dict):
                raise ConfigError(f"'{where}' must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _is_grid_spec(d) -> bool:
    return isinstance(d, dict) and "start" in d and "num" in d


def _parse_scalar(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(raw: dict, assignment: str) -> None:
    """Apply one ``section.key=value`` override; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got '{assignment}'")
    dotted, text = assignment.split("=", 1)
    parts = [p for p in dotted.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"--set has an empty key in '{assignment}'")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"'{dotted}' does not name a config entry")
    node[parts[-1]] = _parse_scalar(text)


def resolve_grid(spec, name: str) -> np.ndarray:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        spec = [spec]
    if isinstance(spec, list):
        try:
            arr = np.asarray(spec, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(f"'{name}' must be a list of numbers") from None
    elif isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "num", "spacing"}
        if unknown:
            raise ConfigError(f"unknown key(s) {sorted(unknown)} in grid '{name}'")
        try:
            start, stop, num = float(spec["start"]), float(spec.get("stop", spec["start"])), spec["num"]
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"grid '{name}' needs numeric start, stop and num") from None
        if not isinstance(num, int) or isinstance(num, bool) or num < 0:
            raise ConfigError(f"grid '{name}': num must be a non-negative integer")
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            arr = np.linspace(start, stop, num)
        elif spacing == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError(f"grid '{name}': log spacing needs positive bounds")
            arr = np.geomspace(start, stop, num)
        else:
            raise ConfigError(f"grid '{name}': spacing must be 'linear' or 'log'")
    else:
        raise ConfigError(f"'{name}' must be a list or a grid object")
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError(f"grid '{name}' is empty")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"grid '{name}' contains non-finite values")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ConfigError(f"grid '{name}' must be strictly increasing")
    return arr


def _num(section: dict, key: str, where: str, *, minimum=None, strict=False, upper=None) -> float:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{where}.{key}' must be a number")
    value = float(value)
    if math.isnan(value):
        raise ConfigError(f"'{where}.{key}' is NaN")
    if minimum is not None and (value < minimum or (strict and value == minimum)):
        op = ">" if strict else ">="
        raise ConfigError(f"'{where}.{key}' must be {op} {minimum}")
    if upper is not None and value >= upper:
        raise ConfigError(f"'{where}.{key}' must be < {upper}")
    return value


def _count(section: dict, key: str, where: str) -> int:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"'{where}.{key}' must be a positive integer")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; ``raw`` keeps the merged JSON document."""

    raw: dict
    comparison: comparison.ComparisonConfig
    jobs: int
    out_dir: Path
    cache_dir: Optional[Path]

    @classmethod
    def from_dict(cls, user: dict, base_dir: Path = Path(".")) -> "RunConfig":
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        raw = _merge(DEFAULT_CONFIG, user)
        e, d, r, p, c = raw["ensemble"], raw["dephasing"], raw["ramsey"], raw["pulsed"], raw["cw"]

        n_delta, n_alpha = _count(e, "n_delta", "ensemble"), _count(e, "n_alpha", "ensemble")
        gamma_pure = _num(d, "gamma_pure_per_us", "dephasing", minimum=0)
        try:
            form = spin.canonical_dephasing_form(d["form"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"'dephasing.form': {exc}") from None
        if r["objective"] not in ramsey.OBJECTIVES:
            raise ConfigError(f"'ramsey.objective' must be one of {ramsey.OBJECTIVES}")
        if c["gamma_p_units"] not in cw.GAMMA_P_UNITS:
            raise ConfigError(f"'cw.gamma_p_units' must be one of {cw.GAMMA_P_UNITS}")

        rates_file = c["rates_file"]
        try:
            rates = cw.load_rates(_resolve_path(rates_file, base_dir) if rates_file else None)
        except cw.RatesFileError as exc:
            raise ConfigError(f"rates file: {exc}") from None

        tau = resolve_grid(r["tau_grid_us"], "ramsey.tau_grid_us")
        if tau[0] < 0:
            raise ConfigError("'ramsey.tau_grid_us' must be non-negative")
        b = resolve_grid(r["b_grid_ut"], "ramsey.b_grid_ut")
        try:
            ramsey._check_b_grid(b)
        except ValueError as exc:
            raise ConfigError(f"'ramsey.b_grid_ut': {exc}") from None

        cmp_section = raw["compare"]
        if cmp_section["mode"] not in COMPARE_MODES:
            raise ConfigError(f"'compare.mode' must be one of {COMPARE_MODES}")
        positive = {
            "pulsed.omega_r_grid_mhz": resolve_grid(p["omega_r_grid_mhz"], "pulsed.omega_r_grid_mhz"),
            "cw.omega_r_grid_mhz": resolve_grid(c["omega_r_grid_mhz"], "cw.omega_r_grid_mhz"),
            "cw.gamma_p_grid_mhz": resolve_grid(c["gamma_p_grid_mhz"], "cw.gamma_p_grid_mhz"),
        }
        for name, grid in positive.items():
            if grid[0] <= 0:
                raise ConfigError(f"'{name}' must be positive")
        l_dav_grid = resolve_grid(cmp_section["l_dav_grid"], "compare.l_dav_grid")
        l_ihb_grid = resolve_grid(cmp_section["l_ihb_grid_mhz"], "compare.l_ihb_grid_mhz")
        try:
            cfg = comparison.ComparisonConfig(
                l_ihb_grid=l_ihb_grid,
                l_dav_grid=l_dav_grid,
                ramsey_omega_r=_num(r, "omega_r_mhz", "ramsey", minimum=0, strict=True),
                ramsey_tau_grid=tau,
                ramsey_b_grid=b,
                ramsey_detuning_grid=resolve_grid(r["detuning_grid_mhz"], "ramsey.detuning_grid_mhz"),
                ramsey_objective=r["objective"],
                pulsed_omega_r_grid=positive["pulsed.omega_r_grid_mhz"],
                cw_omega_r_grid=positive["cw.omega_r_grid_mhz"],
                cw_gamma_p_grid=positive["cw.gamma_p_grid_mhz"],
                f_grid=resolve_grid(raw["spectrum"]["f_grid_mhz"], "spectrum.f_grid_mhz"),
                gamma_pure=gamma_pure,
                dephasing_form=form,
                n_delta=n_delta,
                n_alpha=n_alpha,
                rates=rates,
                gamma_p_units=c["gamma_p_units"],
                off_resonance_mhz=_num(c, "off_resonance_mhz", "cw", minimum=0, strict=True),
                asymptotic_omega_r_mhz=_num(c, "asymptotic_omega_r_mhz", "cw", minimum=0, strict=True),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

        _validate_subcommand_sections(raw)

        jobs = raw["jobs"]
        if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
            raise ConfigError("'jobs' must be a positive integer")
        out = raw["output"]
        if not isinstance(out["dir"], str) or not out["dir"]:
            raise ConfigError("'output.dir' must be a non-empty path")
        cache = out["cache_dir"]
        return cls(
            raw=raw,
            comparison=cfg,
            jobs=jobs,
            out_dir=_resolve_path(out["dir"], base_dir),
            cache_dir=_resolve_path(cache, base_dir) if cache else None,
        )


def _resolve_path(value, base_dir: Path) -> Path:
    if not isinstance(value, str):
        raise ConfigError(f"expected a path string, got {value!r}")
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def _validate_subcommand_sections(raw: dict) -> None:
    fr = raw["fringes"]
    resolve_grid(fr["l_ihb_mhz"], "fringes.l_ihb_mhz")
    _num(fr, "l_dav", "fringes", minimum=0, upper=1)
    _num(fr, "omega_r_mhz", "fringes", minimum=0, strict=True)
    _num(fr, "drive_detuning_mhz", "fringes")
    _num(fr, "b_field_ut", "fringes")

    qm = raw["qmap"]
    resolve_grid(qm["l_ihb_grid_mhz"], "qmap.l_ihb_grid_mhz")
    resolve_grid(qm["detuning_grid_mhz"], "qmap.detuning_grid_mhz")
    _num(qm, "l_dav", "qmap", minimum=0, upper=1)
    _num(qm, "omega_r_mhz", "qmap", minimum=0, strict=True)

    sp = raw["spectra"]
    _num(sp, "l_ihb_mhz", "spectra", minimum=0)
    _num(sp, "l_dav", "spectra", minimum=0, upper=1)
    for key in ("pulsed_omega_r_mhz", "cw_omega_r_mhz", "cw_gamma_p_mhz"):
        _num(sp, key, "spectra", minimum=0, strict=True)

    cm = raw["compare"]
    resolve_grid(cm["plateau_l_ihb_mhz"], "compare.plateau_l_ihb_mhz")
    resolve_grid(cm["plateau_omega_r_grid_mhz"], "compare.plateau_omega_r_grid_mhz")
    lds = resolve_grid(cm["measured_l_dav_grid"], "compare.measured_l_dav_grid")
    if np.any((lds < 0) | (lds >= 1)):
        raise ConfigError("'compare.measured_l_dav_grid' values must lie in [0, 1)")
    resolve_grid(cm["measured_ramsey_omega_r_grid_mhz"], "compare.measured_ramsey_omega_r_grid_mhz")
    if cm["mode"] == "measured" and not cm["distribution_file"]:
        raise ConfigError("compare.mode 'measured' needs 'compare.distribution_file'")


def load_run_config(path: Optional[str], overrides=()) -> RunConfig:
    raw: dict = {}
    base_dir = Path(".")
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        base_dir = p.parent
    for assignment in overrides:
        apply_override(raw, assignment)
    return RunConfig.from_dict(raw, base_dir)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _tag(value: float) -> str:
    return repr(float(value)).replace(".", "p").replace("-", "m")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fringes(cfg: RunConfig) -> list[Path]:
    """One ``tau_us,contrast`` CSV per requested L_IHB plus a q summary."""
    fr, cc = cfg.raw["fringes"], cfg.comparison
    written, summary = [], []
    for l_ihb in resolve_grid(fr["l_ihb_mhz"], "fringes.l_ihb_mhz"):
        ens = build_ensemble(float(l_ihb), fr["l_dav"], cc.n_delta, cc.n_alpha)
        curve = ramsey.fringe_curve(
            ens, fr["omega_r_mhz"], fr["drive_detuning_mhz"], cc.ramsey_tau_grid,
            cc.gamma_pure, fr["b_field_ut"], cc.dephasing_form,
        )
        path = write_csv(
            cfg.out_dir / f"fringes_lihb_{_tag(l_ihb)}.csv",
            ("tau_us", "contrast"),
            zip(curve.tau_grid, curve.contrast),
        )
        written.append(path)
        summary.append({"l_ihb_mhz": float(l_ihb), "q": ramsey.fringe_quality_q(curve), "file": path.name})
    written.append(write_json(cfg.out_dir / "fringes_summary.json", summary))
    return written


def cmd_qmap(cfg: RunConfig) -> list[Path]:
    """q over (drive detuning, L_IHB) as ``detuning_mhz,l_ihb_mhz,q``."""
    qm, cc = cfg.raw["qmap"], cfg.comparison
    detunings = resolve_grid(qm["detuning_grid_mhz"], "qmap.detuning_grid_mhz")
    rows = []
    for l_ihb in resolve_grid(qm["l_ihb_grid_mhz"], "qmap.l_ihb_grid_mhz"):
        ens = build_ensemble(float(l_ihb), qm["l_dav"], cc.n_delta, cc.n_alpha)
        q = ramsey.q_scan(ens, qm["omega_r_mhz"], detunings, cc.ramsey_tau_grid, cc.gamma_pure, cc.dephasing_form)
        rows.extend((float(d), float(l_ihb), float(v)) for d, v in zip(detunings, q))
    rows.sort(key=lambda t: (t[0], t[1]))
    return [write_csv(cfg.out_dir / "qmap.csv", ("detuning_mhz", "l_ihb_mhz", "q"), rows)]


def cmd_spectra(cfg: RunConfig) -> list[Path]:
    """pi-pulse and CW spectra, each as ``f_offset_mhz,contrast``, plus a combined table."""
    sp, cc = cfg.raw["spectra"], cfg.comparison
    ens = build_ensemble(sp["l_ihb_mhz"], sp["l_dav"], cc.n_delta, cc.n_alpha)
    f = np.asarray(cc.f_grid)
    ps = pulsed.pulsed_spectrum(
        ens, pulsed.PulsedOdmrParams(sp["pulsed_omega_r_mhz"], f, cc.gamma_pure, cc.dephasing_form)
    )
    params = cw.CwParams(
        gamma_p=sp["cw_gamma_p_mhz"],
        omega_r=sp["cw_omega_r_mhz"],
        t2_star=cc.t2_star,
        rates=cc.rates,
        gamma_p_units=cc.gamma_p_units,
        off_resonance_mhz=cc.off_resonance_mhz,
        asymptotic_omega_r_mhz=cc.asymptotic_omega_r_mhz,
    )
    cs = cw.cw_spectrum(ens, params, f)
    header = ("f_offset_mhz", "contrast")
    return [
        write_csv(cfg.out_dir / "spectrum_pulsed.csv", header, zip(f, ps.contrast)),
        write_csv(cfg.out_dir / "spectrum_cw.csv", header, zip(f, cs.contrast)),
        write_csv(
            cfg.out_dir / "spectra.csv",
            ("f_offset_mhz", "contrast_pulsed", "contrast_cw"),
            zip(f, ps.contrast, cs.contrast),
        ),
    ]


def cmd_compare(cfg: RunConfig) -> list[Path]:
    cm, cc = cfg.raw["compare"], cfg.comparison
    mode = cm["mode"]
    if mode == "grid":
        rows = comparison.run_comparison(cc, jobs=cfg.jobs, cache_dir=cfg.cache_dir)
        return [
            write_csv(cfg.out_dir / "comparison.csv", comparison.CSV_COLUMNS, (r.csv_values() for r in rows)),
            write_json(cfg.out_dir / "comparison.json", [r.to_dict() for r in rows]),
        ]
    if mode == "plateau":
        table = comparison.rabi_plateau_scan(
            resolve_grid(cm["plateau_l_ihb_mhz"], "compare.plateau_l_ihb_mhz"),
            resolve_grid(cm["plateau_omega_r_grid_mhz"], "compare.plateau_omega_r_grid_mhz"),
            cc,
            jobs=cfg.jobs,
        )
        return [
            write_csv(
                cfg.out_dir / "plateau.csv",
                ("l_ihb_mhz", "omega_r_mhz", "slope_ramsey", "detuning_mhz", "tau_opt_us"),
                table.rows(),
            )
        ]
    dist = _resolve_path(cm["distribution_file"], Path("."))
    rows = comparison.measured_distribution_run(
        dist,
        resolve_grid(cm["measured_l_dav_grid"], "compare.measured_l_dav_grid"),
        resolve_grid(cm["measured_ramsey_omega_r_grid_mhz"], "compare.measured_ramsey_omega_r_grid_mhz"),
        cc,
    )
    cols = comparison.MEASURED_COLUMNS
    return [write_csv(cfg.out_dir / "measured.csv", cols, ([r[k] for k in cols] for r in rows))]


COMMANDS = {"fringes": cmd_fringes, "qmap": cmd_qmap, "spectra": cmd_spectra, "compare": cmd_compare}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvsense",
        description="Slope comparison of Ramsey, pi-pulse ODMR and CW ODMR for NV ensembles.",
    )
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. ramsey.omega_r_mhz=5 (repeatable)")
    parser.add_argument("--jobs", type=int, help="worker processes (overrides jobs)")
    parser.add_argument("--validate", action="store_true", help="check the config and exit without computing")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = list(args.overrides)
    if args.out is not None:
        overrides.append(f"output.dir={json.dumps(args.out)}")
    if args.jobs is not None:
        overrides.append(f"jobs={args.jobs}")
    try:
        cfg = load_run_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate" or args.validate:
        print("config ok")
        return EXIT_OK

    try:
        written = COMMANDS[args.command](cfg)
    except DistributionFileNotFound as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DistributionLoadError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArithmeticError, ValueError, comparison.CellError) as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
