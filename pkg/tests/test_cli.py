import csv
import json
import time

import numpy as np
import pytest

from nvsense import cli, ramsey
from nvsense.ensemble import build_ensemble

UNITLESS_KEYS = {
    "n_delta", "n_alpha", "form", "objective", "gamma_p_units", "rates_file", "l_dav",
    "mode", "l_dav_grid", "distribution_file", "measured_l_dav_grid", "dir", "cache_dir", "jobs",
}
UNIT_SUFFIXES = ("_mhz", "_us", "_ut", "_per_us")


def run(tmp_path, command, *sets, config=None):
    argv = [command, "--out", str(tmp_path / "out")]
    if config is not None:
        p = tmp_path / "config.json"
        p.write_text(json.dumps(config))
        argv += ["--config", str(p)]
    for s in sets:
        argv += ["--set", s]
    return cli.main(argv)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _leaves(d, prefix=""):
    for k, v in d.items():
        if isinstance(v, dict) and not cli._is_grid_spec(v):
            yield from _leaves(v, prefix + k + ".")
        else:
            yield k


def test_every_physical_key_carries_units():
    for key in _leaves(cli.DEFAULT_CONFIG):
        assert key in UNITLESS_KEYS or key.endswith(UNIT_SUFFIXES), key


def test_validate_default_config(tmp_path, capsys):
    assert cli.main(["validate"]) == 0
    assert "config ok" in capsys.readouterr().out


def test_validate_flag_does_not_compute(tmp_path):
    out = tmp_path / "dry"
    assert cli.main(["compare", "--validate", "--out", str(out)]) == 0
    assert not out.exists()


@pytest.mark.parametrize(
    "config",
    [
        {"bogus": 1},
        {"ramsey": {"omega_r": 5.0}},
        {"ramsey": {"omega_r_mhz": -1.0}},
        {"ensemble": {"n_delta": 0}},
        {"dephasing": {"form": "mystery"}},
        {"compare": {"l_dav_grid": [0.0, 1.0]}},
        {"compare": {"mode": "measured"}},
        {"ramsey": {"b_grid_ut": [0.0, 1.0, 2.0]}},
        {"cw": {"gamma_p_grid_mhz": [0.0, 1.0]}},
        {"jobs": 0},
        {"ramsey": {"tau_grid_us": {"start": 0, "stop": 5, "num": 10, "step": 1}}},
    ],
)
def test_config_errors_exit_2(tmp_path, config):
    assert run(tmp_path, "validate", config=config) == cli.EXIT_CONFIG


def test_unreadable_config_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["validate", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert cli.main(["validate", "--config", str(tmp_path / "none.json")]) == cli.EXIT_CONFIG


def test_set_overrides_parse_json():
    raw = {}
    cli.apply_override(raw, "ramsey.omega_r_mhz=3.5")
    cli.apply_override(raw, 'dephasing.form=literal')
    cli.apply_override(raw, "compare.l_ihb_grid_mhz=[0.1, 0.2]")
    assert raw == {"ramsey": {"omega_r_mhz": 3.5}, "dephasing": {"form": "literal"},
                   "compare": {"l_ihb_grid_mhz": [0.1, 0.2]}}
    with pytest.raises(cli.ConfigError):
        cli.apply_override(raw, "no_equals_sign")


def test_grid_specs():
    assert np.array_equal(cli.resolve_grid([1, 2], "g"), [1.0, 2.0])
    assert np.allclose(cli.resolve_grid({"start": 1, "stop": 100, "num": 3, "spacing": "log"}, "g"), [1, 10, 100])
    for bad in ([], {"start": 0, "stop": 1, "num": 0}, [2.0, 1.0], "abc", {"start": 0, "num": 2.5}):
        with pytest.raises(cli.ConfigError):
            cli.resolve_grid(bad, "g")


# --- fringes --------------------------------------------------------------

def test_fringes_three_curves_deterministic(tmp_path):
    assert run(tmp_path, "fringes") == 0
    files = sorted((tmp_path / "out").glob("fringes_lihb_*.csv"))
    assert len(files) == 3
    first = {f.name: f.read_bytes() for f in files}
    assert run(tmp_path, "fringes") == 0
    assert {f.name: f.read_bytes() for f in files} == first
    rows = read_csv(files[0])
    assert rows[0] == ["tau_us", "contrast"]
    assert len(rows) == 1002
    raw = files[0].read_bytes()
    assert b"\r" not in raw
    summary = json.loads((tmp_path / "out" / "fringes_summary.json").read_text())
    qs = [s["q"] for s in sorted(summary, key=lambda s: s["l_ihb_mhz"])]
    assert qs[0] > qs[1] > qs[2]


def test_fringes_empty_tau_grid_exit_2(tmp_path):
    assert run(tmp_path, "fringes", "ramsey.tau_grid_us=[]") == cli.EXIT_CONFIG
    assert run(tmp_path, "fringes", 'ramsey.tau_grid_us={"start": 0, "stop": 5, "num": 0}') == cli.EXIT_CONFIG


def test_fringes_compute_error_exit_3(tmp_path):
    # a 3-sample curve is valid to simulate but too short to grade
    assert run(tmp_path, "fringes", "ramsey.tau_grid_us=[0, 1, 2]") == cli.EXIT_COMPUTE


def test_output_path_blocked_exit_4(tmp_path):
    blocker = tmp_path / "out"
    blocker.write_text("not a directory")
    assert cli.main(["fringes", "--out", str(blocker)]) == cli.EXIT_IO


# --- qmap -----------------------------------------------------------------

def test_qmap_single_cell(tmp_path):
    assert run(tmp_path, "qmap", "qmap.l_ihb_grid_mhz=[0.3]", "qmap.detuning_grid_mhz=[1.2]") == 0
    rows = read_csv(tmp_path / "out" / "qmap.csv")
    assert rows[0] == ["detuning_mhz", "l_ihb_mhz", "q"]
    assert len(rows) == 2


def test_qmap_two_by_two_matches_direct_q(tmp_path):
    assert run(tmp_path, "qmap", "qmap.l_ihb_grid_mhz=[0.1, 0.5]", "qmap.detuning_grid_mhz=[1.0, 2.5]") == 0
    rows = read_csv(tmp_path / "out" / "qmap.csv")[1:]
    for d, l, q in rows:
        curve = ramsey.fringe_curve(build_ensemble(float(l)), 3.0, float(d))
        assert float(q) == ramsey.fringe_quality_q(curve)


def test_qmap_quality_falls_with_broadening(tmp_path):
    assert run(tmp_path, "qmap", "qmap.l_ihb_grid_mhz=[0.1, 0.3, 0.6, 1.0]") == 0
    rows = read_csv(tmp_path / "out" / "qmap.csv")[1:]
    best = {}
    for d, l, q in rows:
        best[float(l)] = max(best.get(float(l), 0.0), float(q))
    qs = [best[l] for l in sorted(best)]
    assert all(b < a for a, b in zip(qs, qs[1:]))


# --- spectra --------------------------------------------------------------

def test_spectra_default_pair(tmp_path):
    assert run(tmp_path, "spectra") == 0
    out = tmp_path / "out"
    combined = read_csv(out / "spectra.csv")
    assert combined[0] == ["f_offset_mhz", "contrast_pulsed", "contrast_cw"]
    for name in ("spectrum_pulsed.csv", "spectrum_cw.csv"):
        assert read_csv(out / name)[0] == ["f_offset_mhz", "contrast"]
    data = np.array(combined[1:], dtype=float)
    f, pulsed_c, cw_c = data.T
    # single member: the pulsed column is the analytic pi-pulse lineshape
    w2 = 2.0**2 + f**2
    analytic = 4.0 / w2 * np.sin(np.pi * np.sqrt(w2) / 4.0) ** 2
    assert np.allclose(pulsed_c, analytic, atol=1e-12)
    assert pulsed_c[np.argmin(np.abs(f))] == pytest.approx(1.0)
    assert cw_c.argmax() == np.argmin(np.abs(f))


def test_spectra_zero_size_grid_exit_2(tmp_path):
    assert run(tmp_path, "spectra", 'spectrum.f_grid_mhz={"start": -8, "stop": 8, "num": 0}') == cli.EXIT_CONFIG


# --- compare --------------------------------------------------------------

def test_compare_one_cell_and_cache(tmp_path):
    sets = ("compare.l_ihb_grid_mhz=[0.3]", "compare.l_dav_grid=[0]", f'output.cache_dir="{tmp_path / "cache"}"')
    t0 = time.perf_counter()
    assert run(tmp_path, "compare", *sets) == 0
    cold = time.perf_counter() - t0
    first = (tmp_path / "out" / "comparison.csv").read_bytes()
    t0 = time.perf_counter()
    assert run(tmp_path, "compare", *sets) == 0
    warm = time.perf_counter() - t0
    assert (tmp_path / "out" / "comparison.csv").read_bytes() == first
    assert warm < cold
    rows = read_csv(tmp_path / "out" / "comparison.csv")
    assert tuple(rows[0]) == cli.comparison.CSV_COLUMNS
    row = dict(zip(rows[0], rows[1]))
    assert float(row["ratio_pulsed"]) >= 1.0
    diag = json.loads((tmp_path / "out" / "comparison.json").read_text())
    assert diag[0]["diagnostics"]["ramsey"]["chosen_detuning"] == float(row["detuning_mhz"])


def test_compare_plateau_mode(tmp_path):
    assert run(tmp_path, "compare", "compare.mode=plateau", "compare.plateau_l_ihb_mhz=[0.2]",
               "compare.plateau_omega_r_grid_mhz=[2, 4]") == 0
    rows = read_csv(tmp_path / "out" / "plateau.csv")
    assert rows[0] == ["l_ihb_mhz", "omega_r_mhz", "slope_ramsey", "detuning_mhz", "tau_opt_us"]
    assert len(rows) == 3


def test_compare_measured_mode(tmp_path):
    dist = tmp_path / "hist.csv"
    dist.write_text("-0.2,1\n0.0,2\n0.2,1\n")
    sets = ("compare.mode=measured", f'compare.distribution_file="{dist}"',
            "compare.measured_l_dav_grid=[0]", "compare.measured_ramsey_omega_r_grid_mhz=[10]")
    assert run(tmp_path, "compare", *sets) == 0
    rows = read_csv(tmp_path / "out" / "measured.csv")
    assert tuple(rows[0]) == cli.comparison.MEASURED_COLUMNS and len(rows) == 2


def test_compare_measured_errors(tmp_path):
    missing = ("compare.mode=measured", f'compare.distribution_file="{tmp_path / "nope.csv"}"')
    assert run(tmp_path, "compare", *missing) == cli.EXIT_IO
    bad = tmp_path / "bad.csv"
    bad.write_text("0.1,-1\n")
    negative = ("compare.mode=measured", f'compare.distribution_file="{bad}"')
    assert run(tmp_path, "compare", *negative) == cli.EXIT_CONFIG
