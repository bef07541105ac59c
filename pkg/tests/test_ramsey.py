import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from nvsense import pulsed, ramsey, spin
from nvsense.ensemble import EnsembleMember, build_ensemble
from nvsense.ramsey import RamseyParams, fringe_quality_q, ramsey_member_contrast

TWO_PI = 2 * np.pi
GAMMA_E = 0.028  # MHz / uT
SINGLE = build_ensemble(0.0, 0.0)


@pytest.mark.parametrize("omega_r", [0.5, 2.0, 10.0])
def test_back_to_back_half_pulses_invert(omega_r):
    c = ramsey_member_contrast(EnsembleMember(0.0, 1.0, 1.0), RamseyParams(omega_r))
    assert c == pytest.approx(1.0, abs=1e-12)


def test_member_contrast_matches_integrated_sequence():
    member = EnsembleMember(0.1, 0.8, 1.0)
    params = RamseyParams(5.0, 0.5, tau=0.7)
    ref = oracles.ramsey_by_integration(TWO_PI * (0.1 - 0.5), TWO_PI * 0.8 * 5.0, 0.05, 0.7, dt=1e-4)
    assert ramsey_member_contrast(member, params) == pytest.approx(ref, abs=1e-8)


def test_field_shifts_the_plus_one_branch():
    member = EnsembleMember(0.05, 0.9, 1.0)
    b = 2.5
    shifted = EnsembleMember(0.05 + GAMMA_E * b, 0.9, 1.0)
    p = RamseyParams(3.0, 1.0, tau=0.9)
    assert ramsey_member_contrast(member, p, b) == pytest.approx(ramsey_member_contrast(shifted, p), abs=1e-14)


def test_pulse_duration():
    assert RamseyParams(5.0).pulse_duration == pytest.approx(0.05)
    with pytest.raises(ValueError):
        RamseyParams(0.0)
    with pytest.raises(ValueError):
        RamseyParams(1.0, tau=-1.0)


@pytest.mark.parametrize("gamma", [0.0, 0.7])
@pytest.mark.parametrize("form", [spin.TRACE_PRESERVING, spin.LITERAL])
def test_vectorised_engine_matches_step_by_step(gamma, form):
    ens = build_ensemble(0.4, 0.3, 7, 3)
    taus = np.linspace(0, 3, 13)
    fast = ramsey.member_contrasts(ens, 4.0, 1.1, taus, 1.2, gamma, form)
    for i, m in enumerate(ens):
        for j, t in enumerate(taus):
            slow = ramsey_member_contrast(m, RamseyParams(4.0, 1.1, gamma, t, form), 1.2)
            assert fast[i, j] == pytest.approx(slow, abs=1e-12)


def test_single_member_fringes_are_periodic_in_detuning():
    det = 1.2
    period = 1 / det
    taus = np.linspace(0, 2, 201)
    a = ramsey.ensemble_fringes(SINGLE, 5.0, det, taus)
    b = ramsey.ensemble_fringes(SINGLE, 5.0, det, taus + period)
    assert np.allclose(a, b, atol=1e-12)
    # undamped: every period spans the same extremes
    curve = ramsey.ensemble_fringes(SINGLE, 5.0, det, np.linspace(0, 5, 5001))
    assert fringe_quality_q(curve) == pytest.approx(curve.max() - curve.min(), abs=1e-5)


def test_fringe_frequency_equals_detuning():
    taus = np.arange(0, 20.0, 0.01)
    c = ramsey.ensemble_fringes(SINGLE, 5.0, 1.2, taus)
    spec = np.abs(np.fft.rfft(c - c.mean()))
    freqs = np.fft.rfftfreq(taus.size, d=0.01)
    assert abs(freqs[np.argmax(spec)] - 1.2) <= freqs[1]


def test_tau_zero_equals_doubled_half_pulse():
    ens = build_ensemble(0.6, 0.4, 9, 4)
    c0 = ramsey.ensemble_fringes(ens, 3.0, 0.8, np.array([0.0]))[0]
    # a pi pulse at the intended Rabi frequency has the same length as two pi/2 pulses
    spec = pulsed.pulsed_spectrum(ens, pulsed.PulsedOdmrParams(3.0, np.array([0.8])))
    assert c0 == pytest.approx(spec.contrast[0], abs=1e-12)


def test_fringes_decay_on_broadening_timescale():
    ens = build_ensemble(0.3)
    curve = ramsey.fringe_curve(ens, 5.0, 1.2, np.linspace(0, 12, 2401))
    t, env = ramsey.fringe_envelope(curve)
    early = env[0]
    late = np.interp(3 / 0.3, t, env)
    assert late < 0.5 * early


# --- q figure of merit ----------------------------------------------------

def test_q_of_full_sinusoid_is_one():
    t = np.linspace(0, 3, 3001)
    assert fringe_quality_q(0.5 + 0.5 * np.cos(TWO_PI * t)) == pytest.approx(1.0, abs=1e-12)


def test_q_of_monotone_curve_is_zero():
    assert fringe_quality_q(np.exp(-np.linspace(0, 5, 50))) == 0.0


def test_q_needs_five_samples():
    with pytest.raises(ValueError):
        fringe_quality_q([0.1, 0.2, 0.1, 0.2])


def test_q_collapses_plateaus_and_skips_endpoints():
    # endpoint highs never count; the flat top is a single maximum
    c = np.array([1.0, 0.2, 0.6, 0.6, 0.6, 0.1, 0.7, 0.3, 0.5, 0.4, 0.9])
    imax, imin = ramsey.fringe_extrema(c)
    assert list(imax) == [3, 6, 8]
    assert list(imin) == [1, 5, 7, 9]
    assert fringe_quality_q(c) == pytest.approx(0.6 - 0.2)


def _brute_force_q(c):
    maxima, minima = [], []
    for i in range(1, len(c) - 1):
        if c[i] > c[i - 1] and c[i] > c[i + 1]:
            maxima.append(c[i])
        if c[i] < c[i - 1] and c[i] < c[i + 1]:
            minima.append(c[i])
    if len(maxima) < 2 or len(minima) < 2:
        return 0.0
    return sorted(maxima)[-2] - sorted(minima)[1]


def test_q_of_default_fringe_matches_brute_force():
    curve = ramsey.fringe_curve(build_ensemble(0.3), 5.0, 1.2)
    assert np.all(np.diff(curve.contrast) != 0)  # no plateaus: the simple scan applies
    assert fringe_quality_q(curve) == pytest.approx(_brute_force_q(curve.contrast), abs=1e-15)
    assert 0.3 < fringe_quality_q(curve) < 0.8


def test_single_member_q_near_one():
    det, q = ramsey.optimize_drive_detuning(SINGLE, 5.0)
    assert q > 0.99
    qs = ramsey.q_scan(SINGLE, 5.0, [1.0, 2.0, 3.0])
    assert np.all(qs > 0.99)


def test_q_map_trends_with_broadening():
    ls = [0.1, 0.3, 0.5, 0.7, 1.0]
    out = [ramsey.optimize_drive_detuning(build_ensemble(l), 3.0) for l in ls]
    dets, qs = zip(*out)
    assert all(b < a for a, b in zip(qs, qs[1:]))
    assert all(b >= a for a, b in zip(dets, dets[1:]))


def test_detuning_argmax_over_three_points():
    ens = build_ensemble(0.3)
    grid = [0.5, 1.5, 3.0]
    direct = [fringe_quality_q(ramsey.fringe_curve(ens, 3.0, d)) for d in grid]
    det, q = ramsey.optimize_drive_detuning(ens, 3.0, detuning_grid=grid)
    assert det == grid[int(np.argmax(direct))]
    assert q == max(direct)


def test_detuning_ties_go_to_smaller_value():
    det, q = ramsey.optimize_drive_detuning(SINGLE, 5.0, detuning_grid=[0.0, 0.0001])
    assert (det, q) == (0.0, 0.0)
    grid = np.array([2.0, 1.0, 3.0])
    single = build_ensemble(0.0)
    q = ramsey.q_scan(single, 1000.0, np.sort(grid), np.linspace(0, 5, 5001))
    det, _ = ramsey.optimize_drive_detuning(single, 1000.0, detuning_grid=grid, tau_grid=np.linspace(0, 5, 5001))
    assert det == np.sort(grid)[int(np.argmax(q))]


# --- field sweep ----------------------------------------------------------

def test_slope_from_hand_computed_map():
    b = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    taus = np.array([0.5, 1.0])
    cmap = np.array([[0.10, 0.50], [0.20, 0.45], [0.40, 0.30], [0.45, 0.20], [0.50, 0.05]])
    # tau 0.5: |0.40-0.10|/2, |0.45-0.20|/2, |0.50-0.40|/2 -> 0.15
    # tau 1.0: 0.075, 0.125, 0.125 -> 0.125
    res = ramsey.slope_from_map(cmap, b, taus)
    assert res["dc_db_per_ut"] == pytest.approx(0.15)
    assert res["tau_opt"] == 0.5
    assert res["b_at_max_ut"] == -1.0
    assert res["slope_per_mhz"] == pytest.approx(0.15 / GAMMA_E)


def test_single_member_field_slope_grows_with_tau():
    b = np.linspace(-3.6, 3.6, 721)
    for tau in (1.0, 2.0, 4.0):
        # C(B) ~ cos^2(pi (gamma_e B - det) tau); det = 1/(4 tau) puts B = 0 at quadrature
        cmap = ramsey.contrast_map(SINGLE, 1000.0, 0.25 / tau, b, np.array([tau]))
        res = ramsey.slope_from_map(cmap, b, np.array([tau]))
        assert res["dc_db_per_ut"] == pytest.approx(np.pi * GAMMA_E * tau, rel=2e-3)


def test_slope_bounded_by_grid_step():
    res = ramsey.ramsey_slope(build_ensemble(0.5, 0, 11, 1), 5.0)
    db = ramsey.DEFAULT_B_GRID[1] - ramsey.DEFAULT_B_GRID[0]
    assert 0 <= res.slope_per_mhz <= 1 / (2 * db) / GAMMA_E


def test_ramsey_slope_is_reproducible():
    ens = build_ensemble(0.3, 0.0, 11, 1)
    a = ramsey.ramsey_slope(ens, 5.0)
    b = ramsey.ramsey_slope(ens, 5.0)
    assert a == b


def test_slope_objective_never_loses_to_q_objective():
    ens = build_ensemble(0.2, 0.0, 11, 1)
    grid = np.linspace(0.5, 3.0, 6)
    by_q = ramsey.ramsey_slope(ens, 3.0, detuning_grid=grid)
    by_slope = ramsey.ramsey_slope(ens, 3.0, detuning_grid=grid, objective="slope")
    assert by_slope.slope_per_mhz >= by_q.slope_per_mhz
    assert by_slope.auxiliary["objective"] == "slope"


def test_ramsey_slope_argument_errors():
    with pytest.raises(ValueError):
        ramsey.ramsey_slope(SINGLE, 5.0, b_grid=[0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        ramsey.ramsey_slope(SINGLE, 5.0, tau_grid=[])
    with pytest.raises(ValueError):
        ramsey.ramsey_slope(SINGLE, 5.0, detuning_grid=[])
    with pytest.raises(ValueError):
        ramsey.ramsey_slope(SINGLE, 5.0, objective="fastest")


@given(
    st.floats(-1.0, 1.0),
    st.floats(0.2, 1.0),
    st.floats(0.5, 10.0),
    st.floats(-3.0, 3.0),
    st.floats(0.0, 5.0),
    st.floats(0.0, 2.0),
)
def test_member_contrast_is_a_probability(delta, alpha, omega, det, tau, gamma):
    c = ramsey_member_contrast(EnsembleMember(delta, alpha, 1.0), RamseyParams(omega, det, gamma, tau))
    assert -1e-10 <= c <= 1 + 1e-10
