import math

import numpy as np
import pytest

from nlslab.closed_form import NlsParams, TwoModeData, two_mode_phase
from nlslab.errors import InfeasibleError
from nlslab.experiments import (
    Caps,
    ExperimentParams,
    ExperimentReport,
    bound_report,
    choose_parameters_thm1,
    default_M,
    default_two_mode_data,
    error_exponent,
    horizon,
    measure_thm1_rate,
    measure_thm2_rate,
    run_thm1,
    run_thm2,
    thm1_params_at,
    thm2_phase_rate,
    verify_approximation_bound,
)
from nlslab.io import dumps, loads
from nlslab.solver import SolverConfig


def thm1_conditions_by_hand(rho, delta, s, N, c=0.1, margin=2 * math.pi, smallness=0.01):
    """Evaluate the selection inequalities directly from the definitions.

    Norms use the weight (1+|n|)^(2s) on the two occupied frequencies, so N
    may be far too large for a dense coefficient array.
    """
    rp = rho / 4
    high = delta * N ** (-s) / 4
    norm_u0 = rp
    norm_ut0 = math.sqrt(rp ** 2 + (1 + N) ** (2 * s) * high ** 2)
    distance = (1 + N) ** s * high
    alpha, beta = rp / N, delta * N ** (-s) / (4 * N)
    sigma = max(alpha, beta)
    t_star = min(delta, c * N ** -2 * sigma ** -2 * math.log(1 / sigma))
    return (
        distance < delta
        and max(norm_u0, norm_ut0) <= rho
        and 2 * beta ** 2 * N ** 2 * t_star >= margin
        and N ** -0.5 * delta ** 3 <= smallness * rho
        and sigma <= 0.25
    )


# -- bound verification ------------------------------------------------------------

def test_horizon():
    assert horizon(0.1, 3) == pytest.approx(0.1 * 100 * math.log(10))
    assert horizon(0.1, 5, 1.0) == pytest.approx(1e4 * math.log(10))


def test_default_data_respects_sigma():
    data = default_two_mode_data(0.05)
    assert abs(data.alpha) == pytest.approx(0.025)
    assert data.beta == 0.05
    assert data.sigma == 0.05


def test_bound_ratio_starts_at_zero():
    trace = verify_approximation_bound(NlsParams(3, 1), default_two_mode_data(0.1), samples=50)
    assert trace.ratio[0] == 0
    assert trace.corrected_ratio[0] == 0
    assert np.all(np.isfinite(trace.ratio))


def test_plane_wave_data_has_zero_ratio():
    trace = verify_approximation_bound(NlsParams(3, -1), TwoModeData(0.05, 0), samples=50)
    assert trace.max_ratio < 1e-8


@pytest.mark.parametrize("omega", [1, -1])
def test_cubic_ratio_is_sigma_uniform(omega):
    params = NlsParams(3, omega)
    traces = [verify_approximation_bound(params, default_two_mode_data(s), samples=100) for s in (0.1, 0.05)]
    rep = bound_report(params, traces)
    assert rep.measured["spread"] < 2
    assert rep.passed


def test_certification_on_doubled_grid():
    trace = verify_approximation_bound(NlsParams(3, 1), default_two_mode_data(0.1), samples=50, certify=True)
    assert trace.certification["gridsize"] == 32
    assert trace.certification["relative_change"] < 1e-6


def test_sigma_must_be_below_one():
    with pytest.raises(ValueError):
        verify_approximation_bound(NlsParams(), TwoModeData(0, 0))


def test_cubic_error_exponent_is_three():
    fit = error_exponent(NlsParams(3, 1), [0.05, 0.1, 0.2], samples=100)
    assert fit["exponent"] == pytest.approx(3, abs=0.15)


# -- cubic construction ---------------------------------------------------------------

def test_parameter_preconditions():
    with pytest.raises(ValueError):
        choose_parameters_thm1(1.0, 2.0, -0.25)
    with pytest.raises(ValueError):
        choose_parameters_thm1(1.0, 0.1, -0.75)
    with pytest.raises(ValueError):
        choose_parameters_thm1(1.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        ExperimentParams(rho=1, delta=0.5, s=-0.25)


def test_default_budget_is_infeasible_under_cap():
    with pytest.raises(InfeasibleError) as info:
        choose_parameters_thm1(1.0, 0.1, -0.25)
    err = info.value
    assert err.required_log2_n > 16
    assert not err.details["conditions_at_cap"]["rotation"]
    assert err.details["conditions_at_cap"]["closeness"]
    # the frequency reported as sufficient really is, and the cap really is not
    n_req = 2.0 ** err.required_log2_n
    assert thm1_conditions_by_hand(1.0, 0.1, -0.25, n_req)
    assert not thm1_conditions_by_hand(1.0, 0.1, -0.25, 2 ** 16)


def test_selection_returns_smallest_admissible_frequency():
    params = choose_parameters_thm1(1.0, 0.1, -0.25, rotation_margin=0.01)
    N = params.N
    assert all(params.conditions.values())
    assert thm1_conditions_by_hand(1.0, 0.1, -0.25, N, margin=0.01)
    assert not thm1_conditions_by_hand(1.0, 0.1, -0.25, N - 1, margin=0.01)
    assert params.rho_prime == 0.25


def test_closeness_holds_for_every_frequency_near_s_zero():
    for N in (1, 10, 1000, 2 ** 16):
        assert thm1_params_at(1.0, 0.1, -0.01, N).conditions["closeness"]


def test_thm1_run_agrees_with_direct_evolution():
    rep = run_thm1(thm1_params_at(1.0, 0.1, -0.25, 4), samples=50)
    assert rep.verdicts["rescaling_consistency"]
    assert rep.measured["rescaling_mismatch"] <= 1e-6
    assert rep.measured["gap_at_zero"] == 0
    assert rep.verdicts["closeness"]
    assert rep.verdicts["budget"]


def test_thm1_gap_follows_phase_prediction():
    rep = run_thm1(thm1_params_at(1.0, 0.1, -0.25, 16), samples=100)
    # the lifted error is of size N sigma^3 times the measured constant
    assert rep.measured["max_prediction_error"] <= 2 * rep.measured["error_scale_N_sigma3"]


def test_thm1_negative_control():
    params = thm1_params_at(1.0, 0.1, -0.25, 32)
    assert params.conditions["rotation"] is False
    rep = run_thm1(params, samples=100)
    assert rep.measured["sup_gap"] < 0.8 * params.rho_prime
    assert not rep.passed


def test_thm1_step_budget():
    params = thm1_params_at(1.0, 0.1, -0.25, 64, caps=Caps(max_steps=100))
    with pytest.raises(InfeasibleError):
        run_thm1(params)


def test_thm1_requires_selected_parameters():
    with pytest.raises(ValueError):
        run_thm1(ExperimentParams(rho=1, delta=0.1, s=-0.25))


# -- two-solution construction -----------------------------------------------------

def test_default_M_completes_a_revolution():
    M = default_M(1.0, 0.05)
    assert 1.0 ** 3 * 0.05 * M ** 2 * 0.05 == pytest.approx(2 * math.pi)


def test_quintic_phase_rate_formula():
    A1, A2, B = 0.3, 0.35, 2.0
    want = (A1 ** 4 - A2 ** 4) + 6 * (A1 ** 2 - A2 ** 2) * B ** 2
    assert thm2_phase_rate(5, 1, A1, A2, B) == pytest.approx(want)
    assert thm2_phase_rate(5, -1, A1, A2, B) == pytest.approx(-want)


def test_thm2_fallback_is_labelled():
    params = ExperimentParams(rho=1.0, delta=0.05, s=-0.25, p=5)
    rep = run_thm2(params)
    assert any("CLOSED-FORM FALLBACK" in n for n in rep.notes)
    assert rep.measured["log2_N"] > 16
    assert rep.measured["gap_at_zero"] == pytest.approx(0.05, rel=1e-12)
    assert rep.measured["sup_gap"] >= 0.25
    assert rep.passed


def test_thm2_pde_route_matches_closed_form_within_bound():
    params = ExperimentParams(rho=1.0, delta=0.1, s=-0.25, p=5, M=1.0, N=16)
    rep = run_thm2(params, samples=400)
    assert not any("FALLBACK" in n for n in rep.notes)
    assert rep.verdicts["closed_form_within_bound"]
    assert rep.measured["rate_relative_error"] < 0.05


def test_thm2_needs_higher_power():
    with pytest.raises(ValueError):
        run_thm2(ExperimentParams(rho=1.0, delta=0.05, s=-0.25, p=3))


def test_cubic_mechanism_rate():
    out = measure_thm1_rate(TwoModeData(0.05, 0.1), omega=-1)
    assert out["predicted"] == pytest.approx(-0.02)
    assert out["relative_error"] < 0.05


def test_quintic_mechanism_rate():
    out = measure_thm2_rate(0.1, 0.12, 0.2, p=5, omega=1)
    want = two_mode_phase(NlsParams(5), 0.1, 0.2) - two_mode_phase(NlsParams(5), 0.12, 0.2)
    assert out["predicted"] == pytest.approx(want)
    assert out["relative_error"] < 0.05


# -- reports ----------------------------------------------------------------------

def test_report_round_trip():
    rep = run_thm2(ExperimentParams(rho=1.0, delta=0.05, s=-0.25, p=5), samples=100)
    back = ExperimentReport.from_json(loads(dumps(rep.to_json())))
    assert back.verdicts == rep.verdicts
    assert back.passed == rep.passed
    assert np.array_equal(back.traces["gap"], rep.traces["gap"])


def test_every_report_carries_solver_config():
    rep = run_thm1(thm1_params_at(1.0, 0.1, -0.25, 4), SolverConfig(gridsize=16, dt=0.02), samples=20)
    assert all("gridsize" in c and "dt" in c for c in rep.configs)
    assert rep.configs[0]["dt"] == 0.02
