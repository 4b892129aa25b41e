import math

import numpy as np
import pytest

from nlslab.closed_form import NlsParams, TwoModeData, approx_two_mode, plane_wave
from nlslab.errors import AccuracyError, BlowupError
from nlslab.solver import (
    SolverConfig,
    _advance,
    _mask,
    conserved_quantities,
    evolve,
    generator,
    residual,
    verify_sign_convention,
)
from nlslab.spectral import SpectralField, Trajectory, sobolev_norm


def l2(a, b):
    return sobolev_norm(a - b, 0)


def reflect_conj(a):
    """Coefficients of conj(u) in FFT ordering."""
    return np.conj(np.roll(a[::-1], 1))


# -- configuration ---------------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [
        {"gridsize": 12},
        {"gridsize": 4},
        {"dt": 0},
        {"dealias": "half"},
        {"splitting": "lie"},
        {"t_checkpoints": (1.0, 0.5)},
        {"t_checkpoints": (-1.0,)},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_output_window():
    assert SolverConfig(gridsize=32).output_nmax == 10
    assert SolverConfig(gridsize=32, dealias="none").output_nmax == 15


def test_initial_band_must_fit_grid():
    with pytest.raises(ValueError):
        evolve(SpectralField.from_dict({3: 0.1}), NlsParams(), SolverConfig(gridsize=16))


# -- exact solutions --------------------------------------------------------------

def test_sign_convention_check_passes():
    verify_sign_convention()


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("omega", [1, -1])
def test_plane_wave_is_reproduced(p, omega):
    params = NlsParams(p, omega)
    alpha, N = 0.1, 3
    times = np.linspace(0, 10, 11)
    ev = evolve(SpectralField.from_dict({N: alpha}), params, SolverConfig(gridsize=32, dt=0.01, t_checkpoints=tuple(times)))
    err = max(l2(f, plane_wave(params, alpha, N, t).resized(f.nmax)) for t, f in ev.trajectory)
    assert err <= 1e-8


def test_zero_data_stays_zero():
    ev = evolve(SpectralField.zeros(1), NlsParams(5, -1), SolverConfig(gridsize=16, t_checkpoints=(0, 3)))
    assert np.all(ev.trajectory.coeffs == 0)
    assert ev.mass_drift == 0


def test_checkpoints_are_recorded_exactly():
    cfg = SolverConfig(gridsize=16, dt=0.1, t_checkpoints=(0.0, 0.05, 0.33, 1.0))
    ev = evolve(SpectralField.from_dict({0: 0.1}), NlsParams(), cfg)
    assert ev.trajectory.at(0.33) == ev.trajectory.field(2)


# -- conservation and symmetries ----------------------------------------------------

def test_conserved_quantities_of_plane_wave():
    alpha, N = 0.2, 2
    d = conserved_quantities(SpectralField.from_dict({N: alpha}), NlsParams(3, -1))
    assert d.mass == pytest.approx(2 * math.pi * alpha ** 2)
    assert d.hamiltonian == pytest.approx(2 * math.pi * (0.5 * N ** 2 * alpha ** 2 - alpha ** 4 / 4))


@pytest.mark.parametrize("p", [3, 5])
def test_conservation_on_random_small_data(p):
    # drift over one unit of time at the default step, two-mode data with sigma <= 0.25
    rng = np.random.default_rng(p)
    for omega in (1, -1):
        for _ in range(5):
            alpha, beta = rng.uniform(0, 0.25, 2) * np.exp(2j * np.pi * rng.uniform(size=2))
            cfg = SolverConfig(gridsize=32, dt=0.01, t_checkpoints=tuple(np.linspace(0, 1, 11)))
            ev = evolve(TwoModeData(alpha, beta).initial_field(), NlsParams(p, omega), cfg)
            assert ev.mass_drift <= 1e-8
            assert ev.hamiltonian_drift <= 1e-6


@pytest.mark.parametrize("dealias", ["two_thirds", "none"])
def test_time_reversal_by_conjugation(dealias):
    # conj(u(-t)) solves the same equation, so forward-conjugate-forward-conjugate returns the data
    rng = np.random.default_rng(7)
    f = SpectralField(0.1 * (rng.standard_normal(5) + 1j * rng.standard_normal(5)), 2)
    g = 32
    k2 = np.fft.fftfreq(g, 1 / g) ** 2
    a = f.to_fft_order(g)
    mask = _mask(g, dealias)
    b = _advance(a, 500, 0.01, k2, 1, 1, mask)
    back = reflect_conj(_advance(reflect_conj(b), 500, 0.01, k2, 1, 1, mask))
    assert np.sqrt(np.sum(np.abs(back - a) ** 2)) <= 1e-7


def test_gauge_covariance():
    params = NlsParams(5, 1)
    data = TwoModeData(0.1 + 0.05j, 0.2)
    cfg = SolverConfig(gridsize=16, dt=0.05, t_checkpoints=(0, 2.0))
    phase = np.exp(0.7j)
    u = evolve(data.initial_field(), params, cfg).trajectory.field(1)
    v = evolve(data.initial_field() * phase, params, cfg).trajectory.field(1)
    assert l2(v, u * phase) < 1e-14


def test_strang_splitting_is_second_order():
    params = NlsParams(3, 1)
    data = TwoModeData(0.2 * np.exp(0.4j), 0.25)
    t_end = 10.0
    final = lambda dt: evolve(data.initial_field(), params, SolverConfig(gridsize=32, dt=dt, t_checkpoints=(0, t_end))).trajectory.field(1)
    ref = final(0.1 / 64)
    errs = [l2(final(dt), ref) for dt in (0.1, 0.05, 0.025)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders >= 1.8) & (orders <= 2.2))


# -- failure modes ----------------------------------------------------------------

@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_values_are_a_blowup():
    data = SpectralField.from_dict({0: 1e80})
    with pytest.raises(BlowupError) as info:
        evolve(data, NlsParams(5), SolverConfig(gridsize=8, t_checkpoints=(0, 0.5, 1.0)))
    assert info.value.t == 0.5


def test_mass_loss_through_truncation_is_reported():
    data = SpectralField.from_dict({0: 2.0, 1: 2.0})
    cfg = SolverConfig(gridsize=8, dt=0.01, t_checkpoints=(0, 1.0))
    with pytest.raises(AccuracyError):
        evolve(data, NlsParams(3, 1), cfg)
    ev = evolve(data, NlsParams(3, 1), cfg, check_accuracy=False)
    assert ev.mass_drift > 1e-6


# -- generator and residual ---------------------------------------------------------

def test_generator_matches_time_derivative():
    params = NlsParams(3, -1)
    data = TwoModeData(0.1, 0.2j)
    g = 32
    h = 1e-4
    cfg = SolverConfig(gridsize=g, dt=h / 50, t_checkpoints=(0, h))
    u1 = evolve(data.initial_field(), params, cfg).trajectory.field(1)
    gen = generator(data.initial_field(), params, g)
    deriv = (u1 - data.initial_field().resized(u1.nmax)) / h
    assert l2(deriv, gen.resized(u1.nmax)) < 1e-4 * sobolev_norm(gen, 0)


def sampled(fn, times):
    return Trajectory.from_fields([(t, fn(t)) for t in times])


def test_residual_of_plane_wave_is_small():
    params = NlsParams(3, 1)
    traj = sampled(lambda t: plane_wave(params, 0.3, 2, t), np.linspace(0, 1, 201))
    est = residual(traj, params)
    assert est.value <= 1e-6
    assert est.reliable


def test_residual_of_zero_trajectory():
    traj = sampled(lambda t: SpectralField.zeros(2), np.linspace(0, 1, 20))
    assert residual(traj, NlsParams()).value == 0


def test_residual_of_ansatz_is_the_error_term():
    # the ansatz misses only alpha^2 conj(beta) on frequency -1 and beta^2 conj(alpha) on 2
    params = NlsParams(3, 1)
    alpha, beta = 0.1, 0.2
    data = TwoModeData(alpha, beta)
    traj = sampled(lambda t: approx_two_mode(params, data, t), np.linspace(0, 2, 401))
    est = residual(traj, params)
    want = math.hypot(alpha ** 2 * beta, beta ** 2 * alpha)
    assert est.value == pytest.approx(want, rel=1e-6)
    assert est.reliable


def test_coarse_sampling_is_flagged():
    params = NlsParams(3, 1)
    traj = sampled(lambda t: plane_wave(params, 0.3, 4, t), np.linspace(0, 2, 12))
    assert not residual(traj, params).reliable


def test_residual_needs_uniform_samples():
    params = NlsParams()
    with pytest.raises(ValueError):
        residual(sampled(lambda t: SpectralField.zeros(1), np.linspace(0, 1, 5)), params)
    times = np.concatenate([np.linspace(0, 1, 10), [1.5]])
    with pytest.raises(ValueError):
        residual(sampled(lambda t: SpectralField.zeros(1), times), params)
