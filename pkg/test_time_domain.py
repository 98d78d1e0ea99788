import math

import numpy as np
import pytest

from lambda_emission.analysis import Spectrum, assemble_spectrum, compare_spectra, fwhm
from lambda_emission.errors import ConfigError, ConvergenceError, ParameterError
from lambda_emission.field_states import adjacent_window, single_fock
from lambda_emission.model import FrequencyGrid, SystemParams
from lambda_emission.spectral import build_blocks, steady_amplitudes
from lambda_emission.time_domain import (IntegratorConfig, TimeDomainSolver, full_bath_simulate, integrate_bare,
                                         upper_state_amplitude)

TINY_GRID = FrequencyGrid(-5.0, 5.0, 11)
CFG = IntegratorConfig(dt=0.004, t_end=80.0)
DRIVEN = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0)


def test_upper_state_amplitude():
    params = SystemParams(gamma1=0.5, gamma2=0.5)
    assert upper_state_amplitude(0.3 + 0.4j, 0.0, params) == 0.3 + 0.4j
    assert upper_state_amplitude(1.0, 2 * math.log(2), params) == pytest.approx(0.5)
    assert abs(upper_state_amplitude(1.0, math.log(2), params)) ** 2 == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        upper_state_amplitude(1.0, -1.0, params)


def test_integrator_config_validation():
    with pytest.raises(ParameterError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ParameterError):
        IntegratorConfig(method="euler")
    cfg = IntegratorConfig(dt=0.01, t_end=40.0)
    assert cfg.steps == 4000
    assert cfg.halved().dt == 0.005


def test_two_level_ground_population_is_lorentzian(two_level_params):
    bare = integrate_bare(single_fock(2), two_level_params, TINY_GRID, CFG)
    deltas = TINY_GRID.values()
    population = np.abs(bare.x[:, bare.slot(2)]) ** 2
    np.testing.assert_allclose(population, 1.0 / (0.25 + deltas ** 2), rtol=1e-8)


def test_oracle_matches_closed_form_with_interference_off():
    params = DRIVEN.with_updates(interference=False, phi=0.3)
    state = adjacent_window(3, 1, 0.5)
    fast = assemble_spectrum(steady_amplitudes(state, params, TINY_GRID))
    slow = assemble_spectrum(TimeDomainSolver().steady_amplitudes(state, params, TINY_GRID, CFG))
    np.testing.assert_allclose(slow.values, fast.values, rtol=0, atol=1e-7 * fast.values.max())


def test_step_too_coarse_or_horizon_too_short():
    solver = TimeDomainSolver()
    with pytest.raises(ParameterError):
        solver.integrate_bare(single_fock(3), DRIVEN, TINY_GRID, IntegratorConfig(dt=0.05, t_end=80.0))
    with pytest.raises(ParameterError):
        solver.integrate_bare(single_fock(3), DRIVEN, TINY_GRID, IntegratorConfig(dt=0.004, t_end=10.0))
    with pytest.raises(ParameterError):
        solver.integrate_bare(single_fock(3), DRIVEN, TINY_GRID, CFG, sources="z")


def test_non_stationary_run_reports_worst_offender():
    with pytest.raises(ConvergenceError) as info:
        integrate_bare(single_fock(3), DRIVEN, TINY_GRID, IntegratorConfig(dt=0.004, t_end=20.0))
    delta, block, drift = info.value.worst
    assert drift > 1e-8
    assert block in (2, 3)
    assert TINY_GRID.lo <= delta <= TINY_GRID.hi


def test_norm_conserved_after_source_dies():
    bare = integrate_bare(adjacent_window(3, 1), DRIVEN, TINY_GRID, CFG)
    np.testing.assert_allclose(bare.norms(), bare.norms(mid=True), rtol=0, atol=1e-8)


def test_block_integrated_alone_matches_full_run():
    state = adjacent_window(3, 1, 0.4)
    solver = TimeDomainSolver()
    blocks = build_blocks(state, DRIVEN)
    full_plus, full_minus = solver.integrate_bare(state, DRIVEN, TINY_GRID, CFG).block_modes(blocks)
    block = blocks[1]
    alone_plus, alone_minus = solver.integrate_block(block, DRIVEN, TINY_GRID, CFG).block_modes([block])
    np.testing.assert_allclose(alone_plus[0], full_plus[1], rtol=0, atol=1e-12)
    np.testing.assert_allclose(alone_minus[0], full_minus[1], rtol=0, atol=1e-12)


def test_global_phase_changes_no_magnitude():
    state = adjacent_window(3, 1, 0.4)
    a = integrate_bare(state, DRIVEN, TINY_GRID, CFG)
    b = integrate_bare(state.with_global_phase(2.2), DRIVEN, TINY_GRID, CFG)
    np.testing.assert_allclose(np.abs(a.x), np.abs(b.x), rtol=0, atol=1e-12)
    np.testing.assert_allclose(np.abs(a.y), np.abs(b.y), rtol=0, atol=1e-12)


def test_step_halving_is_stable():
    deviation = TimeDomainSolver().step_halving_deviation(single_fock(3), DRIVEN, TINY_GRID, CFG)
    assert deviation <= 1e-8


def test_full_bath_rejects_recurrence_and_layout():
    with pytest.raises(ConfigError):
        full_bath_simulate(single_fock(1), DRIVEN, n_modes=100, span=80.0, t_end=8.0)
    with pytest.raises(ConfigError):
        full_bath_simulate(single_fock(1), DRIVEN, dipoles="diagonal")


@pytest.mark.slow
def test_full_bath_two_level_linewidth(two_level_params):
    result = full_bath_simulate(single_fock(0), two_level_params, t_end=16.0, center=0.0)
    spectrum = Spectrum(result.spectrum_grid(), result.spectral_density)
    assert fwhm(spectrum, around=0.0) == pytest.approx(1.0, rel=0.05)
    assert spectrum.norm == pytest.approx(1.0, abs=0.03)


@pytest.mark.slow
@pytest.mark.parametrize("dipoles, interference", [("parallel", True), ("orthogonal", False)])
def test_full_bath_mode_populations_follow_closed_form(dipoles, interference):
    params = DRIVEN.with_updates(phi=0.3)
    state = adjacent_window(2, 1)
    result = full_bath_simulate(state, params, n_modes=800, span=80.0, t_end=16.0, dipoles=dipoles)
    bath = Spectrum(result.spectrum_grid(), result.spectral_density)
    closed = assemble_spectrum(steady_amplitudes(state, params.with_updates(interference=interference), bath.grid))
    assert compare_spectra(bath, closed).l2_rel <= 0.03
