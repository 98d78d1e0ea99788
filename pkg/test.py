"""
End-to-end acceptance runs for the emission simulator.
Reference scenario: γ1 = γ2 = 1/2, ω21 = γ, |Ω| = 5γ, grid [-40, 40] x 4001.
"""

import math

import numpy as np
import pytest

from lambda_emission.analysis import (assemble_spectrum, classical_reference_spectrum, compare_spectra, find_peaks,
                                      phase_averaged_spectrum, restricted_spectrum, spectra_sum)
from lambda_emission.config import load_config
from lambda_emission.field_states import adjacent_window, coherent_state, separated_fock, single_fock
from lambda_emission.model import FrequencyGrid, SystemParams
from lambda_emission.spectral import steady_amplitudes
from lambda_emission.time_domain import IntegratorConfig, TimeDomainSolver, full_bath_simulate
from lambda_emission.verification import VerificationSuite
from simulator import EmissionSimulator

ORACLE_GRID = FrequencyGrid(-10.0, 10.0, 101)
ORACLE_CONFIG = IntegratorConfig(dt=0.004, t_end=80.0)


@pytest.fixture(scope="module")
def simulator():
    return EmissionSimulator(threads=1, progress=False)


@pytest.fixture(scope="module")
def reference_config():
    return load_config(environ={})


def test_phase_table_matches_classical_references(simulator, reference_config):
    result = simulator.table1(reference_config, write=False)
    assert result.letters == [["a", "b", "c"], ["b", "c", "d"], ["c", "d", "a"]]
    assert result.worst_l2 <= 0.05
    for row in result.distances:
        for distances in row:
            best, runner_up = sorted(distances.values())[:2]
            assert runner_up >= 2.0 * best


@pytest.mark.parametrize("state", [single_fock(3), adjacent_window(3, 1, 0.6)], ids=["fock", "window"])
def test_oracle_agrees_with_closed_form(state):
    params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0, phi=0.4)
    fast = np.concatenate(steady_amplitudes(state, params, ORACLE_GRID).magnitudes())
    slow = np.concatenate(TimeDomainSolver().steady_amplitudes(state, params, ORACLE_GRID, ORACLE_CONFIG).magnitudes())
    assert np.max(np.abs(fast - slow)) / np.max(fast) <= 1e-6


@pytest.mark.parametrize("state", [
    coherent_state(20.0), single_fock(400), adjacent_window(400, 2), separated_fock(400, (0, 2, 4)),
], ids=["coherent", "fock", "window", "separated"])
def test_normalization_per_family(state, base_params, spectrum_of):
    assert spectrum_of(state, base_params).norm == pytest.approx(1.0, abs=0.03)


def test_single_fock_has_no_phase(base_params, spectrum_of):
    reference = spectrum_of(single_fock(400), base_params)
    for phi in (0.5 * math.pi, 1.7):
        other = spectrum_of(single_fock(400), base_params.with_updates(phi=phi))
        assert np.max(np.abs(other.values - reference.values)) <= 1e-12


def test_phase_average_drops_interference(base_params, spectrum_of, default_grid):
    averaged = phase_averaged_spectrum(
        lambda phase, grid: spectrum_of(coherent_state(20.0, phase), base_params, grid), default_grid, 8)
    incoherent = spectrum_of(coherent_state(20.0), base_params.with_updates(interference=False))
    assert np.max(np.abs(averaged.values - incoherent.values)) <= 1e-10
    fock = spectrum_of(single_fock(400), base_params)
    assert compare_spectra(averaged, fock).l2_rel <= 0.05
    assert compare_spectra(incoherent, fock).l2_rel <= 0.05


def test_separated_fock_is_an_incoherent_sum(base_params, spectrum_of):
    kappas = (0, 2, 4)
    separated = spectrum_of(separated_fock(400, kappas), base_params)
    summed = spectra_sum([spectrum_of(single_fock(400 + k), base_params) for k in kappas], [1 / 3] * 3)
    assert np.max(np.abs(separated.values - summed.values)) <= 1e-12
    rotated = spectrum_of(separated_fock(400, kappas, 1.3), base_params)
    assert np.max(np.abs(rotated.values - separated.values)) <= 1e-12


def test_single_fock_peak_positions(fock_params, spectrum_of):
    peaks = find_peaks(spectrum_of(single_fock(400), fock_params))
    # neighbouring lines pull the maxima a few hundredths of γ off the poles
    assert peaks == pytest.approx([-6.0, -5.0, 4.0, 5.0], abs=0.06)


def test_interference_dip_deepest_at_matched_splitting(simulator, reference_config):
    rows = simulator.sweep("w21", [0.1, 0.5, 1.0, 2.0], reference_config, write=False)
    dips = {row["value"]: row["dip_value"] for row in rows}
    assert all(dips[1.0] < value for key, value in dips.items() if key != 1.0)


def test_restricted_block_is_a_scaled_classical_spectrum(base_params, default_grid):
    amps = steady_amplitudes(adjacent_window(400, 1), base_params, default_grid)
    restricted = restricted_spectrum(amps, 400)
    classical = classical_reference_spectrum(base_params, base_params.rabi(400), 0.0, default_grid)
    assert compare_spectra(restricted, classical.scaled(1.0 / 3.0)).l2_rel <= 0.02


def test_wider_windows_approach_classical(simulator, reference_config):
    rows = simulator.sweep("width", [1, 2, 4, 8], reference_config, write=False)
    distances = [row["l2_rel"] for row in rows]
    assert all(b <= a for a, b in zip(distances, distances[1:]))


def test_quick_verification_suite_passes():
    results = VerificationSuite(threads=2).run("quick")
    assert results and all(result.passed for result in results)


@pytest.mark.slow
def test_full_bath_reproduces_exponential_decay():
    params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0)
    state = adjacent_window(2, 1)
    parallel = full_bath_simulate(state, params, n_modes=800, span=80.0, t_end=8.0, dipoles="parallel")
    orthogonal = full_bath_simulate(state, params, n_modes=800, span=80.0, t_end=8.0, dipoles="orthogonal")
    assert parallel.decay_deviation(params.gamma) <= 0.02
    assert orthogonal.decay_deviation(params.gamma) <= 0.02
    np.testing.assert_allclose(parallel.upper_population, orthogonal.upper_population, rtol=0, atol=5e-3)
