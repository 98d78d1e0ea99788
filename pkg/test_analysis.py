import json
import math
from dataclasses import replace

import numpy as np
import pytest

from lambda_emission.analysis import (ComparisonReport, Spectrum, assemble_spectrum, classical_reference_spectrum,
                                      compare_spectra, dip_metric, find_peaks, fwhm, interference_term,
                                      phase_averaged_spectrum, restricted_spectrum, spectra_sum)
from lambda_emission.errors import DomainError, ParameterError
from lambda_emission.field_states import adjacent_window, coherent_state, separated_fock, single_fock
from lambda_emission.model import FrequencyGrid, couplings_from_rates
from lambda_emission.spectral import steady_amplitudes


def test_spectrum_invariants():
    grid = FrequencyGrid(0.0, 3.0, 4)
    spectrum = Spectrum(grid, [0.0, 1.0, 2.0, 0.5])
    assert spectrum.norm == pytest.approx(3.5)
    with pytest.raises(DomainError):
        Spectrum(grid, [0.0, -1.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        Spectrum(grid, [0.0, 1.0])


def test_two_level_normalization_and_width(two_level_params, spectrum_of):
    spectrum = spectrum_of(single_fock(0), two_level_params)
    assert spectrum.norm == pytest.approx(1.0, abs=0.01)
    assert fwhm(spectrum, around=0.0) == pytest.approx(1.0, abs=0.02)
    location = find_peaks(spectrum)
    assert location == pytest.approx([0.0], abs=1e-9)


def test_interference_off_sums_source_spectra(base_params, small_grid):
    amps = steady_amplitudes(adjacent_window(10, 2, 0.6), base_params, small_grid)
    zero = np.zeros_like(amps.plus_x)
    x_only = replace(amps, plus_y=zero, minus_y=zero)
    y_only = replace(amps, plus_x=zero, minus_x=zero)
    split = assemble_spectrum(x_only).values + assemble_spectrum(y_only).values
    dropped = assemble_spectrum(amps, base_params.with_updates(interference=False))
    np.testing.assert_allclose(dropped.values, split, rtol=1e-12, atol=1e-15)
    assert not dropped.meta["interference"]


def test_interference_term_vanishes_without_v_subsystems(base_params, small_grid):
    amps = steady_amplitudes(separated_fock(30, (0, 2, 5)), base_params, small_grid)
    assert np.all(interference_term(amps) == 0)


def test_interference_term_redistributes_without_net_emission(base_params, default_grid):
    amps = steady_amplitudes(adjacent_window(30, 1), base_params, default_grid)
    term = interference_term(amps)
    assert np.max(np.abs(term)) > 1e-3
    assert abs(default_grid.spacing * term.sum()) < 5e-3


def test_classical_reference_periodic_in_phase(base_params, default_grid):
    a = classical_reference_spectrum(base_params, 5.0, 0.4, default_grid)
    b = classical_reference_spectrum(base_params, 5.0, 0.4 + 2 * math.pi, default_grid)
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-14)
    assert a.meta["family"] == "classical"


def test_classical_reference_without_drive_is_two_lorentzians(base_params, default_grid):
    spectrum = classical_reference_spectrum(base_params, 0.0, 0.0, default_grid)
    g, ghat = couplings_from_rates(base_params)
    d = default_grid.values()
    expected = base_params.density * (abs(g) ** 2 / (0.25 + d ** 2) + abs(ghat) ** 2 / (0.25 + (d + 1.0) ** 2))
    np.testing.assert_allclose(spectrum.values, expected, rtol=1e-12)


def test_classical_dip_positions(base_params, default_grid):
    zero = classical_reference_spectrum(base_params, 5.0, 0.0, default_grid)
    assert dip_metric(zero, (4.0, 5.5))[0] == pytest.approx(4.5, abs=1e-9)
    shifted = classical_reference_spectrum(base_params, 5.0, math.pi, default_grid)
    assert dip_metric(shifted, (-6.5, -5.0))[0] == pytest.approx(-5.5, abs=1e-9)


def test_dip_metric_edge_cases():
    grid = FrequencyGrid(0.0, 3.0, 4)
    flat_min = Spectrum(grid, [3.0, 1.0, 1.0, 2.0])
    assert dip_metric(flat_min, (0.0, 3.0)) == (1.0, 1.0)
    with pytest.raises(DomainError):
        dip_metric(flat_min, (1.2, 1.8))
    with pytest.raises(DomainError):
        dip_metric(flat_min, (-1.0, 2.0))


def test_dip_metric_monotone_window_returns_endpoint(two_level_params, spectrum_of, default_grid):
    spectrum = spectrum_of(single_fock(0), two_level_params)
    deltas = default_grid.values()
    inside = deltas[(deltas >= 2.0) & (deltas <= 3.0)]
    location, value = dip_metric(spectrum, (2.0, 3.0))
    assert location == inside[-1]
    assert value >= 0


def test_find_peaks_plateau_and_refinement():
    grid = FrequencyGrid(0.0, 5.0, 6)
    plateau = Spectrum(grid, [0.0, 1.0, 2.0, 2.0, 1.0, 0.0])
    assert find_peaks(plateau, refine=False) == [2.0]
    parabola = Spectrum(FrequencyGrid(-1.0, 1.0, 3), [0.75, 1.0, 0.0])
    # vertex of the parabola through (-1, .75), (0, 1), (1, 0)
    assert find_peaks(parabola) == pytest.approx([-0.3])


def test_compare_spectra(base_params, default_grid):
    a = classical_reference_spectrum(base_params, 5.0, 0.0, default_grid)
    b = classical_reference_spectrum(base_params, 5.0, math.pi, default_grid)
    same = compare_spectra(a, a)
    assert same.l2_rel == 0 and same.sup_rel == 0
    report = compare_spectra(a, b, dip_window=(4.0, 5.5))
    assert report.l2_rel > 0.1
    assert report.dip[0] == pytest.approx(4.5, abs=1e-9)
    record = json.loads(report.to_json())
    assert set(record) == {"l2_rel", "sup_rel", "peak_locations", "reference_peaks", "dip"}
    with pytest.raises(DomainError):
        compare_spectra(a, classical_reference_spectrum(base_params, 5.0, 0.0, FrequencyGrid(-40, 40, 801)))


def test_restricted_spectra_sum_to_assembled(base_params, default_grid):
    amps = steady_amplitudes(adjacent_window(40, 2, 0.3), base_params, default_grid)
    total = np.zeros(default_grid.count)
    for m in amps.block_indices():
        total = total + restricted_spectrum(amps, m).values
    np.testing.assert_array_equal(total, assemble_spectrum(amps).values)
    with pytest.raises(DomainError):
        restricted_spectrum(amps, 10)


def test_restricted_spectrum_normalization(base_params, default_grid):
    amps = steady_amplitudes(adjacent_window(40, 1), base_params, default_grid)
    raw = restricted_spectrum(amps, 40)
    normalized = restricted_spectrum(amps, 40, normalize=True)
    np.testing.assert_allclose(normalized.values, raw.values * 3.0, rtol=1e-12)


def test_phase_average_of_single_fock_is_unchanged(fock_params, spectrum_of, default_grid):
    state = single_fock(100)

    def builder(phase, grid):
        return spectrum_of(state, fock_params.with_updates(phi=phase), grid)

    averaged = phase_averaged_spectrum(builder, default_grid, 8)
    np.testing.assert_allclose(averaged.values, spectrum_of(state, fock_params).values, rtol=0, atol=1e-12)
    with pytest.raises(ParameterError):
        phase_averaged_spectrum(builder, default_grid, 3)


def test_phase_average_over_drive_phase_equals_field_phase(base_params, spectrum_of, default_grid):
    over_phi = phase_averaged_spectrum(
        lambda phase, grid: spectrum_of(coherent_state(8.0, sigmas=10.0), base_params.with_updates(phi=phase), grid),
        default_grid)
    over_field = phase_averaged_spectrum(
        lambda phase, grid: spectrum_of(coherent_state(8.0, phase, sigmas=10.0), base_params, grid), default_grid)
    np.testing.assert_allclose(over_phi.values, over_field.values, rtol=0, atol=1e-12)


def test_coupling_phase_acts_like_drive_phase(base_params, spectrum_of):
    state = coherent_state(6.0, 0.2, sigmas=10.0)
    via_drive = spectrum_of(state, base_params.with_updates(phi=0.7))
    via_vacuum = spectrum_of(state, base_params.with_updates(phi_ghat=1.0, phi_g=0.3))
    np.testing.assert_allclose(via_drive.values, via_vacuum.values, rtol=0, atol=1e-12)


def test_spectra_sum_rejects_mixed_grids(base_params):
    a = classical_reference_spectrum(base_params, 1.0, 0.0, FrequencyGrid(-5, 5, 11))
    b = classical_reference_spectrum(base_params, 1.0, 0.0, FrequencyGrid(-5, 5, 21))
    assert spectra_sum([a, a], [0.5, 0.5]).values == pytest.approx(a.values)
    with pytest.raises(DomainError):
        spectra_sum([a, b])
