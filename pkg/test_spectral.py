import math
from dataclasses import replace

import numpy as np
import pytest

from lambda_emission.errors import DomainError
from lambda_emission.field_states import adjacent_window, coherent_state, separated_fock, single_fock
from lambda_emission.model import FrequencyGrid, SystemParams
from lambda_emission.spectral import (Block, SpectralSolver, block_phasors, build_blocks, interfering_blocks,
                                      solve_block_steady, steady_amplitudes)


def test_single_fock_builds_two_single_source_blocks(fock_params):
    blocks = build_blocks(single_fock(400), fock_params)
    assert [b.m for b in blocks] == [399, 400]
    assert blocks[0].src_x == 1 and blocks[0].src_y == 0
    assert blocks[1].src_x == 0 and blocks[1].src_y == 1
    assert blocks[1].v == pytest.approx(5.0)


def test_vacuum_state_uses_edge_block(base_params):
    blocks = build_blocks(single_fock(0), base_params)
    assert [b.m for b in blocks] == [-1, 0]
    assert blocks[0].is_edge and blocks[0].v == 0 and blocks[0].src_x == 1


def test_interfering_blocks_by_family(base_params):
    assert len(interfering_blocks(build_blocks(adjacent_window(50, 2), base_params))) == 4
    assert interfering_blocks(build_blocks(separated_fock(50, (0, 2, 4)), base_params)) == []


def test_block_validation():
    with pytest.raises(DomainError):
        Block(m=-2, v=0.0)
    with pytest.raises(DomainError):
        Block(m=-1, v=1.0, src_x=1.0)
    with pytest.raises(DomainError):
        Block(m=-1, v=0.0, src_x=1.0, src_y=1.0)


def test_two_level_block_is_lorentzian(two_level_params):
    block = Block(m=-1, v=0.0, src_x=1.0 + 0j)
    plus, minus = solve_block_steady(block, 0.7, two_level_params)
    # |g|² = γ1/(2πD) = 1 for D = 1/(2π)
    assert plus ** 2 == pytest.approx(1.0 / (0.25 + 0.49), rel=1e-14)
    assert minus == 0


def test_destructive_interference_zero(base_params):
    block = Block(m=0, v=5.0, src_x=1.0 + 0j, src_y=1.0 + 0j)
    plus, minus = solve_block_steady(block, 4.5, base_params.with_updates(phi=0.0))
    assert minus < 1e-14
    assert plus > 1e-3


def test_single_fock_independent_of_drive_phase(fock_params, small_grid):
    state = single_fock(20)
    reference = steady_amplitudes(state, fock_params, small_grid).magnitudes()
    for phi in (0.5 * math.pi, 1.7):
        other = steady_amplitudes(state, fock_params.with_updates(phi=phi), small_grid).magnitudes()
        for a, b in zip(reference, other):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_grid_reversal_gives_identical_samples(base_params):
    block = Block(m=3, v=1.2, src_x=0.3 - 0.4j, src_y=0.1 + 0.7j)
    deltas = np.linspace(-7, 7, 999)
    forward = block_phasors(block, deltas, base_params)
    backward = block_phasors(block, deltas[::-1], base_params)
    for name in forward:
        np.testing.assert_array_equal(backward[name][::-1], forward[name])


def test_thread_count_does_not_change_bits(base_params):
    grid = FrequencyGrid(-40.0, 40.0, 4001)
    state = coherent_state(6.0, 0.3, sigmas=10.0)
    serial = SpectralSolver(threads=1).steady_amplitudes(state, base_params, grid)
    parallel = SpectralSolver(threads=4).steady_amplitudes(state, base_params, grid)
    for name in ("plus_x", "plus_y", "minus_x", "minus_y"):
        np.testing.assert_array_equal(getattr(serial, name), getattr(parallel, name))


def test_basis_invariance_of_block_weight(base_params, small_grid):
    amps = steady_amplitudes(adjacent_window(6, 2, 0.8), base_params.with_updates(phi=0.4), small_grid)
    plus, minus = amps.magnitudes()
    eigen = plus ** 2 + minus ** 2
    x_var, y_var = amps.bare_at(3.7)
    alpha, beta = amps.dressed_at(3.7)
    np.testing.assert_allclose(np.abs(x_var) ** 2 + np.abs(y_var) ** 2, eigen, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(np.abs(alpha) ** 2 + np.abs(beta) ** 2, eigen, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(np.abs(alpha), plus, rtol=1e-12, atol=1e-15)


def test_single_source_block_ignores_phases(base_params, small_grid):
    state = separated_fock(8, (0, 3))
    a = steady_amplitudes(state, base_params, small_grid).magnitudes()
    b = steady_amplitudes(separated_fock(8, (0, 3), 2.1), base_params.with_updates(phi=0.9), small_grid).magnitudes()
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


def test_missing_block_row(base_params, small_grid):
    amps = steady_amplitudes(single_fock(5), base_params, small_grid)
    assert amps.row(5) == 1
    with pytest.raises(DomainError):
        amps.row(9)


def test_dressed_populations_sum_to_norm(base_params, default_grid):
    amps = steady_amplitudes(adjacent_window(30, 1), base_params, default_grid)
    total = sum(p + m for p, m in amps.dressed_populations().values())
    assert total == pytest.approx(1.0, abs=0.02)


def test_steady_amplitudes_records_state(base_params, small_grid):
    amps = steady_amplitudes(adjacent_window(6, 1), base_params, small_grid)
    assert amps.descriptor["family"] == "window"
    assert amps.block_indices() == [4, 5, 6, 7]
    with pytest.raises(DomainError):
        replace(amps, plus_x=amps.plus_x[:, :5])
