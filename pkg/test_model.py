import math

import numpy as np
import pytest

from lambda_emission.errors import ParameterError
from lambda_emission.model import (FrequencyGrid, SystemParams, rescaled_to_bare, couplings_from_rates, detunings,
                                   dressed_transform, inverse_dressed_transform, rates_from_couplings)

SQRT_HALF = 1.0 / math.sqrt(2.0)


def test_detunings_reference_points():
    params = SystemParams(omega21=1.0)
    assert detunings(0.0, params) == (0.0, 1.0)
    assert detunings(-1.0, params) == (-1.0, 0.0)
    assert detunings(4.0, params) == (4.0, 5.0)


def test_detunings_are_affine():
    params = SystemParams(omega21=0.7)
    omega = np.linspace(-3, 3, 7)
    d0, h0 = detunings(omega, params)
    d1, h1 = detunings(omega + 1.25, params)
    np.testing.assert_allclose(d1 - d0, 1.25, atol=1e-15)
    np.testing.assert_allclose(h1 - h0, 1.25, atol=1e-15)


def test_couplings_from_rates_magnitudes_and_phases():
    g, ghat = couplings_from_rates(SystemParams(gamma1=0.5, gamma2=0.5))
    assert abs(g) == pytest.approx(SQRT_HALF, abs=1e-15)
    assert abs(ghat) == pytest.approx(SQRT_HALF, abs=1e-15)

    _, ghat = couplings_from_rates(SystemParams(gamma1=1.0, gamma2=0.0))
    assert ghat == 0

    g, _ = couplings_from_rates(SystemParams(gamma1=0.5, gamma2=0.5, phi_g=math.pi / 2))
    assert g == pytest.approx(1j * SQRT_HALF, abs=1e-15)


def test_rates_round_trip():
    params = SystemParams(gamma1=0.3, gamma2=0.7, phi_g=0.4, phi_ghat=2.0, density=0.25)
    g, ghat = couplings_from_rates(params)
    gamma1, gamma2 = rates_from_couplings(g, ghat, params.density)
    assert gamma1 == pytest.approx(0.3, abs=1e-14)
    assert gamma2 == pytest.approx(0.7, abs=1e-14)


@pytest.mark.parametrize("changes", [
    {"gamma1": -0.1},
    {"gamma1": 0.0, "gamma2": 0.0},
    {"omega21": -1.0},
    {"gbar_mag": -0.5},
    {"density": 0.0},
    {"phi": float("nan")},
])
def test_invalid_params_rejected(changes):
    with pytest.raises(ParameterError):
        SystemParams(**changes)


def test_params_helpers():
    params = SystemParams(gamma1=0.25, gamma2=0.75, gbar_mag=0.5, phi=0.3)
    assert params.gamma == 1.0
    assert params.rabi(-1) == 0.0
    assert params.rabi(3) == pytest.approx(1.0)
    assert params.gbar == pytest.approx(0.5 * complex(math.cos(0.3), math.sin(0.3)))
    updated = params.with_updates(phi=1.0)
    assert updated.phi == 1.0 and params.phi == 0.3
    assert params.as_dict()["gbar_mag"] == 0.5


def test_grid_validation_and_values():
    grid = FrequencyGrid(-1.0, 1.0, 5)
    assert grid.spacing == 0.5
    np.testing.assert_array_equal(grid.values(), [-1.0, -0.5, 0.0, 0.5, 1.0])
    with pytest.raises(ParameterError):
        FrequencyGrid(1.0, 1.0, 5)
    with pytest.raises(ParameterError):
        FrequencyGrid(-1.0, 1.0, 1)


def test_grid_count_is_stored_as_int():
    grid = FrequencyGrid(-5.0, 5.0, 11.0)
    assert isinstance(grid.count, int) and grid.count == 11
    assert grid == FrequencyGrid(-5.0, 5.0, 11)
    assert np.zeros(grid.count).shape == (11,)
    with pytest.raises(ParameterError):
        FrequencyGrid(-5.0, 5.0, 11.5)


def test_dressed_transform_examples():
    plus, minus = dressed_transform(1.0, 0.0, 0.8)
    assert plus == pytest.approx(SQRT_HALF)
    assert minus == pytest.approx(SQRT_HALF)

    plus, minus = dressed_transform(0.0, 1.0, 0.0)
    assert plus == pytest.approx(-1j * SQRT_HALF)
    assert minus == pytest.approx(1j * SQRT_HALF)


def test_dressed_transform_round_trip():
    x, y = dressed_transform(0.6, 0.8j, 1.3)
    x_back, y_back = inverse_dressed_transform(x, y, 1.3)
    assert abs(x_back - 0.6) < 1e-14
    assert abs(y_back - 0.8j) < 1e-14


def test_dressed_transform_is_unitary():
    rng = np.random.default_rng(3)
    x = rng.normal(size=100) + 1j * rng.normal(size=100)
    y = rng.normal(size=100) + 1j * rng.normal(size=100)
    phi = rng.uniform(-math.pi, math.pi, size=100)
    plus, minus = dressed_transform(x, y, phi)
    np.testing.assert_allclose(np.abs(plus) ** 2 + np.abs(minus) ** 2, np.abs(x) ** 2 + np.abs(y) ** 2, rtol=1e-12)


def test_rescaled_variable_maps_to_eigenmodes():
    # with the rescaled |2,n⟩ coefficient, the dressed amplitudes are (X ± Y)/√2
    phi = 0.9
    x, y = 0.3 - 0.2j, -0.5 + 0.4j
    plus, minus = dressed_transform(x, rescaled_to_bare(y, phi), phi)
    assert plus == pytest.approx(SQRT_HALF * (x + y), abs=1e-15)
    assert minus == pytest.approx(SQRT_HALF * (x - y), abs=1e-15)
