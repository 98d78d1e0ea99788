import math

import pytest

from lambda_emission.analysis import assemble_spectrum
from lambda_emission.model import FrequencyGrid, SystemParams
from lambda_emission.spectral import steady_amplitudes

FOCK_GBAR = 5.0 / math.sqrt(401.0)  # v = 5 for block m = 400


@pytest.fixture
def base_params():
    """γ1 = γ2 = 1/2, ω21 = γ, |ḡ| = 1/4 (|Ω| = 5 at |α| = 20)."""
    return SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=0.25)


@pytest.fixture
def fock_params():
    return SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=FOCK_GBAR)


@pytest.fixture
def two_level_params():
    return SystemParams(gamma1=1.0, gamma2=0.0, omega21=1.0, gbar_mag=0.0)


@pytest.fixture
def default_grid():
    return FrequencyGrid(-40.0, 40.0, 4001)


@pytest.fixture
def small_grid():
    return FrequencyGrid(-10.0, 10.0, 101)


@pytest.fixture
def spectrum_of(default_grid):
    """Closed-form spectrum builder: spectrum_of(state, params[, grid])."""
    def build(state, params, grid=None):
        return assemble_spectrum(steady_amplitudes(state, params, grid or default_grid))
    return build
