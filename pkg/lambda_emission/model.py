"""
Model core for the driven Λ atom.
Physical parameters, unit conventions, detunings, the dressed-state transform
and the conversion between vacuum couplings and decay rates.

Units: the total decay rate γ = γ1 + γ2 is the rate unit and ω31 = 0 is the
energy origin, so ω32 = -ω21.
"""

import logging
import math
from dataclasses import dataclass, asdict, replace
from typing import Any, Dict, Tuple, Union

import numpy as np

from .errors import ParameterError

logger = logging.getLogger(__name__)

# Configuration
DEFAULT_DENSITY = 1.0 / (2.0 * math.pi)
OMEGA31 = 0.0
SQRT_HALF = 1.0 / math.sqrt(2.0)

ArrayLike = Union[float, complex, np.ndarray]


@dataclass(frozen=True)
class SystemParams:
    """Atomic rates, level splitting, drive coupling and vacuum coupling phases (units of γ)."""
    gamma1: float = 0.5
    gamma2: float = 0.5
    omega21: float = 1.0
    gbar_mag: float = 0.0
    phi: float = 0.0
    phi_g: float = 0.0
    phi_ghat: float = 0.0
    density: float = DEFAULT_DENSITY
    interference: bool = True

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "omega21", "gbar_mag", "phi", "phi_g", "phi_ghat", "density"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ParameterError(f"Decay rates must be non-negative: gamma1={self.gamma1}, gamma2={self.gamma2}")
        if self.gamma1 + self.gamma2 <= 0:
            raise ParameterError("Total decay rate gamma1 + gamma2 must be positive")
        if self.omega21 < 0:
            raise ParameterError(f"omega21 must be non-negative, got {self.omega21}")
        if self.gbar_mag < 0:
            raise ParameterError(f"gbar_mag must be non-negative, got {self.gbar_mag}")
        if self.density <= 0:
            raise ParameterError(f"density must be positive, got {self.density}")

    @property
    def gamma(self) -> float:
        """Total upper-state decay rate."""
        return self.gamma1 + self.gamma2

    @property
    def gbar(self) -> complex:
        return self.gbar_mag * complex(math.cos(self.phi), math.sin(self.phi))

    def rabi(self, m: int) -> float:
        """Drive coupling v_m = |ḡ|·√(m+1) of block m (zero for the edge block m = -1)."""
        if m < 0:
            return 0.0
        return self.gbar_mag * math.sqrt(m + 1)

    def with_updates(self, **changes: Any) -> "SystemParams":
        return replace(self, **changes)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of emission detunings δ = ω - ω31."""
    lo: float = -40.0
    hi: float = 40.0
    count: int = 4001

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ParameterError(f"Grid bounds must be finite: [{self.lo}, {self.hi}]")
        if self.lo >= self.hi:
            raise ParameterError(f"Grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.count) != self.count or self.count < 2:
            raise ParameterError(f"Grid needs at least 2 samples, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, int(self.count))

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def detunings(omega: ArrayLike, params: SystemParams) -> Tuple[ArrayLike, ArrayLike]:
    """Detunings (δ, δ̂) of emission frequency ω from the 3→1 and 3→2 transitions."""
    delta = omega - OMEGA31
    delta_hat = delta + params.omega21
    return delta, delta_hat


def couplings_from_rates(params: SystemParams) -> Tuple[complex, complex]:
    """Vacuum couplings g(ω31), ĝ(ω32) reproducing γ1, γ2 for a flat density of states."""
    g_mag = math.sqrt(params.gamma1 / (2.0 * math.pi * params.density))
    ghat_mag = math.sqrt(params.gamma2 / (2.0 * math.pi * params.density))
    g = g_mag * complex(math.cos(params.phi_g), math.sin(params.phi_g))
    ghat = ghat_mag * complex(math.cos(params.phi_ghat), math.sin(params.phi_ghat))
    return g, ghat


def rates_from_couplings(g: complex, ghat: complex, density: float = DEFAULT_DENSITY) -> Tuple[float, float]:
    """Inverse of couplings_from_rates: γi = 2π·D·|gi|²."""
    if density <= 0:
        raise ParameterError(f"density must be positive, got {density}")
    return 2.0 * math.pi * density * abs(g) ** 2, 2.0 * math.pi * density * abs(ghat) ** 2


def dressed_transform(x_amp: ArrayLike, y_amp: ArrayLike, phi: float) -> Tuple[ArrayLike, ArrayLike]:
    """
    Project the bare pair onto the dressed states
    |±,n⟩ = (|1,n+1⟩ ± i·e^{iφ}|2,n⟩)/√2.

    Args:
        x_amp: coefficient of |1,n+1⟩
        y_amp: coefficient of |2,n⟩
        phi: drive coupling phase

    Returns:
        (plus, minus) dressed amplitudes
    """
    rotated = 1j * np.exp(-1j * phi) * y_amp
    plus = SQRT_HALF * (x_amp - rotated)
    minus = SQRT_HALF * (x_amp + rotated)
    return plus, minus


def inverse_dressed_transform(plus_amp: ArrayLike, minus_amp: ArrayLike, phi: float) -> Tuple[ArrayLike, ArrayLike]:
    """Inverse of dressed_transform: dressed (plus, minus) back to bare (x, y)."""
    x_amp = SQRT_HALF * (plus_amp + minus_amp)
    y_amp = 1j * np.exp(1j * phi) * SQRT_HALF * (plus_amp - minus_amp)
    return x_amp, y_amp


def rescaled_to_bare(y_var: ArrayLike, phi: float) -> ArrayLike:
    """
    The amplitude equations carry Y = c(|2,n⟩) / (i·e^{iφ}) so that the drive
    coupling is real; this restores the physical |2,n⟩ coefficient.
    """
    return 1j * np.exp(1j * phi) * y_var
