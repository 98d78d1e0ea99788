"""
Initial states of the driving-field mode.
Each constructor returns the truncated amplitude sequence C₃ⁿ(0) over a
contiguous photon-number range [n_min, n_max].
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import ConstraintError, DomainError, ParameterError, TruncationError

logger = logging.getLogger(__name__)

# Configuration
EXACT_NORM_TOLERANCE = 1e-10
COHERENT_NORM_TOLERANCE = 1e-8
DEFAULT_SIGMAS = 6.0
MIN_SIGMAS = 4.0


@dataclass(frozen=True, eq=False)
class FieldState:
    """Pure drive-mode state as complex amplitudes C[n] for n in [n_min, n_max]."""
    n_min: int
    amps: np.ndarray
    family: str = "raw"
    tolerance: float = EXACT_NORM_TOLERANCE
    descriptor: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n_min) != self.n_min or self.n_min < 0:
            raise DomainError(f"n_min must be a non-negative integer, got {self.n_min}")
        amps = np.array(self.amps, dtype=complex).ravel()
        if amps.size == 0:
            raise ParameterError("FieldState needs at least one amplitude")
        if not np.all(np.isfinite(amps)):
            raise ParameterError("FieldState amplitudes must be finite")
        norm = float(np.sum(amps.real ** 2 + amps.imag ** 2))
        if abs(norm - 1.0) > self.tolerance:
            raise ParameterError(f"FieldState norm {norm:.12g} deviates from 1 by more than {self.tolerance:g}")
        amps.setflags(write=False)
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "amps", amps)

    @property
    def n_max(self) -> int:
        return self.n_min + self.amps.size - 1

    def photon_numbers(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def amplitude(self, n: int) -> complex:
        """C[n], zero outside the stored range."""
        if n < self.n_min or n > self.n_max:
            return 0j
        return complex(self.amps[n - self.n_min])

    def populated(self) -> List[int]:
        return [int(n) for n, c in zip(self.photon_numbers(), self.amps) if c != 0]

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def mean_photon_number(self) -> float:
        return float(np.sum(self.photon_numbers() * np.abs(self.amps) ** 2))

    def with_global_phase(self, theta: float) -> "FieldState":
        return FieldState(self.n_min, self.amps * np.exp(1j * theta), self.family, self.tolerance,
                          dict(self.descriptor, global_phase=theta))

    def to_json(self) -> str:
        record = {
            "n_min": self.n_min,
            "amplitudes": [[float(c.real), float(c.imag)] for c in self.amps],
        }
        return json.dumps(record)

    @classmethod
    def from_json(cls, text: str, tolerance: float = EXACT_NORM_TOLERANCE) -> "FieldState":
        record = json.loads(text)
        try:
            amps = [complex(re, im) for re, im in record["amplitudes"]]
            return cls(int(record["n_min"]), np.array(amps), "raw", tolerance)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ParameterError):
                raise
            raise ParameterError(f"Malformed field-state record: {e}") from e

    def describe(self) -> Dict[str, Any]:
        """Provenance record: family, constructor arguments and range."""
        return dict(self.descriptor, family=self.family, n_min=self.n_min, n_max=self.n_max)


def from_amplitudes(n_min: int, amps: Sequence[complex], tolerance: float = EXACT_NORM_TOLERANCE) -> FieldState:
    """Raw constructor accepting arbitrary weights."""
    return FieldState(n_min, np.asarray(amps, dtype=complex), "raw", tolerance)


def coherent_state(alpha_mag: float, phi_alpha: float = 0.0, sigmas: float = DEFAULT_SIGMAS) -> FieldState:
    """
    Coherent drive C[n] = e^{-|α|²/2} αⁿ/√n!, truncated to |α|² ± sigmas·|α| and renormalized.

    Raises:
        TruncationError: the truncation window discards more than 1e-8 probability
    """
    if not alpha_mag > 0:
        raise ParameterError(f"alpha_mag must be positive, got {alpha_mag}")
    if sigmas < MIN_SIGMAS:
        raise ParameterError(f"sigmas must be at least {MIN_SIGMAS}, got {sigmas}")

    mean = alpha_mag ** 2
    n_lo = max(0, int(math.floor(mean - sigmas * alpha_mag)))
    n_hi = int(math.ceil(mean + sigmas * alpha_mag))
    n = np.arange(n_lo, n_hi + 1)

    log_mag = -0.5 * mean + n * math.log(alpha_mag) - 0.5 * gammaln(n + 1)
    mags = np.exp(log_mag)
    kept = float(np.sum(mags ** 2))
    discarded = 1.0 - kept
    if discarded > COHERENT_NORM_TOLERANCE:
        raise TruncationError(
            f"Coherent truncation [{n_lo}, {n_hi}] for |alpha|={alpha_mag} discards {discarded:.3g} "
            f"probability; increase sigmas", discarded)

    amps = (mags / math.sqrt(kept)) * np.exp(1j * n * phi_alpha)
    logger.debug(f"Coherent state |alpha|={alpha_mag}: n in [{n_lo}, {n_hi}], discarded {discarded:.2e}")
    return FieldState(n_lo, amps, "coherent", COHERENT_NORM_TOLERANCE,
                      {"alpha": alpha_mag, "phi_alpha": phi_alpha, "sigmas": sigmas})


def single_fock(n0: int) -> FieldState:
    """Single Fock state C[n] = δ_{n,n0}."""
    if int(n0) != n0 or n0 < 0:
        raise ParameterError(f"n0 must be a non-negative integer, got {n0}")
    return FieldState(int(n0), np.array([1.0 + 0j]), "fock", EXACT_NORM_TOLERANCE, {"n0": int(n0)})


def adjacent_window(n0: int, width: int, phi_alpha: float = 0.0) -> FieldState:
    """
    2W+1 adjacent Fock states with equal weight and a fixed phase ramp:
    C[n0+k] = e^{i·k·φ_α}/√(2W+1), k = -W..W.
    """
    if int(width) != width or width < 0:
        raise ParameterError(f"width must be a non-negative integer, got {width}")
    if int(n0) != n0:
        raise ParameterError(f"n0 must be an integer, got {n0}")
    n0, width = int(n0), int(width)
    if n0 - width < 0:
        raise DomainError(f"Window n0 - W = {n0 - width} reaches below the vacuum")

    k = np.arange(-width, width + 1)
    amps = np.exp(1j * k * phi_alpha) / math.sqrt(2 * width + 1)
    return FieldState(n0 - width, amps, "window", EXACT_NORM_TOLERANCE,
                      {"n0": n0, "width": width, "phi_alpha": phi_alpha})


def separated_fock(n0: int, kappas: Iterable[int], phi_alpha: float = 0.0) -> FieldState:
    """
    N non-adjacent Fock states C[n0+κ] = e^{i·κ·φ_α}/√N with |κi - κj| > 1.

    Raises:
        ConstraintError: two populated photon numbers are adjacent (or repeated)
    """
    offsets = [int(kappa) for kappa in kappas]
    if not offsets:
        raise ParameterError("separated_fock needs at least one offset")
    if int(n0) != n0:
        raise ParameterError(f"n0 must be an integer, got {n0}")
    n0 = int(n0)
    ordered = sorted(offsets)
    for left, right in zip(ordered, ordered[1:]):
        if right - left <= 1:
            raise ConstraintError(f"Offsets {left} and {right} violate |kappa_i - kappa_j| > 1")
    if n0 + ordered[0] < 0:
        raise DomainError(f"Photon number n0 + kappa = {n0 + ordered[0]} is negative")

    n_lo = n0 + ordered[0]
    amps = np.zeros(ordered[-1] - ordered[0] + 1, dtype=complex)
    weight = 1.0 / math.sqrt(len(ordered))
    for kappa in ordered:
        amps[kappa - ordered[0]] = weight * np.exp(1j * kappa * phi_alpha)
    return FieldState(n_lo, amps, "separated", EXACT_NORM_TOLERANCE,
                      {"n0": n0, "kappas": ordered, "phi_alpha": phi_alpha})
