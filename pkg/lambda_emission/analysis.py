"""
Spectrum assembly and comparison metrics.
S(δ) = D·Σ_blocks (|W+|² + |W-|²), normalized to unit total emission probability.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ParameterError
from .model import FrequencyGrid, SystemParams
from .spectral import Block, SpectralSolver, SteadyAmplitudes

logger = logging.getLogger(__name__)

# Configuration
MIN_PHASES = 4
DEFAULT_PHASES = 8


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Intensity samples on a grid; norm = Δω·ΣS is fixed when the spectrum is built."""
    grid: FrequencyGrid
    values: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)
    norm: float = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size != self.grid.count:
            raise DomainError(f"Spectrum has {values.size} samples for a {self.grid.count}-point grid")
        if not np.all(np.isfinite(values)):
            raise DomainError("Spectrum contains non-finite values")
        if np.any(values < 0):
            raise DomainError(f"Spectrum has negative intensity (min {values.min():.3g})")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "norm", float(self.grid.spacing * np.sum(values)))

    def detunings(self) -> np.ndarray:
        return self.grid.values()

    def scaled(self, factor: float, **meta: Any) -> "Spectrum":
        return Spectrum(self.grid, self.values * factor, dict(self.meta, **meta))

    def with_meta(self, **meta: Any) -> "Spectrum":
        return Spectrum(self.grid, self.values, dict(self.meta, **meta))


@dataclass
class ComparisonReport:
    """Distances between a spectrum and a reference (b)."""
    l2_rel: float
    sup_rel: float
    peak_locations: List[float]
    reference_peaks: List[float]
    dip: Optional[Tuple[float, float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "l2_rel": self.l2_rel,
            "sup_rel": self.sup_rel,
            "peak_locations": list(self.peak_locations),
            "reference_peaks": list(self.reference_peaks),
            "dip": None if self.dip is None else {"location": self.dip[0], "value": self.dip[1]},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _intensity(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    return re * re + im * im


def block_intensity(amps: SteadyAmplitudes, row: int, interference: bool) -> np.ndarray:
    """D·(|W+|² + |W-|²) of one block row, with or without the x/y cross terms."""
    density = amps.params.density
    if interference:
        plus = amps.plus_x[row] + amps.plus_y[row]
        minus = amps.minus_x[row] + amps.minus_y[row]
        total = _intensity(plus.real, plus.imag) + _intensity(minus.real, minus.imag)
    else:
        total = (_intensity(amps.plus_x[row].real, amps.plus_x[row].imag)
                 + _intensity(amps.plus_y[row].real, amps.plus_y[row].imag)
                 + _intensity(amps.minus_x[row].real, amps.minus_x[row].imag)
                 + _intensity(amps.minus_y[row].real, amps.minus_y[row].imag))
    return density * total


def assemble_spectrum(amps: SteadyAmplitudes, params: Optional[SystemParams] = None) -> Spectrum:
    """
    Sum block intensities in block order.

    Args:
        amps: steady phasors
        params: overrides amps.params for the interference switch only

    Returns:
        Spectrum with provenance meta
    """
    params = params or amps.params
    values = np.zeros(amps.grid.count)
    for row in range(len(amps.blocks)):
        values = values + block_intensity(amps, row, params.interference)
    meta = dict(amps.descriptor or {}, blocks=len(amps.blocks), interference=params.interference)
    spectrum = Spectrum(amps.grid, values, meta)
    logger.debug(f"Assembled spectrum over {len(amps.blocks)} blocks, norm={spectrum.norm:.6f}")
    return spectrum


def interference_term(amps: SteadyAmplitudes) -> np.ndarray:
    """Signed cross-term contribution S - S_no_interference on amps.grid."""
    total = np.zeros(amps.grid.count)
    for row in range(len(amps.blocks)):
        total = total + (block_intensity(amps, row, True) - block_intensity(amps, row, False))
    return total


def classical_reference_spectrum(params: SystemParams, omega_rabi: float, phi_c: float,
                                 grid: FrequencyGrid, threads: int = 1) -> Spectrum:
    """
    Classical drive of Rabi frequency |Ω| and phase φ_c: a single block with
    v = |Ω| fed by unit amplitude in both slots.
    """
    if omega_rabi < 0:
        raise ParameterError(f"omega_rabi must be non-negative, got {omega_rabi}")
    classical = params.with_updates(phi=phi_c)
    block = Block(m=0, v=float(omega_rabi), src_x=1.0 + 0j, src_y=1.0 + 0j)
    amps = SpectralSolver(threads).solve_blocks([block], classical, grid)
    spectrum = assemble_spectrum(amps)
    return spectrum.with_meta(family="classical", omega_rabi=float(omega_rabi), phi_c=float(phi_c))


def phase_averaged_spectrum(builder: Callable[[float, FrequencyGrid], Spectrum], grid: FrequencyGrid,
                            m_phases: int = DEFAULT_PHASES) -> Spectrum:
    """
    Uniform average of builder(2πj/m, grid) over j = 0..m-1.
    First-harmonic cross terms cancel exactly for m ≥ 2.
    """
    if int(m_phases) != m_phases or m_phases < MIN_PHASES:
        raise ParameterError(f"m_phases must be an integer >= {MIN_PHASES}, got {m_phases}")
    total = np.zeros(grid.count)
    meta: Dict[str, Any] = {}
    for j in range(int(m_phases)):
        spectrum = builder(2.0 * np.pi * j / m_phases, grid)
        if spectrum.grid != grid:
            raise DomainError("Phase-average builder returned a spectrum on a different grid")
        total = total + spectrum.values
        meta = spectrum.meta
    return Spectrum(grid, total / m_phases, dict(meta, phase_averaged=int(m_phases)))


def restricted_spectrum(amps: SteadyAmplitudes, m: int, normalize: bool = False) -> Spectrum:
    """
    Spectrum from block m alone. With normalize=True it is divided by the block's
    feeding weight |C^m(0)|².

    Raises:
        DomainError: no block m in amps
    """
    row = amps.row(m)
    values = block_intensity(amps, row, amps.params.interference)
    meta = dict(amps.descriptor or {}, restricted_block=m)
    if normalize:
        weight = amps.blocks[row].weight()
        values = values / weight
        meta["normalized_by"] = weight
    return Spectrum(amps.grid, values, meta)


def _window_mask(grid: FrequencyGrid, window: Tuple[float, float]) -> np.ndarray:
    lo, hi = window
    if lo > hi:
        raise DomainError(f"Window [{lo}, {hi}] is inverted")
    if lo < grid.lo or hi > grid.hi:
        raise DomainError(f"Window [{lo}, {hi}] leaves the grid [{grid.lo}, {grid.hi}]")
    deltas = grid.values()
    mask = (deltas >= lo) & (deltas <= hi)
    if not mask.any():
        raise DomainError(f"Window [{lo}, {hi}] contains no grid samples")
    return mask


def dip_metric(s: Spectrum, window: Tuple[float, float]) -> Tuple[float, float]:
    """Minimum sample (location, value) inside the window; ties go to the lowest detuning."""
    mask = _window_mask(s.grid, window)
    deltas = s.detunings()[mask]
    values = s.values[mask]
    i = int(np.argmin(values))
    return float(deltas[i]), float(values[i])


def find_peaks(s: Spectrum, refine: bool = True) -> List[float]:
    """
    Interior local maxima by a 3-point scan (strictly above the left
    neighbour, not below the right one, so a plateau reports its lowest
    detuning). refine=True fits a parabola through each maximum and its
    neighbours.
    """
    values = s.values
    deltas = s.detunings()
    centre = values[1:-1]
    is_peak = (centre > values[:-2]) & (centre >= values[2:])
    peaks = []
    step = s.grid.spacing
    for i in np.nonzero(is_peak)[0] + 1:
        location = float(deltas[i])
        if refine:
            left, mid, right = values[i - 1], values[i], values[i + 1]
            curvature = left - 2.0 * mid + right
            if curvature < 0:
                location += 0.5 * step * (left - right) / curvature
        peaks.append(location)
    return peaks


def compare_spectra(a: Spectrum, b: Spectrum, dip_window: Optional[Tuple[float, float]] = None) -> ComparisonReport:
    """
    Relative distances of a from the reference b.

    Raises:
        DomainError: the grids differ
    """
    if a.grid != b.grid:
        raise DomainError(f"Grid mismatch: {a.grid} vs {b.grid}")
    diff = a.values - b.values
    ref_l2 = float(np.linalg.norm(b.values))
    ref_sup = float(np.max(np.abs(b.values)))
    if ref_l2 == 0:
        logger.warning("Reference spectrum is identically zero; relative distances are infinite")
        l2_rel = 0.0 if not diff.any() else float("inf")
        sup_rel = l2_rel
    else:
        l2_rel = float(np.linalg.norm(diff)) / ref_l2
        sup_rel = float(np.max(np.abs(diff))) / ref_sup
    dip = dip_metric(a, dip_window) if dip_window is not None else None
    return ComparisonReport(l2_rel, sup_rel, find_peaks(a), find_peaks(b), dip)


def fwhm(s: Spectrum, around: Optional[float] = None) -> float:
    """
    Full width at half maximum of the line nearest `around` (global maximum
    if omitted), with linear interpolation of both half-maximum crossings.
    """
    values = s.values
    deltas = s.detunings()
    if around is None:
        i = int(np.argmax(values))
    else:
        candidates = find_peaks(s, refine=False)
        if not candidates:
            raise DomainError("Spectrum has no interior maximum")
        nearest = min(candidates, key=lambda p: abs(p - around))
        i = int(np.argmin(np.abs(deltas - nearest)))
    half = 0.5 * values[i]

    left = i
    while left > 0 and values[left] > half:
        left -= 1
    right = i
    while right < values.size - 1 and values[right] > half:
        right += 1
    if values[left] > half or values[right] > half:
        raise DomainError("Half-maximum crossing lies outside the grid")

    def crossing(inside: int, outside: int) -> float:
        y_in, y_out = values[inside], values[outside]
        frac = (y_in - half) / (y_in - y_out)
        return float(deltas[inside] + frac * (deltas[outside] - deltas[inside]))

    return crossing(right - 1, right) - crossing(left + 1, left)


def spectra_sum(spectra: Sequence[Spectrum], weights: Optional[Sequence[float]] = None) -> Spectrum:
    """Weighted sum of spectra on a common grid."""
    if not spectra:
        raise DomainError("Nothing to sum")
    grid = spectra[0].grid
    weights = weights if weights is not None else [1.0] * len(spectra)
    total = np.zeros(grid.count)
    for weight, spectrum in zip(weights, spectra):
        if spectrum.grid != grid:
            raise DomainError("Cannot sum spectra on different grids")
        total = total + weight * spectrum.values
    return Spectrum(grid, total, {"summed": len(spectra)})
