"""
Classical reference catalogue: four drive phases φ_c = 0, π/2, π, 3π/2
labelled a–d, plus the expected phase-equivalence table for coherent drives.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .analysis import Spectrum, classical_reference_spectrum, compare_spectra
from .model import FrequencyGrid, SystemParams

logger = logging.getLogger(__name__)

# Configuration
MATCH_MARGIN = 2.0
TABLE_PHASES = (0.0, 0.5 * math.pi, math.pi)

# rows φ_α = 0, π/2, π; columns φ = 0, π/2, π
EXPECTED_TABLE = (
    ("a", "b", "c"),
    ("b", "c", "d"),
    ("c", "d", "a"),
)


@dataclass
class Reference:
    letter: str
    phi_c: float
    description: str


@dataclass
class Match:
    """Outcome of matching one spectrum against the catalogue."""
    letter: Optional[str]
    l2_rel: float
    runner_up: str
    runner_up_l2: float
    distances: Dict[str, float]

    @property
    def margin(self) -> float:
        if self.l2_rel == 0:
            return math.inf
        return self.runner_up_l2 / self.l2_rel


class ReferenceCatalogue:
    """The four classical reference spectra on one grid and parameter set."""

    def __init__(self, params: SystemParams, omega_rabi: float, grid: FrequencyGrid, threads: int = 1):
        self.logger = logging.getLogger(__name__)
        self.params = params
        self.omega_rabi = omega_rabi
        self.grid = grid
        self.references = self._create_references()
        self.spectra: Dict[str, Spectrum] = {
            ref.letter: classical_reference_spectrum(params, omega_rabi, ref.phi_c, grid, threads)
            for ref in self.references
        }
        self.logger.info(f"✅ Reference catalogue initialized (|Omega|={omega_rabi}, {len(self.references)} phases)")

    @staticmethod
    def _create_references() -> List[Reference]:
        return [
            Reference("a", 0.0, "classical drive, phi_c = 0"),
            Reference("b", 0.5 * math.pi, "classical drive, phi_c = pi/2"),
            Reference("c", math.pi, "classical drive, phi_c = pi"),
            Reference("d", 1.5 * math.pi, "classical drive, phi_c = 3pi/2"),
        ]

    def letters(self) -> List[str]:
        return [ref.letter for ref in self.references]

    def get_reference(self, letter: str) -> Reference:
        for ref in self.references:
            if ref.letter == letter:
                return ref
        raise KeyError(f"Unknown reference letter {letter!r}")

    def match(self, spectrum: Spectrum, margin: float = MATCH_MARGIN) -> Match:
        """
        Nearest reference by l2_rel. letter is None when the runner-up is not
        at least `margin` times farther away.
        """
        distances = {letter: compare_spectra(spectrum, ref).l2_rel for letter, ref in self.spectra.items()}
        ranked = sorted(distances.items(), key=lambda item: (item[1], item[0]))
        (best, best_l2), (second, second_l2) = ranked[0], ranked[1]
        accepted = second_l2 >= margin * best_l2
        if not accepted:
            self.logger.warning(f"Ambiguous match: {best}={best_l2:.3g} vs {second}={second_l2:.3g}")
        return Match(best if accepted else None, best_l2, second, second_l2, distances)


def expected_letter(phi_index: int, phi_alpha_index: int) -> str:
    """Table entry for φ = TABLE_PHASES[phi_index], φ_α = TABLE_PHASES[phi_alpha_index]."""
    return EXPECTED_TABLE[phi_alpha_index][phi_index]


def letter_for_phase_sum(total_phase: float) -> str:
    """Reference letter reached by a coherent drive whose φ + φ_α equals total_phase (mod 2π)."""
    quarter = round((total_phase % (2.0 * math.pi)) / (0.5 * math.pi)) % 4
    return "abcd"[quarter]


def table_cells() -> List[Tuple[int, int, float, float]]:
    """(row, column, φ_α, φ) for every table cell in row-major order."""
    return [(i, j, phi_alpha, phi)
            for i, phi_alpha in enumerate(TABLE_PHASES)
            for j, phi in enumerate(TABLE_PHASES)]
