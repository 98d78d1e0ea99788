"""
Named invariant checks for `verify`.
Quick tier: closed-form properties, the phase table and small RK4 oracles.
Full tier adds the discretized-vacuum runs.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .analysis import (Spectrum, assemble_spectrum, classical_reference_spectrum, dip_metric, fwhm,
                       phase_averaged_spectrum, spectra_sum)
from .errors import ConfigError, VerificationError
from .field_states import adjacent_window, coherent_state, separated_fock, single_fock
from .io import write_trace
from .model import (FrequencyGrid, SystemParams, couplings_from_rates, dressed_transform,
                    inverse_dressed_transform, rates_from_couplings)
from .references import ReferenceCatalogue, expected_letter, table_cells
from .spectral import SpectralSolver, build_blocks
from .time_domain import IntegratorConfig, TimeDomainSolver, full_bath_simulate

logger = logging.getLogger(__name__)

LEVELS = ("quick", "full")

# Scenario constants shared by the checks
DEFAULT_GRID = FrequencyGrid(-40.0, 40.0, 4001)
ORACLE_GRID = FrequencyGrid(-10.0, 10.0, 101)
SMALL_ORACLE_GRID = FrequencyGrid(-10.0, 10.0, 21)
ORACLE_CONFIG = IntegratorConfig(dt=0.004, t_end=80.0)
TABLE_ALPHA = 20.0
TABLE_GBAR = 0.25
OMEGA_RABI = 5.0
DIP_WINDOW = (4.0, 5.5)
# at |alpha| = 4 the default 6 sigmas discard more than 1e-8
SMALL_ALPHA = 4.0
SMALL_ALPHA_SIGMAS = 10.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str
    seconds: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        return {"name": self.name, "passed": self.passed, "value": self.value, "tolerance": self.tolerance,
                "detail": self.detail, "seconds": round(self.seconds, 3)}


class VerificationSuite:
    """Ordered checks; run() stops at the first failure."""

    def __init__(self, threads: int = 1, trace_path: Optional[str] = None):
        self.logger = logging.getLogger(__name__)
        self.threads = threads
        self.trace_path = trace_path
        self.spectral = SpectralSolver(threads)
        self.oracle = TimeDomainSolver(threads)
        self.base = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=TABLE_GBAR)
        self._initialize_checks()
        self.logger.info(f"✅ Verification suite initialized ({len(self.quick_checks)} quick, "
                         f"{len(self.full_checks)} full-only checks)")

    def _initialize_checks(self) -> None:
        self.quick_checks: List[Tuple[str, Callable[[], Tuple[float, float, str]]]] = [
            ("dressed_unitarity", self.check_dressed_unitarity),
            ("coupling_round_trip", self.check_coupling_round_trip),
            ("normalization", self.check_normalization),
            ("two_level_linewidth", self.check_two_level_linewidth),
            ("single_fock_phase_independence", self.check_single_fock_phase),
            ("phase_sum_dependence", self.check_phase_sum),
            ("coupling_phase_equivalence", self.check_coupling_phase),
            ("phase_average_cancels_cross_terms", self.check_phase_average),
            ("separated_fock_additivity", self.check_separated_additivity),
            ("reflection_symmetry", self.check_reflection),
            ("no_full_cancellation", self.check_no_full_cancellation),
            ("classical_dip_anchor", self.check_classical_dip),
            ("table1_letters", self.check_table1),
            ("oracle_equivalence", self.check_oracle_equivalence),
            ("oracle_norm_conservation", self.check_oracle_norm),
            ("oracle_block_closure", self.check_block_closure),
            ("step_halving", self.check_step_halving),
        ]
        self.full_checks: List[Tuple[str, Callable[[], Tuple[float, float, str]]]] = [
            ("full_bath_decay", self.check_full_bath_decay),
            ("full_bath_dipole_independence", self.check_full_bath_dipoles),
            ("full_bath_linewidth", self.check_full_bath_linewidth),
        ]

    def checks(self, level: str) -> List[Tuple[str, Callable[[], Tuple[float, float, str]]]]:
        if level not in LEVELS:
            raise ConfigError(f"level must be one of {LEVELS}, got {level!r}")
        return self.quick_checks + (self.full_checks if level == "full" else [])

    def run(self, level: str = "quick", stop_on_failure: bool = True) -> List[CheckResult]:
        """
        Run the checks of a tier in order.

        Raises:
            VerificationError: first failing check (when stop_on_failure)
        """
        results = []
        for name, check in self.checks(level):
            started = time.perf_counter()
            value, tolerance, detail = check()
            result = CheckResult(name, bool(value <= tolerance), float(value), float(tolerance), detail,
                                 time.perf_counter() - started)
            results.append(result)
            if result.passed:
                self.logger.info(f"✓ {name}: {value:.3g} <= {tolerance:.3g} ({result.seconds:.2f}s)")
                continue
            self.logger.error(f"✗ {name}: {value:.3g} > {tolerance:.3g} ({detail})")
            if stop_on_failure:
                raise VerificationError(name, f"{value:.3g} exceeds {tolerance:.3g}; {detail}")
        return results

    # --- helpers -----------------------------------------------------------

    def _spectrum(self, state, params: SystemParams, grid: FrequencyGrid = DEFAULT_GRID):
        return assemble_spectrum(self.spectral.steady_amplitudes(state, params, grid))

    @staticmethod
    def _max_diff(a, b) -> float:
        return float(np.max(np.abs(a.values - b.values)))

    # --- model and closed-form properties ----------------------------------

    def check_dressed_unitarity(self) -> Tuple[float, float, str]:
        rng = np.random.default_rng(7)
        x = rng.normal(size=64) + 1j * rng.normal(size=64)
        y = rng.normal(size=64) + 1j * rng.normal(size=64)
        phi = rng.uniform(0, 2 * math.pi, size=64)
        plus, minus = dressed_transform(x, y, phi)
        norm_err = np.max(np.abs(np.abs(plus) ** 2 + np.abs(minus) ** 2 - np.abs(x) ** 2 - np.abs(y) ** 2))
        x_back, y_back = inverse_dressed_transform(plus, minus, phi)
        round_trip = np.max(np.abs(x_back - x) + np.abs(y_back - y))
        return float(max(norm_err, round_trip)), 1e-12, "norm and round trip over 64 random pairs"

    def check_coupling_round_trip(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=0.3, gamma2=0.7, phi_g=0.4, phi_ghat=-1.1, density=0.2)
        g, ghat = couplings_from_rates(params)
        gamma1, gamma2 = rates_from_couplings(g, ghat, params.density)
        return abs(gamma1 - 0.3) + abs(gamma2 - 0.7), 1e-14, "gamma -> g -> gamma"

    def check_normalization(self) -> Tuple[float, float, str]:
        states = {
            "coherent": coherent_state(TABLE_ALPHA),
            "fock": single_fock(400),
            "window": adjacent_window(400, 2),
            "separated": separated_fock(400, (0, 2, 4)),
        }
        worst, label = 0.0, ""
        for name, state in states.items():
            deficit = abs(self._spectrum(state, self.base).norm - 1.0)
            if deficit > worst:
                worst, label = deficit, name
        return worst, 0.03, f"worst family {label}"

    def check_two_level_linewidth(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=1.0, gamma2=0.0, omega21=1.0, gbar_mag=0.0)
        width = fwhm(self._spectrum(single_fock(0), params), around=0.0)
        return abs(width - params.gamma), DEFAULT_GRID.spacing, f"FWHM {width:.5f}"

    def check_single_fock_phase(self) -> Tuple[float, float, str]:
        state = single_fock(400)
        spectra = [self._spectrum(state, self.base.with_updates(phi=phi)) for phi in (0.0, 0.5 * math.pi, 1.7)]
        return max(self._max_diff(spectra[0], s) for s in spectra[1:]), 1e-12, "phi in {0, pi/2, 1.7}"

    def check_phase_sum(self) -> Tuple[float, float, str]:
        pairs = [(0.3, 0.9), (0.9, 0.3), (1.2, 0.0)]
        spectra = [self._spectrum(coherent_state(SMALL_ALPHA, phi_alpha, SMALL_ALPHA_SIGMAS),
                                  self.base.with_updates(phi=phi))
                   for phi, phi_alpha in pairs]
        return max(self._max_diff(spectra[0], s) for s in spectra[1:]), 1e-10, "phi + phi_alpha = 1.2"

    def check_coupling_phase(self) -> Tuple[float, float, str]:
        state = coherent_state(SMALL_ALPHA, 0.2, SMALL_ALPHA_SIGMAS)
        via_drive = self._spectrum(state, self.base.with_updates(phi=0.7))
        via_vacuum = self._spectrum(state, self.base.with_updates(phi_ghat=0.9, phi_g=0.2))
        return self._max_diff(via_drive, via_vacuum), 1e-10, "phi vs phi_ghat - phi_g"

    def check_phase_average(self) -> Tuple[float, float, str]:
        params = self.base

        def builder(phase: float, grid: FrequencyGrid):
            return self._spectrum(coherent_state(TABLE_ALPHA, phase), params, grid)

        averaged = phase_averaged_spectrum(builder, DEFAULT_GRID, 8)
        incoherent = self._spectrum(coherent_state(TABLE_ALPHA), params.with_updates(interference=False))
        return self._max_diff(averaged, incoherent), 1e-10, "8-phase average vs cross terms dropped"

    def check_separated_additivity(self) -> Tuple[float, float, str]:
        kappas = (0, 2, 4)
        separated = self._spectrum(separated_fock(400, kappas), self.base)
        parts = [self._spectrum(single_fock(400 + k), self.base) for k in kappas]
        summed = spectra_sum(parts, [1.0 / len(kappas)] * len(kappas))
        return self._max_diff(separated, summed), 1e-12, "kappa = {0, 2, 4}"

    def check_reflection(self) -> Tuple[float, float, str]:
        # grid symmetric about δ = -ω21/2
        grid = FrequencyGrid(-30.5, 29.5, 601)
        params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0)
        worst = 0.0
        for phi_c in (0.0, 0.5 * math.pi, 1.1):
            direct = classical_reference_spectrum(params, OMEGA_RABI, phi_c, grid)
            mirrored = classical_reference_spectrum(params, OMEGA_RABI, phi_c + math.pi, grid)
            worst = max(worst, float(np.max(np.abs(direct.values - mirrored.values[::-1]))))
        return worst, 1e-10, "S(phi_c; delta) = S(phi_c + pi; -delta - omega21)"

    def check_no_full_cancellation(self) -> Tuple[float, float, str]:
        scenarios = [
            classical_reference_spectrum(self.base, OMEGA_RABI, 0.0, DEFAULT_GRID),
            self._spectrum(coherent_state(TABLE_ALPHA), self.base),
            self._spectrum(adjacent_window(400, 1), self.base),
        ]
        floor = min(float(np.min(s.values)) for s in scenarios)
        # passes while the minimum stays positive
        return (1.0 if floor <= 0 else 0.0), 0.5, f"min S = {floor:.3g}"

    def check_classical_dip(self) -> Tuple[float, float, str]:
        spectrum = classical_reference_spectrum(self.base, OMEGA_RABI, 0.0, DEFAULT_GRID)
        location, value = dip_metric(spectrum, DIP_WINDOW)
        # the lower dressed branch vanishes exactly at |Omega| - gamma/2 when omega21 = gamma
        expected = OMEGA_RABI - 0.5 * self.base.gamma
        return abs(location - expected), 0.5 * DEFAULT_GRID.spacing, f"dip at {location:.4f}, S = {value:.3g}"

    def check_table1(self) -> Tuple[float, float, str]:
        catalogue = ReferenceCatalogue(self.base, OMEGA_RABI, DEFAULT_GRID, self.threads)
        mismatches, worst = [], 0.0
        for row, col, phi_alpha, phi in table_cells():
            spectrum = self._spectrum(coherent_state(TABLE_ALPHA, phi_alpha), self.base.with_updates(phi=phi))
            match = catalogue.match(spectrum)
            worst = max(worst, match.l2_rel)
            if match.letter != expected_letter(col, row):
                mismatches.append(f"({row},{col})={match.letter}")
        if mismatches:
            return math.inf, 0.05, "mismatched cells " + ", ".join(mismatches)
        return worst, 0.05, "worst l2_rel over 9 cells"

    # --- time-domain oracles -----------------------------------------------

    def check_oracle_equivalence(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0, phi=0.4)
        state = adjacent_window(3, 1, 0.6)
        fast = self.spectral.steady_amplitudes(state, params, ORACLE_GRID)
        slow = self.oracle.steady_amplitudes(state, params, ORACLE_GRID, ORACLE_CONFIG)
        fast_mag = np.concatenate(fast.magnitudes())
        slow_mag = np.concatenate(slow.magnitudes())
        deviation = float(np.max(np.abs(fast_mag - slow_mag)) / np.max(fast_mag))
        return deviation, 1e-6, "closed form vs RK4, window(3, 1), |gbar| = 1"

    def check_oracle_norm(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0)
        bare = self.oracle.integrate_bare(single_fock(3), params, SMALL_ORACLE_GRID, ORACLE_CONFIG)
        drift = float(np.max(np.abs(bare.norms() - bare.norms(mid=True))))
        return drift, 1e-8, "sum |X|^2 + |Y|^2 between t_end/2 and t_end"

    def check_block_closure(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0)
        state = adjacent_window(3, 1)
        blocks = build_blocks(state, params)
        full = self.oracle.integrate_bare(state, params, SMALL_ORACLE_GRID, ORACLE_CONFIG)
        full_plus, full_minus = full.block_modes(blocks)
        worst = 0.0
        for i, block in enumerate(blocks):
            alone = self.oracle.integrate_block(block, params, SMALL_ORACLE_GRID, ORACLE_CONFIG)
            plus, minus = alone.block_modes([block])
            worst = max(worst, float(np.max(np.abs(plus[0] - full_plus[i]))),
                        float(np.max(np.abs(minus[0] - full_minus[i]))))
        return worst, 1e-12, f"{len(blocks)} blocks integrated alone"

    def check_step_halving(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0)
        deviation = self.oracle.step_halving_deviation(single_fock(3), params, SMALL_ORACLE_GRID, ORACLE_CONFIG)
        return deviation, 1e-8, f"dt {ORACLE_CONFIG.dt} vs {ORACLE_CONFIG.dt / 2}"

    # --- full tier ---------------------------------------------------------

    def check_full_bath_decay(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0)
        result = full_bath_simulate(adjacent_window(2, 1), params, n_modes=800, span=80.0, t_end=8.0)
        if self.trace_path:
            write_trace(result.times, result.upper_population, self.trace_path)
        return result.decay_deviation(params.gamma), 0.02, "800 modes, span 80, t_end 8"

    def check_full_bath_dipoles(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=0.5, gamma2=0.5, omega21=1.0, gbar_mag=1.0)
        state = adjacent_window(2, 1)
        parallel = full_bath_simulate(state, params, t_end=8.0, dipoles="parallel")
        orthogonal = full_bath_simulate(state, params, t_end=8.0, dipoles="orthogonal")
        gap = float(np.max(np.abs(parallel.upper_population - orthogonal.upper_population)))
        return gap, 5e-3, "upper population, parallel vs orthogonal"

    def check_full_bath_linewidth(self) -> Tuple[float, float, str]:
        params = SystemParams(gamma1=1.0, gamma2=0.0, omega21=1.0, gbar_mag=0.0)
        result = full_bath_simulate(single_fock(0), params, t_end=16.0, center=0.0)
        spectrum = Spectrum(result.spectrum_grid(), result.spectral_density)
        width = fwhm(spectrum, around=0.0)
        return abs(width - 1.0) / 1.0, 0.05, f"FWHM {width:.4f}"


def run_verification(level: str = "quick", threads: int = 1, trace_path: Optional[str] = None) -> List[CheckResult]:
    return VerificationSuite(threads, trace_path).run(level)
