"""
Brute-force time-domain oracles.

integrate_bare runs fixed-step RK4 on the ground-manifold amplitude equations
with the upper state eliminated (C₃ⁿ(t) = C₃ⁿ(0)e^{-γt/2}):

    dXⁿ/dt = -g*·e^{iδt}·C₃ⁿ(t)          - i|ḡ|√n·Y^{n-1}
    dYⁿ/dt = +i·ĝ*·e^{-iφ}·e^{iδ̂t}·C₃ⁿ(t) - i|ḡ|√(n+1)·X^{n+1}

where Xⁿ is the |1,n⟩ slot and Yⁿ the (phase-rescaled) |2,n⟩ slot.

full_bath_simulate keeps the upper state dynamical and couples it to a
discretized vacuum, checking the exponential decay itself.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .errors import ConfigError, ConvergenceError, DomainError, ParameterError
from .field_states import FieldState
from .model import SQRT_HALF, FrequencyGrid, SystemParams, couplings_from_rates, detunings
from .spectral import Block, SteadyAmplitudes, build_blocks

logger = logging.getLogger(__name__)

# Configuration
DT_RESOLUTION = 0.05          # dt · (fastest rate) bound
MIN_STEADY_HORIZON = 20.0     # t_end · γ needed before steady-state claims
STATIONARITY_TOL = 1e-8
ORACLE_CHUNK = 256
SOURCE_FAMILIES = ("both", "x", "y")
DIPOLE_LAYOUTS = {
    # channel weights (g, ĝ) per polarization channel
    "parallel": ((1.0, 1.0),),
    "orthogonal": ((1.0, 0.0), (0.0, 1.0)),
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings (units of 1/γ)."""
    dt: float = 0.001
    t_end: float = 80.0
    method: str = "rk4"
    stationarity_tol: float = STATIONARITY_TOL

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ParameterError(f"t_end must be positive, got {self.t_end}")
        if self.method != "rk4":
            raise ParameterError(f"Only fixed-step 'rk4' is supported, got {self.method!r}")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.dt / 2.0, self.t_end, self.method, self.stationarity_tol)


def upper_state_amplitude(c0: complex, t, params: SystemParams):
    """C₃ⁿ(t) = C₃ⁿ(0)·e^{-γt/2}: each Fock component decays independently."""
    if np.any(np.asarray(t) < 0):
        raise ParameterError("Time must be non-negative")
    return c0 * np.exp(-0.5 * params.gamma * np.asarray(t))


def max_stable_dt(state: FieldState, params: SystemParams, grid: FrequencyGrid) -> float:
    """Largest step resolving γ, the strongest drive coupling and the largest detunings."""
    _, hat_lo = detunings(grid.lo, params)
    _, hat_hi = detunings(grid.hi, params)
    fastest = max(params.gamma, params.rabi(state.n_max), abs(grid.lo), abs(grid.hi), abs(hat_lo), abs(hat_hi))
    return DT_RESOLUTION / fastest


@dataclass(frozen=True, eq=False)
class BareAmplitudes:
    """
    X[n], Y[n] per frequency sample for n in [n_lo, n_lo + slots - 1], at time t.
    x_mid / y_mid hold the t_end/2 snapshot used for the stationarity check.
    """
    grid: FrequencyGrid
    n_lo: int
    x: np.ndarray
    y: np.ndarray
    t: float
    x_mid: Optional[np.ndarray] = None
    y_mid: Optional[np.ndarray] = None
    t_mid: Optional[float] = None

    @property
    def slots(self) -> int:
        return self.x.shape[1]

    def slot(self, n: int) -> int:
        j = n - self.n_lo
        if j < 0 or j >= self.slots:
            raise DomainError(f"Photon number {n} outside active range [{self.n_lo}, {self.n_lo + self.slots - 1}]")
        return j

    def norms(self, mid: bool = False) -> np.ndarray:
        x, y = (self.x_mid, self.y_mid) if mid else (self.x, self.y)
        return np.sum(np.abs(x) ** 2 + np.abs(y) ** 2, axis=1)

    def block_modes(self, blocks: Sequence[Block], mid: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        """Eigenmode amplitudes w± = (X^{m+1} ± Y^m)/√2, shape (n_blocks, n_grid)."""
        x, y = (self.x_mid, self.y_mid) if mid else (self.x, self.y)
        plus = np.zeros((len(blocks), self.grid.count), dtype=complex)
        minus = np.zeros_like(plus)
        for i, block in enumerate(blocks):
            x_col = x[:, self.slot(block.m + 1)]
            if block.is_edge:
                plus[i] = x_col
                continue
            y_col = y[:, self.slot(block.m)]
            plus[i] = SQRT_HALF * (x_col + y_col)
            minus[i] = SQRT_HALF * (x_col - y_col)
        return plus, minus

    def steady_phasors(self, blocks: Sequence[Block]) -> Tuple[np.ndarray, np.ndarray]:
        """Undo the free rotation w±(t) = e^{∓ivt}·W± to recover the steady phasors."""
        plus, minus = self.block_modes(blocks)
        v = np.array([block.v for block in blocks])[:, None]
        return plus * np.exp(1j * v * self.t), minus * np.exp(-1j * v * self.t)


def _feeds(state: FieldState, n_lo: int, slots: int, sources: str) -> Tuple[np.ndarray, np.ndarray]:
    if sources not in SOURCE_FAMILIES:
        raise ParameterError(f"sources must be one of {SOURCE_FAMILIES}, got {sources!r}")
    c0 = np.array([state.amplitude(n) for n in range(n_lo, n_lo + slots)], dtype=complex)
    x_feed = c0 if sources in ("both", "x") else np.zeros_like(c0)
    y_feed = c0 if sources in ("both", "y") else np.zeros_like(c0)
    return x_feed, y_feed


def _integrate_slots(deltas: np.ndarray, n_lo: int, x_feed: np.ndarray, y_feed: np.ndarray,
                     params: SystemParams, cfg: IntegratorConfig) -> Tuple[np.ndarray, ...]:
    """RK4 over one grid chunk; returns (x_mid, y_mid, x_end, y_end)."""
    slots = x_feed.size
    n = np.arange(n_lo, n_lo + slots, dtype=float)
    g, ghat = couplings_from_rates(params)
    src_x = -np.conj(g) * x_feed
    src_y = 1j * np.conj(ghat) * np.exp(-1j * params.phi) * y_feed
    cx = -1j * params.gbar_mag * np.sqrt(n)[1:]       # Xⁿ ← Y^{n-1}
    cy = -1j * params.gbar_mag * np.sqrt(n + 1)[:-1]  # Yⁿ ← X^{n+1}

    _, delta_hat = detunings(deltas, params)
    rate_x = (1j * deltas - 0.5 * params.gamma)[:, None]
    rate_y = (1j * delta_hat - 0.5 * params.gamma)[:, None]

    def sources_at(t: float) -> Tuple[np.ndarray, np.ndarray]:
        return np.exp(rate_x * t) * src_x, np.exp(rate_y * t) * src_y

    def rhs(src: Tuple[np.ndarray, np.ndarray], x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        dx = src[0].copy()
        dy = src[1].copy()
        dx[:, 1:] += cx * y[:, :-1]
        dy[:, :-1] += cy * x[:, 1:]
        return dx, dy

    dt = cfg.dt
    steps = cfg.steps
    half = steps // 2
    x = np.zeros((deltas.size, slots), dtype=complex)
    y = np.zeros_like(x)
    x_mid, y_mid = x, y
    s0 = sources_at(0.0)
    for k in range(steps):
        t = k * dt
        s_half = sources_at(t + 0.5 * dt)
        s1 = sources_at((k + 1) * dt)
        k1x, k1y = rhs(s0, x, y)
        k2x, k2y = rhs(s_half, x + 0.5 * dt * k1x, y + 0.5 * dt * k1y)
        k3x, k3y = rhs(s_half, x + 0.5 * dt * k2x, y + 0.5 * dt * k2y)
        k4x, k4y = rhs(s1, x + dt * k3x, y + dt * k3y)
        x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        s0 = s1
        if k + 1 == half:
            x_mid, y_mid = x.copy(), y.copy()
    return x_mid, y_mid, x, y


class TimeDomainSolver:
    """RK4 oracle over the frequency grid, mapped over fixed-size chunks with joblib."""

    def __init__(self, threads: int = 1):
        self.logger = logging.getLogger(__name__)
        self.threads = threads
        self.logger.debug(f"✅ TimeDomainSolver initialized (threads={threads})")

    def _check_config(self, state: FieldState, params: SystemParams, grid: FrequencyGrid,
                      cfg: IntegratorConfig) -> None:
        limit = max_stable_dt(state, params, grid)
        if cfg.dt > limit * (1 + 1e-12):
            raise ParameterError(f"dt={cfg.dt} does not resolve the fastest scale; use dt <= {limit:.3g}")
        if cfg.t_end * params.gamma < MIN_STEADY_HORIZON:
            raise ParameterError(f"t_end={cfg.t_end} too short for a steady state; need t_end >= "
                                 f"{MIN_STEADY_HORIZON / params.gamma:g}")

    def integrate_bare(self, state: FieldState, params: SystemParams, grid: FrequencyGrid,
                       cfg: Optional[IntegratorConfig] = None, sources: str = "both") -> BareAmplitudes:
        """
        Integrate the amplitude equations to t_end for every grid sample.

        Raises:
            ConvergenceError: eigenmode magnitudes still move by more than the
                stationarity tolerance between t_end/2 and t_end
        """
        cfg = cfg or IntegratorConfig()
        self._check_config(state, params, grid, cfg)
        n_lo = max(state.n_min - 1, 0)
        slots = state.n_max + 2 - n_lo
        x_feed, y_feed = _feeds(state, n_lo, slots, sources)
        bare = self._run(grid, n_lo, x_feed, y_feed, params, cfg)
        self._check_stationary(bare, build_blocks(state, params), cfg)
        self.logger.info(f"RK4 oracle: {cfg.steps} steps, {slots} slots x {grid.count} samples ({sources} sources)")
        return bare

    def integrate_block(self, block: Block, params: SystemParams, grid: FrequencyGrid,
                        cfg: Optional[IntegratorConfig] = None) -> BareAmplitudes:
        """Integrate one block in isolation (slots m and m+1, fed only through X^{m+1} and Y^m)."""
        cfg = cfg or IntegratorConfig()
        n_lo = max(block.m, 0)
        if block.is_edge:
            x_feed = np.array([block.src_x], dtype=complex)
            y_feed = np.zeros(1, dtype=complex)
        else:
            x_feed = np.array([0j, block.src_x])
            y_feed = np.array([block.src_y, 0j])
        bare = self._run(grid, n_lo, x_feed, y_feed, params, cfg)
        self._check_stationary(bare, [block], cfg)
        return bare

    def _run(self, grid: FrequencyGrid, n_lo: int, x_feed: np.ndarray, y_feed: np.ndarray,
             params: SystemParams, cfg: IntegratorConfig) -> BareAmplitudes:
        deltas = grid.values()
        chunks = [deltas[i:i + ORACLE_CHUNK] for i in range(0, deltas.size, ORACLE_CHUNK)]
        n_jobs = -1 if self.threads == 0 else max(1, self.threads)
        if n_jobs == 1:
            results = [_integrate_slots(chunk, n_lo, x_feed, y_feed, params, cfg) for chunk in chunks]
        else:
            results = Parallel(n_jobs=n_jobs, prefer="threads")(
                delayed(_integrate_slots)(chunk, n_lo, x_feed, y_feed, params, cfg) for chunk in chunks)
        x_mid, y_mid, x_end, y_end = (np.concatenate([r[i] for r in results], axis=0) for i in range(4))
        return BareAmplitudes(grid, n_lo, x_end, y_end, cfg.steps * cfg.dt, x_mid, y_mid,
                              (cfg.steps // 2) * cfg.dt)

    def _check_stationary(self, bare: BareAmplitudes, blocks: Sequence[Block], cfg: IntegratorConfig) -> None:
        plus_end, minus_end = bare.block_modes(blocks)
        plus_mid, minus_mid = bare.block_modes(blocks, mid=True)
        drift = np.maximum(np.abs(np.abs(plus_end) - np.abs(plus_mid)),
                           np.abs(np.abs(minus_end) - np.abs(minus_mid)))
        worst = float(drift.max()) if drift.size else 0.0
        if worst > cfg.stationarity_tol:
            i, j = np.unravel_index(int(np.argmax(drift)), drift.shape)
            offender = (float(bare.grid.values()[j]), blocks[i].m, worst)
            self.logger.error(f"Oracle not stationary: delta={offender[0]:.4g}, block m={offender[1]}, drift={worst:.3g}")
            raise ConvergenceError(
                f"Eigenmode magnitudes drift by {worst:.3g} between t={bare.t_mid:g} and t={bare.t:g} "
                f"(detuning {offender[0]:.6g}, block {offender[1]})", offender)

    def steady_amplitudes(self, state: FieldState, params: SystemParams, grid: FrequencyGrid,
                          cfg: Optional[IntegratorConfig] = None) -> SteadyAmplitudes:
        """
        Oracle counterpart of the closed-form phasors. With interference on, one
        run feeds both slots and the full phasor is stored in the x part; with it
        off, the x and y feeds run separately so their cross terms can be dropped.
        """
        blocks = build_blocks(state, params)
        descriptor = dict(state.describe(), solver="oracle")
        if params.interference:
            plus, minus = self.integrate_bare(state, params, grid, cfg).steady_phasors(blocks)
            zero = np.zeros_like(plus)
            return SteadyAmplitudes(grid, params, tuple(blocks), plus, zero, minus, zero.copy(), descriptor)
        parts = {}
        for family in ("x", "y"):
            bare = self.integrate_bare(state, params, grid, cfg, sources=family)
            parts[family] = bare.steady_phasors(blocks)
        return SteadyAmplitudes(grid, params, tuple(blocks), parts["x"][0], parts["y"][0],
                                parts["x"][1], parts["y"][1], descriptor)

    def step_halving_deviation(self, state: FieldState, params: SystemParams, grid: FrequencyGrid,
                               cfg: Optional[IntegratorConfig] = None) -> float:
        """Largest change of any eigenmode magnitude when dt is halved."""
        cfg = cfg or IntegratorConfig()
        blocks = build_blocks(state, params)
        coarse = self.integrate_bare(state, params, grid, cfg).block_modes(blocks)
        fine = self.integrate_bare(state, params, grid, cfg.halved()).block_modes(blocks)
        return float(max(np.max(np.abs(np.abs(c) - np.abs(f))) for c, f in zip(coarse, fine)))

    def get_solver_info(self) -> Dict[str, Any]:
        return {"threads": self.threads, "oracle_chunk": ORACLE_CHUNK, "method": "rk4_fixed_step"}


def integrate_bare(state: FieldState, params: SystemParams, grid: FrequencyGrid,
                   cfg: Optional[IntegratorConfig] = None, threads: int = 1, sources: str = "both") -> BareAmplitudes:
    return TimeDomainSolver(threads).integrate_bare(state, params, grid, cfg, sources)


@dataclass(frozen=True, eq=False)
class FullBathResult:
    """Upper-state population trace and per-mode emission of a discretized-vacuum run."""
    times: np.ndarray
    upper_population: np.ndarray
    mode_detunings: np.ndarray
    spectral_density: np.ndarray
    spacing: float
    dipoles: str
    meta: Dict[str, Any] = field(default_factory=dict)

    def spectrum_grid(self) -> FrequencyGrid:
        return FrequencyGrid(float(self.mode_detunings[0]), float(self.mode_detunings[-1]), self.mode_detunings.size)

    def decay_deviation(self, gamma: float) -> float:
        """max |P(t) - e^{-γt}| over the recorded trace."""
        return float(np.max(np.abs(self.upper_population - np.exp(-gamma * self.times))))


def full_bath_simulate(state: FieldState, params: SystemParams, n_modes: int = 800, span: float = 80.0,
                       t_end: float = 8.0, dipoles: str = "parallel", dt: Optional[float] = None,
                       center: Optional[float] = None, record_every: int = 10) -> FullBathResult:
    """
    Couple the upper multiplet to n_modes discrete vacuum modes spanning `span`
    around `center` (default -ω21/2) and integrate with RK4, keeping the upper state
    dynamical instead of eliminating the vacuum.

    Orthogonal dipoles use two polarization channels, one coupled through g and
    one through ĝ; parallel dipoles share one channel carrying both.

    Raises:
        ConfigError: mode spacing too coarse for the horizon (recurrence inside t_end)
    """
    if dipoles not in DIPOLE_LAYOUTS:
        raise ConfigError(f"dipoles must be one of {sorted(DIPOLE_LAYOUTS)}, got {dipoles!r}")
    if n_modes < 2 or span <= 0 or t_end <= 0:
        raise ConfigError(f"Invalid bath: n_modes={n_modes}, span={span}, t_end={t_end}")
    spacing = span / n_modes
    recurrence = 2.0 * math.pi / spacing
    if recurrence <= t_end:
        raise ConfigError(f"Recurrence time {recurrence:.3g} does not exceed t_end={t_end}; add modes or shrink span")

    center = -0.5 * params.omega21 if center is None else center
    delta_k = center - 0.5 * span + (np.arange(n_modes) + 0.5) * spacing
    _, delta_hat_k = detunings(delta_k, params)
    fastest = max(params.gamma, params.rabi(state.n_max), float(np.max(np.abs(delta_k))),
                  float(np.max(np.abs(delta_hat_k))))
    dt_limit = DT_RESOLUTION / fastest
    if dt is None:
        dt = dt_limit
    elif dt > dt_limit * (1 + 1e-12):
        raise ParameterError(f"dt={dt} does not resolve the bath; use dt <= {dt_limit:.3g}")
    steps = int(math.ceil(t_end / dt))
    dt = t_end / steps

    g, ghat = couplings_from_rates(params)
    scale = math.sqrt(params.density * spacing)
    g_k, ghat_k = g * scale, ghat * scale
    channels = np.array(DIPOLE_LAYOUTS[dipoles])
    n_lo = max(state.n_min - 1, 0)
    slots = state.n_max + 2 - n_lo
    n = np.arange(n_lo, n_lo + slots, dtype=float)
    cx = -1j * params.gbar_mag * np.sqrt(n)[1:]
    cy = -1j * params.gbar_mag * np.sqrt(n + 1)[:-1]
    e_phi = np.exp(1j * params.phi)

    c = np.array([state.amplitude(int(k)) for k in n], dtype=complex)
    x = np.zeros((len(channels), n_modes, slots), dtype=complex)
    y = np.zeros_like(x)
    a_w = channels[:, 0][:, None, None]
    b_w = channels[:, 1][:, None, None]

    def rhs(t: float, c: np.ndarray, x: np.ndarray, y: np.ndarray):
        ex = np.exp(1j * delta_k * t)
        ey = np.exp(1j * delta_hat_k * t)
        dc = (g_k * np.einsum("k,ckn->cn", np.conj(ex), x) * a_w[:, :, 0]).sum(axis=0)
        dc = dc + (1j * ghat_k * e_phi * np.einsum("k,ckn->cn", np.conj(ey), y) * b_w[:, :, 0]).sum(axis=0)
        dx = -np.conj(g_k) * a_w * (ex[None, :, None] * c[None, None, :])
        dy = 1j * np.conj(ghat_k) * np.conj(e_phi) * b_w * (ey[None, :, None] * c[None, None, :])
        dx[:, :, 1:] += cx * y[:, :, :-1]
        dy[:, :, :-1] += cy * x[:, :, 1:]
        return dc, dx, dy

    times = [0.0]
    population = [float(np.sum(np.abs(c) ** 2))]
    for k in range(steps):
        t = k * dt
        k1 = rhs(t, c, x, y)
        k2 = rhs(t + 0.5 * dt, *(u + 0.5 * dt * du for u, du in zip((c, x, y), k1)))
        k3 = rhs(t + 0.5 * dt, *(u + 0.5 * dt * du for u, du in zip((c, x, y), k2)))
        k4 = rhs(t + dt, *(u + dt * du for u, du in zip((c, x, y), k3)))
        c, x, y = (u + (dt / 6.0) * (a + 2.0 * b + 2.0 * d + e)
                   for u, a, b, d, e in zip((c, x, y), k1, k2, k3, k4))
        if (k + 1) % record_every == 0 or k + 1 == steps:
            times.append((k + 1) * dt)
            population.append(float(np.sum(np.abs(c) ** 2)))

    mode_population = np.sum(np.abs(x) ** 2 + np.abs(y) ** 2, axis=(0, 2))
    logger.info(f"Full bath ({dipoles}): {n_modes} modes, {steps} steps, final upper population {population[-1]:.3e}")
    return FullBathResult(np.array(times), np.array(population), delta_k, mode_population / spacing,
                          spacing, dipoles,
                          {"n_modes": n_modes, "span": span, "t_end": t_end, "dt": dt, "center": center})
