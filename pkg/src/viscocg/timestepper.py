"""cG(1)cG(1) time stepping for  u'' + A u - int_0^t K(t-s) A u(s) ds = f.

Per step the coupled displacement/velocity system

    M U1^n - k/2 M U2^n = M U1^{n-1} + k/2 M U2^{n-1}
    M U2^n + (k/2 - wm_nn) S U1^n = M U2^{n-1} + (-k/2 + wp_nn) S U1^{n-1} + H^n + B^n

is reduced to one SPD tridiagonal solve for U2^n: the first row gives
U1^n = U1^{n-1} + k/2 (U2^{n-1} + U2^n) exactly (M is invertible).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .convolution import ExpRecurrenceState, TimeGrid, diagonal_weights, history_sum, weights
from .errors import ConfigError, NumericalError
from .fem1d import BCSpec, FemSystem, Mesh1D, assemble, l2_project, load_vector
from .kernel import ExponentialSum, KernelSpec

log = logging.getLogger(__name__)

DIRECT = "direct"
RECURRENCE = "recurrence"


def _zero(x):
    return np.zeros_like(x)


@dataclass
class ProblemConfig:
    kernel: KernelSpec
    mesh: Mesh1D
    bc: BCSpec
    grid: TimeGrid
    u0: Callable = _zero
    u1: Callable = _zero
    f: Optional[Callable] = None
    probes: tuple = ()
    history_mode: str = DIRECT
    debug: bool = False

    def __post_init__(self):
        if self.history_mode not in (DIRECT, RECURRENCE):
            raise ConfigError(f"unknown history mode {self.history_mode!r}")
        if self.history_mode == RECURRENCE and not isinstance(self.kernel, ExponentialSum):
            raise ConfigError("recurrence history mode needs an exponential-sum kernel")
        lo, hi = self.mesh.nodes[0], self.mesh.nodes[-1]
        for p in self.probes:
            if not lo <= p <= hi:
                raise ConfigError(f"probe x = {p} outside the domain")


@dataclass
class SolverState:
    n: int
    U1: np.ndarray
    U2: np.ndarray
    history: Optional[np.ndarray] = None  # (N + 1, dofs) in direct mode
    recurrence: Optional[ExpRecurrenceState] = None
    energy: list = field(default_factory=list)


@dataclass
class RunReport:
    times: np.ndarray
    probes: tuple
    probe_values: np.ndarray  # (N + 1, n_probes)
    U1: np.ndarray
    U2: np.ndarray
    energy: np.ndarray
    system: FemSystem


def energy(sys: FemSystem, U1: np.ndarray, U2: np.ndarray) -> float:
    return float(U2 @ (sys.M @ U2) + U1 @ (sys.S @ U1))


class Solver:
    """Owns the assembled system and factorization cache for one problem."""

    def __init__(self, config: ProblemConfig):
        self.config = config
        self.sys = assemble(config.mesh, config.bc)
        self._factor_key = None
        self._factor = None
        self._rng = np.random.default_rng(0)

    def init(self) -> SolverState:
        cfg, sys = self.config, self.sys
        U1 = l2_project(sys, cfg.u0)
        U2 = l2_project(sys, cfg.u1)
        state = SolverState(0, U1, U2, energy=[energy(sys, U1, U2)])
        if cfg.history_mode == RECURRENCE:
            state.recurrence = ExpRecurrenceState(cfg.kernel, sys.n_free)
        else:
            state.history = np.empty((cfg.grid.N + 1, sys.n_free))
            state.history[0] = U1
        return state

    def _solve(self, c: float, k: float, rhs: np.ndarray) -> np.ndarray:
        key = (c, k)
        if key != self._factor_key:
            band = self.sys.M_band + (0.5 * k * c) * self.sys.S_band
            try:
                self._factor = sla.cholesky_banded(band)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"step matrix not SPD (k={k:g}, c={c:g})") from exc
            self._factor_key = key
        return sla.cho_solve_banded((self._factor, False), rhs)

    def step(self, state: SolverState) -> SolverState:
        cfg, sys = self.config, self.sys
        n = state.n + 1
        grid = cfg.grid
        if n > grid.N:
            raise ValueError(f"no step {n}: grid has {grid.N} steps")
        k = grid.step(n)
        if state.recurrence is not None:
            wp, wm = diagonal_weights(cfg.kernel, grid, n)
            hist = state.recurrence.history(sys.S, grid, n)
        else:
            w = weights(cfg.kernel, grid, n)
            wp, wm = w.plus[n - 1], w.minus[n - 1]
            hist = history_sum(sys.S, state.history[:n], w, n)
        c = 0.5 * k - wm
        if not c > 0:
            raise NumericalError(f"step {n}: k/2 - w_minus = {c:g} is not positive")
        B = load_vector(sys, cfg.f, grid.times[n - 1], grid.times[n])

        U1p, U2p = state.U1, state.U2
        rhs = (sys.M @ U2p + (wp - 0.5 * k) * (sys.S @ U1p)
               - c * (sys.S @ (U1p + 0.5 * k * U2p)) + hist + B)
        if cfg.debug:
            x = self._rng.standard_normal(sys.n_free)
            quad = x @ (sys.M @ x) + 0.5 * k * c * (x @ (sys.S @ x))
            assert quad > 0, f"step matrix not positive definite at step {n}"
        U2 = self._solve(c, k, rhs)
        U1 = U1p + 0.5 * k * (U2p + U2)
        if not (np.all(np.isfinite(U1)) and np.all(np.isfinite(U2))):
            raise NumericalError(f"nonfinite solution at step {n}")

        if state.recurrence is not None:
            state.recurrence.update(U1p, U1, grid, n)
        else:
            state.history[n] = U1
        state.n, state.U1, state.U2 = n, U1, U2
        state.energy.append(energy(sys, U1, U2))
        return state

    def run(self) -> RunReport:
        cfg = self.config
        state = self.init()
        probes = np.asarray(cfg.probes, dtype=float)
        values = np.empty((cfg.grid.N + 1, probes.size))
        values[0] = self.sys.evaluate(state.U1, probes)
        for n in range(1, cfg.grid.N + 1):
            try:
                self.step(state)
            except (NumericalError, ValueError) as exc:
                raise type(exc)(f"run aborted at step {n}: {exc}") from exc
            values[n] = self.sys.evaluate(state.U1, probes)
        return RunReport(cfg.grid.times, tuple(probes), values, state.U1, state.U2,
                         np.asarray(state.energy), self.sys)


def init(config: ProblemConfig) -> SolverState:
    return Solver(config).init()


def run(config: ProblemConfig) -> RunReport:
    return Solver(config).run()
