"""Experiment drivers behind the command line: damping demo, convergence
sweeps, kernel diagnostics, oracle comparison and weight tables."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from . import kernel as kern
from .config import ConfigFile, initial_function, parse_initial
from .convolution import TimeGrid, weights
from .errors import ConfigError
from .fem1d import DIRICHLET, error_norms, p1_difference_norms
from .kernel import ExponentialSum
from .oracle import ModalConfig, manufactured_case, modal_solve, sine_coefficients
from .timestepper import ProblemConfig, RunReport, Solver

log = logging.getLogger(__name__)

ERROR_HEADER = ["h", "k", "e_L2_displacement", "e_H1_displacement", "e_L2_velocity",
                "eoc_L2_displacement", "eoc_H1_displacement", "eoc_L2_velocity", "status"]


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


# ---------------------------------------------------------------------------
# problem construction
# ---------------------------------------------------------------------------

def _load_function(cfg: ConfigFile):
    if cfg.problem.load == "zero":
        return None
    return _manufactured_for(cfg).f


def _manufactured_for(cfg: ConfigFile):
    spec = cfg.build_kernel()
    if not (isinstance(spec, ExponentialSum) and len(spec.terms) == 1):
        raise ConfigError("manufactured load needs a single-term prony kernel c*exp(-gamma t)")
    c, g = spec.terms[0]
    if cfg.problem.L != 1.0 or cfg.build_bc().left != DIRICHLET or cfg.build_bc().right != DIRICHLET:
        raise ConfigError("manufactured case lives on (0, 1) with Dirichlet ends")
    return manufactured_case("sinpi-t2", kappa=c / g, gamma=g)


def problem_from_config(cfg: ConfigFile, n_elems=None, n_steps=None) -> ProblemConfig:
    p = cfg.problem
    return ProblemConfig(
        kernel=cfg.build_kernel(),
        mesh=cfg.build_mesh(n_elems),
        bc=cfg.build_bc(),
        grid=cfg.build_grid(n_steps),
        u0=initial_function(p.u0, p.L),
        u1=initial_function(p.u1, p.L),
        f=_load_function(cfg),
        probes=tuple(p.probes),
        history_mode=cfg.run.history_mode,
    )


# ---------------------------------------------------------------------------
# damping demo
# ---------------------------------------------------------------------------

def damping_demo_config() -> ConfigFile:
    """Exponential kernel with kappa = 0.5, clamped at x = 0, constant pull at x = 1."""
    return ConfigFile()


def run_damping_demo(cfg: ConfigFile) -> RunReport:
    return Solver(problem_from_config(cfg)).run()


def probe_header(probes) -> list[str]:
    return ["t"] + [f"u(x={p:g})" for p in probes]


def write_probe_csv(path, report: RunReport) -> Path:
    rows = np.column_stack([report.times, report.probe_values])
    return write_csv(path, probe_header(report.probes), rows.tolist())


def oscillation_peaks(signal, rel_prominence: float = 0.005) -> np.ndarray:
    """Indices of the local maxima of ``signal`` that stand out by at least
    ``rel_prominence * max|signal|`` (drops sub-resolution ripple)."""
    signal = np.asarray(signal, dtype=float)
    scale = float(np.max(np.abs(signal), initial=0.0))
    if scale == 0.0:
        return np.array([], dtype=int)
    peaks, _ = find_peaks(signal, prominence=rel_prominence * scale)
    return peaks


# ---------------------------------------------------------------------------
# convergence sweeps
# ---------------------------------------------------------------------------

def eoc(errors) -> list:
    """log2(e_{i-1} / e_i) for consecutive halvings; None in the first row."""
    out = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        out.append(math.log2(a / b) if a > 0 and b > 0 else None)
    return out


@dataclass
class SweepRow:
    h: float
    k: float
    e_l2: float
    e_h1: float
    e_vel: float
    eoc_l2: float | None = None
    eoc_h1: float | None = None
    eoc_vel: float | None = None
    status: str = "ok"

    def as_list(self) -> list:
        return [self.h, self.k, self.e_l2, self.e_h1, self.e_vel,
                self.eoc_l2, self.eoc_h1, self.eoc_vel, self.status]


@dataclass
class SweepResult:
    axis: str
    reference: str
    rows: list = field(default_factory=list)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]


def convergence_sweep(cfg: ConfigFile) -> SweepResult:
    """Halve h (axis h) or k (axis k) per level starting from the config's
    n_elems / n_steps; the other resolution stays fixed."""
    s, p = cfg.sweep, cfg.problem
    if s.levels < 3:
        raise ConfigError("a convergence sweep needs at least 3 levels")
    if p.nodes is not None:
        raise ConfigError("convergence sweeps need a uniform mesh (n_elems)")
    extra = 1 if s.reference == "fine-grid" else 0

    def resolution(i):
        if s.axis == "h":
            return p.n_elems * 2**i, p.n_steps
        return p.n_elems, p.n_steps * 2**i

    runs = []
    for i in range(s.levels + extra):
        ne, ns = resolution(i)
        log.info("sweep level %d: n_elems=%d n_steps=%d", i, ne, ns)
        runs.append(Solver(problem_from_config(cfg, ne, ns)).run())

    result = SweepResult(s.axis, s.reference)
    if s.reference == "manufactured":
        case = _manufactured_for(cfg)
        T = p.T
        for rep in runs:
            e1 = error_norms(rep.system, rep.U1, lambda x: case.u(x, T), lambda x: case.u_x(x, T))
            e2 = error_norms(rep.system, rep.U2, lambda x: case.u_t(x, T))
            result.rows.append(SweepRow(rep.system.mesh.h, float(np.max(np.diff(rep.times))),
                                        e1["l2"], e1["h1"], e2["l2"]))
    else:
        for coarse, fine in zip(runs[:-1], runs[1:]):
            d1 = p1_difference_norms(coarse.system, coarse.U1, fine.system, fine.U1)
            d2 = p1_difference_norms(coarse.system, coarse.U2, fine.system, fine.U2)
            result.rows.append(SweepRow(coarse.system.mesh.h, float(np.max(np.diff(coarse.times))),
                                        d1["l2"], d1["h1"], d2["l2"]))

    for attr, col in (("e_l2", "eoc_l2"), ("e_h1", "eoc_h1"), ("e_vel", "eoc_vel")):
        for row, val in zip(result.rows, eoc(result.column(attr))):
            setattr(row, col, val)
    for prev, row in zip(result.rows[:-1], result.rows[1:]):
        if not (row.e_l2 < prev.e_l2 and row.e_h1 < prev.e_h1 and row.e_vel < prev.e_vel):
            row.status = "non-monotone"
    return result


def write_sweep_csv(path, result: SweepResult) -> Path:
    return write_csv(path, ERROR_HEADER, [r.as_list() for r in result.rows])


# ---------------------------------------------------------------------------
# kernel diagnostics
# ---------------------------------------------------------------------------

@dataclass
class KernelReport:
    kappa: float
    xi_samples: list
    monotone: bool
    residuals: list
    ok: bool
    messages: list = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [f"kappa = {fmt(self.kappa)}"]
        out += [f"xi({fmt(t)}) = {fmt(v)}" for t, v in self.xi_samples]
        out.append(f"monotone (K >= 0, K nonincreasing): {'yes' if self.monotone else 'NO'}")
        out += [f"positive-type residual [{name}] = {fmt(v)}" for name, v in self.residuals]
        out += self.messages
        out.append("all checks passed" if self.ok else "CHECK FAILED")
        return out


def check_kernel(spec, seed: int = 0, T: float = 4.0, quad_n: int = 400,
                 n_random: int = 20, tol: float = 1e-12) -> KernelReport:
    kappa = kern.total_mass(spec)
    scale = 1.0 / kern.min_rate(spec)
    ts = [0.0, 0.5 * scale, scale, 2.0 * scale, 5.0 * scale]
    xi_samples = [(t, float(kern.xi(spec, t))) for t in ts]
    monotone = kern.check_monotone(spec)
    messages = []

    g = lambda lag: spec.xi(lag)
    residuals = []
    for m in (1, 2, 5, 10):
        residuals.append((f"sin({m}t)", kern.positive_type_residual(g, T, lambda t, m=m: np.sin(m * t), quad_n)))
    rng = np.random.default_rng(seed)
    for i in range(n_random):
        phi = random_trig_polynomial(rng)
        residuals.append((f"random#{i}", kern.positive_type_residual(g, T, phi, quad_n)))
    positive = all(v >= -tol for _, v in residuals)

    xi_ok = math.isclose(xi_samples[0][1], kappa, rel_tol=0, abs_tol=1e-15)
    decreasing = all(b[1] <= a[1] for a, b in zip(xi_samples[:-1], xi_samples[1:]))
    if not xi_ok:
        messages.append("xi(0) differs from kappa")
    if not decreasing:
        messages.append("xi is not decreasing on the sample points")
    ok = monotone and positive and xi_ok and decreasing and kappa < 1.0
    return KernelReport(kappa, xi_samples, monotone, residuals, ok, messages)


def random_trig_polynomial(rng, n_terms: int = 5, max_freq: float = 8.0):
    a = rng.standard_normal(n_terms)
    b = rng.standard_normal(n_terms)
    w = rng.uniform(0.0, max_freq, n_terms)
    return lambda t: (np.cos(np.multiply.outer(t, w)) @ a + np.sin(np.multiply.outer(t, w)) @ b)


# ---------------------------------------------------------------------------
# oracle comparison
# ---------------------------------------------------------------------------

@dataclass
class OracleComparison:
    l2: float
    h1: float
    max_probe: float
    dt_fine: float
    n_modes: int


def oracle_compare(cfg: ConfigFile, n_modes: int = 64, dt_ratio: int = 8) -> OracleComparison:
    """Solver vs the modal oracle on the same Dirichlet-Dirichlet problem."""
    bc = cfg.build_bc()
    if bc.left != DIRICHLET or bc.right != DIRICHLET:
        raise ConfigError("oracle-compare needs Dirichlet conditions at both ends "
                          "(the modal oracle has no Neumann support)")
    problem = problem_from_config(cfg)
    report = Solver(problem).run()
    p = cfg.problem
    modes = {}
    for name in ("u0", "u1"):
        m = parse_initial(getattr(p, name))
        coeffs = np.zeros(n_modes)
        if m is not None:
            coeffs = sine_coefficients(initial_function(getattr(p, name), p.L), p.L, n_modes)
        modes[name] = coeffs
    load = None
    if p.load == "manufactured":
        case = _manufactured_for(cfg)
        load = lambda t: np.concatenate([case.modal_load(t), np.zeros(n_modes - 1)])
    dt_fine = problem.grid.k / dt_ratio
    if p.n_steps == 0:
        dt_fine = p.T
    modal = modal_solve(ModalConfig(problem.kernel, p.T, n_modes, dt_fine, L=p.L,
                                    u0_modes=modes["u0"], u1_modes=modes["u1"], load=load))
    diff = error_norms(report.system, report.U1, modal.displacement, modal.displacement_dx)
    probes = np.asarray(p.probes, dtype=float)
    max_probe = float(np.max(np.abs(report.system.evaluate(report.U1, probes)
                                    - modal.displacement(probes)), initial=0.0))
    return OracleComparison(diff["l2"], diff["h1"], max_probe, dt_fine, n_modes)


# ---------------------------------------------------------------------------
# weight table
# ---------------------------------------------------------------------------

def weight_table(spec, grid: TimeGrid, steps=None) -> list:
    rows = []
    for n in steps or range(1, grid.N + 1):
        w = weights(spec, grid, n)
        for l in range(1, n + 1):
            rows.append([n, l, w.plus[l - 1], w.minus[l - 1]])
    return rows
