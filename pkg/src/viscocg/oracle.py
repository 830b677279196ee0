"""Reference computations used by the tests and the acceptance harness.

Nothing here shares code with the cG solver: the modal solver integrates each
sine mode with a trapezoidal rule plus product-trapezoidal convolution
weights built from scipy's incomplete gamma function, and the weight oracle
integrates the defining double integrals adaptively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import DomainError, UnsupportedKernelError
from .kernel import ExponentialSum, GammaKernel, KernelSpec, ZeroKernel


# ---------------------------------------------------------------------------
# Modal (spectral) solver for Dirichlet-Dirichlet problems
# ---------------------------------------------------------------------------

@dataclass
class ModalConfig:
    kernel: KernelSpec
    T: float
    n_modes: int
    dt_fine: float
    L: float = 1.0
    u0_modes: Optional[np.ndarray] = None
    u1_modes: Optional[np.ndarray] = None
    load: Optional[Callable] = None  # t -> array of modal loads, shape (n_modes,)
    bc: tuple = ("dirichlet", "dirichlet")

    def eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.n_modes + 1)
        return (k * np.pi / self.L) ** 2


@dataclass
class ModalSolution:
    times: np.ndarray
    coeffs: np.ndarray      # (N + 1, n_modes) displacement mode amplitudes
    velocities: np.ndarray  # (N + 1, n_modes)
    L: float = 1.0

    def _basis(self, x):
        k = np.arange(1, self.coeffs.shape[1] + 1)
        return np.sin(np.multiply.outer(np.asarray(x, dtype=float), k) * np.pi / self.L)

    def _dbasis(self, x):
        k = np.arange(1, self.coeffs.shape[1] + 1)
        arg = np.multiply.outer(np.asarray(x, dtype=float), k) * np.pi / self.L
        return np.cos(arg) * (k * np.pi / self.L)

    def displacement(self, x, level: int = -1):
        return self._basis(x) @ self.coeffs[level]

    def displacement_dx(self, x, level: int = -1):
        return self._dbasis(x) @ self.coeffs[level]

    def velocity(self, x, level: int = -1):
        return self._basis(x) @ self.velocities[level]


def sine_coefficients(f: Callable, L: float, n_modes: int, n_quad: int = 400) -> np.ndarray:
    """(2/L) int_0^L f(x) sin(k pi x / L) dx for k = 1..n_modes (Gauss-Legendre)."""
    gx, gw = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * L * (gx + 1.0)
    w = 0.5 * L * gw
    k = np.arange(1, n_modes + 1)
    basis = np.sin(np.outer(x, k) * np.pi / L)
    return (2.0 / L) * (w * np.asarray(f(x), dtype=float)) @ basis


def _gamma_terms(kernel: KernelSpec):
    # every supported kernel is a sum of kappa * Gamma(alpha, gamma) densities
    if isinstance(kernel, ZeroKernel) or kernel.kappa == 0.0:
        return []
    if isinstance(kernel, ExponentialSum):
        return [(c / g, 1.0, g) for c, g in kernel.terms]
    if isinstance(kernel, GammaKernel):
        return [(kernel.kappa, kernel.alpha, kernel.gamma)]
    raise UnsupportedKernelError(f"modal oracle does not know {type(kernel).__name__}")


def _integrated_kernel_moments(kernel: KernelSpec, dt: float, count: int):
    """Cell moments of the kernel primitive  J(tau) = int_0^tau K.

    A_p = int_{p dt}^{(p+1) dt} J,  B_p = int J(tau) (tau - p dt)/dt over the same cell.
    """
    edges = np.arange(count + 1, dtype=float) * dt
    J1 = np.zeros(count + 1)   # int_0^tau J
    G = np.zeros(count + 1)    # int_0^tau s J(s) ds
    for kap, a, g in _gamma_terms(kernel):
        x = g * edges
        p0 = special.gammainc(a, x)
        p1 = special.gammainc(a + 1.0, x)
        p2 = special.gammainc(a + 2.0, x)
        j1 = kap * (edges * p0 - (a / g) * p1)
        j2 = 0.5 * kap * (edges**2 * p0 - 2.0 * edges * (a / g) * p1 + a * (a + 1.0) / g**2 * p2)
        J1 += j1
        G += edges * j1 - j2
    A = np.diff(J1)
    B = (np.diff(G) - edges[:-1] * A) / dt
    return A, B


def modal_solve(cfg: ModalConfig) -> ModalSolution:
    """Integrate u_k'' + lam_k u_k - lam_k int_0^t K(t-s) u_k(s) ds = f_k per mode.

    The velocity equation is integrated once in time, so the memory term
    becomes int_0^t J(t-s) u(s) ds with the bounded primitive J of K; that
    integral uses product-trapezoidal weights (piecewise linear u, exact
    moments of J), everything else the trapezoidal rule. Second order in
    ``dt_fine`` also for weakly singular K.
    """
    if tuple(cfg.bc) != ("dirichlet", "dirichlet"):
        raise UnsupportedKernelError("modal oracle supports Dirichlet-Dirichlet only")
    N = int(round(cfg.T / cfg.dt_fine))
    if N < 1 or not math.isclose(N * cfg.dt_fine, cfg.T, rel_tol=1e-9):
        raise DomainError("dt_fine must divide T")
    dt = cfg.T / N
    lam = cfg.eigenvalues()
    m = cfg.n_modes
    times = np.linspace(0.0, cfg.T, N + 1)

    A, B = _integrated_kernel_moments(cfg.kernel, dt, N)
    # weight of u_{n-q} in D_n = int_0^{t_n} J(t_n - s) u(s) ds, interior q
    d = np.zeros(N + 1)
    d[0] = A[0] - B[0]
    d[1:N] = A[1:N] - B[1:N] + B[0:N - 1]

    U = np.zeros((N + 1, m))
    V = np.zeros((N + 1, m))
    U[0] = np.zeros(m) if cfg.u0_modes is None else np.asarray(cfg.u0_modes, dtype=float)[:m]
    V[0] = np.zeros(m) if cfg.u1_modes is None else np.asarray(cfg.u1_modes, dtype=float)[:m]
    load = (lambda t: np.zeros(m)) if cfg.load is None else cfg.load

    f_prev = np.asarray(load(0.0), dtype=float)
    D_prev = np.zeros(m)
    diag = 2.0 / dt + 0.5 * dt * lam - lam * d[0]
    for n in range(1, N + 1):
        hist = B[n - 1] * U[0]
        if n > 1:
            hist = hist + d[1:n] @ U[n - 1:0:-1]
        f_n = np.asarray(load(times[n]), dtype=float)
        rhs = ((2.0 / dt - 0.5 * dt * lam) * U[n - 1] + 2.0 * V[n - 1]
               + 0.5 * dt * (f_prev + f_n) + lam * (hist - D_prev))
        U[n] = rhs / diag
        V[n] = (2.0 / dt) * (U[n] - U[n - 1]) - V[n - 1]
        D_prev = d[0] * U[n] + hist
        f_prev = f_n
    return ModalSolution(times, U, V, cfg.L)


# ---------------------------------------------------------------------------
# Manufactured solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    kernel: KernelSpec
    L: float
    u: Callable         # (x, t)
    u_t: Callable       # (x, t)
    u_x: Callable       # (x, t)
    f: Callable         # (x, t)
    u0: Callable = field(default=lambda x: np.zeros_like(x))
    u1: Callable = field(default=lambda x: np.zeros_like(x))
    modal_load: Optional[Callable] = None  # t -> sine coefficients of f


def manufactured_case(name: str = "sinpi-t2", kappa: float = 0.5, gamma: float = 1.0) -> ManufacturedCase:
    """u(x, t) = sin(pi x) t^2 on (0, 1) with K(t) = kappa gamma exp(-gamma t)."""
    if name != "sinpi-t2":
        raise ValueError(f"unknown manufactured case {name!r}")
    kernel = ExponentialSum(((kappa * gamma, gamma),))
    pi = np.pi

    def memory(t):
        # int_0^t e^{-gamma (t-s)} s^2 ds
        return t**2 / gamma - 2.0 * t / gamma**2 - 2.0 * np.expm1(-gamma * t) / gamma**3

    def time_part(t):
        return 2.0 + pi**2 * (t**2 - kappa * gamma * memory(t))

    return ManufacturedCase(
        name=name,
        kernel=kernel,
        L=1.0,
        u=lambda x, t: np.sin(pi * x) * t**2,
        u_t=lambda x, t: np.sin(pi * x) * 2.0 * t,
        u_x=lambda x, t: pi * np.cos(pi * x) * t**2,
        f=lambda x, t: np.sin(pi * x) * time_part(t),
        modal_load=lambda t: np.array([time_part(t)]),
    )


def manufactured_residual(case: ManufacturedCase, x: float, t: float, step: float = 1e-4) -> float:
    """Residual of the integro-differential equation for ``case`` by finite differences."""
    u = case.u
    utt = (u(x, t + step) - 2.0 * u(x, t) + u(x, t - step)) / step**2 if t > step else \
        (2.0 * u(x, t) - 5.0 * u(x, t + step) + 4.0 * u(x, t + 2 * step) - u(x, t + 3 * step)) / step**2

    def Au(xx, s):
        return -(u(xx + step, s) - 2.0 * u(xx, s) + u(xx - step, s)) / step**2

    if t > 0:
        # the finite-difference integrand carries ~1e-8 noise; ask for no more
        mem = integrate.quad(lambda s: case.kernel(t - s) * Au(x, s), 0.0, t,
                             epsabs=1e-10, epsrel=1e-9, limit=200)[0]
    else:
        mem = 0.0
    return float(utt + Au(x, t) - mem - case.f(x, t))


# ---------------------------------------------------------------------------
# Brute-force convolution weights
# ---------------------------------------------------------------------------

def _kernel_integral(kernel: KernelSpec, lo: float, hi: float, weight: Callable) -> float:
    """int_lo^hi K(tau) weight(tau) dtau with the tau^(alpha-1) singularity removed."""
    if hi <= lo:
        return 0.0
    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400)
    if isinstance(kernel, GammaKernel):
        a, g = kernel.alpha, kernel.gamma
        const = kernel.kappa * g**a / math.gamma(a)
        # tau = u^(1/a) maps tau^(a-1) dtau to du / a
        integrand = lambda u: np.exp(-g * u ** (1.0 / a)) * weight(u ** (1.0 / a))
        return const / a * integrate.quad(integrand, lo**a, hi**a, **opts)[0]
    return integrate.quad(lambda tau: kernel(tau) * weight(tau), lo, hi, **opts)[0]


def quad_weight_oracle(kernel: KernelSpec, grid, n: int, l: int) -> tuple[float, float]:
    """(w_plus[n, l], w_minus[n, l]) by adaptive nested quadrature."""
    if isinstance(kernel, ZeroKernel) or kernel.kappa == 0.0:
        return 0.0, 0.0
    t = np.asarray(grid.times if hasattr(grid, "times") else grid, dtype=float)
    a, b = t[l - 1], t[l]
    kl = b - a
    opts = dict(epsabs=1e-15, epsrel=1e-12, limit=400)

    def inner(tt, plus):
        # tau = tt - s runs over (tt - min(tt, b), tt - a)
        lo = tt - min(tt, b)
        hi = tt - a
        if plus:
            w = lambda tau: (b - (tt - tau)) / kl
        else:
            w = lambda tau: ((tt - tau) - a) / kl
        return _kernel_integral(kernel, lo, hi, w)

    wp, errp = integrate.quad(lambda tt: inner(tt, True), t[n - 1], t[n], **opts)
    wm, errm = integrate.quad(lambda tt: inner(tt, False), t[n - 1], t[n], **opts)
    if max(errp, errm) > 1e-11:
        raise ArithmeticError(f"weight oracle missed tolerance at (n={n}, l={l}): {max(errp, errm):.2e}")
    return wp, wm


def slab_total_oracle(kernel: KernelSpec, grid, n: int) -> float:
    """int_{I_n} (kappa - xi(t)) dt = sum over l of (w_plus + w_minus)."""
    t = np.asarray(grid.times, dtype=float)
    val, _ = integrate.quad(lambda s: kernel.kappa - float(kernel.xi(s)), t[n - 1], t[n],
                            epsabs=1e-15, epsrel=1e-13)
    return val
