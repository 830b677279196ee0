"""Memory kernels K, their tail mass xi, and kernel diagnostics.

Three families are supported:

* ``ZeroKernel``: K = 0 (undamped wave equation).
* ``ExponentialSum``: K(t) = sum_j c_j exp(-gamma_j t)   (Prony series).
* ``GammaKernel``: K(t) = kappa * gamma^alpha / Gamma(alpha) * t^(alpha-1) exp(-gamma t),
  a weakly singular kernel whose L1 norm is exactly ``kappa``.

All kernels expose ``kappa`` (total mass), ``__call__`` (pointwise values for
t > 0), ``xi`` (tail integral of K from t to infinity) and ``primitives``
(iterated integrals of K from 0, used to build convolution weights in closed
form).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError

_EPS = 2.0 * np.finfo(float).eps
_FPMIN = 1e-300
_MAXITER = 2000


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def _gamma_series(a, x):
    # lower regularized P(a, x) by power series; accurate for x < a + 1
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    for n in range(1, _MAXITER):
        term = term * x / (a + n)
        total = total + term
        if np.all(np.abs(term) <= np.abs(total) * _EPS):
            break
    with np.errstate(divide="ignore"):
        logpre = a * np.log(x) - x - math.lgamma(a)
    return total * np.exp(logpre)


def _gamma_contfrac(a, x):
    # upper regularized Q(a, x) by modified Lentz; accurate for x >= a + 1.
    # Converged entries are frozen so one slow entry does not hold the rest.
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _FPMIN)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b = b + 2.0
        dn = an * d + b
        dn = np.where(np.abs(dn) < _FPMIN, _FPMIN, dn)
        cn = b + an / c
        cn = np.where(np.abs(cn) < _FPMIN, _FPMIN, cn)
        dn = 1.0 / dn
        delta = np.where(active, dn * cn, 1.0)
        h = h * delta
        d, c = dn, cn
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(a * np.log(x) - x - math.lgamma(a)) * h


def _regularized_pair(alpha, x):
    if not alpha > 0:
        raise DomainError(f"incomplete gamma needs alpha > 0, got {alpha}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("incomplete gamma needs finite x >= 0")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    p = np.zeros_like(x)
    q = np.ones_like(x)
    low = (x > 0) & (x < alpha + 1.0)
    high = x >= alpha + 1.0
    if np.any(low):
        p[low] = _gamma_series(alpha, x[low])
        q[low] = 1.0 - p[low]
    if np.any(high):
        q[high] = _gamma_contfrac(alpha, x[high])
        p[high] = 1.0 - q[high]
    if scalar:
        return float(p[0]), float(q[0])
    return p, q


def upper_gamma_regularized(alpha: float, x):
    """Q(alpha, x) = Gamma(alpha, x) / Gamma(alpha), vectorized over ``x``."""
    return _regularized_pair(alpha, x)[1]


def lower_gamma_regularized(alpha: float, x):
    """P(alpha, x) = 1 - Q(alpha, x), computed without cancellation for small x."""
    return _regularized_pair(alpha, x)[0]


def phi_function(j: int, z):
    """phi_j(z) = sum_i z^i / (i + j)!  for z <= 0 (exponential integrator functions).

    phi_0 = exp, phi_1(z) = (e^z - 1)/z, ... evaluated without cancellation near 0.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1.0
    if np.any(small):
        zs = z[small]
        acc = np.zeros_like(zs)
        for i in range(30, -1, -1):
            acc = acc * zs + 1.0 / math.factorial(i + j)
        out[small] = acc
    big = ~small
    if np.any(big):
        zb = z[big]
        val = np.exp(zb)
        for k in range(j):
            val = (val - 1.0 / math.factorial(k)) / zb
        out[big] = val
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Kernel families
# ---------------------------------------------------------------------------

def _check_positive_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("kernel is only evaluated at t > 0")
    return t


@dataclass(frozen=True)
class ZeroKernel:
    @property
    def kappa(self) -> float:
        return 0.0

    def __call__(self, t):
        t = _check_positive_time(t)
        return np.zeros_like(t) if t.ndim else 0.0

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros_like(t) if t.ndim else 0.0

    def primitives(self, tau):
        tau = np.asarray(tau, dtype=float)
        z = np.zeros_like(tau)
        return z, z.copy(), z.copy()


@dataclass(frozen=True)
class ExponentialSum:
    """Prony series; ``terms`` holds (amplitude c_j, rate gamma_j) pairs."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        terms = tuple((float(c), float(g)) for c, g in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise DomainError("exponential kernel needs at least one term")
        for c, g in terms:
            if not (c > 0 and g > 0 and math.isfinite(c) and math.isfinite(g)):
                raise DomainError(f"Prony term (c={c}, gamma={g}) must have c > 0, gamma > 0")
        if self.kappa >= 1.0:
            raise DomainError(f"kernel mass kappa = {self.kappa:g} violates kappa < 1")

    @property
    def kappa(self) -> float:
        return sum(c / g for c, g in self.terms)

    def __call__(self, t):
        t = _check_positive_time(t)
        val = sum(c * np.exp(-g * t) for c, g in self.terms)
        return val if t.ndim else float(val)

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        val = sum((c / g) * np.exp(-g * t) for c, g in self.terms)
        return val if t.ndim else float(val)

    def primitives(self, tau):
        # Phi_0 = int_0^tau K, Phi_1 = int_0^tau Phi_0, Phi_2 = int_0^tau Phi_1; zero for tau <= 0
        tau = np.maximum(np.asarray(tau, dtype=float), 0.0)
        p0 = np.zeros_like(tau)
        p1 = np.zeros_like(tau)
        p2 = np.zeros_like(tau)
        for c, g in self.terms:
            z = -g * tau
            p0 = p0 + c * tau * phi_function(1, z)
            p1 = p1 + c * tau**2 * phi_function(2, z)
            p2 = p2 + c * tau**3 * phi_function(3, z)
        return p0, p1, p2

    def scaled(self, factor: float) -> "ExponentialSum":
        return ExponentialSum(tuple((factor * c, g) for c, g in self.terms))


@dataclass(frozen=True)
class GammaKernel:
    """kappa times the Gamma(alpha, rate=gamma) density; singular at 0 for alpha < 1."""

    kappa: float
    alpha: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"gamma kernel needs 0 < alpha < 1, got {self.alpha}")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma kernel needs rate gamma > 0, got {self.gamma}")
        if not 0.0 <= self.kappa < 1.0:
            raise DomainError(f"kernel mass kappa = {self.kappa:g} violates 0 <= kappa < 1")

    def __call__(self, t):
        t = _check_positive_time(t)
        a, g = self.alpha, self.gamma
        logk = a * math.log(g) - math.lgamma(a) + (a - 1.0) * np.log(t) - g * t
        val = self.kappa * np.exp(logk)
        return val if t.ndim else float(val)

    def xi(self, t):
        t = np.asarray(t, dtype=float)
        return self.kappa * upper_gamma_regularized(self.alpha, self.gamma * t)

    def primitives(self, tau):
        tau = np.maximum(np.asarray(tau, dtype=float), 0.0)
        a, g, kap = self.alpha, self.gamma, self.kappa
        x = g * tau
        p_a = lower_gamma_regularized(a, x)
        p_a1 = lower_gamma_regularized(a + 1.0, x)
        p_a2 = lower_gamma_regularized(a + 2.0, x)
        m1 = a / g
        m2 = a * (a + 1.0) / g**2
        phi0 = kap * p_a
        phi1 = kap * (tau * p_a - m1 * p_a1)
        phi2 = 0.5 * kap * (tau**2 * p_a - 2.0 * tau * m1 * p_a1 + m2 * p_a2)
        return phi0, phi1, phi2

    def tail_primitives(self, tau):
        """Primitives minus their large-tau polynomial parts (valid for tau >= 0).

        The polynomial parts drop out of every second difference, and the
        remainders decay like Q, so far-apart slabs avoid cancellation.
        """
        tau = np.asarray(tau, dtype=float)
        a, g, kap = self.alpha, self.gamma, self.kappa
        x = g * tau
        q_a = upper_gamma_regularized(a, x)
        q_a1 = upper_gamma_regularized(a + 1.0, x)
        q_a2 = upper_gamma_regularized(a + 2.0, x)
        m1 = a / g
        m2 = a * (a + 1.0) / g**2
        r0 = -kap * q_a
        r1 = -kap * (tau * q_a - m1 * q_a1)
        r2 = -0.5 * kap * (tau**2 * q_a - 2.0 * tau * m1 * q_a1 + m2 * q_a2)
        return r0, r1, r2

    def scaled(self, factor: float) -> "GammaKernel":
        return GammaKernel(factor * self.kappa, self.alpha, self.gamma)


KernelSpec = Union[ZeroKernel, ExponentialSum, GammaKernel]


# ---------------------------------------------------------------------------
# Functional interface
# ---------------------------------------------------------------------------

def eval_kernel(spec: KernelSpec, t):
    """K(t) for t > 0; raises DomainError at or below the origin."""
    return spec(t)


def total_mass(spec: KernelSpec) -> float:
    return float(spec.kappa)


def xi(spec: KernelSpec, t):
    """Tail mass xi(t) = kappa - int_0^t K."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("xi is defined for t >= 0")
    return spec.xi(t)


def min_rate(spec: KernelSpec) -> float:
    if isinstance(spec, ExponentialSum):
        return min(g for _, g in spec.terms)
    if isinstance(spec, GammaKernel):
        return spec.gamma
    return 1.0


def check_monotone(spec: KernelSpec, t_max: float | None = None, n: int = 200) -> bool:
    """Sampled check that K >= 0 and K is nonincreasing on (0, t_max]."""
    if t_max is None:
        t_max = 10.0 / min_rate(spec)
    t = np.linspace(t_max / n, t_max, n)
    k = np.asarray(spec(t))
    return bool(np.all(k >= 0) and np.all(np.diff(k) <= 1e-14 * np.max(np.abs(k), initial=1.0)))


def positive_type_residual(g: Callable, T: float, phi, quad_n: int) -> float:
    """Quadrature of  int_0^T int_0^t g(t-s) phi(t) phi(s) ds dt.

    ``phi`` is either a callable or ``quad_n`` samples on a uniform grid of [0, T].
    The rule is the symmetrized composite trapezoidal rule, written as the
    quadratic form 0.5 * (w phi)^T G (w phi) with G_ij = g(|t_i - t_j|), which
    keeps the sign of positive-type g exact for convex decreasing samples.
    """
    if quad_n < 2:
        raise ValueError("positive_type_residual needs quad_n >= 2")
    t = np.linspace(0.0, T, quad_n)
    vals = np.asarray(phi(t) if callable(phi) else phi, dtype=float)
    if vals.shape != (quad_n,):
        raise ValueError(f"phi must provide {quad_n} samples")
    w = np.full(quad_n, T / (quad_n - 1))
    w[[0, -1]] *= 0.5
    lag = np.abs(t[:, None] - t[None, :])
    G = np.asarray(g(lag), dtype=float)
    if G.shape != lag.shape:
        G = np.broadcast_to(G, lag.shape)
    y = w * vals
    return float(0.5 * y @ G @ y)
