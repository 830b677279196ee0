"""Convolution weights of the cG(1)cG(1) memory term and history bookkeeping.

For step n (slab I_n = (t_{n-1}, t_n)) and slab l <= n the weights are

    w_plus[n, l]  = int_{I_n} int_{t_{l-1}}^{min(t, t_l)} K(t - s) psi_{l-1}(s) ds dt
    w_minus[n, l] = int_{I_n} int_{t_{l-1}}^{min(t, t_l)} K(t - s) psi_l(s)     ds dt

with psi_l the temporal hat function of level t_l. They are evaluated in
closed form: exponential terms factorize across slabs, the Gamma-type kernel
goes through the iterated primitives of K (incomplete gamma functions).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, StateError, UnsupportedKernelError
from .kernel import ExponentialSum, GammaKernel, KernelSpec, ZeroKernel, phi_function


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 1 or t[0] != 0.0:
            raise ValueError("time grid must start at t_0 = 0")
        if np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
            raise ValueError("time grid must be finite and strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, T: float, n_steps: int) -> "TimeGrid":
        return cls(np.linspace(0.0, T, n_steps + 1))

    @property
    def N(self) -> int:
        return self.times.size - 1

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def k(self) -> float:
        return float(self.steps.max()) if self.N else 0.0

    def step(self, n: int) -> float:
        return float(self.times[n] - self.times[n - 1])

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        s = self.steps
        return bool(s.size == 0 or np.all(np.abs(s - s[0]) <= rtol * s[0]))


@dataclass(frozen=True)
class ConvWeights:
    """Weights of step n; index l - 1 holds slab l (l = 1..n)."""

    n: int
    plus: np.ndarray
    minus: np.ndarray


def _moments(x):
    # m0 = int_0^1 e^{-x th} dth,  m1 = int_0^1 e^{-x th} th dth, both for x >= 0
    x = np.asarray(x, dtype=float)
    m0 = phi_function(1, -x)
    m1 = np.empty_like(x)
    small = x < 1.0
    if np.any(small):
        xs = x[small]
        acc = np.zeros_like(xs)
        fact = 1.0
        # sum_i (-x)^i / (i! (i + 2))
        terms = []
        for i in range(30):
            if i:
                fact *= i
            terms.append(1.0 / (fact * (i + 2)))
        for c in reversed(terms):
            acc = acc * (-xs) + c
        m1[small] = acc
    big = ~small
    if np.any(big):
        xb = x[big]
        m1[big] = (1.0 - np.exp(-xb) * (1.0 + xb)) / xb**2
    return m0, m1


def _self_weights_exp(x):
    # Same-slab double integrals over 0 < eta < theta < 1 of e^{-x(theta-eta)}
    # times (1 - eta) [plus] and eta [minus]; the tau = theta - eta substitution
    # gives minus = phi_3(-x) and total = phi_2(-x).
    total = phi_function(2, -x)
    minus = phi_function(3, -x)
    return total - minus, minus


def _weights_exponential(spec: ExponentialSum, grid: TimeGrid, n: int):
    t = grid.times
    k = grid.steps[:n]
    kn = k[n - 1]
    plus = np.zeros(n)
    minus = np.zeros(n)
    for c, g in spec.terms:
        x = g * k
        m0, m1 = _moments(x)
        if n > 1:
            decay = np.exp(-g * (t[n - 1] - t[1:n]))
            front = c * kn * m0[n - 1] * decay * k[: n - 1]
            plus[: n - 1] += front * m1[: n - 1]
            minus[: n - 1] += front * (m0[: n - 1] - m1[: n - 1])
        p_self, m_self = _self_weights_exp(np.array([g * kn]))
        plus[n - 1] += c * kn**2 * p_self[0]
        minus[n - 1] += c * kn**2 * m_self[0]
    return plus, minus


def _second_differences(prims, grid: TimeGrid, n: int, slabs: slice):
    # W0 = int_{I_n} int_a^b K(t-s) ds dt, W1 = same with weight (s - a)
    t = grid.times
    a = t[: n][slabs]
    b = t[1: n + 1][slabs]
    tn, tm = t[n], t[n - 1]
    m = a.size
    args = np.concatenate([tn - a, tm - a, tn - b, tm - b])
    _, p1, p2 = prims(args)
    p1 = p1.reshape(4, m)
    p2 = p2.reshape(4, m)
    w0 = p1[0] - p1[1] - p1[2] + p1[3]
    w1 = (p2[0] - p2[1]) - (p2[2] - p2[3]) - (b - a) * (p1[2] - p1[3])
    minus = w1 / (b - a)
    return w0 - minus, minus


def _weights_from_primitives(spec: KernelSpec, grid: TimeGrid, n: int):
    # On slab n the primitives vanish for negative arguments, which encodes
    # the t ^ t_l cut. Earlier slabs only see nonnegative arguments, where
    # the tail form (polynomial parts removed) is exact and cancellation-free.
    plus = np.empty(n)
    minus = np.empty(n)
    tails = getattr(spec, "tail_primitives", spec.primitives)
    if n > 1:
        plus[: n - 1], minus[: n - 1] = _second_differences(tails, grid, n, slice(0, n - 1))
    plus[n - 1:], minus[n - 1:] = _second_differences(spec.primitives, grid, n, slice(n - 1, n))
    return plus, minus


def weights(spec: KernelSpec, grid: TimeGrid, n: int) -> ConvWeights:
    """Closed-form convolution weights of step n for slabs l = 1..n."""
    if not 1 <= n <= grid.N:
        raise ValueError(f"step index {n} outside 1..{grid.N}")
    if isinstance(spec, ZeroKernel) or spec.kappa == 0.0:
        plus, minus = np.zeros(n), np.zeros(n)
    elif isinstance(spec, ExponentialSum):
        plus, minus = _weights_exponential(spec, grid, n)
    elif isinstance(spec, GammaKernel):
        plus, minus = _weights_from_primitives(spec, grid, n)
    else:
        raise UnsupportedKernelError(f"no weights for kernel {type(spec).__name__}")
    bad = ~(np.isfinite(plus) & np.isfinite(minus))
    if np.any(bad):
        l = int(np.nonzero(bad)[0][0]) + 1
        raise NumericalError(f"nonfinite convolution weight at (n={n}, l={l})")
    return ConvWeights(n, plus, minus)


def diagonal_weights(spec: KernelSpec, grid: TimeGrid, n: int) -> tuple[float, float]:
    """(w_plus[n, n], w_minus[n, n]) without forming the full row."""
    if isinstance(spec, ZeroKernel) or spec.kappa == 0.0:
        return 0.0, 0.0
    kn = grid.step(n)
    if isinstance(spec, ExponentialSum):
        plus = minus = 0.0
        for c, g in spec.terms:
            p_self, m_self = _self_weights_exp(np.array([g * kn]))
            plus += c * kn**2 * p_self[0]
            minus += c * kn**2 * m_self[0]
        return plus, minus
    # only slab n: shift the grid so the primitives see a single slab
    local = TimeGrid(np.array([0.0, kn]))
    plus, minus = _weights_from_primitives(spec, local, 1)
    return float(plus[0]), float(minus[0])


def history_sum(S, history, w: ConvWeights, n: int) -> np.ndarray:
    """sum_{l=1}^{n-1} (w_minus[l] S U^l + w_plus[l] S U^{l-1}).

    ``history`` is indexable by level and must hold U^0 .. U^{n-1}.
    """
    if n == 1:
        return np.zeros(S.shape[0])
    if len(history) < n:
        raise StateError(f"history holds {len(history)} levels, step {n} needs {n}")
    H = np.asarray(history[:n])
    combo = w.minus[: n - 1] @ H[1:n] + w.plus[: n - 1] @ H[0: n - 1]
    return S @ combo


class ExpRecurrenceState:
    """Running exponentially weighted history for Prony kernels.

    For each term j it stores
        R_j = sum_{l <= n-1} exp(-gamma_j (t_{n-1} - t_l)) k_l [(m0 - m1) U^l + m1 U^{l-1}]
    (in U-space; the stiffness matrix is applied once per query), so that
    the step-n history term costs O(terms * dofs) instead of O(n * dofs).
    """

    def __init__(self, spec: KernelSpec, n_dofs: int):
        if not isinstance(spec, ExponentialSum):
            raise UnsupportedKernelError("recurrence history needs an exponential-sum kernel")
        self.spec = spec
        self.R = np.zeros((len(spec.terms), n_dofs))
        self.n = 1  # next step to be answered

    def history(self, S, grid: TimeGrid, n: int) -> np.ndarray:
        if n != self.n:
            raise StateError(f"recurrence state is at step {self.n}, asked for {n}")
        kn = grid.step(n)
        combo = np.zeros(self.R.shape[1])
        for j, (c, g) in enumerate(self.spec.terms):
            m0, _ = _moments(np.array([g * kn]))
            combo += c * kn * m0[0] * self.R[j]
        return S @ combo

    def update(self, u_prev: np.ndarray, u_new: np.ndarray, grid: TimeGrid, n: int):
        """Fold slab n (levels n-1, n) into the state."""
        if n != self.n:
            raise StateError(f"recurrence state is at step {self.n}, got slab {n}")
        kn = grid.step(n)
        for j, (_, g) in enumerate(self.spec.terms):
            m0, m1 = _moments(np.array([g * kn]))
            self.R[j] = np.exp(-g * kn) * self.R[j] + kn * (
                (m0[0] - m1[0]) * u_new + m1[0] * u_prev)
        self.n += 1
        return self


def exp_update(state: ExpRecurrenceState, u_prev, u_new, grid: TimeGrid, n: int):
    return state.update(u_prev, u_new, grid, n)
