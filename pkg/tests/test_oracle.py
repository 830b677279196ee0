import math

import numpy as np
import pytest

from viscocg.convolution import TimeGrid
from viscocg.errors import DomainError, UnsupportedKernelError
from viscocg.kernel import ExponentialSum, GammaKernel, ZeroKernel
from viscocg.oracle import (ModalConfig, manufactured_case, manufactured_residual, modal_solve,
                            quad_weight_oracle, sine_coefficients, slab_total_oracle)
from viscocg.convolution import weights

PRONY = ExponentialSum(((0.5, 1.0),))
GAMMA = GammaKernel(0.5, 0.5, 1.0)


def single_mode(kernel, dt, m=1, n_modes=4, T=1.0, velocity=False):
    coeffs = np.zeros(n_modes)
    coeffs[m - 1] = 1.0
    kw = {"u1_modes": coeffs} if velocity else {"u0_modes": coeffs}
    return modal_solve(ModalConfig(kernel, T, n_modes, dt, **kw))


def test_standing_wave():
    errs = []
    for dt in (1 / 64, 1 / 128):
        sol = single_mode(ZeroKernel(), dt)
        errs.append(np.max(np.abs(sol.coeffs[:, 0] - np.cos(np.pi * sol.times))))
    # trapezoidal phase error: about pi^3 t dt^2 / 12
    assert errs[0] <= (math.pi**3 / 12) * (1 / 64) ** 2
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    x = np.linspace(0, 1, 11)
    assert np.allclose(sol.displacement(x, 0), np.sin(np.pi * x), atol=1e-15)


def test_velocity_started_wave():
    x = np.linspace(0, 1, 11)
    sol = single_mode(ZeroKernel(), 1 / 512, m=2, velocity=True)
    exact = np.sin(2 * np.pi) * np.sin(2 * np.pi * x) / (2 * np.pi)
    assert np.max(np.abs(sol.displacement(x) - exact)) <= 1e-4


@pytest.mark.parametrize("kernel", [PRONY, GAMMA])
def test_self_convergence_order_two(kernel):
    ends = [single_mode(kernel, dt).coeffs[-1, 0] for dt in (1 / 64, 1 / 128, 1 / 256)]
    order = math.log2(abs(ends[0] - ends[1]) / abs(ends[1] - ends[2]))
    assert abs(order - 2.0) <= 0.2


def test_modal_rejects_neumann_and_bad_dt():
    with pytest.raises(UnsupportedKernelError):
        modal_solve(ModalConfig(PRONY, 1.0, 2, 0.1, bc=("dirichlet", "neumann")))
    with pytest.raises(DomainError):
        modal_solve(ModalConfig(PRONY, 1.0, 2, 0.3))


def test_sine_coefficients_no_leakage():
    c = sine_coefficients(lambda x: np.sin(3 * np.pi * x), 1.0, 12)
    expect = np.zeros(12)
    expect[2] = 1.0
    assert np.max(np.abs(c - expect)) <= 1e-12


def test_manufactured_closed_forms():
    case = manufactured_case("sinpi-t2", kappa=0.5, gamma=1.0)
    x = np.linspace(0, 1, 7)
    assert np.allclose(case.f(x, 0.0), 2 * np.sin(np.pi * x), atol=1e-15)
    assert np.allclose(case.u(x, 1.0), np.sin(np.pi * x), atol=1e-15)
    assert abs(manufactured_residual(case, 0.3, 0.7)) <= 1e-6


def test_manufactured_residual_grid():
    case = manufactured_case()
    worst = max(abs(manufactured_residual(case, x, t))
                for x in np.linspace(0.05, 0.95, 10) for t in np.linspace(0.0, 1.0, 10))
    assert worst <= 1e-6


def test_unknown_case():
    with pytest.raises(ValueError):
        manufactured_case("other")


def test_weight_oracle_zero_kernel():
    assert quad_weight_oracle(ZeroKernel(), TimeGrid.uniform(1, 4), 3, 2) == (0.0, 0.0)


def test_weight_oracle_agrees_exponential():
    rng = np.random.default_rng(13)
    for _ in range(20):
        cuts = np.sort(rng.uniform(0.0, 3.0, 7))
        grid = TimeGrid(np.concatenate([[0.0], cuts, [3.0]]))
        n = int(rng.integers(1, grid.N + 1))
        l = int(rng.integers(1, n + 1))
        w = weights(PRONY, grid, n)
        wp, wm = quad_weight_oracle(PRONY, grid, n, l)
        assert abs(w.plus[l - 1] - wp) <= 1e-10 and abs(w.minus[l - 1] - wm) <= 1e-10


def test_weight_oracle_sum_rule_gamma():
    grid = TimeGrid.uniform(1.0, 5)
    for n in range(1, 6):
        total = sum(sum(quad_weight_oracle(GAMMA, grid, n, l)) for l in range(1, n + 1))
        assert abs(total - slab_total_oracle(GAMMA, grid, n)) <= 1e-9
