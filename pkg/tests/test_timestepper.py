import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viscocg.convolution import TimeGrid
from viscocg.errors import ConfigError
from viscocg.fem1d import BCSpec, Mesh1D, error_norms, l2_project
from viscocg.kernel import ExponentialSum, GammaKernel, ZeroKernel
from viscocg.oracle import manufactured_case
from viscocg.timestepper import ProblemConfig, Solver, energy, init, run

DD = BCSpec()
PRONY = ExponentialSum(((0.5, 1.0),))
sine = lambda x: np.sin(np.pi * x)


def config(kernel=PRONY, n_elems=16, T=1.0, N=32, **kw):
    return ProblemConfig(kernel=kernel, mesh=Mesh1D.uniform(1.0, n_elems), bc=kw.pop("bc", DD),
                         grid=TimeGrid.uniform(T, N), **kw)


def test_zero_initial_data():
    s = init(config())
    assert np.array_equal(s.U1, np.zeros(15)) and np.array_equal(s.U2, np.zeros(15))


def test_initial_data_is_projected():
    cfg = config(u0=sine)
    s = Solver(cfg)
    assert np.array_equal(s.init().U1, l2_project(s.sys, sine))


def test_initial_data_in_vh_is_exact():
    cfg = config(u0=lambda x: np.interp(x, [0, 0.5, 1], [0, 1, 0]))
    s = init(cfg)
    nodes = np.linspace(0, 1, 17)[1:-1]
    assert np.max(np.abs(s.U1 - np.interp(nodes, [0, 0.5, 1], [0, 1, 0]))) <= 1e-12


def test_one_step_zero_data_stays_zero():
    solver = Solver(config())
    s = solver.step(solver.init())
    assert s.n == 1 and np.all(s.U1 == 0) and np.all(s.U2 == 0)


def test_energy_conserved_one_step_without_memory():
    solver = Solver(config(ZeroKernel(), u0=sine))
    s = solver.init()
    e0 = s.energy[0]
    solver.step(s)
    assert abs(s.energy[1] - e0) <= 1e-12 * e0


def test_energy_conserved_long_run():
    rep = run(config(ZeroKernel(), n_elems=32, T=10.0, N=1000, u0=sine))
    drift = np.max(np.abs(rep.energy - rep.energy[0])) / rep.energy[0]
    assert drift <= 1e-8


def test_memory_dissipates_energy():
    rep = run(config(PRONY, n_elems=32, T=10.0, N=400, u0=sine))
    assert rep.energy[-1] < 0.7 * rep.energy[0]


def test_no_steps_report():
    rep = run(config(N=0, u0=sine, probes=(0.5,)))
    assert rep.times.tolist() == [0.0]
    assert rep.probe_values.shape == (1, 1)
    assert rep.energy.shape == (1,)


def test_step_past_end():
    solver = Solver(config(N=1))
    s = solver.step(solver.init())
    with pytest.raises(ValueError):
        solver.step(s)


def test_config_validation():
    with pytest.raises(ConfigError):
        config(GammaKernel(0.3, 0.5, 1.0), history_mode="recurrence")
    with pytest.raises(ConfigError):
        config(history_mode="other")
    with pytest.raises(ConfigError):
        config(probes=(1.5,))


@pytest.mark.parametrize("kernel", [PRONY, ExponentialSum(((0.2, 0.5), (0.3, 4.0)))])
def test_recurrence_equals_direct(kernel):
    kw = dict(n_elems=16, T=5.0, N=500, u0=sine, bc=BCSpec("dirichlet", "neumann", 0.0, -1.0),
              probes=(0.25, 0.5, 1.0))
    a = run(config(kernel, history_mode="direct", **kw))
    b = run(config(kernel, history_mode="recurrence", **kw))
    assert np.max(np.abs(a.U1 - b.U1)) <= 1e-10
    assert np.max(np.abs(a.probe_values - b.probe_values)) <= 1e-10


def test_debug_mode_checks_spd():
    rep = run(config(GammaKernel(0.5, 0.5, 1.0), u0=sine, debug=True))
    assert np.all(np.isfinite(rep.U1))


@settings(max_examples=15, deadline=None)
@given(st.floats(-3.0, 3.0).filter(lambda a: abs(a) > 1e-3), st.integers(0, 1000))
def test_linearity(alpha, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(3)
    u0 = lambda x: c[0] * np.sin(np.pi * x) + c[1] * x * (1 - x)
    u1 = lambda x: c[2] * np.sin(2 * np.pi * x)
    f = lambda x, t: np.cos(3 * t) * x * (1 - x)
    base = run(config(GammaKernel(0.4, 0.6, 1.5), N=20, u0=u0, u1=u1, f=f))
    scaled = run(config(GammaKernel(0.4, 0.6, 1.5), N=20, u0=lambda x: alpha * u0(x),
                        u1=lambda x: alpha * u1(x), f=lambda x, t: alpha * f(x, t)))
    scale = max(1.0, np.max(np.abs(base.U1)))
    assert np.max(np.abs(scaled.U1 - alpha * base.U1)) <= 1e-11 * abs(alpha) * scale
    assert np.max(np.abs(scaled.U2 - alpha * base.U2)) <= 1e-11 * abs(alpha) * max(1.0, np.max(np.abs(base.U2)))


def test_manufactured_error_small():
    case = manufactured_case("sinpi-t2", kappa=0.5, gamma=1.0)
    rep = run(ProblemConfig(case.kernel, Mesh1D.uniform(1.0, 64), DD, TimeGrid.uniform(1.0, 128), f=case.f))
    e = error_norms(rep.system, rep.U1, lambda x: case.u(x, 1.0))
    assert e["l2"] < 5e-4


def test_single_vector_per_level():
    solver = Solver(config(N=4, u0=sine))
    s = solver.init()
    for _ in range(4):
        solver.step(s)
    assert s.history.shape == (5, 15)
    assert np.array_equal(s.history[-1], s.U1)


def test_energy_helper():
    solver = Solver(config(ZeroKernel()))
    v = np.ones(15)
    assert energy(solver.sys, v, 0 * v) == pytest.approx(v @ solver.sys.S @ v)
