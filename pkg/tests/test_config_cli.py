import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viscocg import cli
from viscocg.config import ConfigFile
from viscocg.errors import ConfigError
from viscocg.experiments import eoc, oscillation_peaks
from viscocg.kernel import ExponentialSum, GammaKernel

SAMPLE = """
[problem]
L = 1
n_elems = 32
T = 2
n_steps = 40
bc.left = dirichlet
bc.right = neumann
neumann.g = -0.5
probes = 0.5, 1

[kernel]
type = gamma
kappa = 0.3
alpha = 0.5
gamma = 2

[run]
history_mode = direct
output = results
"""


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- config ------------------------------------------------------------------

def test_parse_sample():
    cfg = ConfigFile.from_text(SAMPLE)
    assert cfg.problem.n_elems == 32 and cfg.problem.probes == [0.5, 1.0]
    assert cfg.build_kernel() == GammaKernel(0.3, 0.5, 2.0)
    assert cfg.build_bc().g_right == -0.5


def test_round_trip_preserves_keys_and_values():
    cfg = ConfigFile.from_text(SAMPLE)
    again = ConfigFile.from_text(cfg.to_text(only_explicit=True))
    assert again.explicit == cfg.explicit
    assert again.to_text() == cfg.to_text()


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 500), st.integers(0, 10_000), st.floats(0.01, 100.0),
       st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4),
       st.lists(st.tuples(st.floats(0.01, 0.2), st.floats(0.5, 10.0)), min_size=1, max_size=3))
def test_round_trip_property(n_elems, n_steps, T, probes, terms):
    cfg = ConfigFile()
    cfg.apply_overrides([f"problem.n_elems={n_elems}", f"problem.n_steps={n_steps}",
                         f"problem.T={T!r}", "problem.probes=" + ", ".join(repr(p) for p in probes),
                         "kernel.terms=" + ", ".join(f"{c!r}, {g!r}" for c, g in terms)])
    again = ConfigFile.from_text(cfg.to_text())
    assert again.problem == cfg.problem and again.kernel == cfg.kernel
    assert set(again.explicit["problem"]) >= set(cfg.explicit["problem"])


@pytest.mark.parametrize("text", [
    "[problem]\nbogus = 1\n",
    "[nosuch]\nx = 1\n",
    "[problem]\nT = inf\n",
    "[problem]\nT = -1\n",
    "[problem]\nn_elems = 1\n",
    "[kernel]\ntype = prony\nterms = 2, 1\n",
    "[kernel]\ntype = prony\nterms = 0.5\n",
    "[kernel]\ntype = gamma\nkappa = 1.2\n",
    "[kernel]\ntype = spline\n",
    "[run]\nhistory_mode = fast\n",
    "[problem]\nbc.left = neumann\nbc.right = neumann\n",
    "[problem]\nu0 = cos:1\n",
    "not an ini file",
])
def test_invalid_config_rejected(text):
    with pytest.raises(ConfigError):
        ConfigFile.from_text(text)


def test_override_syntax():
    cfg = ConfigFile()
    with pytest.raises(ConfigError):
        cfg.apply_overrides(["problem.T"])
    with pytest.raises(ConfigError):
        cfg.apply_overrides(["T=3"])
    cfg.apply_overrides(["kernel.terms=0.2, 1, 0.1, 3"])
    assert cfg.build_kernel() == ExponentialSum(((0.2, 1.0), (0.1, 3.0)))


def test_explicit_nodes():
    cfg = ConfigFile.from_text("[problem]\nnodes = 0, 0.1, 0.5, 1\n")
    mesh = cfg.build_mesh()
    assert mesh.n_elems == 3 and cfg.problem.n_elems is None
    bad = ConfigFile.from_text("[problem]\nnodes = 0, 0.5, 0.9\n")
    with pytest.raises(ConfigError):
        bad.build_mesh()


# --- experiment helpers ------------------------------------------------------

def test_eoc_values():
    assert eoc([1.0, 0.25, 0.0625]) == [None, 2.0, 2.0]
    assert eoc([1.0, 0.0])[1] is None


def test_peaks_ignore_ripple():
    t = np.linspace(0, 20, 4001)
    signal = np.exp(-0.05 * t) * np.cos(t) + 1e-4 * np.sin(300 * t)
    peaks = oscillation_peaks(signal)
    assert np.all(np.diff(t[peaks]) > 5.0)
    assert np.all(np.diff(signal[peaks]) < 0)
    assert oscillation_peaks(np.zeros(10)).size == 0


# --- command line ------------------------------------------------------------

def test_dump_weights_csv(tmp_path, capsys):
    rc = cli.main(["dump-weights", "--out", str(tmp_path), "--set", "problem.n_steps=4"])
    assert rc == 0
    rows = read_csv(tmp_path / "weights.csv")
    assert rows[0] == ["n", "l", "w_plus", "w_minus"]
    assert len(rows) == 1 + 4 * 5 // 2
    # 17 significant digits
    assert all(len(r[2].replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17 for r in rows[1:])
    assert float(rows[1][2]) > 0


def test_dump_weights_bad_step(tmp_path):
    assert cli.main(["dump-weights", "--out", str(tmp_path), "--step", "99"]) == 1


def test_check_kernel_exit_codes(capsys):
    assert cli.main(["check-kernel"]) == 0
    out = capsys.readouterr().out
    assert "kappa = 0.5" in out and "all checks passed" in out
    assert cli.main(["check-kernel", "--set", "kernel.terms=2, 1"]) == 1
    assert "kappa < 1" in capsys.readouterr().err
    assert cli.main(["check-kernel", "--set", "kernel.type=gamma", "--set", "kernel.kappa=0.3",
                     "--set", "kernel.alpha=0.5", "--set", "kernel.gamma=2"]) == 0
    assert "xi(0) = 0.29999999999999999" in capsys.readouterr().out


def test_config_file_and_override_order(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[problem]\nn_steps = 3\n[kernel]\ntype = zero\n")
    rc = cli.main(["dump-weights", "--config", str(path), "--out", str(tmp_path), "--set", "problem.n_steps=2"])
    assert rc == 0
    rows = read_csv(tmp_path / "weights.csv")
    assert len(rows) == 1 + 3 and all(float(r[2]) == 0.0 for r in rows[1:])


def test_missing_config_file(tmp_path):
    assert cli.main(["check-kernel", "--config", str(tmp_path / "absent.ini")]) == 1


def test_oracle_compare_rejects_neumann(tmp_path, capsys):
    rc = cli.main(["oracle-compare", "--out", str(tmp_path), "--set", "problem.bc.right=neumann"])
    assert rc == 1
    assert "Dirichlet" in capsys.readouterr().err


def test_oracle_compare_zero_data(tmp_path):
    rc = cli.main(["oracle-compare", "--out", str(tmp_path), "--set", "problem.u0=zero",
                   "--set", "problem.n_elems=8", "--set", "problem.n_steps=8"])
    assert rc == 0
    values = dict(read_csv(tmp_path / "oracle_compare.csv")[1:])
    assert float(values["l2_diff"]) == 0.0 and float(values["max_probe_diff"]) == 0.0


def test_oracle_compare_standing_wave(tmp_path):
    rc = cli.main(["oracle-compare", "--out", str(tmp_path), "--set", "kernel.type=zero"])
    assert rc == 0
    values = dict(read_csv(tmp_path / "oracle_compare.csv")[1:])
    assert float(values["l2_diff"]) <= 5e-4


def test_converge_csv_and_eoc_recomputable(tmp_path):
    rc = cli.main(["converge", "--axis", "h", "--levels", "3", "--out", str(tmp_path),
                   "--set", "problem.n_steps=64"])
    assert rc == 0
    rows = read_csv(tmp_path / "converge_h.csv")
    header, body = rows[0], rows[1:]
    assert header[-1] == "status" and len(body) == 3
    col = {name: i for i, name in enumerate(header)}
    for prev, row in zip(body[:-1], body[1:]):
        for e, r in (("e_L2_displacement", "eoc_L2_displacement"), ("e_H1_displacement", "eoc_H1_displacement"),
                     ("e_L2_velocity", "eoc_L2_velocity")):
            expect = math.log2(float(prev[col[e]]) / float(row[col[e]]))
            assert abs(float(row[col[r]]) - expect) <= 1e-12
    assert body[0][col["eoc_L2_displacement"]] == ""


def test_converge_fine_grid_and_levels_check(tmp_path):
    rc = cli.main(["converge", "--axis", "k", "--levels", "3", "--reference", "fine-grid",
                   "--out", str(tmp_path), "--set", "problem.n_elems=16"])
    assert rc == 0
    assert len(read_csv(tmp_path / "converge_k.csv")) == 4
    assert cli.main(["converge", "--levels", "2", "--out", str(tmp_path)]) == 1


def test_demo_is_deterministic(tmp_path):
    args = ["demo-damping", "--set", "problem.T=4", "--set", "problem.n_steps=256",
            "--set", "problem.n_elems=16"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "damping_probes.csv").read_bytes()
    assert a == (tmp_path / "b" / "damping_probes.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "damping_probes.csv")
    assert rows[0] == ["t", "u(x=0.25)", "u(x=0.5)", "u(x=1)"]
    assert len(rows) == 1 + 257


def test_numerical_failure_exit_code(monkeypatch, tmp_path):
    from viscocg import experiments
    from viscocg.errors import NumericalError

    def boom(cfg):
        raise NumericalError("synthetic")
    monkeypatch.setattr(experiments, "run_damping_demo", boom)
    assert cli.main(["demo-damping", "--out", str(tmp_path)]) == 2
