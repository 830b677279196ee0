"""Command line interface.

    viscocg demo-damping   [--config F] [--out DIR] [--set section.key=value ...]
    viscocg converge       [--axis h|k] [--levels N] [--reference manufactured|fine-grid]
    viscocg check-kernel   [--set kernel.type=gamma ...]
    viscocg oracle-compare
    viscocg dump-weights   [--step N]

Exit codes: 0 success, 1 validation failure, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import ConfigFile, read_ini
from .errors import ConfigError, DomainError, NumericalError, UnsupportedKernelError

log = logging.getLogger("viscocg")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2

# per-command defaults applied before the user's config file and --set overrides
_DEFAULTS = {
    "demo-damping": [],
    "converge": ["problem.T=1", "problem.bc.right=dirichlet", "problem.load=manufactured",
                 "problem.probes=0.5", "kernel.type=prony", "kernel.terms=0.5, 1"],
    "check-kernel": [],
    "oracle-compare": ["problem.T=1", "problem.bc.right=dirichlet", "problem.u0=sin:1",
                       "problem.n_elems=64", "problem.n_steps=128", "problem.probes=0.25, 0.5, 0.75"],
    "dump-weights": ["problem.T=1", "problem.n_steps=8"],
}
_SWEEP_DEFAULTS = {
    "h": ["problem.n_elems=8", "problem.n_steps=512"],
    "k": ["problem.n_elems=256", "problem.n_steps=8"],
}


def _load_config(args) -> ConfigFile:
    cfg = ConfigFile()
    defaults = list(_DEFAULTS[args.command])
    if args.command == "converge":
        axis = args.axis or "h"
        defaults += _SWEEP_DEFAULTS[axis] + [f"sweep.axis={axis}"]
    cfg.apply_overrides(defaults)
    if args.config:
        for section, key, value in read_ini(args.config):
            cfg.set(section, key, value)
    overrides = list(args.set or [])
    if args.command == "converge":
        if args.axis:
            overrides.append(f"sweep.axis={args.axis}")
        if args.levels is not None:
            overrides.append(f"sweep.levels={args.levels}")
        if args.reference:
            overrides.append(f"sweep.reference={args.reference}")
    if args.out:
        overrides.append(f"run.output={args.out}")
    cfg.apply_overrides(overrides)
    return cfg


def cmd_demo_damping(cfg: ConfigFile, args) -> int:
    report = ex.run_damping_demo(cfg)
    path = ex.write_probe_csv(Path(cfg.run.output) / "damping_probes.csv", report)
    print(f"wrote {path} ({report.times.size} rows)")
    tip = report.probe_values[:, -1]
    peaks = ex.oscillation_peaks(abs(tip))[:5]
    for i in peaks:
        print(f"  peak |u(x={report.probes[-1]:g})| = {ex.fmt(abs(tip[i]))} at t = {ex.fmt(report.times[i])}")
    return EXIT_OK


def cmd_converge(cfg: ConfigFile, args) -> int:
    result = ex.convergence_sweep(cfg)
    path = ex.write_sweep_csv(Path(cfg.run.output) / f"converge_{cfg.sweep.axis}.csv", result)
    print(",".join(ex.ERROR_HEADER))
    for row in result.rows:
        print(",".join(ex.fmt(v) for v in row.as_list()))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check_kernel(cfg: ConfigFile, args) -> int:
    report = ex.check_kernel(cfg.build_kernel(), seed=args.seed)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_oracle_compare(cfg: ConfigFile, args) -> int:
    cmp = ex.oracle_compare(cfg)
    rows = [["l2_diff", cmp.l2], ["h1_diff", cmp.h1], ["max_probe_diff", cmp.max_probe],
            ["dt_fine", cmp.dt_fine], ["n_modes", cmp.n_modes]]
    path = ex.write_csv(Path(cfg.run.output) / "oracle_compare.csv", ["metric", "value"], rows)
    for name, val in rows:
        print(f"{name} = {ex.fmt(val)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_dump_weights(cfg: ConfigFile, args) -> int:
    grid = cfg.build_grid()
    if args.step is not None and not 1 <= args.step <= grid.N:
        raise ConfigError(f"--step must be in 1..{grid.N}")
    steps = [args.step] if args.step is not None else None
    rows = ex.weight_table(cfg.build_kernel(), grid, steps)
    path = ex.write_csv(Path(cfg.run.output) / "weights.csv", ["n", "l", "w_plus", "w_minus"], rows)
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


COMMANDS = {
    "demo-damping": cmd_demo_damping,
    "converge": cmd_converge,
    "check-kernel": cmd_check_kernel,
    "oracle-compare": cmd_oracle_compare,
    "dump-weights": cmd_dump_weights,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--out", help="output directory (overrides run.output)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized diagnostics")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override a config value; repeatable")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="viscocg", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("demo-damping", parents=[common], help="damped oscillation demo (probe CSV)")
    conv = sub.add_parser("converge", parents=[common], help="h or k convergence sweep (EOC CSV)")
    conv.add_argument("--axis", choices=["h", "k"])
    conv.add_argument("--levels", type=int)
    conv.add_argument("--reference", choices=["manufactured", "fine-grid"])
    sub.add_parser("check-kernel", parents=[common], help="kernel mass, xi, monotonicity, positive type")
    sub.add_parser("oracle-compare", parents=[common], help="solver vs modal oracle")
    dump = sub.add_parser("dump-weights", parents=[common], help="convolution weight table")
    dump.add_argument("--step", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, DomainError, UnsupportedKernelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
