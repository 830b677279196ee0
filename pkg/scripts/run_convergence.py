"""h and k convergence tables for the manufactured solution sin(pi x) t^2.

    python3 scripts/run_convergence.py [--out DIR] [--reference manufactured|fine-grid]
"""
import argparse
from pathlib import Path

from viscocg.config import ConfigFile
from viscocg.experiments import ERROR_HEADER, convergence_sweep, write_sweep_csv

SWEEPS = {
    # axis: (n_elems, n_steps, levels)
    "h": (8, 512, 5),
    "k": (256, 8, 4),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="out/convergence")
    ap.add_argument("--reference", default="manufactured", choices=["manufactured", "fine-grid"])
    args = ap.parse_args()

    for axis, (n_elems, n_steps, levels) in SWEEPS.items():
        cfg = ConfigFile().apply_overrides([
            "problem.T=1", "problem.bc.right=dirichlet", "problem.load=manufactured",
            "problem.probes=0.5", "kernel.terms=0.5, 1",
            f"problem.n_elems={n_elems}", f"problem.n_steps={n_steps}",
            f"sweep.axis={axis}", f"sweep.levels={levels}", f"sweep.reference={args.reference}",
        ])
        result = convergence_sweep(cfg)
        path = write_sweep_csv(Path(args.out) / f"converge_{axis}.csv", result)
        print(f"axis {axis} -> {path}")
        print("  " + " ".join(f"{h:>12s}" for h in ERROR_HEADER[:8]))
        for row in result.rows:
            cells = ["-" if v is None else f"{v:.6g}" for v in row.as_list()[:8]]
            print("  " + " ".join(f"{c:>12s}" for c in cells) + f"  {row.status}")


if __name__ == "__main__":
    main()
