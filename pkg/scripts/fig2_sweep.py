"""Released-stage criterion surface over (r, eta) at optimal gain.

    python scripts/fig2_sweep.py --out results/fig2.csv
"""

import argparse
from pathlib import Path

import numpy as np

from trimem.network import Stage
from trimem.sweep import SweepSpec, sweep


def run(stage: Stage, out: Path) -> None:
    grid = sweep(SweepSpec(stage=stage))
    out.parent.mkdir(parents=True, exist_ok=True)
    grid.write_csv(out)
    n_r, n_eta = grid.monotonicity_violations()
    k = np.unravel_index(np.argmin(grid.I), grid.shape)
    print(f"{stage.value}: {grid.I.size} cells -> {out}")
    print(f"  min I = {grid.I[k]:.4f} at r={grid.r[k]:.2f}, eta={grid.eta[k]:.2f}")
    print(f"  adjacent-cell increases: {n_r} along r, {n_eta} along eta")


def main(stage: Stage = Stage.RELEASED, default_out: str = "results/fig2.csv") -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(default_out))
    run(stage, ap.parse_args().out)


if __name__ == "__main__":
    main()
