"""Monte Carlo homodyne estimate at the reference operating point, repeated over seeds."""

import argparse
import time

import numpy as np

from trimem.criteria import pipeline_criteria
from trimem.homodyne import run_mc
from trimem.report import bundled_spec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--stage", default="released", choices=("input", "atomic", "released"))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    spec = bundled_spec().with_mc(shots=args.shots, workers=args.workers)
    model = pipeline_criteria(spec, args.stage).I
    print(f"model I ({args.stage}) = {model:.4f}")
    zs = []
    for k in range(args.seeds):
        seed = spec.mc.seed + k
        t0 = time.perf_counter()
        crit = run_mc(spec.with_mc(seed=seed), args.stage).criteria
        dt = time.perf_counter() - t0
        z = (crit.I1 - model) / crit.stderr[0]
        zs.append(z)
        vals = ", ".join(f"{v:.4f}+-{s:.4f}" for v, s in zip(crit.values, crit.stderr))
        print(f"seed {seed}: I = [{vals}]  entangled={crit.entangled}  z1={z:+.2f}  ({dt:.2f} s)")
    print(f"z1 mean {np.mean(zs):+.2f}, sd {np.std(zs):.2f} over {len(zs)} seeds")


if __name__ == "__main__":
    main()
