"""Growth of ||E_h|| in the weighted kernel norms against |h|.

Runs the three reference cases (sphere cloud, cycle, torus) and writes the
per-h norms to CSV plus a JSON summary with the fitted slopes and exponents.
"""

import argparse
import math
from pathlib import Path

from kohnmult import joint_calculus as jc
from kohnmult.reporting import write_csv, write_json
from kohnmult.verify import GROWTH_CASES, growth_tuple


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--levels", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32, 40])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for label, a, b, Q in GROWTH_CASES:
        t = growth_tuple(label, args.seed, args.quick)
        kappa = math.ceil(max(jc.tuple_kappa(t, a).values()))
        rep = jc.growth_experiment(t, a, b, jc.default_hset(t.count, args.seed, tuple(args.levels)), kappa, Q)
        write_csv({"h1": rep.h1, "radius": rep.radius, "norm_1b": rep.norm1, "norm_2b": rep.norm2}, out / f"growth_{label}.csv")
        summary[label] = {k: v for k, v in rep.as_dict().items() if k not in ("h1", "norm1", "norm2", "radius")}
        print(f"{label}: gamma {rep.gamma:.3f}, slopes {rep.slope1:.3f} / {rep.slope2:.3f}, passed {rep.passed}")
    write_json(summary, out / "growth_summary.json")


if __name__ == "__main__":
    main()
