"""Tracking-accuracy vs selection-time sweep at full geometry, one panel per crowd size.

Writes the per-episode CSV and prints panel aggregates (mean correct
predictions and mean selection time per algorithm and r).

    python3 scripts/tracking_sweep.py --out tracking_sweep.csv
    python3 scripts/tracking_sweep.py --seeds 2 --r 10     # quick look
"""

import argparse
import csv
import sys
from collections import defaultdict

import numpy as np

from partimax import simulate as sim
from partimax.tiling import build

# independent runs per panel: more for the single-person case
PANEL_SEEDS = {1: 8, 3: 6, 5: 6}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tracking_sweep.csv")
    ap.add_argument("--k", type=int, default=40)
    ap.add_argument("--r", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--seeds", type=int, help="seeds per panel (default 8 / 6 / 6)")
    ap.add_argument("--people", type=int, nargs="+", default=[1, 3, 5])
    args = ap.parse_args(argv)

    agg = defaultdict(list)
    coder = None
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=sim.COLUMNS, lineterminator="\n")
        writer.writeheader()
        for P in args.people:
            n_seeds = args.seeds or PANEL_SEEDS.get(P, 6)
            cfg = sim.BenchmarkConfig(algorithms=("greedy", "sgm", "partimax", "brute"), k_values=(args.k,),
                                      r_values=tuple(args.r), people=(P,), seeds=tuple(range(n_seeds)))
            coder = coder or build(cfg.tiling)
            for cell, res, err in sim.run_benchmark(cfg):
                if err:
                    print(f"cell {cell} failed: {err}", file=sys.stderr)
                    continue
                writer.writerow(sim.result_row(cell, res))
                fh.flush()
                agg[P, cell.algorithm, cell.r].append((res.correct_predictions, res.mean_selection_time))

    print(f"{'people':>6} {'algorithm':>9} {'r':>4} {'runs':>4} {'correct':>8} {'select_us':>10}")
    for (P, alg, r), rows in sorted(agg.items()):
        a = np.array(rows)
        print(f"{P:>6} {alg:>9} {r:>4} {len(a):>4} {a[:, 0].mean():>8.2f} {a[:, 1].mean() * 1e6:>10.0f}")


if __name__ == "__main__":
    main()
