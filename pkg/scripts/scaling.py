"""Median PartiMax selection time as the plane grows at fixed m, t, k and r.

    python3 scripts/scaling.py
"""

import argparse
import statistics
import time

import numpy as np

from partimax.select import SelectorParams, greedy_max, partimax
from partimax.tiling import TileCodingConfig, build


def beliefs(rng, count, m, width, height):
    out = []
    for _ in range(count):
        centers = rng.uniform((0, 0), (width, height), (5, 2))
        xy = rng.normal(centers[rng.integers(5, size=m)], 150)
        b = np.zeros((m, 4))
        b[:, :2] = np.clip(xy, 0, (width, height))
        out.append(b)
    return out


def median_time(fn, items):
    times = []
    for b in items:
        t0 = time.perf_counter()
        fn(b)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scales", type=float, nargs="+", default=[1, 1.5, 2, 3])
    ap.add_argument("--m", type=int, default=1250)
    ap.add_argument("--k", type=int, default=40)
    ap.add_argument("--r", type=int, default=10)
    ap.add_argument("--reps", type=int, default=40)
    ap.add_argument("--greedy", action="store_true", help="also time greedy maximization")
    args = ap.parse_args(argv)

    base = TileCodingConfig()
    # the particles always live in the base plane, so only n changes
    items = beliefs(np.random.default_rng(0), args.reps, args.m, base.image_width, base.image_height)
    params = SelectorParams(k=args.k, r=args.r, seed=0)
    print(f"{'scale':>5} {'n':>7} {'partimax_us':>12}" + (f" {'greedy_us':>10}" if args.greedy else ""))
    for s in args.scales:
        w, h = int(base.image_width * s) // 60 * 60, int(base.image_height * s) // 30 * 30
        coder = build(TileCodingConfig(image_width=w, image_height=h))
        median_time(lambda b: partimax(b, coder, params), items[:3])
        line = f"{s:>5} {coder.n:>7} {median_time(lambda b: partimax(b, coder, params), items) * 1e6:>12.0f}"
        if args.greedy:
            line += f" {median_time(lambda b: greedy_max(b, coder, args.k), items[:5]) * 1e6:>10.0f}"
        print(line)


if __name__ == "__main__":
    main()
