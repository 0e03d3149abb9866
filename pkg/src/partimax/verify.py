"""Bound and oracle verification suites at small, exactly solvable scales.

Each suite draws its instances from integer seeds so that a failure can
be replayed; the offending seed is part of the result. Suite sizes live in
:class:`VerifyConfig` so tests can run reduced versions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .belief import PERFECT_DETECTOR
from .coverage import GainTable, pcf
from .select import (
    SelectorParams,
    exhaust_max,
    expected_coverage,
    greedy_max,
    partimax,
    sample_p,
    stochastic_greedy_max,
)
from .tiling import TileCoding, TileCodingConfig, build

# 6 overlapping tilings, 20 boxes in total
SMALL_TILING = TileCodingConfig(image_width=100, image_height=30, box_width=60, box_height=60,
                                offset_x=30, offset_y=20)

ONE_SIDED_95 = 1.6448536269514722


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 0
    nemhauser_instances: int = 1000
    stochastic_families: int = 5
    stochastic_seeds: int = 500
    stochastic_eps: float = 0.2
    coverage_instances: int = 100
    sampled_argmax_families: int = 20
    sampled_argmax_reps: int = 10_000
    partimax_families: int = 5
    partimax_seeds: int = 500
    partimax_m: int = 30
    partimax_k: int = 3
    proportionality_draws: int = 100_000
    proportionality_tv: float = 0.02


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seed: int | None = None
    elapsed: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" (seed {self.seed})" if self.seed is not None and not self.passed else ""
        return f"{status} {self.name}: {self.detail}{extra} [{self.elapsed:.1f}s]"


def random_belief(rng, m: int, coder: TileCoding) -> np.ndarray:
    """Half uniform, half clustered particles with zero velocity."""
    W, H = coder.width, coder.height
    out = np.zeros((m, 4))
    centers = rng.uniform((0, 0), (W, H), size=(rng.integers(1, 4), 2))
    spread = min(W, H) / 6
    clustered = rng.random(m) < 0.5
    pick = centers[rng.integers(len(centers), size=m)]
    out[:, :2] = np.where(
        clustered[:, None],
        pick + rng.normal(0, spread, (m, 2)),
        rng.uniform((0, 0), (W, H), size=(m, 2)),
    )
    out[:, :2] = coder.clamp(out[:, :2])
    return out


def _instance_rng(cfg: VerifyConfig, suite: int, i: int):
    return np.random.default_rng([cfg.seed, suite, i])


def check_nemhauser(cfg: VerifyConfig = VerifyConfig()) -> SuiteResult:
    """Greedy reaches (1 - 1/e) of the optimum on every small instance."""
    coder = build(SMALL_TILING)
    ratio = 1 - 1 / math.e
    worst, worst_seed = math.inf, None
    for i in range(cfg.nemhauser_instances):
        rng = _instance_rng(cfg, 1, i)
        belief = random_belief(rng, int(rng.integers(1, 51)), coder)
        k = int(rng.integers(1, 5))
        opt = exhaust_max(belief, coder, k).utility
        got = greedy_max(belief, coder, k).utility
        slack = got - ratio * opt
        if slack < worst:
            worst, worst_seed = slack, i
        if slack < -1e-9:
            return SuiteResult("nemhauser", False, f"greedy {got} < {ratio:.4f} * OPT {opt}", i)
    return SuiteResult("nemhauser", True, f"{cfg.nemhauser_instances} instances, min slack {worst:.3f} "
                       f"(instance {worst_seed})")


def stochastic_sample_size(n: int, k: int, eps: float) -> int:
    return math.ceil(n / k * math.log(1 / eps))


def check_stochastic(cfg: VerifyConfig = VerifyConfig()) -> SuiteResult:
    """Seed-averaged stochastic greedy reaches (1 - 1/e - eps) of the optimum."""
    coder = build(SMALL_TILING)
    k = 4
    r = stochastic_sample_size(coder.n, k, cfg.stochastic_eps)
    factor = 1 - 1 / math.e - cfg.stochastic_eps
    margins = []
    for fam in range(cfg.stochastic_families):
        rng = _instance_rng(cfg, 2, fam)
        belief = random_belief(rng, 50, coder)
        opt = exhaust_max(belief, coder, k).utility
        vals = np.array([
            stochastic_greedy_max(belief, coder, SelectorParams(k=k, r=r, seed=s)).utility
            for s in range(cfg.stochastic_seeds)
        ], dtype=float)
        se = vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
        margin = vals.mean() + ONE_SIDED_95 * se - factor * opt
        margins.append(margin)
        if margin < 0:
            return SuiteResult("stochastic", False,
                               f"mean {vals.mean():.3f} (se {se:.3f}) < {factor:.4f} * OPT {opt}", fam)
    return SuiteResult("stochastic", True, f"r={r}, {cfg.stochastic_families} families x "
                       f"{cfg.stochastic_seeds} seeds, min margin {min(margins):.3f}")


def check_expected_coverage(cfg: VerifyConfig = VerifyConfig()) -> SuiteResult:
    """Under a noiseless detector, expected coverage equals particle coverage exactly."""
    coder = build(SMALL_TILING)
    for i in range(cfg.coverage_instances):
        rng = _instance_rng(cfg, 3, i)
        belief = random_belief(rng, int(rng.integers(1, 21)), coder)
        boxes = rng.choice(coder.n, size=int(rng.integers(1, 4)), replace=False).tolist()
        ec, pc = expected_coverage(belief, coder, boxes, PERFECT_DETECTOR), pcf(belief, boxes, coder)
        if ec != pc:
            return SuiteResult("expected-coverage", False, f"expected {ec} != pcf {pc}", i)
    return SuiteResult("expected-coverage", True, f"{cfg.coverage_instances} instances, exact equality")


def weight_family(rng, shape: int) -> np.ndarray:
    """Positive integer set values of assorted shapes for the sampled-argmax suite."""
    v = int(rng.integers(3, 40))
    kind = shape % 5
    if kind == 0:
        w = rng.integers(1, 100, v)
    elif kind == 1:
        w = np.full(v, 7)
    elif kind == 2:
        w = np.maximum(1, (100 * 0.8 ** np.arange(v))).astype(int)
    elif kind == 3:
        w = np.r_[rng.integers(50, 100, 2), rng.integers(1, 5, v - 2)]
    else:
        w = rng.integers(1, 4, v) * 10
    return np.asarray(w, dtype=float)


def sampled_argmax_gap(weights, r: int, reps: int, rng) -> tuple[float, float]:
    """Mean and standard error of F* - max over ``r`` proportional draws."""
    w = np.asarray(weights, dtype=float)
    draws = rng.choice(len(w), size=(reps, r), p=w / w.sum())
    gaps = w.max() - w[draws].max(axis=1)
    return float(gaps.mean()), float(gaps.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0


def check_sampled_argmax(cfg: VerifyConfig = VerifyConfig()) -> SuiteResult:
    """Best of r proportional draws misses the optimum by at most (r/(r+1))^r of it."""
    margins = []
    for fam in range(cfg.sampled_argmax_families):
        rng = _instance_rng(cfg, 4, fam)
        w = weight_family(rng, fam)
        best = w.max()
        r = max(1, math.ceil(w.sum() / best - 1))
        gap, se = sampled_argmax_gap(w, r, cfg.sampled_argmax_reps, rng)
        bound = (r / (r + 1)) ** r * best
        margins.append(bound + 3 * se - gap)
        if gap > bound + 3 * se:
            return SuiteResult("sampled-argmax", False, f"gap {gap:.3f} > bound {bound:.3f} + 3se", fam)
    return SuiteResult("sampled-argmax", True, f"{cfg.sampled_argmax_families} families, "
                       f"min margin {min(margins):.3f}")


def partimax_sample_size(t: int, m: int) -> int:
    return math.ceil(t * m / 2 - 1)


def check_partimax(cfg: VerifyConfig = VerifyConfig()) -> SuiteResult:
    """Seed-averaged PartiMax reaches (1 - 1/e - (r/(r+1))^r) of the optimum."""
    coder = build(SMALL_TILING)
    m, k = cfg.partimax_m, cfg.partimax_k
    r = partimax_sample_size(coder.t, m)
    factor = 1 - 1 / math.e - (r / (r + 1)) ** r
    margins = []
    for fam in range(cfg.partimax_families):
        rng = _instance_rng(cfg, 5, fam)
        belief = random_belief(rng, m, coder)
        opt = exhaust_max(belief, coder, k).utility
        vals = np.array([
            partimax(belief, coder, SelectorParams(k=k, r=r, seed=s)).utility
            for s in range(cfg.partimax_seeds)
        ], dtype=float)
        se = vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
        margin = vals.mean() + 3 * se - factor * opt
        margins.append(margin)
        if margin < 0:
            return SuiteResult("partimax", False,
                               f"mean {vals.mean():.3f} < {factor:.4f} * OPT {opt} - 3se", fam)
    return SuiteResult("partimax", True, f"r={r}, factor {factor:.4f}, min margin {min(margins):.3f}")


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


def sampler_distance(table: GainTable, draws: int, rng, uniform_boxes=False) -> float:
    """TV distance between empirical sample_p frequencies and delta / (t m')."""
    # one long call: with replacement, every accepted draw is an independent single draw
    boxes, _ = sample_p(table, draws, rng, max_rejects=100 * draws, uniform_boxes=uniform_boxes)
    emp = np.bincount(boxes, minlength=table.n) / max(len(boxes), 1)
    ref = np.array(table.delta, dtype=float) / (table.t * table.uncovered)
    return total_variation(emp, ref)


def check_proportionality(cfg: VerifyConfig = VerifyConfig(), uniform_boxes=False) -> SuiteResult:
    """sample_p draws boxes in proportion to their current marginal gain."""
    coder = build(SMALL_TILING)
    rng = _instance_rng(cfg, 6, 0)
    belief = random_belief(rng, 20, coder)
    table = GainTable.initialize(belief, coder)
    dists = [sampler_distance(table, cfg.proportionality_draws, rng, uniform_boxes)]
    order = np.argsort(table.delta, kind="stable")[::-1]
    for box in order[:2]:
        table.apply_selection(int(box))
        if table.uncovered == 0:
            break
        dists.append(sampler_distance(table, cfg.proportionality_draws, rng, uniform_boxes))
    worst = max(dists)
    detail = "TV " + ", ".join(f"{d:.4f}" for d in dists) + f" (limit {cfg.proportionality_tv})"
    return SuiteResult("proportionality", worst <= cfg.proportionality_tv, detail, cfg.seed)


SUITES = {
    "nemhauser": check_nemhauser,
    "stochastic": check_stochastic,
    "expected-coverage": check_expected_coverage,
    "sampled-argmax": check_sampled_argmax,
    "partimax": check_partimax,
    "proportionality": check_proportionality,
}


def run_suites(names=None, cfg: VerifyConfig = VerifyConfig(), uniform_boxes=False) -> list[SuiteResult]:
    names = list(SUITES) if names is None else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites: {unknown}; choose from {sorted(SUITES)}")
    out = []
    for name in names:
        t0 = time.perf_counter()
        if name == "proportionality":
            res = check_proportionality(cfg, uniform_boxes=uniform_boxes)
        else:
            res = SUITES[name](cfg)
        res.elapsed = time.perf_counter() - t0
        out.append(res)
    return out
