"""Box selectors over the particle coverage function, plus exact oracles.

All three selectors share one :class:`~partimax.coverage.GainTable` and
one interpreter-level argmax over O(1) gain reads, so their running times
differ only by how many gains they evaluate. Ties always go to the lowest
flat box index.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .belief import DetectorModel, as_particles
from .coverage import GainTable
from .tiling import TileCoding


@dataclass
class Selection:
    boxes: list[int]
    utility: int
    gain_evaluations: int = 0
    sample_draws: int = 0
    elapsed: float = 0.0
    fallback_picks: int = 0

    def __len__(self):
        return len(self.boxes)


@dataclass(frozen=True)
class SelectorParams:
    k: int = 40
    r: int = 10
    seed: int = 0
    max_rejects: int | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.r < 1:
            raise ValueError("r must be at least 1")
        if self.max_rejects is not None and self.max_rejects < self.r:
            raise ValueError("max_rejects must be at least r")

    @property
    def reject_cap(self) -> int:
        return self.max_rejects if self.max_rejects is not None else 50 * self.r

    def validate(self, n: int):
        if self.k > n:
            raise ValueError(f"k={self.k} exceeds the number of boxes n={n}")


def _best(table: GainTable, candidates) -> tuple[int, int, int]:
    """argmax of the marginal gain over ``candidates``; returns (box, gain, evaluations)."""
    best, best_gain, evals = -1, -1, 0
    for i in candidates:
        g = table.marginal_gain(i)
        evals += 1
        if g > best_gain or (g == best_gain and i < best):
            best, best_gain = i, g
    return best, best_gain, evals


class _Lowest:
    """Yields the lowest-index box not yet selected."""

    def __init__(self, n, selected):
        self.n, self.selected, self.pos = n, selected, 0

    def next(self) -> int:
        while self.pos < self.n and self.pos in self.selected:
            self.pos += 1
        if self.pos >= self.n:
            raise ValueError("no unselected boxes left")
        return self.pos


def _finish(table, boxes, evals, draws, fallback, t0):
    return Selection(
        boxes=boxes,
        utility=table.m - table.uncovered,
        gain_evaluations=evals,
        sample_draws=draws,
        elapsed=time.perf_counter() - t0,
        fallback_picks=fallback,
    )


def greedy_max(belief, coder: TileCoding, k: int) -> Selection:
    t0 = time.perf_counter()
    if k > coder.n:
        raise ValueError(f"k={k} exceeds n={coder.n}")
    table = GainTable.initialize(belief, coder)
    selected: set[int] = set()
    boxes, evals, fallback = [], 0, 0
    for _ in range(k):
        # with every gain at zero the scan already yields the lowest unselected index
        best, gain, e = _best(table, (i for i in range(coder.n) if i not in selected))
        evals += e
        fallback += gain == 0
        table.apply_selection(best)
        selected.add(best)
        boxes.append(best)
    return _finish(table, boxes, evals, 0, fallback, t0)


def _uniform_subset(rng, n, r, selected) -> list[int]:
    remaining = n - len(selected)
    if r >= remaining:
        return [i for i in range(n) if i not in selected]
    out: set[int] = set()
    while len(out) < r:
        for i in rng.integers(n, size=2 * (r - len(out))).tolist():
            if i not in selected and i not in out:
                out.add(i)
                if len(out) == r:
                    break
    return list(out)


def stochastic_greedy_max(belief, coder: TileCoding, params: SelectorParams, rng=None) -> Selection:
    t0 = time.perf_counter()
    params.validate(coder.n)
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    table = GainTable.initialize(belief, coder)
    selected: set[int] = set()
    lowest = _Lowest(coder.n, selected)
    boxes, evals, fallback = [], 0, 0
    for _ in range(params.k):
        if table.uncovered == 0:
            best = lowest.next()
            fallback += 1
        else:
            best, _, e = _best(table, _uniform_subset(rng, coder.n, params.r, selected))
            evals += e
        table.apply_selection(best)
        selected.add(best)
        boxes.append(best)
    return _finish(table, boxes, evals, 0, fallback, t0)


def sample_p(table: GainTable, r: int, rng, max_rejects: int | None = None, uniform_boxes=False):
    """Draw up to ``r`` boxes with probability proportional to their current gain.

    A particle is drawn uniformly; if the selected boxes already cover it the
    draw is rejected, otherwise one of its ``t`` covering boxes is drawn
    uniformly. Sampling is with replacement. After ``max_rejects``
    consecutive rejections the (possibly short) list is returned.

    ``uniform_boxes`` replaces the proportional draw by a uniform draw over
    all boxes; it exists only as a negative control for the verification
    suite. Returns ``(boxes, draws)``.
    """
    max_rejects = 50 * r if max_rejects is None else max_rejects
    rows, covered = table._cover_rows, table._covered_list
    draw = _Draws(rng, table.m, table.t)
    out: list[int] = []
    draws = rejects = 0
    while len(out) < r and rejects < max_rejects:
        p, j = draw.next()
        draws += 1
        if covered[p]:
            rejects += 1
            continue
        rejects = 0
        out.append(int(rng.integers(table.n)) if uniform_boxes else rows[p][j])
    return out, draws


class _Draws:
    """Buffered (particle, tiling) index pairs; numpy calls are costly one at a time."""

    CHUNK = 256

    def __init__(self, rng, m, t):
        self.rng, self.m, self.t = rng, m, t
        self.ps: list[int] = []
        self.js: list[int] = []
        self.pos = 0

    def next(self) -> tuple[int, int]:
        if self.pos == len(self.ps):
            self.ps = self.rng.integers(self.m, size=self.CHUNK).tolist()
            self.js = self.rng.integers(self.t, size=self.CHUNK).tolist()
            self.pos = 0
        i = self.pos
        self.pos += 1
        return self.ps[i], self.js[i]


def partimax(belief, coder: TileCoding, params: SelectorParams, rng=None) -> Selection:
    t0 = time.perf_counter()
    params.validate(coder.n)
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    table = GainTable.initialize(belief, coder)
    selected: set[int] = set()
    lowest = _Lowest(coder.n, selected)
    boxes, evals, draws, fallback = [], 0, 0, 0
    cap = params.reject_cap
    for _ in range(params.k):
        sample: list[int] = []
        if table.uncovered:
            sample, d = sample_p(table, params.r, rng, cap)
            draws += d
        if sample:
            best, _, e = _best(table, sample)
            evals += e
        else:
            best = lowest.next()
            fallback += 1
        table.apply_selection(best)
        selected.add(best)
        boxes.append(best)
    return _finish(table, boxes, evals, draws, fallback, t0)


# -- oracles ---------------------------------------------------------------

ENUMERATION_LIMIT = 10**7


def coverage_masks(belief, coder: TileCoding) -> np.ndarray:
    """Per-box particle bitmasks, shape ``(n, words)`` of uint64."""
    xy = coder.clamp(as_particles(belief)[:, :2])
    inside = coder.contains_many(np.arange(coder.n), xy).T  # (n, m)
    m = inside.shape[1]
    words = max(1, -(-m // 64))
    padded = np.zeros((coder.n, words * 64), dtype=bool)
    padded[:, :m] = inside
    bits = np.packbits(padded.reshape(coder.n, words, 64), axis=2, bitorder="little")
    return bits.view(np.uint64).reshape(coder.n, words)


def exhaust_max(belief, coder: TileCoding, k: int, chunk: int = 200_000) -> Selection:
    """Exact optimum of the particle coverage over all ``k``-subsets."""
    t0 = time.perf_counter()
    n = coder.n
    k = min(k, n)
    total = math.comb(n, k)
    if total > ENUMERATION_LIMIT:
        raise ValueError(f"C({n}, {k}) = {total} subsets exceeds the enumeration limit")
    if k == 0:
        return Selection([], 0, elapsed=time.perf_counter() - t0)
    masks = coverage_masks(belief, coder)
    best_val, best_set = -1, None
    combos = itertools.combinations(range(n), k)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(-1, k)
        union = np.bitwise_or.reduce(masks[block], axis=1)
        vals = np.bitwise_count(union).sum(axis=1, dtype=np.int64)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_set = int(vals[j]), block[j].tolist()
    return Selection(best_set, best_val, gain_evaluations=total, elapsed=time.perf_counter() - t0)


def _prob(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _count_distribution(probs: list[Fraction]) -> list[Fraction]:
    dist = [Fraction(1)]
    for p in probs:
        nxt = [Fraction(0)] * (len(dist) + 1)
        for c, w in enumerate(dist):
            if w:
                nxt[c] += w * (1 - p)
                nxt[c + 1] += w * p
        dist = nxt
    return dist


def expected_coverage(belief, coder: TileCoding, boxes, detector: DetectorModel) -> Fraction:
    """Exact expected posterior coverage over all binary detection patterns.

    For each pattern ``z`` every particle survives rejection independently
    with probability Pr(z | particle); the surviving set, rescaled to ``m``
    particles, is scored by its coverage of ``boxes``. Empty survivor sets
    score zero. Arithmetic is exact.
    """
    boxes = list(boxes)
    if not boxes:
        return Fraction(0)
    if len(boxes) > 16:
        raise ValueError("observation space too large to enumerate")
    xy = coder.clamp(as_particles(belief)[:, :2])
    m = len(xy)
    inside = coder.contains_many(boxes, xy)
    is_cov = inside.any(axis=1)
    pd, pf = _prob(detector.p_detect), _prob(detector.p_false)
    total = Fraction(0)
    for z in itertools.product((False, True), repeat=len(boxes)):
        w = []
        for row in inside:
            like = Fraction(1)
            for hit, zb in zip(row, z):
                p = pd if hit else pf
                like *= p if zb else 1 - p
            w.append(like)
        pz = sum(w, Fraction(0)) / m
        if pz == 0:
            continue
        cov_dist = _count_distribution([wl for wl, c in zip(w, is_cov) if c])
        unc_dist = _count_distribution([wl for wl, c in zip(w, is_cov) if not c])
        frac = Fraction(0)
        for c, pc in enumerate(cov_dist):
            if c == 0 or pc == 0:
                continue
            for u, pu in enumerate(unc_dist):
                if pu:
                    frac += pc * pu * Fraction(c, c + u)
        total += pz * m * frac
    return total


SELECTORS = {
    "greedy": "GM+PCF",
    "sgm": "SGM+PCF",
    "partimax": "PartiMax",
}


def run_selector(name: str, belief, coder: TileCoding, params: SelectorParams, rng=None) -> Selection:
    if name == "greedy":
        return greedy_max(belief, coder, params.k)
    if name == "sgm":
        return stochastic_greedy_max(belief, coder, params, rng)
    if name == "partimax":
        return partimax(belief, coder, params, rng)
    raise ValueError(f"unknown selector {name!r}")
