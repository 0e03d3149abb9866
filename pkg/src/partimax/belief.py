"""Unweighted particle filter over person states ``(x, y, vx, vy)``.

Beliefs are ``(m, 4)`` float arrays wrapped in :class:`ParticleBelief`.
The detector answers detect / no-detect for every selected box and
attaches a noisy location to each detection. Reports carry the index of
the person that produced them (``-1`` for false positives), standing in
for the upstream track association that keeps one filter per person.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tiling import TileCoding

X, Y, VX, VY = range(4)


@dataclass(frozen=True)
class MotionModel:
    sigma_x: float = 4.0
    sigma_y: float = 4.0

    def __post_init__(self):
        if self.sigma_x < 0 or self.sigma_y < 0:
            raise ValueError("motion noise must be non-negative")


@dataclass(frozen=True)
class DetectorModel:
    p_detect: float = 0.9
    p_false: float = 0.01
    loc_noise: float = 15.0

    def __post_init__(self):
        if not 0 <= self.p_false < self.p_detect <= 1:
            raise ValueError("need 0 <= p_false < p_detect <= 1")
        if self.loc_noise < 0:
            raise ValueError("loc_noise must be non-negative")

    @property
    def deterministic(self) -> bool:
        return self.p_detect == 1 and self.p_false == 0


PERFECT_DETECTOR = DetectorModel(p_detect=1.0, p_false=0.0, loc_noise=0.0)


@dataclass(frozen=True)
class FilterParams:
    m: int = 250
    inject_fraction: float = 0.05
    v_max: float = 10.0
    # tracking-side regularization; zero gives the plain rejection filter
    velocity_noise: float = 1.0
    roughen_position: float = 60.0
    roughen_velocity: float = 1.0

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("m must be positive")
        if min(self.velocity_noise, self.roughen_position, self.roughen_velocity) < 0:
            raise ValueError("noise and roughening scales must be non-negative")
        if not 0 <= self.inject_fraction <= 1:
            raise ValueError("inject_fraction must lie in [0, 1]")
        if self.v_max < 0:
            raise ValueError("v_max must be non-negative")


@dataclass
class ParticleBelief:
    particles: np.ndarray
    n_injected: int = 0
    depleted: bool = False

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=float).reshape(-1, 4)
        if len(self.particles) == 0:
            raise ValueError("a belief needs at least one particle")

    def __len__(self):
        return len(self.particles)

    @property
    def xy(self) -> np.ndarray:
        return self.particles[:, :2]


@dataclass
class Observation:
    """Detector output on the selected boxes; unselected boxes are implicit nulls.

    ``reports`` rows are ``(box position in boxes, person, x, y)``.
    """

    boxes: np.ndarray
    reports: np.ndarray = field(default=None)

    def __post_init__(self):
        self.boxes = np.asarray(self.boxes, dtype=np.int64).reshape(-1)
        if self.reports is None:
            self.reports = np.empty((0, 4))
        self.reports = np.asarray(self.reports, dtype=float).reshape(-1, 4)

    @classmethod
    def from_pattern(cls, boxes, detected, locations=None) -> "Observation":
        detected = np.asarray(detected, dtype=bool)
        idx = np.flatnonzero(detected)
        locs = np.full((len(detected), 2), np.nan) if locations is None else np.asarray(locations, float)
        reports = np.column_stack([idx, np.full(len(idx), -1), locs[idx]]) if len(idx) else None
        return cls(boxes, reports)

    def __len__(self):
        return len(self.boxes)

    @property
    def detected(self) -> np.ndarray:
        out = np.zeros(len(self.boxes), dtype=bool)
        out[self.reports[:, 0].astype(np.int64)] = True
        return out

    @property
    def locations(self) -> np.ndarray:
        out = np.full((len(self.boxes), 2), np.nan)
        # first report per box wins
        for row in self.reports[::-1]:
            out[int(row[0])] = row[2:]
        return out

    def for_person(self, person: int) -> "Observation":
        """The view one person's filter sees: its own detections plus false positives."""
        who = self.reports[:, 1]
        return Observation(self.boxes, self.reports[(who == person) | (who < 0)])

    def get(self, box: int):
        """``None`` for unselected boxes, else ``False`` or the reported ``(x, y)``."""
        hit = np.flatnonzero(self.boxes == box)
        if len(hit) == 0:
            return None
        i = hit[0]
        return tuple(self.locations[i]) if self.detected[i] else False


def as_particles(belief) -> np.ndarray:
    if isinstance(belief, ParticleBelief):
        return belief.particles
    return np.asarray(belief, dtype=float).reshape(-1, 4)


def uniform_particles(m, coder: TileCoding, rng, v_max=10.0) -> np.ndarray:
    out = np.empty((m, 4))
    out[:, X] = rng.uniform(0, coder.width, m)
    out[:, Y] = rng.uniform(0, coder.height, m)
    out[:, 2:] = rng.uniform(-v_max, v_max, (m, 2))
    return out


def initial_belief(params: FilterParams, coder: TileCoding, rng) -> ParticleBelief:
    return ParticleBelief(uniform_particles(params.m, coder, rng, params.v_max))


def predict(belief, model: MotionModel, rng, coder: TileCoding | None = None,
            velocity_noise: float = 0.0) -> ParticleBelief:
    """Constant-velocity step with Gaussian position noise, clamped to the plane.

    ``velocity_noise`` > 0 adds a Gaussian random walk to the velocities
    before the position step.
    """
    p = as_particles(belief).copy()
    m = len(p)
    if velocity_noise > 0:
        p[:, 2:] += rng.normal(0, velocity_noise, (m, 2))
    p[:, X] += p[:, VX] + (rng.normal(0, model.sigma_x, m) if model.sigma_x > 0 else 0)
    p[:, Y] += p[:, VY] + (rng.normal(0, model.sigma_y, m) if model.sigma_y > 0 else 0)
    if coder is not None:
        p[:, :2] = coder.clamp(p[:, :2])
    return ParticleBelief(p)


def simulate_observation(true_states, boxes, detector: DetectorModel, coder: TileCoding, rng) -> Observation:
    """Sample the detector on ``boxes`` given the true states of everyone in view.

    Each person inside a box is detected with ``p_detect`` and reported at
    their position plus Gaussian noise. A box holding nobody fires a false
    positive with ``p_false``, reported uniformly inside the box.
    """
    boxes = np.asarray(boxes, dtype=np.int64).reshape(-1)
    truth = np.atleast_2d(np.asarray(true_states, dtype=float))[:, :2]
    inside = coder.contains_many(boxes, truth)  # (people, k)
    hit = inside & (rng.random(inside.shape) < detector.p_detect)
    empty = ~inside.any(axis=0)
    false_pos = empty & (rng.random(len(boxes)) < detector.p_false)
    reports = []
    for person, a in zip(*np.nonzero(hit)):
        noise = rng.normal(0, detector.loc_noise, 2) if detector.loc_noise > 0 else np.zeros(2)
        reports.append((a, person, *(truth[person] + noise)))
    for a in np.flatnonzero(false_pos):
        x0, y0, x1, y1 = coder.rect(boxes[a])
        lo = (max(x0, 0), max(y0, 0))
        hi = (min(x1, coder.width), min(y1, coder.height))
        reports.append((a, -1, *rng.uniform(lo, hi)))
    reports.sort(key=lambda r: (r[0], r[1]))
    return Observation(boxes, np.array(reports) if reports else None)


# -- likelihood of the binary detection pattern -------------------------------


def detection_probs(xy, boxes, detector: DetectorModel, coder: TileCoding) -> np.ndarray:
    """Per-(particle, box) probability of a detection, shape ``(m, |A|)``."""
    inside = coder.contains_many(boxes, xy)
    return np.where(inside, detector.p_detect, detector.p_false)


def pattern_likelihood(xy, obs: Observation, detector: DetectorModel, coder: TileCoding) -> np.ndarray:
    """Pr(binary pattern of ``obs`` | particle), by direct containment."""
    if len(obs) == 0:
        return np.ones(len(xy))
    p = detection_probs(xy, obs.boxes, detector, coder)
    return np.where(obs.detected, p, 1 - p).prod(axis=1)


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


class LikelihoodMap:
    """Log-likelihood of an observation pattern on the grid of box edges.

    Box edges fall on multiples of the tiling offsets, so every cell of
    that grid lies in a fixed set of selected boxes and has one exact
    pattern likelihood.
    """

    def __init__(self, obs: Observation, detector: DetectorModel, coder: TileCoding):
        c = coder.config
        self.coder = coder
        self.gx, self.gy = c.offset_x, c.offset_y
        self.ncx = coder.width // self.gx + 1
        self.ncy = coder.height // self.gy + 1
        z = obs.detected
        pd, pf = detector.p_detect, detector.p_false
        q = np.where(z, pf, 1 - pf)  # factor for a point outside the box
        f = np.where(z, pd, 1 - pd)  # factor for a point inside it
        logq, logf = _log(q), _log(f)
        base = logq[q > 0].sum()
        base_zeros = int((q == 0).sum())
        add = np.where(f > 0, logf, 0.0) - np.where(q > 0, logq, 0.0)
        zeros = (f == 0).astype(float) - (q == 0).astype(float)
        rects = coder.rects[obs.boxes] if len(obs) else np.empty((0, 4), dtype=np.int64)
        self.log_like = base + self._paint(rects, add)
        zero_count = base_zeros + np.rint(self._paint(rects, zeros))
        self.log_like[zero_count > 0] = -np.inf
        self.detect_cover = np.rint(self._paint(rects[z], np.ones(int(z.sum())))) if len(obs) else None
        xs = np.minimum((np.arange(self.ncx) + 1) * self.gx, coder.width) - np.arange(self.ncx) * self.gx
        ys = np.minimum((np.arange(self.ncy) + 1) * self.gy, coder.height) - np.arange(self.ncy) * self.gy
        self.area = np.outer(np.clip(ys, 0, None), np.clip(xs, 0, None)).astype(float)

    def _paint(self, rects, values) -> np.ndarray:
        # 2-d difference array: add a constant over every box's cells in O(1) each
        acc = np.zeros((self.ncy + 1, self.ncx + 1))
        if len(rects):
            c0 = np.clip(rects[:, 0] // self.gx, 0, self.ncx)
            c1 = np.clip(rects[:, 2] // self.gx, 0, self.ncx)
            r0 = np.clip(rects[:, 1] // self.gy, 0, self.ncy)
            r1 = np.clip(rects[:, 3] // self.gy, 0, self.ncy)
            np.add.at(acc, (r0, c0), values)
            np.add.at(acc, (r0, c1), -values)
            np.add.at(acc, (r1, c0), -values)
            np.add.at(acc, (r1, c1), values)
        return acc.cumsum(0).cumsum(1)[: self.ncy, : self.ncx]

    def cell_slice(self, box):
        x0, y0, x1, y1 = self.coder.rect(box)
        c0, c1 = (min(max(v // self.gx, 0), self.ncx) for v in (x0, x1))
        r0, r1 = (min(max(v // self.gy, 0), self.ncy) for v in (y0, y1))
        return slice(r0, r1), slice(c0, c1)

    def cells(self, xy):
        xy = self.coder.clamp(xy)
        col = np.minimum((xy[:, 0] // self.gx).astype(np.int64), self.ncx - 1)
        row = np.minimum((xy[:, 1] // self.gy).astype(np.int64), self.ncy - 1)
        return row, col

    def particle_log_like(self, xy) -> np.ndarray:
        return self.log_like[self.cells(xy)]

    def log_uniform_evidence(self) -> float:
        """log E[likelihood] for a position uniform over the plane."""
        with np.errstate(divide="ignore"):
            terms = _log(self.area) + self.log_like
        top = terms.max()
        if not np.isfinite(top):
            return -math.inf
        plane = self.coder.width * self.coder.height
        return float(top + np.log(np.exp(terms - top).sum()) - np.log(plane))


def _log_mean_exp(v) -> float:
    top = np.max(v)
    if not np.isfinite(top):
        return -math.inf
    return float(top + np.log(np.mean(np.exp(v - top))))


def survivors(xy, obs: Observation, detector: DetectorModel, coder: TileCoding, rng,
              acceptance="scaled", lmap: LikelihoodMap | None = None) -> np.ndarray:
    """Indices of particles kept by Monte Carlo rejection on the detect pattern.

    ``"match"`` simulates each particle's own binary observation and keeps it
    when the pattern equals ``obs``; a particle survives with probability
    equal to its pattern likelihood. ``"scaled"`` divides every survival
    probability by the largest one, which leaves the survivor distribution
    unchanged but does not starve the filter when many boxes are observed.
    """
    if len(obs) == 0:
        return np.arange(len(xy))
    if acceptance == "match":
        p = detection_probs(xy, obs.boxes, detector, coder)
        sim = rng.random(p.shape) < p
        return np.flatnonzero((sim == obs.detected).all(axis=1))
    if acceptance != "scaled":
        raise ValueError(f"unknown acceptance rule {acceptance!r}")
    lmap = lmap or LikelihoodMap(obs, detector, coder)
    ll = lmap.particle_log_like(xy)
    top = ll.max()
    if not np.isfinite(top):
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(_log(rng.random(len(xy))) < ll - top)


def _inject(count, obs: Observation, lmap: LikelihoodMap, detector, coder, rng, v_max) -> np.ndarray:
    """Draw ``count`` particles from the posterior of a uniformly placed person.

    Cells inside a detecting box hand their mass to that box's report and
    the particle is placed around the reported location; other cells are
    sampled uniformly.
    """
    out = uniform_particles(count, coder, rng, v_max)
    if count == 0 or len(obs) == 0:
        return out
    with np.errstate(divide="ignore"):
        w = _log(lmap.area) + lmap.log_like
    top = w.max()
    if not np.isfinite(top):
        return out
    w = np.exp(w - top)
    det = np.flatnonzero(obs.detected)
    ndet = lmap.detect_cover
    free = (ndet == 0).ravel()
    cell_w = np.where(free, w.ravel(), 0.0)
    shared = np.where(ndet > 0, w / np.maximum(ndet, 1), 0.0)
    box_w = np.array([shared[lmap.cell_slice(obs.boxes[a])].sum() for a in det])
    weights = np.concatenate([cell_w, box_w])
    weights = weights / weights.sum()
    slot = rng.choice(len(weights), size=count, p=weights)
    ncell = len(cell_w)
    in_cell = slot < ncell
    rows, cols = np.divmod(slot[in_cell], lmap.ncx)
    x0, y0 = cols * lmap.gx, rows * lmap.gy
    out[in_cell, X] = x0 + rng.random(len(x0)) * np.minimum(lmap.gx, coder.width - x0)
    out[in_cell, Y] = y0 + rng.random(len(y0)) * np.minimum(lmap.gy, coder.height - y0)
    if (~in_cell).any():
        which = det[slot[~in_cell] - ncell]
        locs = obs.locations[which]
        jitter = rng.normal(0, detector.loc_noise, locs.shape) if detector.loc_noise > 0 else 0
        locs = locs + jitter
        # a detection without a location spreads over its box
        bare = np.isnan(locs).any(axis=1)
        if bare.any():
            r = coder.rects[obs.boxes[which[bare]]]
            lo = np.maximum(r[:, :2], 0)
            hi = np.minimum(r[:, 2:], (coder.width, coder.height))
            locs[bare] = lo + rng.random((int(bare.sum()), 2)) * (hi - lo)
        out[~in_cell, :2] = locs
    out[:, :2] = coder.clamp(out[:, :2])
    return out


def lost_share(log_belief_evidence: float, log_uniform_evidence: float, prior: float) -> float:
    """Posterior probability that the person is not where the belief says."""
    if prior <= 0:
        return 0.0
    a = math.log(prior) + log_uniform_evidence
    b = math.log1p(-prior) + log_belief_evidence if prior < 1 else -math.inf
    if a == -math.inf and b == -math.inf:
        return 1.0
    top = max(a, b)
    return math.exp(a - top) / (math.exp(a - top) + math.exp(b - top))


def roughen(particles, rng, coder: TileCoding, position_cap: float, velocity_cap: float) -> np.ndarray:
    """Gaussian kernel jitter on resampled particles.

    The bandwidth per dimension is ``m**(-1/6)`` times the spread of the
    set, capped at ``position_cap`` (pixels) and ``velocity_cap``
    (pixels per frame). Duplicates produced by resampling drift apart, which
    keeps velocity hypotheses alive after the belief has locked on.
    """
    p = np.asarray(particles, dtype=float)
    m = len(p)
    if m < 2 or (position_cap <= 0 and velocity_cap <= 0):
        return p
    h = m ** (-1 / 6)
    caps = np.array([position_cap, position_cap, velocity_cap, velocity_cap])
    bw = np.minimum(h * p.std(axis=0), np.maximum(caps, 0))
    out = p + rng.normal(0, 1, p.shape) * bw
    out[:, :2] = coder.clamp(out[:, :2])
    return out


def _resample(n, size, rng):
    return rng.integers(n, size=size)


def update(belief, obs: Observation, detector: DetectorModel, coder: TileCoding, rng,
           inject_fraction=0.05, v_max=10.0, acceptance="scaled",
           roughen_position=0.0, roughen_velocity=0.0) -> ParticleBelief:
    """Rejection update, resampling and particle injection; keeps exactly ``m`` particles.

    At least ``inject_fraction * m`` particles are injected. When the
    observation is better explained by a uniformly placed person than by
    the belief, the injected share grows to that posterior probability.
    If nothing survives rejection the whole belief is injected and
    ``depleted`` is set. Nonzero ``roughen_*`` caps jitter the resampled
    survivors (see :func:`roughen`); injected particles are left alone.
    """
    p = as_particles(belief)
    m = len(p)
    lmap = LikelihoodMap(obs, detector, coder)
    keep = survivors(p[:, :2], obs, detector, coder, rng, acceptance, lmap)
    if len(keep) == 0:
        return ParticleBelief(_inject(m, obs, lmap, detector, coder, rng, v_max), n_injected=m, depleted=True)
    n_inject = math.ceil(inject_fraction * m - 1e-9) if inject_fraction > 0 else 0
    if len(obs) and inject_fraction > 0:
        share = lost_share(
            _log_mean_exp(lmap.particle_log_like(p[:, :2])), lmap.log_uniform_evidence(),
            inject_fraction,
        )
        n_inject = max(n_inject, round(share * m))
    n_inject = min(n_inject, m)
    kept = p[keep[_resample(len(keep), m - n_inject, rng)]]
    kept = roughen(kept, rng, coder, roughen_position, roughen_velocity)
    fresh = _inject(n_inject, obs, lmap, detector, coder, rng, v_max)
    return ParticleBelief(np.vstack([kept, fresh]), n_injected=n_inject)
