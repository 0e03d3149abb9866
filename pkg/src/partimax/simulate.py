"""Synthetic tracking episodes and the benchmark sweep.

Each frame: predict every person's belief, pool the beliefs, select boxes
on the pooled belief, simulate the detector on the selected boxes, update
each belief against that one observation, then score a prediction per
person. A prediction is the box with the most particles of that person's
belief; it counts as correct when the true position lies inside it.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import belief as bf
from .select import SelectorParams, run_selector
from .tiling import TileCoding, TileCodingConfig, build

log = logging.getLogger(__name__)

# stable per-algorithm stream ids; keeps seeds independent of sweep order
ALGORITHM_CODES = {"none": 0, "brute": 1, "greedy": 2, "sgm": 3, "partimax": 4}
USES_R = {"sgm", "partimax"}

COLUMNS = (
    "algorithm", "k", "r", "people", "seed", "trajectory_id", "correct_predictions",
    "timesteps", "mean_selection_time_us", "gain_evaluations", "boxes_fraction",
)


@dataclass
class Trajectory:
    states: np.ndarray
    person_id: int = 0

    def __len__(self):
        return len(self.states)


@dataclass
class EpisodeResult:
    correct_predictions: float
    timesteps: int
    people: int
    per_person: list[int]
    selection_times: list[float]
    gain_evaluations: int
    boxes_fraction: float
    budget_overruns: int = 0
    depleted_updates: int = 0
    detector_time: float = 0.0

    @property
    def mean_selection_time(self) -> float:
        return float(np.mean(self.selection_times)) if self.selection_times else 0.0


def gen_trajectory(rng, T: int, motion: bf.MotionModel, coder: TileCoding, v_max=10.0,
                   start=None, velocity=None, person_id=0) -> Trajectory:
    """Constant-velocity walk with Gaussian jitter; velocity reflects off the plane edges."""
    if T < 1:
        raise ValueError("T must be at least 1")
    W, H = coder.width, coder.height
    s = np.empty((T, 4))
    pos = np.array(start, float) if start is not None else rng.uniform((0, 0), (W, H))
    vel = np.array(velocity, float) if velocity is not None else rng.uniform(-v_max, v_max, 2)
    s[0, :2], s[0, 2:] = pos, vel
    sig = np.array([motion.sigma_x, motion.sigma_y])
    for i in range(1, T):
        x, y, vx, vy = s[i - 1]
        noise = rng.normal(0, 1, 2) * sig if sig.any() else np.zeros(2)
        x, y = x + vx + noise[0], y + vy + noise[1]
        if x < 0 or x > W:
            vx = -vx
            x = -x if x < 0 else 2 * W - x
        if y < 0 or y > H:
            vy = -vy
            y = -y if y < 0 else 2 * H - y
        s[i] = min(max(x, 0.0), W), min(max(y, 0.0), H), vx, vy
    return Trajectory(s, person_id)


def predicted_box(belief, coder: TileCoding) -> int:
    ids = coder.covers_many(bf.as_particles(belief)[:, :2])
    return int(np.argmax(np.bincount(ids.ravel(), minlength=coder.n)))


def brute_force_boxes(coder: TileCoding) -> list[int]:
    return coder.tiling_boxes(0).tolist()


@dataclass(frozen=True)
class EpisodeSpec:
    algorithm: str = "partimax"
    params: SelectorParams = field(default_factory=SelectorParams)
    motion: bf.MotionModel = field(default_factory=bf.MotionModel)
    detector: bf.DetectorModel = field(default_factory=bf.DetectorModel)
    filter: bf.FilterParams = field(default_factory=bf.FilterParams)
    time_budget: float | None = None
    detector_cost_us: float = 0.0


def run_episode(trajectories: list[Trajectory], spec: EpisodeSpec, coder: TileCoding, rng) -> EpisodeResult:
    T = len(trajectories[0])
    if any(len(tr) != T for tr in trajectories):
        raise ValueError("all trajectories must have the same length")
    P = len(trajectories)
    fp = spec.filter
    beliefs = [bf.initial_belief(fp, coder, rng) for _ in range(P)]
    hits = [0] * P
    times, evals, overruns, depleted, n_boxes = [], 0, 0, 0, 0
    for step in range(T):
        truth = np.array([tr.states[step] for tr in trajectories])
        beliefs = [bf.predict(b, spec.motion, rng, coder, fp.velocity_noise) for b in beliefs]
        pooled = np.vstack([b.particles for b in beliefs])
        t0 = time.perf_counter()
        if spec.algorithm == "brute":
            boxes = brute_force_boxes(coder)
        elif spec.algorithm == "none" or spec.params.k == 0:
            boxes = []
        else:
            sel = run_selector(spec.algorithm, pooled, coder, spec.params, rng)
            boxes, evals = sel.boxes, evals + sel.gain_evaluations
        elapsed = time.perf_counter() - t0
        times.append(elapsed)
        if spec.time_budget is not None and elapsed > spec.time_budget:
            overruns += 1
        n_boxes += len(boxes)
        obs = bf.simulate_observation(truth, boxes, spec.detector, coder, rng)
        beliefs = [
            bf.update(b, obs.for_person(p), spec.detector, coder, rng, fp.inject_fraction, fp.v_max,
                      roughen_position=fp.roughen_position, roughen_velocity=fp.roughen_velocity)
            for p, b in enumerate(beliefs)
        ]
        depleted += sum(b.depleted for b in beliefs)
        for p, b in enumerate(beliefs):
            if coder.contains(predicted_box(b, coder), truth[p]):
                hits[p] += 1
    return EpisodeResult(
        correct_predictions=sum(hits) / P,
        timesteps=T,
        people=P,
        per_person=hits,
        selection_times=times,
        gain_evaluations=evals,
        boxes_fraction=n_boxes / (T * coder.n),
        budget_overruns=overruns,
        depleted_updates=depleted,
        detector_time=n_boxes * spec.detector_cost_us * 1e-6,
    )


@dataclass(frozen=True)
class BenchmarkConfig:
    algorithms: tuple[str, ...] = ("greedy", "sgm", "partimax", "brute")
    k_values: tuple[int, ...] = (40,)
    r_values: tuple[int, ...] = (10,)
    people: tuple[int, ...] = (1, 3, 5)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    trajectories: int = 1
    timesteps: int = 50
    tiling: TileCodingConfig = field(default_factory=TileCodingConfig)
    motion: bf.MotionModel = field(default_factory=bf.MotionModel)
    detector: bf.DetectorModel = field(default_factory=bf.DetectorModel)
    filter: bf.FilterParams = field(default_factory=bf.FilterParams)
    max_rejects: int | None = None
    time_budget: float | None = None
    detector_cost_us: float = 0.0

    def __post_init__(self):
        unknown = set(self.algorithms) - set(ALGORITHM_CODES)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if self.trajectories < 1 or self.timesteps < 1:
            raise ValueError("trajectories and timesteps must be positive")


@dataclass(frozen=True)
class Cell:
    algorithm: str
    k: int
    r: int
    people: int
    seed: int
    trajectory_id: int


def cells(config: BenchmarkConfig, coder: TileCoding) -> list[Cell]:
    out = []
    for alg in config.algorithms:
        ks = [len(brute_force_boxes(coder))] if alg == "brute" else ([0] if alg == "none" else config.k_values)
        rs = config.r_values if alg in USES_R else [0]
        for k, r, P, seed, tid in itertools.product(ks, rs, config.people, config.seeds, range(config.trajectories)):
            out.append(Cell(alg, k, r, P, seed, tid))
    return out


def episode_trajectories(config: BenchmarkConfig, coder: TileCoding, cell: Cell) -> list[Trajectory]:
    # shared by all algorithms for the same (seed, people, trajectory) so comparisons are paired
    rng = np.random.default_rng([cell.seed, cell.people, cell.trajectory_id])
    return [
        gen_trajectory(rng, config.timesteps, config.motion, coder, config.filter.v_max, person_id=p)
        for p in range(cell.people)
    ]


def run_cell(config: BenchmarkConfig, cell: Cell, coder: TileCoding | None = None) -> EpisodeResult:
    coder = coder or build(config.tiling)
    trajectories = episode_trajectories(config, coder, cell)
    spec = EpisodeSpec(
        algorithm=cell.algorithm,
        params=SelectorParams(k=cell.k, r=max(cell.r, 1), seed=cell.seed, max_rejects=config.max_rejects),
        motion=config.motion,
        detector=config.detector,
        filter=config.filter,
        time_budget=config.time_budget,
        detector_cost_us=config.detector_cost_us,
    )
    rng = np.random.default_rng(
        [cell.seed, cell.people, cell.trajectory_id, ALGORITHM_CODES[cell.algorithm], cell.k, cell.r]
    )
    return run_episode(trajectories, spec, coder, rng)


def result_row(cell: Cell, res: EpisodeResult, timing=True) -> dict:
    return {
        "algorithm": cell.algorithm,
        "k": cell.k,
        "r": cell.r,
        "people": cell.people,
        "seed": cell.seed,
        "trajectory_id": cell.trajectory_id,
        "correct_predictions": f"{res.correct_predictions:.4f}",
        "timesteps": res.timesteps,
        "mean_selection_time_us": f"{res.mean_selection_time * 1e6:.1f}" if timing else "0.0",
        "gain_evaluations": res.gain_evaluations,
        "boxes_fraction": f"{res.boxes_fraction:.6f}",
    }


def _run_cell_safe(args):
    config, cell = args
    try:
        return cell, run_cell(config, cell), None
    except Exception as exc:  # isolate per-cell failures
        log.exception("cell %s failed", cell)
        return cell, None, f"{type(exc).__name__}: {exc}"


def run_benchmark(config: BenchmarkConfig, jobs: int = 1):
    """Yield ``(cell, result, error)`` for every cell of the sweep, in sweep order."""
    coder = build(config.tiling)
    todo = [(config, c) for c in cells(config, coder)]
    if jobs <= 1:
        yield from map(_run_cell_safe, todo)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_run_cell_safe, todo)
