"""Particle coverage and the incrementally maintained gain table."""

from __future__ import annotations

import numpy as np

from .belief import as_particles
from .tiling import TileCoding


def pcf(belief, boxes, coder: TileCoding) -> int:
    """Number of particles lying in at least one of ``boxes``.

    Computed by a direct containment scan, independently of the tile-coding
    index arithmetic used by :class:`GainTable`.
    """
    boxes = list(boxes)
    if not boxes:
        return 0
    xy = coder.clamp(as_particles(belief)[:, :2])
    return int(coder.contains_many(boxes, xy).any(axis=1).sum())


class GainTable:
    """Per-box marginal gains of the particle coverage function.

    ``delta[i]`` is the number of particles covered by box ``i`` that the
    applied boxes do not cover yet; ``phi(i)`` is that set of particle
    indices. Particle membership is stored once, sorted by box, so the
    members of a box are a slice and removals reduce to the ``covered``
    flags. Hot state lives in plain lists: selectors read it one element
    at a time.
    """

    def __init__(self, cover_ids: np.ndarray, n: int):
        self.cover_ids = cover_ids
        self.m, self.t = cover_ids.shape
        self.n = n
        flat = cover_ids.ravel()
        self.delta: list[int] = np.bincount(flat, minlength=n).tolist()
        self._order = np.argsort(flat, kind="stable")
        self._sorted = flat[self._order]
        self._cover_rows: list[list[int]] = cover_ids.tolist()
        self._covered_list = [False] * self.m
        self.uncovered = self.m
        self.applied: list[int] = []
        self._applied_set: set[int] = set()

    @classmethod
    def initialize(cls, belief, coder: TileCoding) -> "GainTable":
        return cls(coder.covers_many(as_particles(belief)[:, :2]), coder.n)

    @property
    def covered(self) -> np.ndarray:
        return np.array(self._covered_list, dtype=bool)

    def marginal_gain(self, i: int) -> int:
        return self.delta[i]

    def members(self, i: int) -> np.ndarray:
        """Every particle inside box ``i``, covered or not."""
        lo, hi = np.searchsorted(self._sorted, [i, i + 1])
        return self._order[lo:hi] // self.t

    def phi(self, i: int) -> set[int]:
        covered = self._covered_list
        return {p for p in self.members(i).tolist() if not covered[p]}

    def apply_selection(self, i: int) -> int:
        """Mark box ``i`` as selected; returns how many particles it newly covered."""
        i = int(i)
        covered, rows, delta = self._covered_list, self._cover_rows, self.delta
        fresh = 0
        for p in self.members(i).tolist():
            if covered[p]:
                continue
            covered[p] = True
            fresh += 1
            for b in rows[p]:
                delta[b] -= 1
        self.uncovered -= fresh
        if i not in self._applied_set:
            self._applied_set.add(i)
            self.applied.append(i)
        return fresh

    def is_covered(self, p: int) -> bool:
        return self._covered_list[p]


def initialize(belief, coder: TileCoding) -> GainTable:
    return GainTable.initialize(belief, coder)


def marginal_gain(table: GainTable, i: int) -> int:
    return table.marginal_gain(i)


def apply_selection(table: GainTable, i: int) -> GainTable:
    table.apply_selection(i)
    return table
