"""Tile-coding geometry for overlapping pixel boxes.

A tile coding is a family of ``t`` tilings of equally sized boxes, each
shifted by a fixed offset from the previous one. Every tiling partitions
the (padded) image plane, so a point is covered by exactly one box per
tiling and the covering set can be found with index arithmetic alone.

Boxes are half-open, ``[x0, x0 + w) x [y0, y0 + h)``. Tilings are padded
past the image edge so that every point of the closed plane
``[0, W] x [0, H]`` is covered. Flat indices are tiling-major, then
row-major within a tiling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import lcm
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class TileCodingConfig:
    image_width: int = 5120
    image_height: int = 3840
    box_width: int = 180
    box_height: int = 180
    offset_x: int = 60
    offset_y: int = 30

    def __post_init__(self):
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.box_width <= 0 or self.box_height <= 0:
            raise ValueError("box dimensions must be positive")
        if not (0 < self.offset_x <= self.box_width and 0 < self.offset_y <= self.box_height):
            raise ValueError("offsets must satisfy 0 < offset <= box size")
        if self.box_width % self.offset_x or self.box_height % self.offset_y:
            raise ValueError(
                f"offsets ({self.offset_x}, {self.offset_y}) must divide the box size "
                f"({self.box_width}, {self.box_height})"
            )

    @property
    def num_tilings(self) -> int:
        return lcm(self.box_width // self.offset_x, self.box_height // self.offset_y)


class PixelBoxId(NamedTuple):
    tiling: int
    col: int
    row: int
    flat: int


class TileCoding:
    """Immutable tile coder; see :func:`build`."""

    def __init__(self, config: TileCodingConfig):
        self.config = config
        c = config
        self.t = c.num_tilings
        j = np.arange(self.t)
        shift_x = (j * c.offset_x) % c.box_width
        shift_y = (j * c.offset_y) % c.box_height
        # grid origin sits one box before the image edge whenever the tiling is shifted
        self.origin_x = np.where(shift_x > 0, shift_x - c.box_width, 0).astype(np.int64)
        self.origin_y = np.where(shift_y > 0, shift_y - c.box_height, 0).astype(np.int64)
        self.ncols = (c.image_width - self.origin_x) // c.box_width + 1
        self.nrows = (c.image_height - self.origin_y) // c.box_height + 1
        sizes = self.ncols * self.nrows
        self.tiling_offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.n = int(self.tiling_offsets[-1])
        for arr in (self.origin_x, self.origin_y, self.ncols, self.nrows, self.tiling_offsets):
            arr.setflags(write=False)

    def __repr__(self):
        return f"TileCoding(t={self.t}, n={self.n}, {self.config})"

    @property
    def width(self) -> int:
        return self.config.image_width

    @property
    def height(self) -> int:
        return self.config.image_height

    def clamp(self, xy):
        xy = np.asarray(xy, dtype=float)
        out = np.empty_like(xy)
        out[..., 0] = np.clip(xy[..., 0], 0, self.width)
        out[..., 1] = np.clip(xy[..., 1], 0, self.height)
        return out

    def covers_many(self, xy) -> np.ndarray:
        """Flat ids of the covering boxes for an ``(m, 2)`` array of positions.

        Returns an ``(m, t)`` int64 array whose column ``j`` holds the box of
        tiling ``j``. Positions outside the plane are clamped first.
        """
        xy = self.clamp(np.atleast_2d(xy)[:, :2])
        c = self.config
        cols = np.floor((xy[:, :1] - self.origin_x) / c.box_width).astype(np.int64)
        rows = np.floor((xy[:, 1:2] - self.origin_y) / c.box_height).astype(np.int64)
        return self.tiling_offsets[:-1] + rows * self.ncols + cols

    def covers(self, state) -> list[int]:
        x, y = float(state[0]), float(state[1])
        return self.covers_many(np.array([[x, y]]))[0].tolist()

    def box(self, flat: int) -> PixelBoxId:
        flat = int(flat)
        if not 0 <= flat < self.n:
            raise IndexError(f"box index {flat} out of range [0, {self.n})")
        j = int(np.searchsorted(self.tiling_offsets, flat, side="right")) - 1
        local = flat - int(self.tiling_offsets[j])
        row, col = divmod(local, int(self.ncols[j]))
        return PixelBoxId(j, col, row, flat)

    def flat_index(self, tiling: int, col: int, row: int) -> int:
        if not (0 <= col < self.ncols[tiling] and 0 <= row < self.nrows[tiling]):
            raise IndexError(f"({col}, {row}) outside tiling {tiling}")
        return int(self.tiling_offsets[tiling] + row * self.ncols[tiling] + col)

    def rect(self, flat: int) -> tuple[int, int, int, int]:
        """``(x0, y0, x1, y1)`` of a box; the upper edges are exclusive."""
        b = self.box(flat)
        c = self.config
        x0 = int(self.origin_x[b.tiling]) + b.col * c.box_width
        y0 = int(self.origin_y[b.tiling]) + b.row * c.box_height
        return x0, y0, x0 + c.box_width, y0 + c.box_height

    @cached_property
    def rects(self) -> np.ndarray:
        """All box rectangles as an ``(n, 4)`` array, in flat-index order."""
        out = np.empty((self.n, 4), dtype=np.int64)
        c = self.config
        for j in range(self.t):
            rows, cols = np.divmod(np.arange(self.ncols[j] * self.nrows[j]), self.ncols[j])
            sl = slice(self.tiling_offsets[j], self.tiling_offsets[j + 1])
            out[sl, 0] = self.origin_x[j] + cols * c.box_width
            out[sl, 1] = self.origin_y[j] + rows * c.box_height
        out[:, 2] = out[:, 0] + c.box_width
        out[:, 3] = out[:, 1] + c.box_height
        out.setflags(write=False)
        return out

    def contains(self, flat: int, state) -> bool:
        x0, y0, x1, y1 = self.rect(flat)
        x, y = float(state[0]), float(state[1])
        return x0 <= x < x1 and y0 <= y < y1

    def contains_many(self, boxes, xy) -> np.ndarray:
        """Boolean ``(len(xy), len(boxes))`` containment matrix (no clamping)."""
        r = self.rects[np.asarray(boxes, dtype=np.int64)]
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        x, y = xy[:, :1], xy[:, 1:2]
        return (x >= r[:, 0]) & (x < r[:, 2]) & (y >= r[:, 1]) & (y < r[:, 3])

    def tiling_boxes(self, tiling: int = 0) -> np.ndarray:
        return np.arange(self.tiling_offsets[tiling], self.tiling_offsets[tiling + 1])

    def center(self, flat: int) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect(flat)
        return (x0 + x1) / 2, (y0 + y1) / 2


def build(config: TileCodingConfig | None = None) -> TileCoding:
    return TileCoding(config or TileCodingConfig())
