"""Multi-level prior grids and dynamic prior locations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import EmptyImage, EmptyOffsets
from .geometry import Gaussian2, RotatedBox, box_to_gaussian

DEFAULT_STRIDES = (8, 16, 32, 64, 128)


@dataclass(frozen=True)
class FpnConfig:
    strides: tuple[int, ...] = DEFAULT_STRIDES
    prior_scale: float = 4.0
    point_offset: float = 0.5

    def __post_init__(self):
        strides = tuple(int(s) for s in self.strides)
        object.__setattr__(self, "strides", strides)
        if not strides:
            raise ValueError("at least one stride is required")
        if any(s <= 0 for s in strides) or any(a >= b for a, b in zip(strides, strides[1:])):
            raise ValueError(f"strides must be positive and strictly ascending: {strides}")
        if not self.prior_scale > 0:
            raise ValueError(f"prior_scale must be positive, got {self.prior_scale}")
        if not 0.0 <= self.point_offset < 1.0:
            raise ValueError(f"point_offset must lie in [0, 1), got {self.point_offset}")

    def prior_side(self, level: int) -> float:
        return self.prior_scale * self.strides[level]


@dataclass(frozen=True)
class Prior:
    level: int
    stride: int
    s_static: tuple[float, float]
    s_dynamic: tuple[float, float]
    box: RotatedBox
    gaussian: Gaussian2 = field(compare=False)


def _make_prior(level, stride, static, dynamic, side) -> Prior:
    box = RotatedBox(dynamic[0], dynamic[1], side, side, 0.0)
    return Prior(level, stride, static, dynamic, box, box_to_gaussian(box))


def apply_offsets(prior: Prior, offsets: Sequence[Sequence[float]]) -> Prior:
    """Move a prior by ``stride * sum(offsets) / (2 n)``.

    Offsets are in feature-grid units. Only the location (and therefore the
    Gaussian mean) changes; extents and covariance are kept.

    Raises:
        EmptyOffsets: ``offsets`` is empty.
    """
    offs = np.asarray(offsets, dtype=float).reshape(-1, 2)
    if len(offs) == 0:
        raise EmptyOffsets("at least one offset is required")
    shift = prior.stride * offs.sum(axis=0) / (2 * len(offs))
    dyn = (prior.s_static[0] + float(shift[0]), prior.s_static[1] + float(shift[1]))
    box = replace(prior.box, cx=dyn[0], cy=dyn[1])
    return Prior(prior.level, prior.stride, prior.s_static, dyn, box, Gaussian2(dyn, prior.gaussian.sigma))


def prior_gaussian(prior: Prior) -> Gaussian2:
    return prior.gaussian


class PriorSet:
    """All priors of an image, level-major then row-major.

    Per-prior data lives in flat arrays (``static``, ``dynamic``, ``level``,
    ``stride``, ``side``); :meth:`prior` materializes one :class:`Prior`.
    Instances are treated as immutable.
    """

    def __init__(self, config: FpnConfig, image_size, static, dynamic, level, level_shapes):
        self.config = config
        self.image_size = (int(image_size[0]), int(image_size[1]))
        self.static = static
        self.dynamic = dynamic
        self.level = level
        self.level_shapes = tuple(level_shapes)
        self.stride = np.asarray(config.strides, dtype=float)[level]
        self.side = config.prior_scale * self.stride
        for arr in (self.static, self.dynamic, self.level, self.stride, self.side):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.level)

    def __iter__(self) -> Iterator[Prior]:
        return (self.prior(i) for i in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, PriorSet):
            return NotImplemented
        return (self.config == other.config and self.image_size == other.image_size
                and np.array_equal(self.static, other.static)
                and np.array_equal(self.dynamic, other.dynamic)
                and np.array_equal(self.level, other.level))

    __hash__ = None

    @property
    def num_levels(self) -> int:
        return len(self.config.strides)

    def level_slice(self, level: int) -> slice:
        start = sum(w * h for w, h in self.level_shapes[:level])
        cols, rows = self.level_shapes[level]
        return slice(start, start + cols * rows)

    def levels(self) -> list[list[Prior]]:
        return [[self.prior(i) for i in range(len(self))[self.level_slice(l)]]
                for l in range(self.num_levels)]

    def prior(self, index: int) -> Prior:
        lvl = int(self.level[index])
        static = (float(self.static[index, 0]), float(self.static[index, 1]))
        dynamic = (float(self.dynamic[index, 0]), float(self.dynamic[index, 1]))
        return _make_prior(lvl, self.config.strides[lvl], static, dynamic, float(self.side[index]))

    def box(self, index: int) -> RotatedBox:
        side = float(self.side[index])
        return RotatedBox(float(self.dynamic[index, 0]), float(self.dynamic[index, 1]), side, side, 0.0)

    def sigmas(self) -> np.ndarray:
        """Covariances of every prior, shape ``(N, 2, 2)``."""
        out = np.zeros((len(self), 2, 2))
        var = self.side * self.side / 4
        out[:, 0, 0] = var
        out[:, 1, 1] = var
        return out

    def with_offsets(self, offsets) -> "PriorSet":
        """Apply per-prior offset sets, array of shape ``(N, n, 2)``."""
        offs = np.asarray(offsets, dtype=float)
        if offs.ndim != 3 or offs.shape[0] != len(self) or offs.shape[2] != 2:
            raise ValueError(f"offsets must have shape (N, n, 2), got {offs.shape}")
        n = offs.shape[1]
        if n == 0:
            raise EmptyOffsets("at least one offset per prior is required")
        dynamic = self.static + self.stride[:, None] * offs.sum(axis=1) / (2 * n)
        return PriorSet(self.config, self.image_size, self.static, dynamic, self.level, self.level_shapes)

    def with_dynamic(self, dynamic) -> "PriorSet":
        dynamic = np.array(dynamic, dtype=float).reshape(len(self), 2)
        return PriorSet(self.config, self.image_size, self.static, dynamic, self.level, self.level_shapes)


def build_prior_grid(config: FpnConfig, image_size) -> PriorSet:
    """Dense one-prior-per-point grid over every pyramid level.

    Args:
        config: pyramid strides and prior geometry.
        image_size: ``(width, height)`` in pixels.
    """
    width, height = image_size
    if width <= 0 or height <= 0:
        raise EmptyImage(f"image size must be positive, got {image_size}")
    statics, levels, shapes = [], [], []
    for lvl, stride in enumerate(config.strides):
        cols, rows = math.ceil(width / stride), math.ceil(height / stride)
        xs = (np.arange(cols) + config.point_offset) * stride
        ys = (np.arange(rows) + config.point_offset) * stride
        gx, gy = np.meshgrid(xs, ys)
        statics.append(np.stack([gx.ravel(), gy.ravel()], axis=1))
        levels.append(np.full(cols * rows, lvl, dtype=np.int64))
        shapes.append((cols, rows))
    static = np.concatenate(statics)
    return PriorSet(config, (width, height), static, static.copy(), np.concatenate(levels), shapes)
