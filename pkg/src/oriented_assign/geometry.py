"""Rotated-rectangle primitives.

Boxes are ``(cx, cy, w, h, theta)`` with ``theta`` in radians and ``w`` the
extent along the ``theta`` direction. Canonical boxes keep ``theta`` in
``[-pi/4, pi/4)``, swapping ``w``/``h`` as needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CollinearInput, DegenerateBox, InvalidGaussian, SingularCovariance

MIN_EXTENT = 1e-6
MIN_DET = 1e-12

_QUARTER = math.pi / 4
_HALF = math.pi / 2


@dataclass(frozen=True)
class RotatedBox:
    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        vals = (self.cx, self.cy, self.w, self.h, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateBox(f"non-finite box {vals}")
        if self.w <= MIN_EXTENT or self.h <= MIN_EXTENT:
            raise DegenerateBox(f"box extents must exceed {MIN_EXTENT}: w={self.w}, h={self.h}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy], dtype=float)

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h, self.theta)

    def translated(self, dx: float, dy: float) -> "RotatedBox":
        return RotatedBox(self.cx + dx, self.cy + dy, self.w, self.h, self.theta)


class Gaussian2:
    """2-D Gaussian with a symmetric positive-definite covariance."""

    __slots__ = ("mu", "sigma")

    def __init__(self, mu, sigma):
        mu = np.array(mu, dtype=float).reshape(2)
        sigma = np.array(sigma, dtype=float).reshape(2, 2)
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise InvalidGaussian("non-finite Gaussian parameters")
        scale = max(abs(sigma[0, 0]), abs(sigma[1, 1]))
        if abs(sigma[0, 1] - sigma[1, 0]) > 1e-9 * scale:
            raise InvalidGaussian(f"covariance is not symmetric: {sigma.tolist()}")
        det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] * sigma[1, 0]
        if det <= MIN_DET:
            raise SingularCovariance(f"covariance determinant {det} <= {MIN_DET}")
        if sigma[0, 0] + sigma[1, 1] <= 0:
            raise InvalidGaussian("covariance is not positive definite")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        self.mu = mu
        self.sigma = sigma

    def __repr__(self):
        return f"Gaussian2(mu={self.mu.tolist()}, sigma={self.sigma.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, Gaussian2):
            return NotImplemented
        return bool(np.array_equal(self.mu, other.mu) and np.array_equal(self.sigma, other.sigma))

    __hash__ = None


def canonicalize(box: RotatedBox) -> RotatedBox:
    """Return the same rectangle with ``theta`` folded into ``[-pi/4, pi/4)``.

    A rectangle is unchanged by a half turn, and a quarter turn is absorbed by
    swapping its extents, so every box has exactly one canonical form.
    """
    if -_QUARTER <= box.theta < _QUARTER:
        return box
    quarter_turns = math.floor((box.theta + _QUARTER) / _HALF)
    theta = box.theta - quarter_turns * _HALF
    # floor() can land one step off at the boundaries after rounding
    if theta >= _QUARTER:
        theta -= _HALF
        quarter_turns += 1
    elif theta < -_QUARTER:
        theta += _HALF
        quarter_turns -= 1
    w, h = (box.h, box.w) if quarter_turns % 2 else (box.w, box.h)
    return RotatedBox(box.cx, box.cy, w, h, theta)


def box_vertices(box: RotatedBox) -> np.ndarray:
    """Corners of ``box`` as a ``(4, 2)`` array in counterclockwise order."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    hw, hh = box.w / 2, box.h / 2
    local = np.array([[hw, hh], [-hw, hh], [-hw, -hh], [hw, -hh]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([box.cx, box.cy])


def box_to_gaussian(box: RotatedBox) -> Gaussian2:
    """Gaussian view of a box: mean at the center, ``R diag(w^2/4, h^2/4) R^T``."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    a, b = box.w * box.w / 4, box.h * box.h / 4
    s01 = (a - b) * c * s
    sigma = [[a * c * c + b * s * s, s01], [s01, a * s * s + b * c * c]]
    return Gaussian2((box.cx, box.cy), sigma)


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area; positive for counterclockwise vertex order."""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _clip(subject: list, clipper: np.ndarray) -> list:
    # Sutherland-Hodgman against each edge of a convex ccw clipper
    out = subject
    n = len(clipper)
    for i in range(n):
        if not out:
            break
        ax, ay = clipper[i]
        bx, by = clipper[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inp, out = out, []
        px, py = inp[-1]
        p_side = ex * (py - ay) - ey * (px - ax)
        for qx, qy in inp:
            q_side = ex * (qy - ay) - ey * (qx - ax)
            if q_side >= 0:
                if p_side < 0:
                    t = p_side / (p_side - q_side)
                    out.append((px + t * (qx - px), py + t * (qy - py)))
                out.append((qx, qy))
            elif p_side >= 0:
                t = p_side / (p_side - q_side)
                out.append((px + t * (qx - px), py + t * (qy - py)))
            px, py, p_side = qx, qy, q_side
    return out


def intersection_area(a: RotatedBox, b: RotatedBox) -> float:
    ra = math.hypot(a.w, a.h) / 2
    rb = math.hypot(b.w, b.h) / 2
    if math.hypot(a.cx - b.cx, a.cy - b.cy) >= ra + rb:
        return 0.0
    clipped = _clip([tuple(p) for p in box_vertices(a)], box_vertices(b))
    if len(clipped) < 3:
        return 0.0
    return max(polygon_area(np.asarray(clipped)), 0.0)


def rotated_iou(a: RotatedBox, b: RotatedBox) -> float:
    """Exact intersection-over-union of two rotated rectangles."""
    # fixed argument order keeps the result bitwise symmetric
    if b.as_tuple() < a.as_tuple():
        a, b = b, a
    inter = intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    union = a.area + b.area - inter
    return min(max(inter / union, 0.0), 1.0)


def convex_hull(points: Iterable[Sequence[float]]) -> np.ndarray:
    """Monotone-chain hull, counterclockwise, without collinear points."""
    pts = sorted({(float(x), float(y)) for x, y in points})
    if len(pts) < 3:
        raise CollinearInput("need at least 3 distinct points")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3 or polygon_area(hull) <= 1e-12 * max(1.0, float(np.ptp(hull, axis=0).max()) ** 2):
        raise CollinearInput("points are collinear")
    return hull


def min_area_rect(points: Sequence[Sequence[float]]) -> RotatedBox:
    """Smallest-area rotated rectangle enclosing ``points``.

    Uses the rotating-calipers property: the optimum has a side collinear
    with some hull edge, so only hull-edge orientations are tried.

    Raises:
        CollinearInput: fewer than three non-collinear points.
    """
    hull = convex_hull(points)
    best = None
    for i in range(len(hull)):
        edge = hull[(i + 1) % len(hull)] - hull[i]
        theta = math.atan2(edge[1], edge[0])
        c, s = math.cos(theta), math.sin(theta)
        # coordinates in the frame aligned with the edge
        u = hull[:, 0] * c + hull[:, 1] * s
        v = -hull[:, 0] * s + hull[:, 1] * c
        w, h = u.max() - u.min(), v.max() - v.min()
        area = w * h
        if best is None or area < best[0] * (1 - 1e-12):
            mu, mv = (u.max() + u.min()) / 2, (v.max() + v.min()) / 2
            best = (area, mu * c - mv * s, mu * s + mv * c, w, h, theta)
    _, cx, cy, w, h, theta = best
    return canonicalize(RotatedBox(float(cx), float(cy), float(w), float(h), theta))
