"""Coarse-to-fine label assignment and the MaxIoU baseline.

The dynamic assigner runs three selections per ground truth:

1. coarse: the ``k`` priors with the smallest Gaussian divergence to the gt,
2. medium: the ``q`` of those with the highest prediction quality
   ``0.5 * cls + 0.5 * IoU``,
3. fine: those whose location scores at least ``exp(-g)`` under a
   two-component mixture centered on the gt center and on the mean location
   of the medium set.

Priors claimed by several gts go to the gt whose mixture scores highest.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .divergence import DEFAULT_ALPHA, DivergenceKind, check_alpha, divergence_arrays
from .errors import InvariantViolation, SingularCovariance
from .geometry import MIN_DET, Gaussian2, RotatedBox, box_to_gaussian, rotated_iou
from .priors import PriorSet

NEGATIVE = -1
IGNORE = -2

# FCOS regression-range upper bound, as a multiple of the level stride
FCOS_RANGE_FACTOR = 8


class Strategy(str, enum.Enum):
    CROSS_LAYER = "cross"
    SINGLE_LAYER = "single"
    ALL_LAYER = "all"


@dataclass(frozen=True)
class GtInstance:
    box: RotatedBox
    class_id: int = 0
    gaussian: Gaussian2 = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gaussian", box_to_gaussian(self.box))

    @property
    def center(self) -> np.ndarray:
        return self.box.center


@dataclass(frozen=True)
class Prediction:
    cls_score: float
    box: RotatedBox

    def __post_init__(self):
        if not 0.0 <= self.cls_score <= 1.0:
            raise ValueError(f"cls_score must lie in [0, 1], got {self.cls_score}")


@dataclass(frozen=True)
class AssignerConfig:
    k: int = 16
    q: int = 12
    g: float = 0.8
    w1: float = 0.7
    measurement: DivergenceKind = DivergenceKind.GJSD
    strategy: Strategy = Strategy.CROSS_LAYER
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        object.__setattr__(self, "measurement", DivergenceKind(self.measurement))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        check_alpha(self.alpha)
        if not 1 <= self.q <= self.k:
            raise ValueError(f"need 1 <= q <= k, got k={self.k}, q={self.q}")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not 0.0 <= self.w1 <= 1.0:
            raise ValueError(f"w1 must lie in [0, 1], got {self.w1}")

    @property
    def threshold(self) -> float:
        return math.exp(-self.g)


@dataclass(frozen=True)
class Dgmm:
    mu1: np.ndarray
    mu2: np.ndarray
    sigma: np.ndarray
    w1: float
    w2: float

    def __post_init__(self):
        if not (0.0 <= self.w1 <= 1.0 and 0.0 <= self.w2 <= 1.0):
            raise ValueError("mixture weights must lie in [0, 1]")
        if self.w1 + self.w2 != 1.0:
            raise ValueError(f"mixture weights must sum to 1, got {self.w1} + {self.w2}")


@dataclass
class AssignmentResult:
    """Labels for every prior plus the per-gt stage lists.

    ``labels[j]`` is the gt index prior ``j`` is positive for, or
    :data:`NEGATIVE` / :data:`IGNORE`.
    """

    labels: np.ndarray
    cps: tuple[tuple[int, ...], ...]
    mps: tuple[tuple[int, ...], ...]
    fps: tuple[tuple[int, ...], ...]
    semantic_centers: Optional[np.ndarray] = None

    @property
    def num_gts(self) -> int:
        return len(self.fps)

    def positives(self, gt_index: int) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.labels == gt_index))

    def positive_counts(self) -> np.ndarray:
        counts = np.bincount(self.labels[self.labels >= 0], minlength=self.num_gts)
        return counts[: self.num_gts]

    def check(self, k: Optional[int] = None, q: Optional[int] = None) -> None:
        """Raise :class:`InvariantViolation` if the stage invariants fail."""
        for i, (c, m, f) in enumerate(zip(self.cps, self.mps, self.fps)):
            if not set(f) <= set(m) <= set(c):
                raise InvariantViolation(f"gt {i}: stage lists are not nested")
            if k is not None and len(c) > k:
                raise InvariantViolation(f"gt {i}: {len(c)} coarse samples > k={k}")
            if q is not None and len(m) > q:
                raise InvariantViolation(f"gt {i}: {len(m)} medium samples > q={q}")
            if set(self.positives(i)) != set(f):
                raise InvariantViolation(f"gt {i}: labels disagree with fine samples")
        owners: dict[int, int] = {}
        for i, f in enumerate(self.fps):
            for j in f:
                if j in owners:
                    raise InvariantViolation(f"prior {j} positive for gts {owners[j]} and {i}")
                owners[j] = i

    def to_dict(self) -> dict:
        return {
            "labels": [int(v) for v in self.labels],
            "cps": [list(c) for c in self.cps],
            "mps": [list(m) for m in self.mps],
            "fps": [list(f) for f in self.fps],
            "semantic_centers": (None if self.semantic_centers is None
                                 else [[float(x), float(y)] for x, y in self.semantic_centers]),
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True).encode()


def fcos_level(gt: GtInstance, strides: Sequence[int]) -> int:
    """Pyramid level picked by FCOS-style regression ranges.

    The maximal regression distance from the gt center is half the longer
    side; level ``l`` accepts distances up to ``8 * stride[l]``.
    """
    reach = max(gt.box.w, gt.box.h) / 2
    for lvl, stride in enumerate(strides[:-1]):
        if reach <= FCOS_RANGE_FACTOR * stride:
            return lvl
    return len(strides) - 1


def prior_divergences(priors: PriorSet, gt: GtInstance, config: AssignerConfig,
                      candidates: Optional[np.ndarray] = None) -> np.ndarray:
    """Divergence from each candidate prior's Gaussian to the gt Gaussian."""
    idx = np.arange(len(priors)) if candidates is None else candidates
    mu_p = priors.dynamic[idx]
    if config.strategy is Strategy.ALL_LAYER:
        sigma_p = np.broadcast_to(np.eye(2), (len(idx), 2, 2))
    else:
        sigma_p = priors.sigmas()[idx]
    return divergence_arrays(config.measurement, mu_p, sigma_p,
                             gt.gaussian.mu, gt.gaussian.sigma, config.alpha)


def coarse_candidates(priors: PriorSet, gt: GtInstance, config: AssignerConfig) -> np.ndarray:
    if config.strategy is Strategy.SINGLE_LAYER:
        sl = priors.level_slice(fcos_level(gt, priors.config.strides))
        return np.arange(sl.start, sl.stop)
    return np.arange(len(priors))


def coarse_match(priors: PriorSet, gts: Sequence[GtInstance],
                 config: AssignerConfig) -> list[tuple[int, ...]]:
    """Per gt, the ``k`` candidate priors with the smallest divergence.

    Ties keep the lower prior index. Fewer than ``k`` candidates returns
    all of them.
    """
    out = []
    for gt in gts:
        cand = coarse_candidates(priors, gt, config)
        div = prior_divergences(priors, gt, config, cand)
        order = np.argsort(div, kind="stable")[: config.k]
        out.append(tuple(int(j) for j in cand[order]))
    return out


def pt_value(cls_score: float, iou: float) -> float:
    return 0.5 * cls_score + 0.5 * iou


def pt_score(pred: Prediction, gt: GtInstance) -> float:
    """Probability-of-true-prediction score of one sample against its gt."""
    return pt_value(pred.cls_score, rotated_iou(pred.box, gt.box))


def medium_match(cps: Sequence[Sequence[int]], preds: Sequence[Prediction],
                 gts: Sequence[GtInstance], config: AssignerConfig) -> list[tuple[int, ...]]:
    out = []
    for members, gt in zip(cps, gts):
        scored = sorted((-pt_score(preds[j], gt), j) for j in members)
        out.append(tuple(j for _, j in scored[: config.q]))
    return out


def semantic_center(mps: Sequence[int], priors: PriorSet,
                    gt: Optional[GtInstance] = None) -> np.ndarray:
    """Mean dynamic location of the medium samples; the gt center if empty."""
    if len(mps) == 0:
        if gt is None:
            raise ValueError("empty sample set needs a gt to fall back on")
        return gt.center
    return priors.dynamic[list(mps)].mean(axis=0)


def build_dgmm(gt: GtInstance, sc, w1: float = 0.7) -> Dgmm:
    sigma = np.array(gt.gaussian.sigma)
    return Dgmm(gt.center, np.asarray(sc, dtype=float).reshape(2), sigma, float(w1), 1.0 - float(w1))


def dgmm_scores(dgmm: Dgmm, locs) -> np.ndarray:
    """Mixture score at each row of ``locs``; each component peaks at its weight."""
    locs = np.asarray(locs, dtype=float).reshape(-1, 2)
    s = dgmm.sigma
    det = s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]
    if det <= MIN_DET:
        raise SingularCovariance(f"covariance determinant {det} <= {MIN_DET}")
    ia, ib, ic = s[1, 1] / det, -s[0, 1] / det, s[0, 0] / det

    def component(mu):
        dx, dy = locs[:, 0] - mu[0], locs[:, 1] - mu[1]
        return np.exp(-0.5 * (ia * dx * dx + 2 * ib * dx * dy + ic * dy * dy))

    total = dgmm.w1 * component(dgmm.mu1) + dgmm.w2 * component(dgmm.mu2)
    return np.minimum(total, 1.0)


def dgmm_score(dgmm: Dgmm, loc) -> float:
    return float(dgmm_scores(dgmm, loc)[0])


def fine_match(mps: Sequence[Sequence[int]], dgmms: Sequence[Dgmm], priors: PriorSet,
               config: AssignerConfig) -> list[tuple[int, ...]]:
    thr = config.threshold
    out = []
    for members, dgmm in zip(mps, dgmms):
        if not members:
            out.append(())
            continue
        scores = dgmm_scores(dgmm, priors.dynamic[list(members)])
        out.append(tuple(j for j, sc in zip(members, scores) if sc >= thr))
    return out


def assign(priors: PriorSet, gts: Sequence[GtInstance], preds: Sequence[Prediction],
           config: AssignerConfig = AssignerConfig()) -> AssignmentResult:
    """Run coarse, medium and fine matching and resolve shared priors."""
    if len(preds) != len(priors):
        raise ValueError(f"{len(preds)} predictions for {len(priors)} priors")
    labels = np.full(len(priors), NEGATIVE, dtype=np.int64)
    if not gts:
        return AssignmentResult(labels, (), (), (), np.zeros((0, 2)))
    cps = coarse_match(priors, gts, config)
    mps = medium_match(cps, preds, gts, config)
    centers = np.array([semantic_center(m, priors, gt) for m, gt in zip(mps, gts)])
    dgmms = [build_dgmm(gt, sc, config.w1) for gt, sc in zip(gts, centers)]
    fps = fine_match(mps, dgmms, priors, config)

    best_score: dict[int, float] = {}
    for i, members in enumerate(fps):
        if not members:
            continue
        scores = dgmm_scores(dgmms[i], priors.dynamic[list(members)])
        for j, sc in zip(members, scores):
            # strict > keeps the lower gt index on ties
            if j not in best_score or sc > best_score[j]:
                best_score[j] = float(sc)
                labels[j] = i
    final = tuple(tuple(j for j in members if labels[j] == i) for i, members in enumerate(fps))
    return AssignmentResult(labels, tuple(cps), tuple(mps), final, centers)


def iou_candidates(priors: PriorSet, gt: GtInstance) -> np.ndarray:
    """Prior indices whose circumcircle meets the gt's circumcircle."""
    reach = priors.side * math.sqrt(0.5) + math.hypot(gt.box.w, gt.box.h) / 2
    d = np.hypot(priors.dynamic[:, 0] - gt.box.cx, priors.dynamic[:, 1] - gt.box.cy)
    return np.flatnonzero(d < reach)


def max_iou_assign(priors: PriorSet, gts: Sequence[GtInstance], pos_thr: float = 0.5,
                   neg_thr: float = 0.4, low_quality: bool = True) -> AssignmentResult:
    """Static threshold assignment on rotated IoU between prior boxes and gts.

    Priors between the thresholds get :data:`IGNORE`. With ``low_quality``
    each gt also claims its single best-overlapping prior.
    """
    if not 0.0 <= neg_thr <= pos_thr <= 1.0:
        raise ValueError(f"need 0 <= neg_thr <= pos_thr <= 1, got {neg_thr}, {pos_thr}")
    n = len(priors)
    best_iou = np.zeros(n)
    best_gt = np.full(n, NEGATIVE, dtype=np.int64)
    per_gt = []
    for i, gt in enumerate(gts):
        cand = iou_candidates(priors, gt)
        ious = np.array([rotated_iou(priors.box(int(j)), gt.box) for j in cand])
        per_gt.append((cand, ious))
        if len(cand):
            better = ious > best_iou[cand]
            best_iou[cand[better]] = ious[better]
            best_gt[cand[better]] = i
    labels = np.full(n, NEGATIVE, dtype=np.int64)
    labels[best_iou >= neg_thr] = IGNORE
    pos = best_iou >= pos_thr
    labels[pos] = best_gt[pos]
    if low_quality:
        for i, (cand, ious) in enumerate(per_gt):
            if len(cand) and ious.max() > 0:
                labels[cand[int(np.argmax(ious))]] = i
    stages = tuple(tuple(int(j) for j in np.flatnonzero(labels == i)) for i in range(len(gts)))
    return AssignmentResult(labels, stages, stages, stages, None)
