"""Positive-sample imbalance study on synthetic ground-truth populations.

A population places oriented boxes on a grid of (angle bin, size bin) cells.
An assigner is run against a noiseless or noisy stand-in for network
predictions, and the report tallies how many positives each bin receives
and how good the best of them is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .assigner import (AssignerConfig, AssignmentResult, GtInstance, Prediction, assign,
                       max_iou_assign)
from .errors import BinMismatch, PlacementFailure
from .geometry import RotatedBox, canonicalize, rotated_iou
from .priors import FpnConfig, PriorSet, build_prior_grid

MAX_PLACEMENT_TRIES = 2000
_BIN_EPS = 1e-9

STANDARD_ANGLE_BINS = tuple((float(a), float(a + 15)) for a in range(0, 180, 15))
STANDARD_SCALE_BINS = ((8.0, 16.0), (16.0, 32.0), (32.0, 64.0))


@dataclass(frozen=True)
class PopulationSpec:
    """Where and how to draw a synthetic population.

    Angles are in degrees, sizes are ``sqrt(w * h)`` in pixels and ``aspect``
    is ``w / h``. ``spacing`` is an extra minimum center distance on top of
    the circumscribed-circle separation that keeps boxes disjoint.
    """

    angle_bins: tuple[tuple[float, float], ...] = STANDARD_ANGLE_BINS
    scale_bins: tuple[tuple[float, float], ...] = STANDARD_SCALE_BINS
    aspect: float = 4.0
    per_bin: int = 4
    seed: int = 0
    image_size: tuple[int, int] = (1024, 1024)
    spacing: float = 0.0

    def __post_init__(self):
        for name in ("angle_bins", "scale_bins"):
            bins = tuple(sorted((float(lo), float(hi)) for lo, hi in getattr(self, name)))
            if not bins:
                raise ValueError(f"{name} must not be empty")
            if any(lo >= hi for lo, hi in bins):
                raise ValueError(f"{name} has an empty range: {bins}")
            if any(a[1] > b[0] for a, b in zip(bins, bins[1:])):
                raise ValueError(f"{name} overlap: {bins}")
            object.__setattr__(self, name, bins)
        if self.scale_bins[0][0] <= 0:
            raise ValueError("sizes must be positive")
        if self.per_bin < 1:
            raise ValueError(f"per_bin must be >= 1, got {self.per_bin}")
        if not self.aspect > 0:
            raise ValueError(f"aspect must be positive, got {self.aspect}")
        object.__setattr__(self, "image_size", (int(self.image_size[0]), int(self.image_size[1])))


def standard_sweep(per_bin: int = 4, seed: int = 0, image_size=(1024, 1024)) -> PopulationSpec:
    """15-degree angle bins over ``[0, 180)``, three size bins, aspect 4."""
    return PopulationSpec(per_bin=per_bin, seed=seed, image_size=image_size)


def orientation_deg(box: RotatedBox) -> float:
    """Direction of the longer side in degrees, folded into ``[0, 180)``."""
    theta = box.theta if box.w >= box.h else box.theta + math.pi / 2
    return math.degrees(theta) % 180.0


def abs_size(box: RotatedBox) -> float:
    return math.sqrt(box.w * box.h)


def synth_population(spec: PopulationSpec) -> list[GtInstance]:
    """Draw ``per_bin`` boxes for every (angle, size) cell.

    Boxes lie fully inside the image and never overlap: centers are at least
    the sum of circumradii (plus ``spacing``) apart.

    Raises:
        PlacementFailure: a box could not be placed after bounded retries.
    """
    rng = np.random.default_rng(spec.seed)
    width, height = spec.image_size
    root = math.sqrt(spec.aspect)
    centers: list[tuple[float, float]] = []
    radii: list[float] = []
    gts = []
    for a_lo, a_hi in spec.angle_bins:
        for s_lo, s_hi in spec.scale_bins:
            for _ in range(spec.per_bin):
                angle = rng.uniform(a_lo, a_hi)
                size = rng.uniform(s_lo, s_hi)
                w, h = size * root, size / root
                r = math.hypot(w, h) / 2
                if 2 * r > min(width, height):
                    raise PlacementFailure(f"a {w:.1f}x{h:.1f} box does not fit the image")
                for _ in range(MAX_PLACEMENT_TRIES):
                    cx = rng.uniform(r, width - r)
                    cy = rng.uniform(r, height - r)
                    if all(math.hypot(cx - x, cy - y) >= max(r + rr, spec.spacing)
                           for (x, y), rr in zip(centers, radii)):
                        break
                else:
                    raise PlacementFailure(
                        f"could not place box {len(gts)} after {MAX_PLACEMENT_TRIES} tries")
                centers.append((cx, cy))
                radii.append(r)
                box = canonicalize(RotatedBox(cx, cy, w, h, math.radians(angle)))
                gts.append(GtInstance(box))
    return gts


def _perturb(box: RotatedBox, noise: float, rng: np.random.Generator) -> RotatedBox:
    n = rng.standard_normal(5)
    size = math.sqrt(box.w * box.h)
    return RotatedBox(
        box.cx + noise * size * n[0] / 2,
        box.cy + noise * size * n[1] / 2,
        box.w * math.exp(noise * n[2] / 2),
        box.h * math.exp(noise * n[3] / 2),
        box.theta + noise * (math.pi / 12) * n[4],
    )


def prediction_oracle(priors: PriorSet, gts: Sequence[GtInstance], noise: float = 0.0,
                      seed: int = 0) -> list[Prediction]:
    """Stand-in for network outputs at every prior.

    Each prior predicts the box of the gt whose center is nearest to its
    dynamic location, perturbed in center (``noise * size / 2`` std), log
    extents (``noise / 2``) and angle (``noise * 15`` degrees). Its
    confidence is ``exp(-d^2 / 2)`` for the Mahalanobis distance ``d`` to that
    gt, scaled by ``1 - u * noise`` with ``u ~ U[0, 1]``.
    """
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    n = len(priors)
    if not gts:
        return [Prediction(0.0, priors.box(j)) for j in range(n)]
    rng = np.random.default_rng(seed)
    gt_centers = np.array([gt.box.center for gt in gts])
    _, nearest = cKDTree(gt_centers).query(priors.dynamic)
    nearest = np.atleast_1d(nearest)
    prec = np.array([np.linalg.inv(gt.gaussian.sigma) for gt in gts])
    diff = priors.dynamic - gt_centers[nearest]
    maha2 = np.einsum("ni,nij,nj->n", diff, prec[nearest], diff)
    cls = np.exp(-0.5 * maha2)
    if noise > 0:
        cls = cls * (1 - rng.uniform(0.0, 1.0, n) * noise)
    cls = np.clip(cls, 0.0, 1.0)
    preds = []
    for j in range(n):
        box = gts[nearest[j]].box
        if noise > 0:
            box = _perturb(box, noise, rng)
        preds.append(Prediction(float(cls[j]), box))
    return preds


@dataclass(frozen=True)
class BinRecord:
    axis: str
    bin_lo: float
    bin_hi: float
    mean_pos: float
    mean_quality: float
    n_gt: int


@dataclass(frozen=True)
class ImbalanceReport:
    """Per-bin tallies plus max/min ratios of mean positive counts.

    A ratio is ``None`` when some populated bin got no positives while
    another did; it is 1 with the ``*_degenerate`` flag when no bin got any.
    """

    records: tuple[BinRecord, ...] = ()
    summary: dict = field(default_factory=dict)

    def axis_records(self, axis: str) -> list[BinRecord]:
        return [r for r in self.records if r.axis == axis]


def _find_bin(value: float, bins) -> int:
    for b, (lo, hi) in enumerate(bins):
        if lo - _BIN_EPS <= value < hi + _BIN_EPS:
            return b
    return -1


def _ratio(records: Sequence[BinRecord]) -> tuple[Optional[float], bool]:
    means = [r.mean_pos for r in records if r.n_gt > 0]
    if not means or max(means) == 0:
        return 1.0, True
    if min(means) == 0:
        return None, True
    return max(means) / min(means), False


def imbalance_report(result: AssignmentResult, gts: Sequence[GtInstance], spec: PopulationSpec,
                     preds: Optional[Sequence[Prediction]] = None,
                     priors: Optional[PriorSet] = None) -> ImbalanceReport:
    """Tally positives and best predicted IoU per angle bin and per size bin.

    Quality of a gt is the largest rotated IoU between it and the predicted
    box of any of its positives (the prior box when ``preds`` is omitted),
    and 0 when it has no positives.

    Raises:
        BinMismatch: a gt falls outside every bin.
    """
    if result.num_gts != len(gts):
        raise ValueError(f"result covers {result.num_gts} gts, population has {len(gts)}")
    counts = result.positive_counts()
    quality = np.zeros(len(gts))
    for i, gt in enumerate(gts):
        best = 0.0
        for j in result.positives(i):
            if preds is not None:
                box = preds[j].box
            elif priors is not None:
                box = priors.box(j)
            else:
                raise ValueError("need preds or priors to score positive quality")
            best = max(best, rotated_iou(box, gt.box))
        quality[i] = best

    records = []
    for axis, bins, key in (("angle", spec.angle_bins, orientation_deg),
                            ("scale", spec.scale_bins, abs_size)):
        members: list[list[int]] = [[] for _ in bins]
        for i, gt in enumerate(gts):
            b = _find_bin(key(gt.box), bins)
            if b < 0:
                raise BinMismatch(f"gt {i} ({axis} {key(gt.box):.3f}) falls in no bin")
            members[b].append(i)
        for (lo, hi), idx in zip(bins, members):
            mean_pos = float(np.mean(counts[idx])) if idx else 0.0
            mean_q = float(np.mean(quality[idx])) if idx else 0.0
            records.append(BinRecord(axis, lo, hi, mean_pos, mean_q, len(idx)))

    summary = {}
    for axis in ("angle", "scale"):
        ratio, degenerate = _ratio([r for r in records if r.axis == axis])
        summary[f"{axis}_ratio"] = ratio
        summary[f"{axis}_degenerate"] = degenerate
    return ImbalanceReport(tuple(records), summary)


@dataclass(frozen=True)
class SweepOutcome:
    gts: tuple[GtInstance, ...]
    dcfl: ImbalanceReport
    max_iou: ImbalanceReport


def run_sweep(spec: PopulationSpec, fpn: FpnConfig = FpnConfig(),
              config: AssignerConfig = AssignerConfig(), noise: float = 0.0) -> SweepOutcome:
    """Assign one population with both assigners and report each."""
    gts = synth_population(spec)
    priors = build_prior_grid(fpn, spec.image_size)
    preds = prediction_oracle(priors, gts, noise=noise, seed=spec.seed)
    dcfl = assign(priors, gts, preds, config)
    baseline = max_iou_assign(priors, gts)
    return SweepOutcome(
        tuple(gts),
        imbalance_report(dcfl, gts, spec, preds),
        imbalance_report(baseline, gts, spec, preds),
    )
