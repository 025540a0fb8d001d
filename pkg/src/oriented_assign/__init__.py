"""Coarse-to-fine label assignment for oriented tiny objects."""
from .assigner import (IGNORE, NEGATIVE, AssignerConfig, AssignmentResult, Dgmm, GtInstance,
                       Prediction, Strategy, assign, build_dgmm, coarse_match, dgmm_score,
                       fine_match, max_iou_assign, medium_match, pt_score, semantic_center)
from .divergence import DivergenceKind, alpha_interpolate, gjsd, gwd, kld
from .errors import (AssignError, BinMismatch, CollinearInput, ConfigError, DegenerateBox,
                     EmptyImage, EmptyOffsets, InvariantViolation, ParseError, PlacementFailure,
                     SingularCovariance, SinkError, UnknownCategory)
from .geometry import (Gaussian2, RotatedBox, box_to_gaussian, box_vertices, canonicalize,
                       min_area_rect, rotated_iou)
from .priors import FpnConfig, Prior, PriorSet, apply_offsets, build_prior_grid, prior_gaussian

__version__ = "0.1.0"
