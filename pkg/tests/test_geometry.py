import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import boxes, random_box
from oracles import brute_min_area, mc_iou
from oriented_assign.errors import CollinearInput, DegenerateBox, InvalidGaussian, SingularCovariance
from oriented_assign.geometry import (Gaussian2, RotatedBox, box_to_gaussian, box_vertices,
                                      canonicalize, min_area_rect, polygon_area, rotated_iou)


def same_vertex_set(poly, expected, tol=1e-9):
    poly = [tuple(p) for p in poly]
    return all(any(math.dist(p, e) < tol for p in poly) for e in expected) and len(poly) == len(expected)


class TestCanonicalize:
    @pytest.mark.parametrize("box, expected", [
        ((0, 0, 4, 2, 0), (0, 0, 4, 2, 0)),
        ((0, 0, 4, 2, math.pi), (0, 0, 4, 2, 0)),
        ((0, 0, 4, 2, math.pi / 2), (0, 0, 2, 4, 0)),
    ])
    def test_examples(self, box, expected):
        out = canonicalize(RotatedBox(*box))
        assert out.as_tuple() == pytest.approx(expected, abs=1e-12)

    @given(boxes())
    def test_range_and_idempotent(self, box):
        once = canonicalize(box)
        assert -math.pi / 2 <= once.theta < math.pi / 2
        assert canonicalize(once) == once

    @given(boxes())
    def test_same_point_set(self, box):
        once = canonicalize(box)
        assert same_vertex_set(box_vertices(once), [tuple(p) for p in box_vertices(box)], tol=1e-7)

    @pytest.mark.parametrize("w, h", [(0, 1), (1, 0), (1e-7, 1), (-2, 3)])
    def test_degenerate(self, w, h):
        with pytest.raises(DegenerateBox):
            RotatedBox(0, 0, w, h, 0)


class TestVertices:
    def test_axis_aligned(self):
        v = box_vertices(RotatedBox(0, 0, 2, 2, 0))
        assert same_vertex_set(v, [(1, 1), (-1, 1), (-1, -1), (1, -1)])

    def test_translation(self):
        v = box_vertices(RotatedBox(5, 5, 2, 2, 0))
        assert same_vertex_set(v, [(6, 6), (4, 6), (4, 4), (6, 4)])

    def test_rotated_square(self):
        r = math.sqrt(2)
        v = box_vertices(RotatedBox(0, 0, 2, 2, math.pi / 4))
        assert same_vertex_set(v, [(r, 0), (0, r), (-r, 0), (0, -r)])

    @given(boxes())
    def test_ccw_and_centroid(self, box):
        v = box_vertices(box)
        assert polygon_area(v) > 0
        assert polygon_area(v) == pytest.approx(box.w * box.h, rel=1e-9)
        assert np.allclose(v.mean(axis=0), [box.cx, box.cy], atol=1e-9)


class TestGaussian:
    @pytest.mark.parametrize("box, mu, sigma", [
        ((0, 0, 2, 2, 0), (0, 0), [[1, 0], [0, 1]]),
        ((0, 0, 2, 2, math.pi / 4), (0, 0), [[1, 0], [0, 1]]),
        ((1, 2, 4, 2, math.pi / 2), (1, 2), [[1, 0], [0, 4]]),
    ])
    def test_examples(self, box, mu, sigma):
        g = box_to_gaussian(RotatedBox(*box))
        assert np.allclose(g.mu, mu, atol=1e-12)
        assert np.allclose(g.sigma, sigma, atol=1e-12)

    @given(boxes())
    def test_canonicalization_invariant(self, box):
        a, b = box_to_gaussian(box), box_to_gaussian(canonicalize(box))
        assert np.allclose(a.sigma, b.sigma, rtol=0, atol=1e-9)
        assert np.array_equal(a.mu, b.mu)

    @given(boxes())
    def test_eigenvalues(self, box):
        vals = np.linalg.eigvalsh(box_to_gaussian(box).sigma)
        expected = sorted([box.w ** 2 / 4, box.h ** 2 / 4])
        assert np.allclose(vals, expected, rtol=0, atol=1e-9)

    def test_rejects_invalid(self):
        with pytest.raises(InvalidGaussian):
            Gaussian2((0, 0), [[1, 0.5], [0, 1]])
        with pytest.raises(SingularCovariance):
            Gaussian2((0, 0), [[1, 1], [1, 1]])
        with pytest.raises(InvalidGaussian):
            Gaussian2((0, 0), [[-1, 0], [0, -1]])


class TestRotatedIou:
    def test_identity(self):
        b = RotatedBox(3, -2, 5, 1.5, 0.3)
        assert rotated_iou(b, b) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint(self):
        assert rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(10, 10, 1, 1, 0)) == 0.0

    def test_half_overlap(self):
        assert rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(0.5, 0, 1, 1, 0)) == pytest.approx(1 / 3, abs=1e-12)

    def test_rotated_square(self):
        # Monte-Carlo oracle with 10^6 samples gives 0.70738; exact octagon value is sqrt(2)/2
        assert rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(0, 0, 1, 1, math.pi / 4)) == pytest.approx(0.7071, abs=1e-3)

    def test_touching_edges(self):
        assert rotated_iou(RotatedBox(0, 0, 1, 1, 0), RotatedBox(1, 0, 1, 1, 0)) == 0.0

    def test_contained(self):
        assert rotated_iou(RotatedBox(0, 0, 4, 4, 0.2), RotatedBox(0, 0, 1, 1, 1.0)) == pytest.approx(1 / 16, abs=1e-12)

    @given(boxes(), boxes())
    def test_symmetric_and_bounded(self, a, b):
        v = rotated_iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == rotated_iou(b, a)

    @given(boxes(max_center=10, max_side=10), boxes(max_center=10, max_side=10),
           st.floats(-math.pi, math.pi), st.floats(-50, 50), st.floats(-50, 50))
    def test_rigid_motion(self, a, b, phi, tx, ty):
        c, s = math.cos(phi), math.sin(phi)

        def move(box):
            return RotatedBox(c * box.cx - s * box.cy + tx, s * box.cx + c * box.cy + ty,
                              box.w, box.h, box.theta + phi)

        assert rotated_iou(move(a), move(b)) == pytest.approx(rotated_iou(a, b), abs=1e-9)

    @pytest.mark.slow
    def test_monte_carlo_sample(self, rng):
        for _ in range(20):
            a, b = random_box(rng, 1.5), random_box(rng, 1.5)
            assert abs(rotated_iou(a, b) - mc_iou(a, b, 200_000, rng)) <= 0.01


class TestMinAreaRect:
    def test_rectangle(self):
        box = min_area_rect([(0, 0), (10, 0), (10, 5), (0, 5)])
        assert box.as_tuple() == pytest.approx((5, 2.5, 10, 5, 0), abs=1e-9)

    def test_inverse_of_vertices(self):
        box = RotatedBox(0, 0, 2, 2, math.pi / 4)
        out = min_area_rect(box_vertices(box))
        ref = canonicalize(box)
        assert out.as_tuple() == pytest.approx(ref.as_tuple(), abs=1e-9)

    @given(boxes())
    def test_roundtrip(self, box):
        out = min_area_rect(box_vertices(box))
        ref = canonicalize(box)
        assert [out.cx, out.cy] == pytest.approx([ref.cx, ref.cy], abs=1e-6)
        # squares and near-squares are ambiguous up to a quarter turn
        assert rotated_iou(out, ref) == pytest.approx(1.0, abs=1e-6)

    def test_random_quads_match_brute_force(self, rng):
        for _ in range(50):
            angles = np.sort(rng.uniform(0, 2 * math.pi, 4))
            radii = rng.uniform(1, 10, 4)
            pts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
            try:
                box = min_area_rect(pts)
            except CollinearInput:
                continue
            best, hull_area = brute_min_area(pts)
            assert box.w * box.h == pytest.approx(best, rel=1e-9)
            assert box.w * box.h >= hull_area * (1 - 1e-12)
            corners = box_vertices(box)
            # every input point lies inside the rectangle
            for p in pts:
                c, s = math.cos(box.theta), math.sin(box.theta)
                u = (p[0] - box.cx) * c + (p[1] - box.cy) * s
                v = -(p[0] - box.cx) * s + (p[1] - box.cy) * c
                assert abs(u) <= box.w / 2 + 1e-9 and abs(v) <= box.h / 2 + 1e-9
            assert corners.shape == (4, 2)

    def test_collinear(self):
        with pytest.raises(CollinearInput):
            min_area_rect([(0, 0), (1, 1), (2, 2), (3, 3)])
        with pytest.raises(CollinearInput):
            min_area_rect([(0, 0), (0, 0), (1, 1)])
