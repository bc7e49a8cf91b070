"""Geometry tests: lengths, reparameterization, frames, lattice, hop metric."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skyways.geometry import (
    ChainedCurve,
    CubicBezier,
    Curve,
    DegenerateCurveError,
    Frame,
    FrameUndefinedError,
    LaneCoord,
    ParamRangeError,
    along_lane_distance,
    arclength_reparam,
    curve_length,
    hex_neighbors,
    hop_distance,
    lattice_offset_coeffs,
    normal_frame,
    normal_frame_of_tangent,
    parallel_point,
    param_convert,
)

# Cubic Bezier approximation of a planar quarter circle, radius 50.
CIRCLE_K = 0.5522847498307936
QUARTER_CIRCLE = [
    [50.0, 0.0, 0.0],
    [50.0, 50.0 * CIRCLE_K, 0.0],
    [50.0 * CIRCLE_K, 50.0, 0.0],
    [0.0, 50.0, 0.0],
]
# Frozen from the dense trapezoid oracle below (10^6 + 1 samples).
QUARTER_CIRCLE_LENGTH = 78.55083490369802


def trapezoid_length(bezier, samples=1_000_001):
    """Independent length oracle: dense trapezoid rule over the native speed."""
    t = np.linspace(0.0, 1.0, samples)
    speed = np.linalg.norm(bezier.velocity(t), axis=-1)
    return float(np.trapezoid(speed, t))


def cumulative_oracle(bezier, samples=1_000_001):
    """Dense cumulative-length table (t, ell) for brute-force inversion."""
    t = np.linspace(0.0, 1.0, samples)
    speed = np.linalg.norm(bezier.velocity(t), axis=-1)
    dt = t[1] - t[0]
    ell = np.concatenate([[0.0], np.cumsum((speed[1:] + speed[:-1]) * 0.5 * dt)])
    return t, ell


class TestCurveLength:
    def test_straight_segment(self):
        bez = CubicBezier.line((0, 0, 0), (100, 0, 0))
        assert curve_length(bez) == pytest.approx(100.0, rel=1e-9)

    def test_quarter_circle_against_oracle(self):
        bez = CubicBezier(QUARTER_CIRCLE)
        length = curve_length(bez)
        assert length == pytest.approx(QUARTER_CIRCLE_LENGTH, rel=1e-5)
        # keep the frozen constant honest
        assert trapezoid_length(bez, samples=100_001) == pytest.approx(
            QUARTER_CIRCLE_LENGTH, rel=1e-8
        )

    def test_zero_length_curve_rejected(self):
        bez = CubicBezier([[1, 2, 3]] * 4)
        with pytest.raises(DegenerateCurveError):
            curve_length(bez)


class TestArclengthReparam:
    def test_straight_midpoint(self):
        curve = arclength_reparam(CubicBezier.line((0, 0, 0), (100, 0, 0)))
        np.testing.assert_allclose(curve.point(50.0), [50, 0, 0], atol=1e-9)

    def test_nonuniform_speed_midpoint_matches_cumulative_oracle(self):
        # Strongly non-uniform native speed along a straight line.
        bez = CubicBezier([[0, 0, 0], [5, 0, 0], [60, 0, 0], [100, 0, 0]])
        curve = arclength_reparam(bez)
        t, ell = cumulative_oracle(bez, samples=200_001)
        half = curve.length / 2.0
        t_half = float(np.interp(half, ell, t))
        expected = bez.point(t_half)
        np.testing.assert_allclose(curve.point(half), expected, atol=1e-4)

    def test_start_param_offset_and_endpoints(self):
        bez = CubicBezier(QUARTER_CIRCLE)
        curve = arclength_reparam(bez, start_param=200.0)
        np.testing.assert_allclose(curve.point(200.0), [50, 0, 0], atol=1e-12)
        np.testing.assert_allclose(curve.point(curve.b), [0, 50, 0], atol=1e-12)

    def test_unit_speed_property(self):
        for cps in (QUARTER_CIRCLE, [[0, 0, 0], [5, 1, 0], [60, 40, 5], [100, 50, 10]]):
            curve = arclength_reparam(CubicBezier(cps))
            ss = np.linspace(curve.a + 0.01, curve.b - 0.01, 1000)
            h = 1e-4
            for s in ss[::7]:
                speed = np.linalg.norm(curve.point(s + h) - curve.point(s - h)) / (2 * h)
                assert speed == pytest.approx(1.0, abs=1e-3)

    def test_out_of_range_rejected(self):
        curve = arclength_reparam(CubicBezier.line((0, 0, 0), (10, 0, 0)))
        with pytest.raises(ParamRangeError):
            curve.point(11.0)


class TestNormalFrame:
    def test_tangent_x_axis(self):
        # Hand evaluation of the construction: pivot x, w1=(0,1,0),
        # w2=(0,0,1), projection of z is z itself.
        frame = normal_frame_of_tangent(np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(frame.u1, [0, 0, 1], atol=1e-12)
        np.testing.assert_allclose(frame.u2, [0, -1, 0], atol=1e-12)

    def test_tangent_y_axis(self):
        frame = normal_frame_of_tangent(np.array([0.0, 1.0, 0.0]))
        assert abs(frame.u1 @ np.array([0, 1, 0])) < 1e-12
        assert frame.u1[1] == pytest.approx(0.0, abs=1e-12)  # in span{x, z}
        assert frame.u1[2] > 0.0

    def test_vertical_tangent_rejected(self):
        with pytest.raises(FrameUndefinedError):
            normal_frame_of_tangent(np.array([0.0, 0.0, 1.0]))

    def test_orthonormality_random_tangents(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            v = rng.normal(size=3)
            if abs(v[2]) / np.linalg.norm(v) > 0.99:
                continue
            frame = normal_frame_of_tangent(v)
            vhat = v / np.linalg.norm(v)
            assert abs(frame.u1 @ frame.u2) < 1e-9
            assert np.linalg.norm(frame.u1) == pytest.approx(1.0, abs=1e-9)
            assert np.linalg.norm(frame.u2) == pytest.approx(1.0, abs=1e-9)
            assert abs(frame.u1 @ vhat) < 1e-9
            assert abs(frame.u2 @ vhat) < 1e-9

    def test_matches_direct_projection(self):
        # The pivot construction must equal projecting z off the tangent.
        rng = np.random.default_rng(11)
        for _ in range(100):
            v = rng.normal(size=3)
            vhat = v / np.linalg.norm(v)
            if abs(vhat[2]) > 0.99:
                continue
            proj = np.array([0.0, 0.0, 1.0]) - vhat[2] * vhat
            proj /= np.linalg.norm(proj)
            frame = normal_frame_of_tangent(v)
            np.testing.assert_allclose(frame.u1, proj, atol=1e-9)

    def test_frame_continuity_along_curves(self):
        for cps in (QUARTER_CIRCLE, [[0, 0, 0], [30, 5, 8], [70, -5, 12], [100, 0, 20]]):
            curve = arclength_reparam(CubicBezier(cps))
            ds = 0.01
            ss = np.linspace(curve.a, curve.b - ds, 300)
            for s in ss:
                u1a = curve.frame(s).u1
                u1b = curve.frame(s + ds).u1
                assert np.linalg.norm(u1b - u1a) < 0.1

    def test_curve_frame_accessor(self):
        curve = arclength_reparam(CubicBezier.line((0, 0, 0), (10, 0, 0)))
        frame = normal_frame(curve, 5.0)
        np.testing.assert_allclose(frame.u1, [0, 0, 1], atol=1e-12)


def straight_chain(start, direction, lengths, offset=(0.0, 0.0), start_param=0.0):
    """Chain of collinear segments; C-infinity by construction."""
    start = np.asarray(start, float)
    direction = np.asarray(direction, float)
    direction = direction / np.linalg.norm(direction)
    curves = []
    s0 = start_param
    pos = start
    for ln in lengths:
        end = pos + direction * ln
        curves.append(Curve(CubicBezier.line(pos, end), start_param=s0, offset=offset))
        pos = end
        s0 += ln
    return ChainedCurve(curves)


class TestParallelPoint:
    def test_center_lane_is_identity(self):
        chain = straight_chain((0, 0, 0), (1, 0, 0), [100.0])
        np.testing.assert_allclose(
            parallel_point(chain, 40.0, LaneCoord(0, 0), 10.0), [40, 0, 0], atol=1e-9
        )

    def test_lane_one_zero_offsets_up(self):
        # e1 = 2r*u1; with u1 = z the lane (1,0) sits 2r above the center.
        chain = straight_chain((5, 0, 50), (1, 0, 0), [100.0])
        pt = parallel_point(chain, 5.0, LaneCoord(1, 0), 10.0)
        np.testing.assert_allclose(pt, [10, 0, 70], atol=1e-9)

    def test_adjacent_lattice_step_is_two_r(self):
        r = 10.0
        chain = straight_chain((0, 0, 0), (1, 2, 0.2), [120.0])
        for s in np.linspace(1.0, 119.0, 25):
            for a in [LaneCoord(0, 0), LaneCoord(1, 0), LaneCoord(0, 1), LaneCoord(-1, 1)]:
                for b in hex_neighbors(a):
                    pa = parallel_point(chain, s, a, r)
                    pb = parallel_point(chain, s, b, r)
                    assert np.linalg.norm(pb - pa) == pytest.approx(2 * r, abs=1e-6)

    def test_distinct_lanes_separated_by_at_least_two_r(self):
        r = 10.0
        chain = straight_chain((0, 0, 0), (3, 1, 0.5), [80.0])
        coords = [LaneCoord(i, j) for i in range(-2, 3) for j in range(-2, 3)]
        for s in (10.0, 40.0, 70.0):
            pts = {c: parallel_point(chain, s, c, r) for c in coords}
            for a in coords:
                for b in coords:
                    if a != b:
                        assert np.linalg.norm(pts[a] - pts[b]) >= 2 * r - 1e-6


class TestParamConvert:
    def test_proportional_midpoint(self):
        src = straight_chain((0, 0, 0), (1, 0, 0), [100.0])
        dst = straight_chain((0, 0, 20), (1, 0, 0), [50.0])
        assert param_convert(src, dst, 50.0) == pytest.approx(25.0)

    def test_identity_when_equal(self):
        src = straight_chain((0, 0, 0), (1, 0, 0), [100.0])
        dst = straight_chain((0, 0, 20), (1, 0, 0), [100.0])
        assert param_convert(src, dst, 73.2) == pytest.approx(73.2)

    def test_offset_intervals(self):
        src = straight_chain((0, 0, 0), (1, 0, 0), [100.0], start_param=200.0)
        dst = straight_chain((0, 0, 20), (1, 0, 0), [50.0], start_param=150.0)
        assert param_convert(src, dst, 250.0) == pytest.approx(175.0)

    def test_two_segment_chain_oracle(self):
        # Per-curve conversion: the same split point must map segment-wise.
        src = straight_chain((0, 0, 0), (1, 0, 0), [60.0, 40.0])
        dst = straight_chain((0, 0, 20), (1, 0, 0), [30.0, 20.0])
        # inside first pair
        assert param_convert(src, dst, 30.0) == pytest.approx(15.0)
        # inside second pair: 20 m into a 40 m curve -> 10 m into a 20 m curve
        assert param_convert(src, dst, 80.0) == pytest.approx(40.0)

    def test_out_of_range(self):
        src = straight_chain((0, 0, 0), (1, 0, 0), [100.0])
        dst = straight_chain((0, 0, 20), (1, 0, 0), [50.0])
        with pytest.raises(ParamRangeError):
            param_convert(src, dst, 130.0)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=10.0, max_value=500.0),
        st.floats(min_value=10.0, max_value=500.0),
        st.floats(min_value=10.0, max_value=500.0),
        st.floats(min_value=10.0, max_value=500.0),
    )
    def test_endpoint_and_monotonicity_properties(self, frac, l1, l2, m1, m2):
        src = straight_chain((0, 0, 0), (1, 0, 0), [l1, l2])
        dst = straight_chain((0, 0, 20), (1, 0, 0), [m1, m2])
        # identity
        s = src.start_param + frac * src.length
        assert param_convert(src, src, s) == pytest.approx(s, abs=1e-9)
        # endpoints map to endpoints
        assert param_convert(src, dst, src.start_param) == pytest.approx(dst.start_param)
        assert param_convert(src, dst, src.end_param) == pytest.approx(dst.end_param)
        # strictly increasing
        s2 = min(s + 0.5, src.end_param)
        if s2 > s:
            assert param_convert(src, dst, s2) > param_convert(src, dst, s)


class TestAlongLaneDistance:
    def setup_method(self):
        self.src = straight_chain((0, 0, 0), (1, 0, 0), [100.0])
        self.dst = straight_chain((0, 0, 20), (1, 0, 0), [50.0])

    def test_same_lane(self):
        assert along_lane_distance(self.src, self.src, 40.0, 55.0) == pytest.approx(15.0)

    def test_converted_positions_coincide(self):
        assert along_lane_distance(self.src, self.dst, 50.0, 25.0) == pytest.approx(0.0)

    def test_other_behind(self):
        assert along_lane_distance(self.src, self.dst, 50.0, 20.0) == pytest.approx(-5.0)


def hop_distance_bfs(a, b):
    """Breadth-first search oracle over the six-neighbor lattice graph."""
    if a == b:
        return 0
    from collections import deque

    seen = {a}
    queue = deque([(a, 0)])
    while queue:
        node, dist = queue.popleft()
        for nxt in hex_neighbors(node):
            if nxt == b:
                return dist + 1
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, dist + 1))
    raise AssertionError("unreachable")


class TestHopDistance:
    def test_identity(self):
        assert hop_distance(LaneCoord(0, 0), LaneCoord(0, 0)) == 0

    def test_diagonal_neighbor(self):
        assert hop_distance(LaneCoord(0, 0), LaneCoord(1, -1)) == 1
        assert hop_distance_bfs(LaneCoord(0, 0), LaneCoord(1, -1)) == 1

    def test_opposite_signs(self):
        assert hop_distance(LaneCoord(2, -2), LaneCoord(-1, 1)) == 3
        assert hop_distance_bfs(LaneCoord(2, -2), LaneCoord(-1, 1)) == 3

    def test_exhaustive_against_bfs(self):
        # all pairs with |i|, |j| <= 6: formula equals shortest path length
        coords = [LaneCoord(i, j) for i in range(-6, 7) for j in range(-6, 7)]
        origin = LaneCoord(0, 0)
        # translation invariance lets one BFS sweep cover all pairs
        from collections import deque

        dist = {origin: 0}
        queue = deque([origin])
        while queue:
            node = queue.popleft()
            if max(abs(node.i), abs(node.j)) > 13:
                continue
            for nxt in hex_neighbors(node):
                if nxt not in dist:
                    dist[nxt] = dist[node] + 1
                    queue.append(nxt)
        for a in coords:
            for b in coords:
                delta = LaneCoord(a.i - b.i, a.j - b.j)
                assert hop_distance(a, b) == dist[delta], (a, b)

    @given(
        st.integers(-20, 20), st.integers(-20, 20),
        st.integers(-20, 20), st.integers(-20, 20),
        st.integers(-20, 20), st.integers(-20, 20),
    )
    def test_metric_properties(self, i1, j1, i2, j2, i3, j3):
        a, b, c = LaneCoord(i1, j1), LaneCoord(i2, j2), LaneCoord(i3, j3)
        assert hop_distance(a, b) == hop_distance(b, a)
        assert hop_distance(a, c) <= hop_distance(a, b) + hop_distance(b, c)
        assert hop_distance(a, b) >= 0
        assert (hop_distance(a, b) == 0) == (a == b)


class TestHexNeighbors:
    def test_origin_neighbors(self):
        expected = {(1, 0), (0, 1), (1, -1), (-1, 1), (-1, 0), (0, -1)}
        assert set(hex_neighbors(LaneCoord(0, 0))) == expected

    def test_all_at_hop_distance_one(self):
        a = LaneCoord(3, -2)
        for c in hex_neighbors(a):
            assert hop_distance(a, c) == 1

    def test_six_unique(self):
        result = hex_neighbors(LaneCoord(2, 5))
        assert len(result) == 6
        assert len(set(result)) == 6


class TestLatticeCoeffs:
    def test_step_norms(self):
        r = 10.0
        for coord in hex_neighbors(LaneCoord(0, 0)):
            f1, f2 = lattice_offset_coeffs(coord, r)
            assert math.hypot(f1, f2) == pytest.approx(2 * r, abs=1e-9)


class TestChainedCurve:
    def test_contiguity_enforced(self):
        c1 = Curve(CubicBezier.line((0, 0, 0), (50, 0, 0)), start_param=0.0)
        c2 = Curve(CubicBezier.line((50, 0, 0), (100, 0, 0)), start_param=60.0)
        with pytest.raises(ValueError):
            ChainedCurve([c1, c2])

    def test_point_lookup_across_curves(self):
        chain = straight_chain((0, 0, 0), (1, 0, 0), [60.0, 40.0])
        np.testing.assert_allclose(chain.point(60.0), [60, 0, 0], atol=1e-9)
        np.testing.assert_allclose(chain.point(75.0), [75, 0, 0], atol=1e-6)
        assert chain.curve_index(59.9) == 0
        assert chain.curve_index(60.1) == 1
