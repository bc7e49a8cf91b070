"""Parametric curve geometry for drone road systems.

Curves are cubic Beziers carried in an arc-length parameterization: the
curve parameter measures travelled meters, offset by a start value so that
several curves can be chained into one lane whose parameter runs across the
whole chain.  Parallel lanes sit on a hexagonal lattice in the moving frame
of the center curve and are evaluated on the fly from it, so nothing here
ever fits offset curves.

All functions are pure and operate on immutable inputs; they are safe to
call concurrently.
"""

from __future__ import annotations

import bisect
import math
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

Z_UP = np.array([0.0, 0.0, 1.0])

# A tangent is "vertical" when its unit z component exceeds this; the frame
# construction degenerates there because the projection of z onto the normal
# plane vanishes.
VERTICAL_TANGENT_LIMIT = 1.0 - 1e-9

_MIN_SPEED = 1e-9  # below this a curve counts as degenerate


class GeometryError(Exception):
    """Base class for geometry failures."""


class DegenerateCurveError(GeometryError):
    """Curve derivative vanishes somewhere; not a regular curve."""


class FrameUndefinedError(GeometryError):
    """Moving frame undefined (normal plane parallel to the x/y plane)."""


class ParamRangeError(GeometryError):
    """Parameter outside the curve or chain interval."""


class LaneCoord(NamedTuple):
    """Hexagonal lattice coordinate of a lane; (0, 0) is the center lane."""

    i: int
    j: int

    def __str__(self) -> str:
        return f"({self.i},{self.j})"


def hop_distance(a: LaneCoord, b: LaneCoord) -> int:
    """Minimum number of single-lane switches between two lattice positions."""
    di = a[0] - b[0]
    dj = a[1] - b[1]
    if di * dj >= 0:
        return abs(di) + abs(dj)
    return max(abs(di), abs(dj))


def hex_neighbors(a: LaneCoord) -> Tuple[LaneCoord, ...]:
    """The six lattice positions at hop distance one, in a fixed order."""
    i, j = a
    return (
        LaneCoord(i + 1, j),
        LaneCoord(i - 1, j),
        LaneCoord(i, j + 1),
        LaneCoord(i, j - 1),
        LaneCoord(i + 1, j - 1),
        LaneCoord(i - 1, j + 1),
    )


def lattice_offset_coeffs(coord: LaneCoord, radius: float) -> Tuple[float, float]:
    """Frame coefficients (f1, f2) of a lane's offset from the center lane.

    The lattice basis is e1 = 2r*u1 and e2 = 2r*cos(60)*u1 + 2r*sin(60)*u2,
    so lane (i, j) sits at f1*u1 + f2*u2 with f1 = 2r*i + r*j and
    f2 = sqrt(3)*r*j.  Adjacent lanes are exactly 2r apart.
    """
    i, j = coord
    return (2.0 * radius * i + radius * j, math.sqrt(3.0) * radius * j)


class Frame(NamedTuple):
    """Orthonormal basis (u1, u2) of the plane normal to a curve tangent."""

    u1: np.ndarray
    u2: np.ndarray


def normal_frame_of_tangent(tangent: np.ndarray) -> Frame:
    """Build the normal-plane frame for a tangent vector.

    An auxiliary in-plane vector w1 is found by solving the plane equation
    with the largest-magnitude tangent component as pivot, w2 = v x w1
    completes the auxiliary basis, and u1 is the normalized projection of
    the +z unit vector onto the normal plane (so lanes stacked upwards get a
    positive u1 coefficient).  u2 = v x u1.

    Raises FrameUndefinedError for near-vertical tangents and
    DegenerateCurveError for near-zero tangents.
    """
    v = np.asarray(tangent, dtype=float)
    n = float(np.linalg.norm(v))
    if n < _MIN_SPEED:
        raise DegenerateCurveError("tangent vector is (near) zero")
    v = v / n
    if abs(v[2]) > VERTICAL_TANGENT_LIMIT:
        raise FrameUndefinedError(
            "tangent is vertical; normal plane parallel to the x/y plane"
        )
    pivot = int(np.argmax(np.abs(v)))
    o1, o2 = [k for k in range(3) if k != pivot]
    w1 = np.zeros(3)
    w1[o1] = 1.0
    w1[pivot] = -v[o1] / v[pivot]
    w1 /= np.linalg.norm(w1)
    w2 = np.cross(v, w1)
    w2 /= np.linalg.norm(w2)
    u1 = float(Z_UP @ w1) * w1 + float(Z_UP @ w2) * w2
    u1 /= np.linalg.norm(u1)
    u2 = np.cross(v, u1)
    return Frame(u1, u2)


class CubicBezier:
    """Cubic Bezier curve in its native parameter t in [0, 1]."""

    def __init__(self, control_points: Sequence[Sequence[float]]):
        pts = np.asarray(control_points, dtype=float)
        if pts.shape != (4, 3):
            raise ValueError(f"expected 4 control points in 3D, got shape {pts.shape}")
        self.control = pts
        p0, p1, p2, p3 = pts
        # power-basis coefficients
        self._c0 = p0
        self._c1 = 3.0 * (p1 - p0)
        self._c2 = 3.0 * (p2 - 2.0 * p1 + p0)
        self._c3 = p3 - 3.0 * p2 + 3.0 * p1 - p0

    def point(self, t):
        t = np.asarray(t, dtype=float)
        tt = t[..., None]
        return self._c0 + tt * (self._c1 + tt * (self._c2 + tt * self._c3))

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        tt = t[..., None]
        return self._c1 + tt * (2.0 * self._c2 + tt * (3.0 * self._c3))

    def acceleration(self, t):
        t = np.asarray(t, dtype=float)
        tt = t[..., None]
        return 2.0 * self._c2 + 6.0 * tt * self._c3

    @staticmethod
    def line(start: Sequence[float], end: Sequence[float]) -> "CubicBezier":
        """Straight segment expressed as a (uniform-speed) cubic Bezier."""
        a = np.asarray(start, dtype=float)
        b = np.asarray(end, dtype=float)
        return CubicBezier([a, a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0, b])


def _frames_at(bezier: CubicBezier, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized unit tangent and frame vectors of the core curve.

    Returns (vhat, u1, u2), each of shape (len(t), 3).  Uses the direct
    projection form of the frame, which equals the pivot construction.
    """
    vel = bezier.velocity(t)
    speed = np.linalg.norm(vel, axis=-1, keepdims=True)
    if np.any(speed < _MIN_SPEED):
        raise DegenerateCurveError("curve derivative vanishes at a sample point")
    vhat = vel / speed
    vz = vhat[..., 2:3]
    if np.any(np.abs(vz) > VERTICAL_TANGENT_LIMIT):
        raise FrameUndefinedError("vertical tangent encountered on curve")
    proj = Z_UP - vz * vhat  # z minus its tangential component
    pn = np.linalg.norm(proj, axis=-1, keepdims=True)
    u1 = proj / pn
    u2 = np.cross(vhat, u1)
    return vhat, u1, u2


class Curve:
    """Arc-length parameterized curve segment of a lane.

    Wraps a cubic Bezier core plus an optional hexagonal-lattice offset that
    is evaluated in the moving frame of the core.  Construction integrates
    the mapped speed with adaptive Gauss-Legendre quadrature to build a
    cumulative-length table, inverted with a monotone cubic so that
    ``point(s)`` for s in [a, b] lands at travelled distance s - a.
    """

    def __init__(
        self,
        bezier: CubicBezier,
        start_param: float = 0.0,
        offset: Tuple[float, float] = (0.0, 0.0),
        end_param: Optional[float] = None,
        identifier: Optional[str] = None,
        quad_tol: float = 1e-6,
    ):
        self.bezier = bezier
        self.offset = (float(offset[0]), float(offset[1]))
        self.identifier = identifier
        self._has_offset = self.offset != (0.0, 0.0)
        try:
            t_knots, ell_knots = _cumulative_length_table(self, quad_tol)
        except GeometryError as exc:
            raise type(exc)(f"curve {identifier or '<anonymous>'}: {exc}") from None
        self.length = float(ell_knots[-1])
        if self.length < _MIN_SPEED:
            raise DegenerateCurveError(
                f"curve {identifier or '<anonymous>'} has (near) zero length"
            )
        self.start_param = float(start_param)
        if end_param is None:
            self.end_param = self.start_param + self.length
        else:
            self.end_param = float(end_param)
            if self.end_param <= self.start_param:
                raise ValueError("end_param must exceed start_param")
        self._t_of_ell = PchipInterpolator(ell_knots, t_knots)
        self._ell_of_t = PchipInterpolator(t_knots, ell_knots)

    # -- mapped geometry in the native parameter ------------------------------

    def mapped_point(self, t):
        base = self.bezier.point(t)
        if not self._has_offset:
            return base
        _, u1, u2 = _frames_at(self.bezier, np.atleast_1d(np.asarray(t, float)))
        f1, f2 = self.offset
        out = np.atleast_2d(base) + f1 * u1 + f2 * u2
        return out[0] if np.ndim(t) == 0 else out

    def mapped_velocity(self, t):
        vel = self.bezier.velocity(t)
        if not self._has_offset:
            return vel
        t1 = np.atleast_1d(np.asarray(t, float))
        vel = np.atleast_2d(self.bezier.velocity(t1))
        acc = np.atleast_2d(self.bezier.acceleration(t1))
        speed = np.linalg.norm(vel, axis=-1, keepdims=True)
        if np.any(speed < _MIN_SPEED):
            raise DegenerateCurveError("curve derivative vanishes at a sample point")
        vhat = vel / speed
        # d vhat / dt
        vdot_a = np.sum(vhat * acc, axis=-1, keepdims=True)
        vhat_d = (acc - vhat * vdot_a) / speed
        vz = vhat[..., 2:3]
        vz_d = vhat_d[..., 2:3]
        proj = Z_UP - vz * vhat
        proj_d = -(vz_d * vhat + vz * vhat_d)
        pn = np.linalg.norm(proj, axis=-1, keepdims=True)
        u1 = proj / pn
        pdot = np.sum(u1 * proj_d, axis=-1, keepdims=True)
        u1_d = (proj_d - u1 * pdot) / pn
        u2_d = np.cross(vhat_d, u1) + np.cross(vhat, u1_d)
        f1, f2 = self.offset
        out = vel + f1 * u1_d + f2 * u2_d
        return out[0] if np.ndim(t) == 0 else out

    # -- arc-length interface --------------------------------------------------

    @property
    def a(self) -> float:
        return self.start_param

    @property
    def b(self) -> float:
        return self.end_param

    def _check_param(self, s: float, tol: float = 1e-6) -> float:
        if s < self.start_param - tol or s > self.end_param + tol:
            raise ParamRangeError(
                f"parameter {s} outside [{self.start_param}, {self.end_param}]"
            )
        return min(max(s, self.start_param), self.end_param)

    def param_to_t(self, s: float) -> float:
        s = self._check_param(s)
        # Rescale through the declared interval so the endpoints map exactly
        # even when (b - a) and the integrated length differ in the last ulp.
        frac = (s - self.start_param) / (self.end_param - self.start_param)
        return float(self._t_of_ell(frac * self.length))

    def travelled(self, t: float) -> float:
        """Integrated length from the curve start to native parameter t."""
        return float(self._ell_of_t(t))

    def point(self, s: float) -> np.ndarray:
        return np.asarray(self.mapped_point(self.param_to_t(s)), dtype=float)

    def tangent(self, s: float) -> np.ndarray:
        v = np.asarray(self.mapped_velocity(self.param_to_t(s)), dtype=float)
        return v / np.linalg.norm(v)

    def frame(self, s: float) -> Frame:
        """Moving frame of the core curve at parameter s."""
        t = self.param_to_t(s)
        _, u1, u2 = _frames_at(self.bezier, np.atleast_1d(t))
        return Frame(u1[0], u2[0])

    def start_point(self) -> np.ndarray:
        return np.asarray(self.mapped_point(0.0), dtype=float)

    def end_point(self) -> np.ndarray:
        return np.asarray(self.mapped_point(1.0), dtype=float)

    def with_offset(self, offset: Tuple[float, float], start_param: float,
                    identifier: Optional[str] = None) -> "Curve":
        """Same core curve, different lattice offset and start parameter."""
        return Curve(self.bezier, start_param=start_param, offset=offset,
                     identifier=identifier)


_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


def _segment_length(curve: Curve, t0: float, t1: float, rule) -> float:
    nodes, weights = rule
    half = 0.5 * (t1 - t0)
    mid = 0.5 * (t0 + t1)
    ts = mid + half * nodes
    speeds = np.linalg.norm(np.atleast_2d(curve.mapped_velocity(ts)), axis=-1)
    if np.any(speeds < _MIN_SPEED):
        raise DegenerateCurveError("curve derivative vanishes at a sample point")
    return float(half * np.sum(weights * speeds))


def _segment_stats(curve: Curve, t0: float, t1: float) -> Tuple[float, float, float]:
    """GL-16 length plus min/max mapped speed over the segment."""
    nodes, weights = _GL16
    half = 0.5 * (t1 - t0)
    mid = 0.5 * (t0 + t1)
    ts = np.concatenate([[t0], mid + half * nodes, [t1]])
    speeds = np.linalg.norm(np.atleast_2d(curve.mapped_velocity(ts)), axis=-1)
    if np.any(speeds < _MIN_SPEED):
        raise DegenerateCurveError("curve derivative vanishes at a sample point")
    length = float(half * np.sum(weights * speeds[1:-1]))
    return length, float(speeds.min()), float(speeds.max())


def _cumulative_length_table(curve: Curve, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Adaptive cumulative-length knots (t_k, ell_k) over t in [0, 1].

    Segments are split until two Gauss-Legendre orders agree within the
    requested relative tolerance and the mapped speed varies by no more than
    a few percent within each segment (so the monotone-cubic inverse stays
    accurate where the native speed changes quickly), then further until no
    segment carries more than 1/48 of the total length.
    """
    total_est = sum(
        _segment_length(curve, k / 8.0, (k + 1) / 8.0, _GL16) for k in range(8)
    )
    if total_est < _MIN_SPEED:
        raise DegenerateCurveError("curve has (near) zero length")
    abs_tol = tol * total_est

    pieces: List[Tuple[float, float, float]] = []

    def refine(t0: float, t1: float, depth: int) -> None:
        coarse = _segment_length(curve, t0, t1, _GL8)
        fine, spd_min, spd_max = _segment_stats(curve, t0, t1)
        quad_ok = abs(fine - coarse) <= abs_tol * max(t1 - t0, 1e-12)
        speed_ok = spd_max <= spd_min * 1.005
        if depth >= 14 or (quad_ok and speed_ok):
            pieces.append((t0, t1, fine))
            return
        tm = 0.5 * (t0 + t1)
        refine(t0, tm, depth + 1)
        refine(tm, t1, depth + 1)

    for k in range(8):
        refine(k / 8.0, (k + 1) / 8.0, 0)

    # enforce knot density for the inverse lookup
    max_piece = total_est / 48.0
    dense: List[Tuple[float, float, float]] = []
    for t0, t1, ln in pieces:
        if ln <= max_piece:
            dense.append((t0, t1, ln))
            continue
        parts = int(math.ceil(ln / max_piece))
        sub = np.linspace(t0, t1, parts + 1)
        for u0, u1 in zip(sub[:-1], sub[1:]):
            dense.append((u0, u1, _segment_length(curve, u0, u1, _GL16)))

    dense.sort(key=lambda p: p[0])
    t_knots = np.empty(len(dense) + 1)
    ell_knots = np.empty(len(dense) + 1)
    t_knots[0] = 0.0
    ell_knots[0] = 0.0
    for idx, (t0, t1, ln) in enumerate(dense):
        t_knots[idx + 1] = t1
        ell_knots[idx + 1] = ell_knots[idx] + ln
    if np.any(np.diff(ell_knots) <= 0.0):
        raise DegenerateCurveError("cumulative length not strictly increasing")
    return t_knots, ell_knots


def curve_length(curve) -> float:
    """Length of a curve (integrated norm of the derivative).

    Accepts an arc-length Curve (cached length) or a raw CubicBezier, which
    is integrated on the fly.
    """
    if isinstance(curve, Curve):
        return curve.length
    if isinstance(curve, CubicBezier):
        return Curve(curve).length
    raise TypeError(f"unsupported curve type {type(curve)!r}")


def arclength_reparam(
    bezier: CubicBezier,
    start_param: float = 0.0,
    offset: Tuple[float, float] = (0.0, 0.0),
    identifier: Optional[str] = None,
) -> Curve:
    """Arc-length parameterized view of a Bezier (plus optional lane offset)."""
    return Curve(bezier, start_param=start_param, offset=offset, identifier=identifier)


class ChainedCurve:
    """Several curves joined smoothly, sharing one running arc-length axis.

    Curve k covers [a_k, b_k] with a_k equal to the summed lengths of the
    curves before it (offset by the chain start), so a parameter value
    measures travelled distance across the whole chain.
    """

    def __init__(self, curves: Sequence[Curve], identifier: Optional[str] = None):
        if not curves:
            raise ValueError("chained curve needs at least one curve")
        self.curves: Tuple[Curve, ...] = tuple(curves)
        self.identifier = identifier
        for prev, nxt in zip(self.curves[:-1], self.curves[1:]):
            if abs(prev.end_param - nxt.start_param) > 1e-6:
                raise ValueError(
                    f"chain {identifier or '<anonymous>'}: curve parameters not "
                    f"contiguous at {prev.end_param} vs {nxt.start_param}"
                )
        self.start_param = self.curves[0].start_param
        self.end_param = self.curves[-1].end_param
        self._bounds = [c.end_param for c in self.curves[:-1]]

    @property
    def length(self) -> float:
        return self.end_param - self.start_param

    def curve_index(self, s: float, tol: float = 1e-6) -> int:
        if s < self.start_param - tol or s > self.end_param + tol:
            raise ParamRangeError(
                f"parameter {s} outside chain [{self.start_param}, {self.end_param}]"
            )
        return bisect.bisect_right(self._bounds, s)

    def curve_at(self, s: float) -> Curve:
        return self.curves[self.curve_index(s)]

    def point(self, s: float) -> np.ndarray:
        c = self.curve_at(s)
        return c.point(min(max(s, c.start_param), c.end_param))

    def tangent(self, s: float) -> np.ndarray:
        c = self.curve_at(s)
        return c.tangent(min(max(s, c.start_param), c.end_param))

    def frame(self, s: float) -> Frame:
        c = self.curve_at(s)
        return c.frame(min(max(s, c.start_param), c.end_param))

    def junctions(self) -> Iterable[Tuple[Curve, Curve]]:
        return zip(self.curves[:-1], self.curves[1:])


def normal_frame(curve, s: float) -> Frame:
    """Frame of the normal plane at parameter s of a curve or chain."""
    return curve.frame(s)


def parallel_point(central: ChainedCurve, s: float, lane: LaneCoord, radius: float) -> np.ndarray:
    """3D point of lane (i, j) at parameter s of the central chain.

    Evaluates gamma(s) + i*e1 + j*e2 in the moving frame at s.
    """
    base = central.point(s)
    if lane == (0, 0):
        return base
    frame = central.frame(s)
    f1, f2 = lattice_offset_coeffs(lane, radius)
    return base + f1 * frame.u1 + f2 * frame.u2


def param_convert(src: ChainedCurve, dst: ChainedCurve, s: float) -> float:
    """Convert a parameter between two parallel chains, per corresponding curve.

    Parallel lanes are built curve by curve from the same center chain, so
    they share a sub-division; the conversion s' = L'*(s-a)/L + a' is applied
    to the pair of corresponding curves.
    """
    if len(src.curves) != len(dst.curves):
        raise ValueError("chains do not share a sub-division; cannot convert")
    k = src.curve_index(s)
    cs = src.curves[k]
    cd = dst.curves[k]
    s = min(max(s, cs.start_param), cs.end_param)
    span_src = cs.end_param - cs.start_param
    span_dst = cd.end_param - cd.start_param
    return cd.start_param + (s - cs.start_param) * (span_dst / span_src)


def along_lane_distance(src: ChainedCurve, dst: ChainedCurve, own_s: float, other_s: float) -> float:
    """Signed distance along dst from our converted position to another point.

    Positive means the other point lies ahead of us.
    """
    if other_s < dst.start_param - 1e-6 or other_s > dst.end_param + 1e-6:
        raise ParamRangeError(f"parameter {other_s} outside destination chain")
    return other_s - param_convert(src, dst, own_s)
