"""Programmatic construction of road systems.

These helpers play the role of a design tool: they lay out roads from
center-lane geometry (parallel lanes derived on the hexagonal lattice),
and fit single-curve ramps whose endpoints coincide with their attachment
points.  Used by the bundled-asset generator and by tests.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .drs import DEFAULT_RADIUS, DroneRoadSystem, Lane, Ramp, RampAttachment, Road
from .geometry import (
    ChainedCurve,
    CubicBezier,
    Curve,
    LaneCoord,
    lattice_offset_coeffs,
)


def _lane_identifier(road_id: str, coord: LaneCoord) -> str:
    return f"{road_id}-lane{coord.i:+d}{coord.j:+d}"


def road_from_center(
    identifier: str,
    center_beziers: Sequence[CubicBezier],
    lane_coords: Sequence[Tuple[int, int]],
    speed_limit: float,
    radius: float = DEFAULT_RADIUS,
    closed_curves: Optional[Dict[Tuple[int, int], Iterable[int]]] = None,
    closed_for_all: Iterable[int] = (),
    declared_lengths: Optional[Sequence[float]] = None,
) -> Road:
    """Build a road from its center-lane Bezier sequence.

    Every lane evaluates the same core curves at its own lattice offset;
    per-lane chain parameters follow each offset curve's own arc length.
    declared_lengths pins exact per-curve spans (e.g. round numbers for
    straight segments, where every lattice offset is a rigid translate).
    """
    closed_curves = closed_curves or {}
    lanes = []
    for raw in lane_coords:
        coord = LaneCoord(*raw)
        offset = lattice_offset_coeffs(coord, radius)
        curves = []
        s0 = 0.0
        for k, bez in enumerate(center_beziers):
            end = s0 + declared_lengths[k] if declared_lengths is not None else None
            curve = Curve(
                bez,
                start_param=s0,
                end_param=end,
                offset=offset,
                identifier=f"{_lane_identifier(identifier, coord)}-c{k}",
            )
            curves.append(curve)
            s0 = curve.end_param
        chain = ChainedCurve(curves, identifier=f"{_lane_identifier(identifier, coord)}-chain")
        closed = set(closed_for_all) | set(closed_curves.get(tuple(coord), ()))
        lanes.append(
            Lane(
                identifier=_lane_identifier(identifier, coord),
                lane_coord=coord,
                chain=chain,
                road_id=identifier,
                closed_curve_indices=closed,
                radius=radius,
            )
        )
    return Road(identifier, lanes, speed_limit=speed_limit, radius=radius)


def straight_road(
    identifier: str,
    start: Sequence[float],
    direction: Sequence[float],
    segment_lengths: Sequence[float],
    lane_coords: Sequence[Tuple[int, int]],
    speed_limit: float = 15.0,
    radius: float = DEFAULT_RADIUS,
    closed_curves: Optional[Dict[Tuple[int, int], Iterable[int]]] = None,
    closed_for_all: Iterable[int] = (),
) -> Road:
    """Straight road along a direction vector, chained from collinear curves."""
    start = np.asarray(start, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    beziers = []
    pos = start
    for ln in segment_lengths:
        end = pos + direction * ln
        beziers.append(CubicBezier.line(pos, end))
        pos = end
    return road_from_center(
        identifier,
        beziers,
        lane_coords,
        speed_limit=speed_limit,
        radius=radius,
        closed_curves=closed_curves,
        closed_for_all=closed_for_all,
        declared_lengths=list(segment_lengths),
    )


def connecting_ramp(
    identifier: str,
    entry_road: Road,
    entry_coord: Tuple[int, int],
    entry_param: float,
    exit_road: Road,
    exit_coord: Tuple[int, int],
    exit_param: float,
    speed_limit: float = 12.0,
    arm_fraction: float = 1.0 / 3.0,
    bow: Sequence[float] = (0.0, 0.0, 0.0),
) -> Ramp:
    """Single-curve connecting ramp fitted between two lane points.

    The cubic's end tangents align with the lane directions at the
    attachment points, so drones keep heading while transitioning.  A bow
    vector displaces both inner control points, steering the mid-flight
    path clear of other ramps without touching the attachment geometry.
    """
    entry_coord = LaneCoord(*entry_coord)
    exit_coord = LaneCoord(*exit_coord)
    src_lane = entry_road.lane(entry_coord)
    dst_lane = exit_road.lane(exit_coord)
    if src_lane is None or dst_lane is None:
        raise ValueError("attachment lane does not exist")
    p1 = src_lane.point(entry_param)
    t1 = src_lane.tangent(entry_param)
    p2 = dst_lane.point(exit_param)
    t2 = dst_lane.tangent(exit_param)
    arm = float(np.linalg.norm(p2 - p1)) * arm_fraction
    bow = np.asarray(bow, dtype=float)
    bez = CubicBezier([p1, p1 + t1 * arm + bow, p2 - t2 * arm + bow, p2])
    curve = Curve(bez, start_param=0.0, identifier=f"{identifier}-c0")
    chain = ChainedCurve([curve], identifier=f"{identifier}-chain")
    lane = Lane(
        identifier=f"{identifier}-lane",
        lane_coord=LaneCoord(0, 0),
        chain=chain,
        road_id=f"{identifier}-road",
        radius=entry_road.radius,
    )
    return Ramp(
        identifier,
        lane,
        speed_limit=speed_limit,
        entry=RampAttachment(entry_road.identifier, entry_coord, entry_param),
        exit=RampAttachment(exit_road.identifier, exit_coord, exit_param),
        road_identifier=f"{identifier}-road",
    )


def on_ramp(
    identifier: str,
    exit_road: Road,
    exit_coord: Tuple[int, int],
    exit_param: float,
    approach: Sequence[float],
    speed_limit: float = 12.0,
) -> Ramp:
    """On-ramp from a free-space approach point onto a lane point."""
    exit_coord = LaneCoord(*exit_coord)
    dst_lane = exit_road.lane(exit_coord)
    p2 = dst_lane.point(exit_param)
    t2 = dst_lane.tangent(exit_param)
    p1 = np.asarray(approach, dtype=float)
    arm = float(np.linalg.norm(p2 - p1)) / 3.0
    bez = CubicBezier([p1, p1 + (p2 - p1) / 3.0, p2 - t2 * arm, p2])
    curve = Curve(bez, start_param=0.0, identifier=f"{identifier}-c0")
    lane = Lane(
        identifier=f"{identifier}-lane",
        lane_coord=LaneCoord(0, 0),
        chain=ChainedCurve([curve], identifier=f"{identifier}-chain"),
        road_id=f"{identifier}-road",
        radius=exit_road.radius,
    )
    return Ramp(
        identifier,
        lane,
        speed_limit=speed_limit,
        exit=RampAttachment(exit_road.identifier, exit_coord, exit_param),
        road_identifier=f"{identifier}-road",
    )


def off_ramp(
    identifier: str,
    entry_road: Road,
    entry_coord: Tuple[int, int],
    entry_param: float,
    departure: Sequence[float],
    speed_limit: float = 12.0,
) -> Ramp:
    """Off-ramp from a lane point to a free-space departure point."""
    entry_coord = LaneCoord(*entry_coord)
    src_lane = entry_road.lane(entry_coord)
    p1 = src_lane.point(entry_param)
    t1 = src_lane.tangent(entry_param)
    p2 = np.asarray(departure, dtype=float)
    arm = float(np.linalg.norm(p2 - p1)) / 3.0
    bez = CubicBezier([p1, p1 + t1 * arm, p2 - (p2 - p1) / 3.0, p2])
    curve = Curve(bez, start_param=0.0, identifier=f"{identifier}-c0")
    lane = Lane(
        identifier=f"{identifier}-lane",
        lane_coord=LaneCoord(0, 0),
        chain=ChainedCurve([curve], identifier=f"{identifier}-chain"),
        road_id=f"{identifier}-road",
        radius=entry_road.radius,
    )
    return Ramp(
        identifier,
        lane,
        speed_limit=speed_limit,
        entry=RampAttachment(entry_road.identifier, entry_coord, entry_param),
        road_identifier=f"{identifier}-road",
    )
