#!/usr/bin/env python3
"""Generate the bundled intersection road system asset.

Layout: four straight roads at separated altitudes around a central void,
two inbound (west and south approaches, 8 + 7 lanes) whose lanes close
shortly after their ramp attachments, and two outbound (east and north,
3 lanes each, open to their ends).  Seven connecting ramps cross the
center.  Every lane start is an entry; the six outbound lane ends are the
exits, so all west/south traffic must take a connecting ramp.

Run from the repository root:  python3 scripts/build_intersection.py
"""

import sys
from itertools import combinations
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from skyways.build import connecting_ramp, straight_road
from skyways.drs import DroneRoadSystem, serialize_drs, validate_drs
from skyways.geometry import LaneCoord
from skyways.routing import NoRouteError, build_route_graph, plan_path

ROAD_SPEED = 15.0
RAMP_SPEED = 10.0

# Inbound chains: long approach, then 5 m blocks so each ramp-attached lane
# can close right after its attachment; the shared tail is closed for all.
WEST_BOUNDS = [0, 250, 450, 455, 460, 465, 470, 475, 480, 485, 640]
SOUTH_BOUNDS = [0, 250, 450, 455, 465, 470, 480, 485, 640]

WEST_LANES = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1), (1, 1)]
SOUTH_LANES = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)]
OUT_LANES = [(0, 0), (1, 0), (0, 1)]

# (ramp id, entry road, entry lane, entry param, exit road, exit lane, exit param)
RAMPS = [
    ("ramp-we-a", "west-in", (1, 0), 450.0, "east-out", (0, 0), 90.0),
    ("ramp-wn-a", "west-in", (-1, 0), 460.0, "north-out", (0, 0), 95.0),
    ("ramp-we-b", "west-in", (0, -1), 470.0, "east-out", (1, 0), 120.0),
    ("ramp-wn-b", "west-in", (0, 1), 480.0, "north-out", (1, 0), 125.0),
    ("ramp-se-a", "south-in", (0, 0), 450.0, "east-out", (0, 1), 135.0),
    ("ramp-sn-a", "south-in", (1, 0), 465.0, "north-out", (0, 1), 110.0),
    ("ramp-sn-b", "south-in", (-1, 1), 480.0, "north-out", (0, 0), 230.0),
]

# Mid-curve displacements keeping the seven crossings of the central void
# at least ~11 m apart (found by a clearance-maximizing search).
BOWS = {
    "ramp-we-a": (15.0, 45.0, -30.0),
    "ramp-wn-a": (0.0, -45.0, 0.0),
}

HEADER = (
    " Intersection system: four main roads extending west/south (inbound, "
    "lanes close after their ramp attachments) and east/north (outbound), "
    "linked by seven connecting ramps; 21 lanes total serve as entries, the "
    "six outbound lane ends as exits, so west/south traffic must cross the "
    "center through a ramp. Geometry (road lengths, altitudes, attachment "
    "parameters, ramp shapes) is a modeling choice of this artifact; the "
    "road/ramp/lane counts and the forced-ramp topology are the modeled "
    "constraints. "
)


def closures(bounds, attach_params, attach_of_lane):
    """Per-lane closed curve indices: everything after the lane's attach
    (plus a 5 m crossing buffer), or after the shared tail for the rest."""
    def close_from(param):
        start = bounds.index(param)
        return set(range(start, len(bounds) - 1))

    tail = bounds[-2]
    out = {}
    for lane, attach in attach_of_lane.items():
        out[lane] = close_from(attach + 5.0)
    default = close_from(tail)
    return out, default


def build_system() -> DroneRoadSystem:
    west_attaches = {(1, 0): 450.0, (-1, 0): 460.0, (0, -1): 470.0, (0, 1): 480.0}
    south_attaches = {(0, 0): 450.0, (1, 0): 465.0, (-1, 1): 480.0}
    west_closed, west_default = closures(WEST_BOUNDS, None, west_attaches)
    south_closed, south_default = closures(SOUTH_BOUNDS, None, south_attaches)
    for lane in WEST_LANES:
        west_closed.setdefault(lane, west_default)
    for lane in SOUTH_LANES:
        south_closed.setdefault(lane, south_default)

    west = straight_road(
        "west-in",
        start=(-700.0, 0.0, 60.0),
        direction=(1, 0, 0),
        segment_lengths=np.diff(WEST_BOUNDS).tolist(),
        lane_coords=WEST_LANES,
        speed_limit=ROAD_SPEED,
        closed_curves=west_closed,
    )
    south = straight_road(
        "south-in",
        start=(0.0, -700.0, 110.0),
        direction=(0, 1, 0),
        segment_lengths=np.diff(SOUTH_BOUNDS).tolist(),
        lane_coords=SOUTH_LANES,
        speed_limit=ROAD_SPEED,
        closed_curves=south_closed,
    )
    east = straight_road(
        "east-out",
        start=(60.0, 0.0, 160.0),
        direction=(1, 0, 0),
        segment_lengths=[320.0, 320.0],
        lane_coords=OUT_LANES,
        speed_limit=ROAD_SPEED,
    )
    north = straight_road(
        "north-out",
        start=(0.0, 60.0, 210.0),
        direction=(0, 1, 0),
        segment_lengths=[320.0, 320.0],
        lane_coords=OUT_LANES,
        speed_limit=ROAD_SPEED,
    )
    roads = {r.identifier: r for r in (west, south, east, north)}
    ramps = [
        connecting_ramp(
            name, roads[src], src_lane, src_param, roads[dst], dst_lane, dst_param,
            speed_limit=RAMP_SPEED, bow=BOWS.get(name, (0.0, 0.0, 0.0)),
        )
        for name, src, src_lane, src_param, dst, dst_lane, dst_param in RAMPS
    ]
    return DroneRoadSystem("intersection", "1", list(roads.values()), ramps)


def check(drs: DroneRoadSystem) -> None:
    findings = validate_drs(drs)
    for f in findings:
        print("FINDING:", f)
    assert not findings, "validator must be clean"

    graph = build_route_graph(drs)
    entries = drs.entry_points()
    exits = drs.exit_points()
    print(f"entries: {len(entries)}, exits: {len(exits)}")
    assert len(entries) == 21

    reachable_pairs = 0
    ramp_pairs = 0
    for ap in entries:
        reached = 0
        for ep in exits:
            try:
                plan = plan_path(
                    graph, (ap.lane.identifier, ap.param), (ep.lane.identifier, ep.param)
                )
            except NoRouteError:
                continue
            reached += 1
            reachable_pairs += 1
            if plan.uses_ramp():
                ramp_pairs += 1
        assert reached >= 1, f"entry {ap.lane.identifier} reaches no exit"
    frac = ramp_pairs / reachable_pairs
    print(f"reachable pairs: {reachable_pairs}, via ramp: {ramp_pairs} ({frac:.1%})")
    assert frac > 0.8

    # clearance between ramps, and between ramps and unrelated road lanes
    samples = {}
    for ramp in drs.ramps.values():
        chain = ramp.lane.chain
        ss = np.linspace(chain.start_param, chain.end_param, 220)
        samples[ramp.identifier] = np.stack([chain.point(s) for s in ss])
    worst_rr = np.inf
    for a, b in combinations(samples, 2):
        d = np.min(
            np.linalg.norm(samples[a][:, None, :] - samples[b][None, :, :], axis=-1)
        )
        worst_rr = min(worst_rr, d)
        if d < 10.0:
            print(f"ramp clearance {a} vs {b}: {d:.2f} m")
    print(f"min ramp-ramp distance: {worst_rr:.2f} m")
    assert worst_rr > 10.0

    worst_rl = np.inf
    for ramp in drs.ramps.values():
        own_roads = {ramp.entry.road_id, ramp.exit.road_id}
        pts = samples[ramp.identifier]
        for road in drs.roads.values():
            if road.identifier in own_roads:
                continue
            for lane in road.lanes:
                ss = np.linspace(lane.chain.start_param, lane.chain.end_param, 160)
                lane_pts = np.stack([lane.point(s) for s in ss])
                d = np.min(
                    np.linalg.norm(pts[:, None, :] - lane_pts[None, :, :], axis=-1)
                )
                worst_rl = min(worst_rl, d)
    print(f"min ramp to unrelated-lane distance: {worst_rl:.2f} m")
    assert worst_rl > 20.0


def main() -> None:
    drs = build_system()
    check(drs)
    out = Path(__file__).resolve().parent.parent / "src" / "skyways" / "assets"
    out.mkdir(parents=True, exist_ok=True)
    path = out / "intersection.drsx"
    path.write_text(serialize_drs(drs, header_comment=HEADER), encoding="utf-8")
    print(f"wrote {path} ({path.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
