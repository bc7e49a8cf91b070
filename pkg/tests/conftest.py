"""Shared fixtures: small synthetic road systems."""

import numpy as np
import pytest

from skyways.build import connecting_ramp, straight_road
from skyways.drs import DroneRoadSystem
from skyways.geometry import LaneCoord


@pytest.fixture
def two_road_system():
    """Two straight roads joined by one connecting ramp.

    Road A runs east at z=60 and ends closed (its second half is a closed
    curve); road B runs north at z=110.  The ramp leaves A's lane (0,0) at
    param 200, before the closing point at 250, and merges into B's lane
    (0,0) at param 80.
    """
    road_a = straight_road(
        "road-a",
        start=(-500, 0, 60),
        direction=(1, 0, 0),
        segment_lengths=[250.0, 250.0],
        lane_coords=[(0, 0), (1, 0), (0, 1)],
        speed_limit=15.0,
        closed_for_all=[1],
    )
    road_b = straight_road(
        "road-b",
        start=(0, 100, 110),
        direction=(0, 1, 0),
        segment_lengths=[300.0, 300.0],
        lane_coords=[(0, 0), (1, 0)],
        speed_limit=15.0,
    )
    ramp = connecting_ramp(
        "ramp-ab",
        road_a,
        (0, 0),
        200.0,
        road_b,
        (0, 0),
        80.0,
        speed_limit=12.0,
    )
    return DroneRoadSystem("two-road", "1", [road_a, road_b], [ramp])


@pytest.fixture
def single_lane_road_system():
    road = straight_road(
        "solo",
        start=(0, 0, 50),
        direction=(1, 0, 0),
        segment_lengths=[500.0],
        lane_coords=[(0, 0)],
        speed_limit=15.0,
    )
    return DroneRoadSystem("solo", "1", [road])


@pytest.fixture
def closing_lane_system():
    """Two-lane road whose lane (1,0) closes at param 250; (0,0) stays open."""
    road = straight_road(
        "pinch",
        start=(0, 0, 60),
        direction=(1, 0, 0),
        segment_lengths=[250.0, 250.0],
        lane_coords=[(0, 0), (1, 0)],
        speed_limit=15.0,
        closed_curves={(1, 0): [1]},
    )
    return DroneRoadSystem("pinch", "1", [road])


@pytest.fixture
def deadlock_pair_inputs(closing_lane_system):
    """Inputs for two side-by-side drones on the closing lane.

    Both sit on lane (1,0) shortly before its closing point and each knows
    about the other from beacons; A leads B by 5 m.
    """
    from skyways.guidance import GuidanceParams, NeighborTable, compute_inputs
    from skyways.radio import Beacon

    def build(priority=True):
        drs = closing_lane_system
        lane = drs.roads["pinch"].lane(LaneCoord(1, 0))
        params = GuidanceParams(kappa2=30000.0, priority_enabled=priority)
        pos_a, pos_b = 230.0, 225.0
        speed_a, speed_b = 12.0, 12.0

        def table_with(other_id, other_pos, other_speed):
            table = NeighborTable()
            table.update(
                Beacon(
                    sender_id=other_id,
                    sequence_number=1,
                    position=lane.point(other_pos),
                    velocity=lane.tangent(other_pos) * other_speed,
                    road_id="pinch",
                    lane_coord=LaneCoord(1, 0),
                    lane_param=other_pos,
                ),
                now=0.0,
            )
            return table

        target = (LaneCoord(0, 0), 500.0)
        inputs_a = compute_inputs(
            drs, "pinch", lane, pos_a, speed_a, 12.0,
            table_with(2, pos_b, speed_b), params, target=target,
        )
        inputs_b = compute_inputs(
            drs, "pinch", lane, pos_b, speed_b, 12.0,
            table_with(1, pos_a, speed_a), params, target=target,
        )
        return inputs_a, inputs_b

    return build
