"""Parsing, serialization, and validation of road system descriptions."""

import numpy as np
import pytest

from skyways.build import connecting_ramp, on_ramp, straight_road
from skyways.drs import (
    DroneRoadSystem,
    DrsParseError,
    Lane,
    parse_drs,
    serialize_drs,
    validate_drs,
)
from skyways.geometry import LaneCoord

THREE_LANE_ROAD_WITH_ONRAMP = """<?xml version='1.0' encoding='utf-8'?>
<DroneRoadSystem Name="mini" Version="1">
  <Road Identifier="main" SpeedLimit="15" Radius="10">
    <Lane Identifier="main-0-0" LaneIdentifier="0,0" RoadIdentifier="main">
      <ChainedCurve Identifier="cc-0" StartParameter="0.0" EndParameter="300.0">
        <Curve Identifier="c0" Type="CubicBezier" StartParameter="0.0" EndParameter="300.0"
               StartPoint="0,0,50" EndPoint="300,0,50">
          <ControlPoint x="0" y="0" z="50"/>
          <ControlPoint x="100" y="0" z="50"/>
          <ControlPoint x="200" y="0" z="50"/>
          <ControlPoint x="300" y="0" z="50"/>
        </Curve>
      </ChainedCurve>
    </Lane>
    <Lane Identifier="main-1-0" LaneIdentifier="1,0" RoadIdentifier="main">
      <ChainedCurve Identifier="cc-1" StartParameter="0.0" EndParameter="300.0">
        <Curve Identifier="c1" Type="CubicBezier" StartParameter="0.0" EndParameter="300.0"
               StartPoint="0,0,70" EndPoint="300,0,70">
          <ControlPoint x="0" y="0" z="50"/>
          <ControlPoint x="100" y="0" z="50"/>
          <ControlPoint x="200" y="0" z="50"/>
          <ControlPoint x="300" y="0" z="50"/>
        </Curve>
      </ChainedCurve>
    </Lane>
    <Lane Identifier="main-0-1" LaneIdentifier="0,1" RoadIdentifier="main">
      <ChainedCurve Identifier="cc-2" StartParameter="0.0" EndParameter="300.0">
        <Curve Identifier="c2" Type="CubicBezier" StartParameter="0.0" EndParameter="300.0"
               StartPoint="0,-17.320508075688775,60" EndPoint="300,-17.320508075688775,60">
          <ControlPoint x="0" y="0" z="50"/>
          <ControlPoint x="100" y="0" z="50"/>
          <ControlPoint x="200" y="0" z="50"/>
          <ControlPoint x="300" y="0" z="50"/>
        </Curve>
      </ChainedCurve>
    </Lane>
  </Road>
  <Ramp Identifier="entry-ramp" ExitRoadIdentifier="main" ExitLaneIdentifier="0,0"
        ExitLaneParameter="150.0">
    <Road Identifier="entry-ramp-road" SpeedLimit="12" Radius="10">
      <Lane Identifier="entry-ramp-lane" LaneIdentifier="0,0">
        <ChainedCurve Identifier="cc-r" StartParameter="0.0" EndParameter="111.80339887498948">
          <Curve Identifier="cr" Type="CubicBezier" StartParameter="0.0"
                 EndParameter="111.80339887498948"
                 StartPoint="100,-100,50" EndPoint="150,0,50">
            <ControlPoint x="100" y="-100" z="50"/>
            <ControlPoint x="116.66666666666667" y="-66.66666666666667" z="50"/>
            <ControlPoint x="133.33333333333334" y="-33.333333333333336" z="50"/>
            <ControlPoint x="150" y="0" z="50"/>
          </Curve>
        </ChainedCurve>
      </Lane>
    </Road>
  </Ramp>
</DroneRoadSystem>
"""


class TestParse:
    def test_three_lane_road_with_onramp(self):
        drs = parse_drs(THREE_LANE_ROAD_WITH_ONRAMP)
        assert len(drs.roads) == 1
        assert len(drs.ramps) == 1
        assert len(drs.roads["main"].lanes) == 3
        assert drs.ramps["entry-ramp"].kind == "on-ramp"

    def test_lane_offsets_follow_lattice(self):
        drs = parse_drs(THREE_LANE_ROAD_WITH_ONRAMP)
        lane = drs.roads["main"].lane(LaneCoord(1, 0))
        np.testing.assert_allclose(lane.point(0.0), [0, 0, 70], atol=1e-9)
        lane01 = drs.roads["main"].lane(LaneCoord(0, 1))
        np.testing.assert_allclose(
            lane01.point(150.0), [150, -np.sqrt(3) * 10, 60], atol=1e-9
        )

    def test_missing_entry_lane_identifier(self):
        bad = THREE_LANE_ROAD_WITH_ONRAMP.replace(
            'ExitRoadIdentifier="main" ExitLaneIdentifier="0,0"',
            'ExitRoadIdentifier="main"',
        )
        with pytest.raises(DrsParseError, match="must be defined when"):
            parse_drs(bad)

    def test_dangling_road_reference(self):
        bad = THREE_LANE_ROAD_WITH_ONRAMP.replace(
            'ExitRoadIdentifier="main"', 'ExitRoadIdentifier="nowhere"'
        )
        with pytest.raises(DrsParseError, match="dangling"):
            parse_drs(bad)

    def test_malformed_number(self):
        bad = THREE_LANE_ROAD_WITH_ONRAMP.replace('SpeedLimit="15"', 'SpeedLimit="fast"')
        with pytest.raises(DrsParseError, match="malformed number"):
            parse_drs(bad)

    def test_missing_mandatory_attribute(self):
        bad = THREE_LANE_ROAD_WITH_ONRAMP.replace(' SpeedLimit="15"', "", 1)
        with pytest.raises(DrsParseError, match="missing mandatory attribute"):
            parse_drs(bad)

    def test_not_xml(self):
        with pytest.raises(DrsParseError, match="not well-formed"):
            parse_drs("this is not xml at all")

    def test_unknown_attributes_preserved(self):
        tagged = THREE_LANE_ROAD_WITH_ONRAMP.replace(
            '<DroneRoadSystem Name="mini" Version="1">',
            '<DroneRoadSystem Name="mini" Version="1" Checksum="abc123">',
        )
        drs = parse_drs(tagged)
        assert drs.extra["Checksum"] == "abc123"
        assert 'Checksum="abc123"' in serialize_drs(drs)

    def test_attachment_param_out_of_range(self):
        bad = THREE_LANE_ROAD_WITH_ONRAMP.replace(
            'ExitLaneParameter="150.0"', 'ExitLaneParameter="900.0"'
        )
        with pytest.raises(DrsParseError, match="outside lane parameter range"):
            parse_drs(bad)


class TestRoundTrip:
    def test_parse_serialize_parse_is_stable(self, two_road_system):
        text1 = serialize_drs(two_road_system)
        drs2 = parse_drs(text1)
        text2 = serialize_drs(drs2)
        assert text1 == text2

    def test_round_trip_preserves_structure(self, two_road_system):
        drs2 = parse_drs(serialize_drs(two_road_system))
        assert set(drs2.roads) == set(two_road_system.roads)
        assert set(drs2.ramps) == set(two_road_system.ramps)
        for rid, road in two_road_system.roads.items():
            road2 = drs2.roads[rid]
            assert road2.speed_limit == road.speed_limit
            assert set(road2.lane_map) == set(road.lane_map)
            for coord, lane in road.lane_map.items():
                lane2 = road2.lane(coord)
                assert lane2.closed_curve_indices == lane.closed_curve_indices
                assert lane2.chain.end_param == pytest.approx(lane.chain.end_param, abs=1e-9)
                for s in (lane.chain.start_param + 1.0, lane.chain.end_param - 1.0):
                    np.testing.assert_allclose(lane2.point(s), lane.point(s), atol=1e-9)


class TestQueries:
    def test_closing_points(self):
        road = straight_road(
            "r",
            start=(0, 0, 50),
            direction=(1, 0, 0),
            segment_lengths=[120.0, 60.0, 80.0],
            lane_coords=[(0, 0)],
            closed_for_all=[2],
        )
        lane = road.center_lane
        assert lane.closing_points() == [180.0]
        assert lane.is_open_at(179.9)
        assert not lane.is_open_at(180.0)
        assert not lane.is_open_at(200.0)

    def test_closing_point_is_closed_component_start(self):
        road = straight_road(
            "r",
            start=(0, 0, 50),
            direction=(1, 0, 0),
            segment_lengths=[120.0, 60.0, 80.0],
            lane_coords=[(0, 0)],
            closed_curves={(0, 0): [1]},
        )
        assert road.center_lane.closing_points() == [120.0]

    def test_ramp_points(self, two_road_system):
        assert two_road_system.ramp_points("road-a", LaneCoord(0, 0)) == [200.0]
        assert two_road_system.ramp_points("road-a", LaneCoord(1, 0)) == []
        assert two_road_system.ramp_points("road-b", LaneCoord(0, 0)) == []

    def test_entry_exit_points(self, two_road_system):
        entries = two_road_system.entry_points()
        exits = two_road_system.exit_points()
        assert len(entries) == 5  # all lanes of both roads start open
        # road A ends closed on all lanes, so only road B's two lanes exit
        assert len(exits) == 2
        assert {ap.lane.road_id for ap in exits} == {"road-b"}

    def test_container_lookup(self, two_road_system):
        ramp = two_road_system.ramps["ramp-ab"]
        assert two_road_system.container("road-a").identifier == "road-a"
        assert two_road_system.container(ramp.road_identifier) is ramp


class TestValidate:
    def test_clean_system(self, two_road_system):
        assert validate_drs(two_road_system) == []

    def test_duplicate_lane_coordinate(self):
        road = straight_road(
            "dup",
            start=(0, 0, 50),
            direction=(1, 0, 0),
            segment_lengths=[100.0],
            lane_coords=[(0, 0), (1, 0)],
        )
        clone = road.lanes[1]
        twin = Lane(
            identifier="dup-extra",
            lane_coord=LaneCoord(1, 0),
            chain=clone.chain,
            road_id="dup",
            radius=road.radius,
        )
        bad_road = type(road)("dup", list(road.lanes) + [twin], road.speed_limit, road.radius)
        drs = DroneRoadSystem("x", "1", [bad_road])
        findings = validate_drs(drs)
        assert any(f.code == "duplicate-coordinate" for f in findings)

    def test_chain_gap_reported(self):
        from skyways.geometry import ChainedCurve, CubicBezier, Curve

        c1 = Curve(CubicBezier.line((0, 0, 50), (100, 0, 50)), 0.0, identifier="g0")
        c2 = Curve(
            CubicBezier.line((101, 0, 50), (200, 0, 50)), c1.end_param, identifier="g1"
        )
        lane = Lane("gap-lane", LaneCoord(0, 0), ChainedCurve([c1, c2]), road_id="gap")
        road = type(straight_road("t", (0, 0, 0), (1, 0, 0), [10], [(0, 0)]))(
            "gap", [lane], 15.0
        )
        drs = DroneRoadSystem("x", "1", [road])
        findings = validate_drs(drs)
        assert any(f.code == "chain-smoothness" and "position gap" in f.message for f in findings)

    def test_nonpositive_speed_limit(self):
        road = straight_road(
            "slow",
            start=(0, 0, 50),
            direction=(1, 0, 0),
            segment_lengths=[100.0],
            lane_coords=[(0, 0)],
            speed_limit=0.0,
        )
        drs = DroneRoadSystem("x", "1", [road])
        assert any(f.code == "speed-limit" for f in validate_drs(drs))

    def test_vertical_tangent_reported(self):
        road = straight_road(
            "up",
            start=(0, 0, 0),
            direction=(0, 0, 1),
            segment_lengths=[100.0],
            lane_coords=[(0, 0)],
        )
        drs = DroneRoadSystem("x", "1", [road])
        assert any(f.code == "vertical-tangent" for f in validate_drs(drs))

    def test_unreachable_ramp(self):
        road_a = straight_road(
            "a", (0, 0, 50), (1, 0, 0), [200.0], [(0, 0)], closed_for_all=[0]
        )
        road_b = straight_road("b", (0, 200, 90), (1, 0, 0), [200.0], [(0, 0)])
        ramp = connecting_ramp("r", road_a, (0, 0), 100.0, road_b, (0, 0), 100.0)
        drs = DroneRoadSystem("x", "1", [road_a, road_b], [ramp])
        findings = validate_drs(drs)
        assert any(f.code == "unreachable-ramp" for f in findings)
