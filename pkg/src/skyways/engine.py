"""Discrete-event simulation core.

One run owns a single event timeline: beacon transmissions and guidance
invocations are continuous-time events, kinematics advance on a fixed tick
(0.1 s) that also performs point-collision detection, with a closest-
approach check between ticks for pairs that were already close, so fast
drones cannot tunnel through the 0.5 m safety sphere.  Drones are treated
as points; collided drones vanish immediately, though their beacon data
lingers in other drones' neighbor tables until scrubbed.

A run is strictly single-threaded and a pure function of (road system,
config, seed).  Replications are independent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .drs import DroneRoadSystem, Lane, Ramp, parse_drs_path
from .events import (
    EventQueue,
    PRIO_BEACON,
    PRIO_GENERATION,
    PRIO_GUIDANCE,
    PRIO_SAMPLE,
    PRIO_TICK,
)
from .geometry import LaneCoord, lattice_offset_coeffs, param_convert
from .guidance import (
    GuidanceParams,
    NeighborTable,
    compute_inputs,
    decide,
    next_invocation_delay,
)
from .radio import Beacon, Channel, RadioConfig, calibrate
from .routing import RoutePlan, build_route_graph, plan_path

SPEED_INTERVAL = (10.0, 15.0)  # m/s, preferred-speed draw


class SimulationError(Exception):
    """Internal inconsistency (conservation breach, route exhaustion)."""


@dataclass(frozen=True)
class SimConfig:
    drs_path: Optional[str] = None  # None: caller passes a parsed system
    generation_rate: float = 0.05  # drones per second per entry lane
    sim_time: float = 1000.0
    warmup: float = 200.0
    seed: int = 1
    min_safety_distance: float = 0.5
    kinematics_dt: float = 0.1
    neighbor_timeout: float = 10.0
    radio: RadioConfig = field(default_factory=RadioConfig)
    guidance: GuidanceParams = field(default_factory=GuidanceParams)
    record_events: bool = False

    def __post_init__(self):
        if self.generation_rate < 0:
            raise ValueError("generation_rate must be non-negative")
        if self.sim_time <= self.warmup:
            raise ValueError("sim_time must exceed the warmup window")
        if self.kinematics_dt <= 0:
            raise ValueError("kinematics_dt must be positive")


class MetricsSeries:
    """Per-second throughput counts plus cumulative rate accumulators."""

    def __init__(self, sim_time: float):
        self.n_bins = int(math.ceil(sim_time)) + 1
        self.ic = np.zeros(self.n_bins, dtype=int)
        self.ac = np.zeros(self.n_bins, dtype=int)
        self.nc = np.zeros(self.n_bins, dtype=int)
        self.generated = 0
        self.injected = 0
        self.arrived = 0
        self.collided = 0
        self.flight_distance = 0.0
        self.active_time = 0.0

    def _bin(self, t: float) -> int:
        return min(int(t), self.n_bins - 1)

    def record_generated(self) -> None:
        self.generated += 1

    def record_injection(self, t: float) -> None:
        self.injected += 1
        self.ic[self._bin(t)] += 1

    def record_arrival(self, t: float) -> None:
        self.arrived += 1
        self.ac[self._bin(t)] += 1

    def record_collisions(self, count: int) -> None:
        self.collided += count

    def sample_node_count(self, t: float, count: int) -> None:
        self.nc[self._bin(t)] = count

    @property
    def collision_rate(self) -> float:
        return self.collided / self.injected if self.injected else 0.0

    @property
    def average_speed(self) -> float:
        return self.flight_distance / self.active_time if self.active_time > 0 else 0.0


@dataclass
class SwitchState:
    src_lane: Lane
    dst_lane: Lane
    start_time: float
    src_offset: Tuple[float, float]
    dst_offset: Tuple[float, float]

    def progress(self, now: float, switch_time: float) -> float:
        return min(1.0, (now - self.start_time) / switch_time)


class Drone:
    __slots__ = (
        "id", "route", "seg_index", "lane", "lane_param", "speed", "v_pref",
        "switch", "table", "beacon_seq", "guidance_epoch", "injected_at",
        "last_update", "position", "_pos_dirty",
    )

    def __init__(self, drone_id: int, route: RoutePlan, lane: Lane, lane_param: float,
                 v_pref: float, now: float):
        self.id = drone_id
        self.route = route
        self.seg_index = 0
        self.lane = lane
        self.lane_param = lane_param
        self.speed = 0.0
        self.v_pref = v_pref
        self.switch: Optional[SwitchState] = None
        self.table = NeighborTable()
        self.beacon_seq = 0
        self.guidance_epoch = 0
        self.injected_at = now
        self.last_update = now
        self.position = lane.point(lane_param)
        self._pos_dirty = False

    @property
    def segment(self):
        return self.route.segments[self.seg_index]

    def membership(self, now: float, switch_time: float) -> Tuple[Lane, float]:
        """Lane and parameter the drone counts as belonging to.

        While switching, the first half of the maneuver belongs to the
        source lane, the second half to the destination.
        """
        if self.switch is None:
            return self.lane, self.lane_param
        sw = self.switch
        if sw.progress(now, switch_time) < 0.5:
            src_param = param_convert(sw.dst_lane.chain, sw.src_lane.chain, self.lane_param)
            return sw.src_lane, src_param
        return sw.dst_lane, self.lane_param

    def compute_position(self, now: float, switch_time: float) -> np.ndarray:
        if self.switch is None:
            return self.lane.point(self.lane_param)
        sw = self.switch
        chain = sw.dst_lane.chain
        curve = chain.curve_at(self.lane_param)
        s = min(max(self.lane_param, curve.start_param), curve.end_param)
        t = curve.param_to_t(s)
        base = curve.bezier.point(t)
        frame = curve.frame(s)
        p = sw.progress(now, switch_time)
        f1 = sw.src_offset[0] + (sw.dst_offset[0] - sw.src_offset[0]) * p
        f2 = sw.src_offset[1] + (sw.dst_offset[1] - sw.src_offset[1]) * p
        return base + f1 * frame.u1 + f2 * frame.u2

    def velocity_vector(self, now: float, switch_time: float) -> np.ndarray:
        if self.switch is None:
            chain = self.lane.chain
        else:
            chain = self.switch.dst_lane.chain
        s = min(max(self.lane_param, chain.start_param), chain.end_param)
        vel = chain.tangent(s) * self.speed
        if self.switch is not None:
            sw = self.switch
            if sw.progress(now, switch_time) < 1.0:
                curve = chain.curve_at(s)
                frame = curve.frame(s)
                df1 = (sw.dst_offset[0] - sw.src_offset[0]) / switch_time
                df2 = (sw.dst_offset[1] - sw.src_offset[1]) / switch_time
                vel = vel + df1 * frame.u1 + df2 * frame.u2
        return vel


class _PositionRegistry:
    """Position provider for the radio channel, backed by drone state."""

    def __init__(self):
        self._pos: Dict[int, np.ndarray] = {}
        self._cache: Optional[Tuple[List[int], np.ndarray]] = None

    def set(self, node_id: int, pos: np.ndarray) -> None:
        self._pos[node_id] = pos
        self._cache = None

    def remove(self, node_id: int) -> None:
        self._pos.pop(node_id, None)
        self._cache = None

    def position(self, node_id: int) -> np.ndarray:
        return self._pos[node_id]

    def snapshot(self) -> Tuple[List[int], np.ndarray]:
        if self._cache is None:
            ids = list(self._pos)
            mat = np.stack([self._pos[i] for i in ids]) if ids else np.zeros((0, 3))
            self._cache = (ids, mat)
        return self._cache


@dataclass
class RunResult:
    metrics: MetricsSeries
    seed: int
    events: List[dict]
    channel_stats: object
    closed_curve_violations: int = 0

    @property
    def summary(self) -> Dict[str, object]:
        m = self.metrics
        return {
            "seed": self.seed,
            "cr": m.collision_rate,
            "as": m.average_speed,
            "total_generated": m.generated,
            "total_injected": m.injected,
            "total_arrived": m.arrived,
            "total_collided": m.collided,
        }


class Simulation:
    """One deterministic run over a parsed road system."""

    def __init__(self, drs: DroneRoadSystem, config: SimConfig):
        self.drs = drs
        self.config = config
        self.params = config.guidance
        self.radio_config = calibrate(config.radio)
        self.queue = EventQueue()
        seeds = np.random.SeedSequence(config.seed).spawn(3)
        self.gen_rng = np.random.default_rng(seeds[0])
        self.guidance_rng = np.random.default_rng(seeds[1])
        self.radio_rng = np.random.default_rng(seeds[2])
        self.positions = _PositionRegistry()
        self.channel = Channel(
            self.radio_config, self.queue, self.radio_rng, self.positions,
            on_delivery=self._on_beacon,
        )
        self.metrics = MetricsSeries(config.sim_time)
        self.drones: Dict[int, Drone] = {}
        self.events: List[dict] = []
        self._next_id = 1
        self._prev_positions: Dict[int, np.ndarray] = {}
        self._prev_close: Set[Tuple[int, int]] = set()
        self.closed_curve_violations = 0

        self.graph = build_route_graph(drs)
        self.entries = drs.entry_points()
        self.exits = drs.exit_points()
        self._route_cache: Dict[Tuple[str, str], Optional[RoutePlan]] = {}
        self._reachable_exits: Dict[str, List[int]] = {}
        for ap in self.entries:
            reachable = []
            for idx, ep in enumerate(self.exits):
                if self._route_for(ap, ep) is not None:
                    reachable.append(idx)
            self._reachable_exits[ap.lane.identifier] = reachable

    # -- bookkeeping -------------------------------------------------------------

    def _route_for(self, entry, exit_point) -> Optional[RoutePlan]:
        key = (entry.lane.identifier, exit_point.lane.identifier)
        if key not in self._route_cache:
            try:
                self._route_cache[key] = plan_path(
                    self.graph,
                    (entry.lane.identifier, entry.param),
                    (exit_point.lane.identifier, exit_point.param),
                )
            except Exception:
                self._route_cache[key] = None
        return self._route_cache[key]

    def log(self, event: str, **fields) -> None:
        if self.config.record_events:
            self.events.append({"t": self.queue.now(), "event": event, **fields})

    # -- drone lifecycle -----------------------------------------------------------

    def _generate_on(self, entry_index: int) -> None:
        """One arrival of the per-lane generation stream."""
        entry = self.entries[entry_index]
        self.metrics.record_generated()
        reachable = self._reachable_exits[entry.lane.identifier]
        exit_idx = int(self.gen_rng.integers(0, len(reachable))) if reachable else -1
        v_pref = float(self.gen_rng.uniform(*SPEED_INTERVAL))
        if exit_idx >= 0:
            exit_point = self.exits[reachable[exit_idx]]
            route = self._route_for(entry, exit_point)
            if self._pre_injection_clear(entry):
                self.inject(route, v_pref)
            else:
                self.log("drop", lane=entry.lane.identifier)
        self._schedule_generation(entry_index)

    def _schedule_generation(self, entry_index: int) -> None:
        rate = self.config.generation_rate
        if rate <= 0:
            return
        delay = float(self.gen_rng.exponential(1.0 / rate))
        t = self.queue.now() + delay
        if t <= self.config.sim_time:
            self.queue.schedule(t, PRIO_GENERATION, lambda: self._generate_on(entry_index))

    def _pre_injection_clear(self, entry) -> bool:
        """Clearance check at the entry point: along-lane and 3D spacing."""
        eps2 = self.params.eps2
        radius = entry.lane.radius
        entry_pos = entry.lane.point(entry.param)
        for drone in self.drones.values():
            if drone.switch is None and drone.lane.identifier == entry.lane.identifier:
                if abs(drone.lane_param - entry.param) < eps2:
                    return False
            if np.linalg.norm(drone.position - entry_pos) < 2.0 * radius:
                return False
        return True

    def inject(self, route: RoutePlan, v_pref: float,
               lane_param: Optional[float] = None) -> Drone:
        """Admit a drone at the first segment of its route."""
        now = self.queue.now()
        seg = route.segments[0]
        container = self.drs.roads.get(seg.container_id) or self.drs.ramps[seg.container_id]
        if seg.kind == "road":
            lane = container.lane(seg.entry_lane_coord)
        else:
            lane = container.lane
        drone = Drone(
            self._next_id, route, lane,
            seg.entry_param if lane_param is None else lane_param,
            v_pref, now,
        )
        self._next_id += 1
        self.drones[drone.id] = drone
        self.positions.set(drone.id, drone.position)
        self._prev_positions[drone.id] = drone.position.copy()
        self.channel.register(drone.id)
        self.metrics.record_injection(now)
        self.log("injection", drone=drone.id, lane=lane.identifier, v_pref=v_pref)
        self._schedule_invocation(drone, 0.0)
        period = 1.0 / self.radio_config.beacon_rate
        phase = float(self.radio_rng.uniform(0.0, period))
        self.queue.schedule(now + phase, PRIO_BEACON, lambda: self._beacon(drone.id))
        return drone

    def _remove_drone(self, drone: Drone) -> None:
        del self.drones[drone.id]
        self.positions.remove(drone.id)
        self._prev_positions.pop(drone.id, None)
        self.channel.unregister(drone.id)

    # -- kinematics -----------------------------------------------------------------

    def _advance_to(self, drone: Drone, now: float) -> None:
        dt = now - drone.last_update
        if dt <= 0.0:
            return
        drone.last_update = now
        if drone.speed > 0.0:
            drone.lane_param += drone.speed * dt
            drone._pos_dirty = True
        self.metrics.flight_distance += drone.speed * dt
        self.metrics.active_time += dt
        if drone.switch is None:
            self._apply_transitions(drone)

    def _apply_transitions(self, drone: Drone) -> None:
        """Cross segment boundaries: take ramps, merge onto roads, arrive."""
        while True:
            seg = drone.segment
            chain = drone.lane.chain
            if seg.kind == "road":
                on_target = drone.lane.lane_coord == seg.target_lane_coord
                if (
                    seg.via_ramp_id is not None
                    and on_target
                    and drone.lane_param >= seg.target_param - 1e-9
                ):
                    overshoot = drone.lane_param - seg.target_param
                    ramp = self.drs.ramps[seg.via_ramp_id]
                    drone.seg_index += 1
                    drone.lane = ramp.lane
                    drone.lane_param = ramp.lane.chain.start_param + overshoot
                    drone._pos_dirty = True
                    self.log("enter-ramp", drone=drone.id, ramp=ramp.identifier)
                    self._schedule_invocation(drone, 0.0)
                    continue
                if (
                    seg.is_final
                    and on_target
                    and drone.lane_param >= seg.target_param - 1e-9
                ):
                    self._arrive(drone)
                    return
                if drone.lane_param > chain.end_param + 1e-6:
                    raise SimulationError(
                        f"drone {drone.id} overran lane {drone.lane.identifier} "
                        f"with no next segment"
                    )
                return
            # ramp segment
            if drone.lane_param >= chain.end_param - 1e-9:
                if seg.is_final:
                    self._arrive(drone)
                    return
                overshoot = drone.lane_param - chain.end_param
                ramp = self.drs.ramps[seg.container_id]
                nxt = drone.route.segments[drone.seg_index + 1]
                road = self.drs.roads[nxt.container_id]
                drone.seg_index += 1
                drone.lane = road.lane(nxt.entry_lane_coord)
                drone.lane_param = nxt.entry_param + overshoot
                drone._pos_dirty = True
                self.log("exit-ramp", drone=drone.id, ramp=ramp.identifier,
                         road=road.identifier)
                self._schedule_invocation(drone, 0.0)
                continue
            return

    def _arrive(self, drone: Drone) -> None:
        now = self.queue.now()
        self.metrics.record_arrival(now)
        self.log("arrival", drone=drone.id)
        self._remove_drone(drone)

    def _tick(self, k: int) -> None:
        cfg = self.config
        now = k * cfg.kinematics_dt
        switch_time = self.params.switch_time
        for drone in list(self.drones.values()):
            self._advance_to(drone, now)
        # refresh positions
        for drone in self.drones.values():
            if drone._pos_dirty or drone.switch is not None:
                drone.position = drone.compute_position(now, switch_time)
                drone._pos_dirty = False
                self.positions.set(drone.id, drone.position)
        self._check_open_lane_invariant(now)
        self._detect_collisions(now)
        self._assert_conservation()
        if now + cfg.kinematics_dt <= cfg.sim_time + 1e-9:
            self.queue.schedule(
                (k + 1) * cfg.kinematics_dt, PRIO_TICK, lambda: self._tick(k + 1)
            )

    def _check_open_lane_invariant(self, now: float) -> None:
        for drone in self.drones.values():
            lane, param = drone.membership(now, self.params.switch_time)
            if param <= lane.chain.end_param and not lane.is_open_at(param):
                self.closed_curve_violations += 1

    def _detect_collisions(self, now: float) -> None:
        threshold = self.config.min_safety_distance
        ids = list(self.drones.keys())
        collided: Set[int] = set()
        close_pairs: Set[Tuple[int, int]] = set()
        if len(ids) >= 2:
            cell = 20.0
            cells: Dict[Tuple[int, int, int], List[int]] = {}
            for did in ids:
                p = self.drones[did].position
                key = (int(p[0] // cell), int(p[1] // cell), int(p[2] // cell))
                cells.setdefault(key, []).append(did)
            offsets = [
                (dx, dy, dz)
                for dx in (-1, 0, 1)
                for dy in (-1, 0, 1)
                for dz in (-1, 0, 1)
            ]
            for key, members in cells.items():
                for off in offsets:
                    nkey = (key[0] + off[0], key[1] + off[1], key[2] + off[2])
                    others = cells.get(nkey)
                    if others is None:
                        continue
                    for a in members:
                        pa = self.drones[a].position
                        for b in others:
                            if b <= a:
                                continue
                            d = float(np.linalg.norm(pa - self.drones[b].position))
                            if d < threshold:
                                collided.add(a)
                                collided.add(b)
                            elif d < 5.0:
                                close_pairs.add((a, b))
        # closest approach between ticks for pairs that were already close
        for a, b in self._prev_close:
            da = self.drones.get(a)
            db = self.drones.get(b)
            pa_prev = self._prev_positions.get(a)
            pb_prev = self._prev_positions.get(b)
            if da is None or db is None or pa_prev is None or pb_prev is None:
                continue
            rel0 = pa_prev - pb_prev
            rel1 = da.position - db.position
            dr = rel1 - rel0
            denom = float(dr @ dr)
            tmin = 0.0 if denom < 1e-18 else min(1.0, max(0.0, -float(rel0 @ dr) / denom))
            dmin = float(np.linalg.norm(rel0 + tmin * dr))
            if dmin < threshold:
                collided.add(a)
                collided.add(b)
        if collided:
            self.metrics.record_collisions(len(collided))
            for did in sorted(collided):
                self.log("collision", drone=did)
                self._remove_drone(self.drones[did])
        self._prev_close = close_pairs
        self._prev_positions = {
            did: drone.position.copy() for did, drone in self.drones.items()
        }

    def _assert_conservation(self) -> None:
        m = self.metrics
        active = len(self.drones)
        if m.injected != m.arrived + m.collided + active:
            raise SimulationError(
                f"conservation violated: injected {m.injected} != arrived {m.arrived} "
                f"+ collided {m.collided} + active {active}"
            )

    # -- guidance ---------------------------------------------------------------------

    def _schedule_invocation(self, drone: Drone, delay: float) -> None:
        drone.guidance_epoch += 1
        epoch = drone.guidance_epoch
        drone_id = drone.id
        self.queue.schedule(
            self.queue.now() + delay,
            PRIO_GUIDANCE,
            lambda: self._invoke_guidance(drone_id, epoch),
        )

    def _current_target(self, drone: Drone) -> Optional[Tuple[LaneCoord, float]]:
        seg = drone.segment
        if seg.kind != "road" or seg.target_lane_coord is None:
            return None
        return (seg.target_lane_coord, seg.target_param)

    def _invoke_guidance(self, drone_id: int, epoch: int) -> None:
        drone = self.drones.get(drone_id)
        if drone is None or drone.guidance_epoch != epoch or drone.switch is not None:
            return
        now = self.queue.now()
        self._advance_to(drone, now)
        if drone.id not in self.drones:
            return  # arrived during the catch-up advance
        drone.table.scrub(now, self.config.neighbor_timeout)
        seg = drone.segment
        inputs = compute_inputs(
            self.drs,
            seg.beacon_road_id,
            drone.lane,
            drone.lane_param,
            drone.speed,
            drone.v_pref,
            drone.table,
            self.params,
            target=self._current_target(drone),
        )
        decision = decide(inputs, self.params, self.guidance_rng)
        self.log(
            "decision", drone=drone.id, lane=str(decision.lane_coord),
            speed=decision.speed, from_lane=str(drone.lane.lane_coord),
        )
        if decision.lane_coord != drone.lane.lane_coord:
            self._begin_switch(drone, decision.lane_coord, decision.speed)
        else:
            drone.speed = decision.speed
            drone._pos_dirty = True
            self._schedule_invocation(
                drone, next_invocation_delay(drone.speed, self.params)
            )

    def _begin_switch(self, drone: Drone, dst_coord: LaneCoord, speed: float) -> None:
        now = self.queue.now()
        road = self.drs.roads[drone.segment.container_id]
        src = drone.lane
        dst = road.lane(dst_coord)
        start_param = param_convert(src.chain, dst.chain, drone.lane_param)
        drone.switch = SwitchState(
            src_lane=src,
            dst_lane=dst,
            start_time=now,
            src_offset=lattice_offset_coeffs(src.lane_coord, road.radius),
            dst_offset=lattice_offset_coeffs(dst.lane_coord, road.radius),
        )
        drone.lane_param = start_param
        drone.speed = speed
        drone._pos_dirty = True
        self.log("switch-start", drone=drone.id, src=str(src.lane_coord),
                 dst=str(dst.lane_coord), speed=speed)
        drone.guidance_epoch += 1
        drone_id = drone.id
        epoch = drone.guidance_epoch
        self.queue.schedule(
            now + self.params.switch_time,
            PRIO_GUIDANCE,
            lambda: self._complete_switch(drone_id, epoch),
        )

    def _complete_switch(self, drone_id: int, epoch: int) -> None:
        drone = self.drones.get(drone_id)
        if drone is None or drone.guidance_epoch != epoch or drone.switch is None:
            return
        now = self.queue.now()
        self._advance_to(drone, now)
        drone.lane = drone.switch.dst_lane
        drone.switch = None
        drone._pos_dirty = True
        self.log("switch-end", drone=drone.id, lane=str(drone.lane.lane_coord))
        self._apply_transitions(drone)
        if drone.id in self.drones:
            self._schedule_invocation(drone, 0.0)

    # -- beacons ----------------------------------------------------------------------

    def _beacon(self, drone_id: int) -> None:
        drone = self.drones.get(drone_id)
        if drone is None:
            return
        now = self.queue.now()
        self._advance_to(drone, now)
        if drone_id not in self.drones:
            return
        switch_time = self.params.switch_time
        lane, param = drone.membership(now, switch_time)
        param = min(max(param, lane.chain.start_param), lane.chain.end_param)
        seg = drone.segment
        beacon = Beacon(
            sender_id=drone.id,
            sequence_number=drone.beacon_seq,
            position=drone.compute_position(now, switch_time),
            velocity=drone.velocity_vector(now, switch_time),
            road_id=seg.beacon_road_id,
            lane_coord=lane.lane_coord,
            lane_param=param,
        )
        drone.beacon_seq += 1
        self.channel.submit(drone.id, beacon)
        self.queue.schedule(
            now + 1.0 / self.radio_config.beacon_rate,
            PRIO_BEACON,
            lambda: self._beacon(drone_id),
        )

    def _on_beacon(self, receiver_id: int, beacon: Beacon, now: float) -> None:
        drone = self.drones.get(receiver_id)
        if drone is not None:
            drone.table.update(beacon, now)

    # -- top level ---------------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.config
        if cfg.generation_rate > 0:
            for idx in range(len(self.entries)):
                self._schedule_generation(idx)
        self.queue.schedule(cfg.kinematics_dt, PRIO_TICK, lambda: self._tick(1))
        for second in range(int(math.ceil(cfg.sim_time)) + 1):
            t = float(second)
            if t <= cfg.sim_time:
                self.queue.schedule(
                    t, PRIO_SAMPLE,
                    lambda t=t: self.metrics.sample_node_count(t, len(self.drones)),
                )
        self.queue.run_until(cfg.sim_time)
        return RunResult(
            metrics=self.metrics,
            seed=cfg.seed,
            events=self.events,
            channel_stats=self.channel.stats,
            closed_curve_violations=self.closed_curve_violations,
        )


def run(config: SimConfig, drs: Optional[DroneRoadSystem] = None) -> RunResult:
    """Load the road system if needed and execute one run."""
    if drs is None:
        if config.drs_path is None:
            raise ValueError("config.drs_path unset and no parsed system given")
        drs = parse_drs_path(config.drs_path)
    return Simulation(drs, config).run()


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

TIMESERIES_HEADER = "t,ic,ac,nc"
SUMMARY_HEADER = "seed,cr,as,total_injected,total_arrived,total_collided"


def timeseries_csv(result: RunResult) -> str:
    m = result.metrics
    lines = [TIMESERIES_HEADER]
    for t in range(m.n_bins):
        lines.append(f"{t},{m.ic[t]},{m.ac[t]},{m.nc[t]}")
    return "\n".join(lines) + "\n"


def summary_csv(result: RunResult) -> str:
    s = result.summary
    line = (
        f"{s['seed']},{s['cr']!r},{s['as']!r},"
        f"{s['total_injected']},{s['total_arrived']},{s['total_collided']}"
    )
    return SUMMARY_HEADER + "\n" + line + "\n"
