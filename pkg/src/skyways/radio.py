"""Broadcast beaconing over a simplified 802.11-style channel.

Propagation is a log-distance path loss law with a free-space reference at
1 m.  Reception requires the received power to clear the sensitivity
threshold and the SINR (signal over noise plus every overlapping frame) to
clear the decoding threshold for the whole frame, which produces both
direct and hidden-terminal packet collisions.  Medium access is a reduced
EDCA best-effort function: AIFS, a uniform backoff draw over the minimum
contention window, freeze on busy.  Beacons are broadcast without
acknowledgements, so the contention window never escalates; cw_max is
carried for fidelity only.

The channel mutates state only through scheduler events, which the owning
simulation dispatches in timestamp order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .events import EventQueue, PRIO_RADIO
from .geometry import LaneCoord

SPEED_OF_LIGHT = 299792458.0

# Published calibration anchors: at the 2 mW reference power the reception
# range is 250 m and the interference range 4445 m.  calibrate() derives the
# receiver thresholds from these.
CAL_REFERENCE_POWER_W = 2e-3
CAL_RECEPTION_RANGE_M = 250.0
CAL_INTERFERENCE_RANGE_M = 4445.0


class RadioError(Exception):
    pass


@dataclass(frozen=True)
class RadioConfig:
    """PHY/MAC settings.

    slot_time/sifs/preamble follow 10 MHz half-clocked OFDM conventions and
    payload_bytes/sinr_threshold_db (QPSK rate 1/2) fill in constants the
    channel needs; all are config-file overridable.  The AIFS duration is
    sifs + aifs_slots * slot_time.
    """

    center_frequency: float = 2.437e9  # Hz
    bandwidth: float = 1e7  # Hz
    data_rate: float = 1.2e7  # bit/s
    transmit_power: float = 2e-3  # W
    path_loss_exponent: float = 2.0
    noise_power: float = 1e-14  # W (-110 dBm thermal noise)
    sensitivity: Optional[float] = None  # W, set by calibrate()
    interference_threshold: Optional[float] = None  # W, set by calibrate()
    sinr_threshold_db: float = 6.0
    cw_min: int = 31
    cw_max: int = 1023
    aifs_slots: int = 7
    slot_time: float = 13e-6  # s
    sifs: float = 32e-6  # s
    preamble_time: float = 40e-6  # s
    payload_bytes: int = 100
    beacon_rate: float = 10.0  # Hz
    lossless: bool = False

    def __post_init__(self):
        for name in ("center_frequency", "bandwidth", "data_rate", "transmit_power",
                     "noise_power", "slot_time", "sifs", "preamble_time", "beacon_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"radio config field {name} must be positive")
        if self.sensitivity is not None and self.sensitivity <= self.noise_power:
            raise ValueError("sensitivity must exceed the noise power")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center_frequency

    @property
    def sinr_threshold(self) -> float:
        return 10.0 ** (self.sinr_threshold_db / 10.0)

    @property
    def aifs_duration(self) -> float:
        return self.sifs + self.aifs_slots * self.slot_time

    @property
    def airtime(self) -> float:
        return self.preamble_time + self.payload_bytes * 8.0 / self.data_rate


@dataclass
class Beacon:
    """Periodic safety packet: identity, kinematics, and lane bookkeeping."""

    sender_id: int
    sequence_number: int
    position: np.ndarray
    velocity: np.ndarray
    road_id: str
    lane_coord: LaneCoord
    lane_param: float


def received_power(config: RadioConfig, tx_power: float, distance) -> np.ndarray:
    """Log-distance path loss with a free-space reference at 1 m.

    P_r(d) = P_t * (lambda / 4 pi)^2 / d^n.  For n = 2 this is the Friis
    law.  Raises for non-positive distances.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0.0):
        raise RadioError("received power undefined at distance <= 0")
    k = (config.wavelength / (4.0 * math.pi)) ** 2
    return tx_power * k / d ** config.path_loss_exponent


def range_at_threshold(config: RadioConfig, tx_power: float, threshold: float) -> float:
    """Distance at which the received power falls to a threshold."""
    k = (config.wavelength / (4.0 * math.pi)) ** 2
    return (tx_power * k / threshold) ** (1.0 / config.path_loss_exponent)


def calibrate(config: RadioConfig) -> RadioConfig:
    """Set receiver thresholds from the published range anchors.

    The sensitivity is pinned so the reception range at the 2 mW reference
    power is 250 m, and the interference threshold so the interference
    range is 4445 m; at 20 mW both scale by sqrt(10) under the square-law
    exponent.  The resulting interference threshold sits within a seventh
    of a dB of the -110 dBm noise floor.
    """
    sens = float(received_power(config, CAL_REFERENCE_POWER_W, CAL_RECEPTION_RANGE_M))
    intf = float(received_power(config, CAL_REFERENCE_POWER_W, CAL_INTERFERENCE_RANGE_M))
    return replace(config, sensitivity=sens, interference_threshold=intf)


def reception_range(config: RadioConfig, tx_power: Optional[float] = None) -> float:
    if config.sensitivity is None:
        raise RadioError("config not calibrated: sensitivity unset")
    return range_at_threshold(config, tx_power or config.transmit_power, config.sensitivity)


def interference_range(config: RadioConfig, tx_power: Optional[float] = None) -> float:
    if config.interference_threshold is None:
        raise RadioError("config not calibrated: interference threshold unset")
    return range_at_threshold(config, tx_power or config.transmit_power, config.interference_threshold)


@dataclass
class Transmission:
    sender: int
    beacon: Beacon
    start: float
    end: float
    power: float
    origin: np.ndarray


@dataclass
class _NodeState:
    queued: Optional[Beacon] = None
    in_access: bool = False
    backoff_slots: Optional[int] = None
    tx_until: float = -1.0


@dataclass
class ChannelStats:
    submitted: int = 0
    queue_drops: int = 0
    sent: int = 0
    receptions_expected: int = 0
    receptions_delivered: int = 0
    lost_sinr: int = 0
    lost_half_duplex: int = 0

    @property
    def reception_loss_rate(self) -> float:
        if self.receptions_expected == 0:
            return 0.0
        return 1.0 - self.receptions_delivered / self.receptions_expected


class Channel:
    """Single logical broadcast medium shared by all registered nodes.

    positions must expose position(node_id) -> (3,) array and snapshot()
    -> (ids, (N, 3) array); on_delivery(receiver_id, beacon, now) is called
    for every successfully decoded frame.
    """

    def __init__(
        self,
        config: RadioConfig,
        queue: EventQueue,
        rng: np.random.Generator,
        positions,
        on_delivery: Optional[Callable[[int, Beacon, float], None]] = None,
    ):
        if config.sensitivity is None or config.interference_threshold is None:
            config = calibrate(config)
        self.config = config
        self.queue = queue
        self.rng = rng
        self.positions = positions
        self.on_delivery = on_delivery or (lambda *_: None)
        self.stats = ChannelStats()
        self._states: Dict[int, _NodeState] = {}
        self._active: List[Transmission] = []
        self._recent: List[Transmission] = []

    # -- membership --------------------------------------------------------------

    def register(self, node_id: int) -> None:
        self._states[node_id] = _NodeState()

    def unregister(self, node_id: int) -> None:
        self._states.pop(node_id, None)

    # -- sensing helpers -----------------------------------------------------------

    def _rx_power(self, tx: Transmission, where: np.ndarray) -> float:
        d = float(np.linalg.norm(where - tx.origin))
        if d <= 0.0:
            return float("inf")
        return float(received_power(self.config, tx.power, d))

    def _senses(self, node_id: int, tx: Transmission) -> bool:
        pos = self.positions.position(node_id)
        return self._rx_power(tx, pos) >= self.config.sensitivity

    def _sensed_busy_until(self, node_id: int) -> Optional[float]:
        # Sensing sees only frames that started strictly before now: two
        # nodes whose backoff expires on the same slot boundary both commit
        # and collide, as on a real channel.
        now = self.queue.now()
        latest = None
        for tx in self._active:
            if tx.sender == node_id or tx.end <= now or tx.start >= now:
                continue
            if self._senses(node_id, tx):
                latest = tx.end if latest is None else max(latest, tx.end)
        return latest

    def _sensed_start_in(self, node_id: int, t0: float, t1: float) -> Optional[Transmission]:
        """Earliest sensed transmission starting within (t0, t1), if any."""
        best = None
        for tx in self._active + self._recent:
            if tx.sender == node_id:
                continue
            if t0 < tx.start < t1 and self._senses(node_id, tx):
                if best is None or tx.start < best.start:
                    best = tx
        return best

    # -- submission / access ---------------------------------------------------------

    def submit(self, node_id: int, beacon: Beacon) -> None:
        """Queue a beacon (depth one; a newer beacon replaces and drops the old)."""
        st = self._states[node_id]
        self.stats.submitted += 1
        if self.config.lossless:
            self._transmit_lossless(node_id, beacon)
            return
        if st.queued is not None:
            st.queued = beacon
            self.stats.queue_drops += 1
            return
        st.queued = beacon
        if not st.in_access and self.queue.now() >= st.tx_until:
            st.in_access = True
            st.backoff_slots = None
            self._try_access(node_id)

    def _try_access(self, node_id: int) -> None:
        st = self._states.get(node_id)
        if st is None or st.queued is None:
            return
        now = self.queue.now()
        if now < st.tx_until:
            self.queue.schedule(st.tx_until, PRIO_RADIO, lambda: self._try_access(node_id))
            return
        busy_until = self._sensed_busy_until(node_id)
        if busy_until is not None and busy_until > now:
            self.queue.schedule(busy_until, PRIO_RADIO, lambda: self._try_access(node_id))
            return
        started = now
        self.queue.schedule(
            now + self.config.aifs_duration,
            PRIO_RADIO,
            lambda: self._after_aifs(node_id, started),
        )

    def _after_aifs(self, node_id: int, started: float) -> None:
        st = self._states.get(node_id)
        if st is None or st.queued is None:
            return
        now = self.queue.now()
        interruption = self._sensed_start_in(node_id, started, now)
        if interruption is not None or self._sensed_busy_until(node_id) is not None:
            self._try_access(node_id)
            return
        if st.backoff_slots is None:
            st.backoff_slots = int(self.rng.integers(0, self.config.cw_min + 1))
        if st.backoff_slots == 0:
            self._transmit(node_id)
            return
        slots = st.backoff_slots
        self.queue.schedule(
            now + slots * self.config.slot_time,
            PRIO_RADIO,
            lambda: self._after_backoff(node_id, started=now, slots=slots),
        )

    def _after_backoff(self, node_id: int, started: float, slots: int) -> None:
        st = self._states.get(node_id)
        if st is None or st.queued is None:
            return
        now = self.queue.now()
        interruption = self._sensed_start_in(node_id, started, now)
        if interruption is None:
            st.backoff_slots = 0
            self._transmit(node_id)
            return
        consumed = int((interruption.start - started) / self.config.slot_time)
        st.backoff_slots = max(0, slots - consumed)
        self._try_access(node_id)

    # -- transmission / reception ---------------------------------------------------

    def _prune_recent(self, now: float) -> None:
        horizon = now - 2.0 * self.config.airtime
        self._recent = [tx for tx in self._recent if tx.end > horizon]

    def _transmit(self, node_id: int) -> None:
        st = self._states[node_id]
        beacon = st.queued
        st.queued = None
        st.in_access = False
        st.backoff_slots = None
        now = self.queue.now()
        tx = Transmission(
            sender=node_id,
            beacon=beacon,
            start=now,
            end=now + self.config.airtime,
            power=self.config.transmit_power,
            origin=np.array(self.positions.position(node_id), dtype=float),
        )
        st.tx_until = tx.end
        self._active.append(tx)
        self.stats.sent += 1
        self.queue.schedule(tx.end, PRIO_RADIO, lambda: self._finish_transmission(tx))

    def _finish_transmission(self, tx: Transmission) -> None:
        now = self.queue.now()
        self._active.remove(tx)
        self._recent.append(tx)
        self._prune_recent(now)
        self._deliver(tx)
        st = self._states.get(tx.sender)
        if st is not None and st.queued is not None and not st.in_access:
            st.in_access = True
            st.backoff_slots = None
            self._try_access(tx.sender)

    def _overlapping(self, tx: Transmission) -> List[Transmission]:
        return [
            other
            for other in self._active + self._recent
            if other is not tx and other.end > tx.start and other.start < tx.end
        ]

    def _deliver(self, tx: Transmission) -> None:
        cfg = self.config
        ids, mat = self.positions.snapshot()
        if len(ids) == 0:
            return
        dists = np.linalg.norm(mat - tx.origin, axis=1)
        powers = np.zeros(len(ids))
        nz = dists > 0.0
        powers[nz] = received_power(cfg, tx.power, dists[nz])
        powers[~nz] = np.inf
        overlaps = self._overlapping(tx)
        now = self.queue.now()
        threshold = cfg.sinr_threshold
        for idx in np.nonzero(powers >= cfg.sensitivity)[0]:
            rec = ids[idx]
            if rec == tx.sender or rec not in self._states:
                continue
            signal = powers[idx]
            self.stats.receptions_expected += 1
            rec_pos = mat[idx]
            # half-duplex: no reception while transmitting any overlapping frame
            if any(o.sender == rec for o in overlaps):
                self.stats.lost_half_duplex += 1
                continue
            interferers = [o for o in overlaps if o.sender != rec]
            worst = 0.0
            if interferers:
                worst = self._worst_interference(tx, interferers, rec_pos)
            sinr = signal / (cfg.noise_power + worst)
            if sinr >= threshold:
                self.stats.receptions_delivered += 1
                self.on_delivery(rec, tx.beacon, now)
            else:
                self.stats.lost_sinr += 1

    def _worst_interference(
        self, tx: Transmission, interferers: List[Transmission], rec_pos: np.ndarray
    ) -> float:
        """Maximum summed interferer power over any instant of the frame."""
        cuts = sorted(
            {tx.start}
            | {max(tx.start, min(tx.end, o.start)) for o in interferers}
            | {max(tx.start, min(tx.end, o.end)) for o in interferers}
        )
        worst = 0.0
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            mid = 0.5 * (t0 + t1)
            level = 0.0
            for o in interferers:
                if o.start <= mid < o.end:
                    level += self._rx_power(o, rec_pos)
            worst = max(worst, level)
        return worst

    def _transmit_lossless(self, node_id: int, beacon: Beacon) -> None:
        """Deliver to every node in reception range after one airtime."""
        cfg = self.config
        now = self.queue.now()
        origin = np.array(self.positions.position(node_id), dtype=float)
        self.stats.sent += 1

        def finish():
            ids, mat = self.positions.snapshot()
            if len(ids) == 0:
                return
            dists = np.linalg.norm(mat - origin, axis=1)
            powers = np.zeros(len(ids))
            nz = dists > 0.0
            powers[nz] = received_power(cfg, cfg.transmit_power, dists[nz])
            for idx in np.nonzero(powers >= cfg.sensitivity)[0]:
                rec = ids[idx]
                if rec == node_id or rec not in self._states:
                    continue
                self.stats.receptions_expected += 1
                self.stats.receptions_delivered += 1
                self.on_delivery(rec, beacon, self.queue.now())

        self.queue.schedule(now + cfg.airtime, PRIO_RADIO, finish)


class StaticPositions:
    """Dict-backed position provider for standalone channel use."""

    def __init__(self, positions: Dict[int, Sequence[float]]):
        self._pos = {k: np.asarray(v, dtype=float) for k, v in positions.items()}

    def position(self, node_id: int) -> np.ndarray:
        return self._pos[node_id]

    def snapshot(self) -> Tuple[List[int], np.ndarray]:
        ids = list(self._pos)
        if not ids:
            return ids, np.zeros((0, 3))
        return ids, np.stack([self._pos[i] for i in ids])

    def set(self, node_id: int, pos: Sequence[float]) -> None:
        self._pos[node_id] = np.asarray(pos, dtype=float)
