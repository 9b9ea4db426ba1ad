"""Domain model shared by every stage of the pipeline.

A deployment is a named site: rectangular zones drawn on a common floor
plane, the radio gateways that overhear beacon traffic, and any air
quality sensors installed in the space. Zones are closed axis-aligned
rectangles with integer ids numbered 1..n; the numbering is part of the
contract because classifiers and reports index by zone id.

Coordinates are metres, timestamps are epoch milliseconds throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

MS_PER_HOUR = 3_600_000


@dataclass(frozen=True)
class Zone:
    """Closed rectangle [x_min, x_max] x [y_min, y_max] with id >= 1."""

    id: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValueError(f"zone id must be >= 1, got {self.id}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"zone {self.id} has empty extent "
                f"({self.x_min},{self.y_min})..({self.x_max},{self.y_max})"
            )

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class Gateway:
    """Fixed receiver position identified by a short string id."""

    id: str
    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("gateway id must be non-empty")


@dataclass(frozen=True)
class IaqSensor:
    """Air quality sensor position, optionally pinned to a zone."""

    id: str
    x: float
    y: float
    zone_hint: int | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("sensor id must be non-empty")


@dataclass(frozen=True)
class RssiObservation:
    """One received signal strength report: gateway gw heard tag at ts."""

    ts: int
    tag: str
    gw: str
    rssi: float


@dataclass(frozen=True)
class IaqReading:
    """One air quality sample from a fixed sensor."""

    ts: int
    sensor_id: str
    co2_ppm: float
    pm25_ugm3: float
    pm10_ugm3: float
    voc_index: float
    temp_c: float


@dataclass(frozen=True)
class TimeWindow:
    """Half-open interval [start_ms, end_ms)."""

    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if self.start_ms >= self.end_ms:
            raise ValueError(f"empty window [{self.start_ms}, {self.end_ms})")

    def contains(self, ts: int) -> bool:
        return self.start_ms <= ts < self.end_ms

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class LabeledInterval:
    """Ground truth: tag sat in zone for [start_ms, end_ms).

    source records how the labels were collected: "carried" means the tag
    moved with a person, "stationary" means it was parked in the zone.
    The distinction matters when building training sets because the two
    collection modes have different signal statistics.
    """

    tag: str
    start_ms: int
    end_ms: int
    zone: int
    source: str = "carried"

    def __post_init__(self) -> None:
        if self.start_ms >= self.end_ms:
            raise ValueError(f"empty interval [{self.start_ms}, {self.end_ms})")
        if self.source not in ("carried", "stationary"):
            raise ValueError(f"unknown interval source {self.source!r}")

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class Deployment:
    """A site: zones, gateways and sensors that belong together.

    Zone ids must be exactly 1..len(zones) (any order in the input list);
    gateway and sensor ids must be unique. zone_hint on a sensor must
    point at an existing zone.
    """

    name: str
    zones: tuple[Zone, ...]
    gateways: tuple[Gateway, ...]
    iaq_sensors: tuple[IaqSensor, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.zones:
            raise ValueError("deployment needs at least one zone")
        if not self.gateways:
            raise ValueError("deployment needs at least one gateway")
        ids = sorted(z.id for z in self.zones)
        if ids != list(range(1, len(self.zones) + 1)):
            raise ValueError(f"zone ids must be exactly 1..{len(self.zones)}, got {ids}")
        gw_ids = [g.id for g in self.gateways]
        if len(set(gw_ids)) != len(gw_ids):
            raise ValueError("duplicate gateway ids")
        s_ids = [s.id for s in self.iaq_sensors]
        if len(set(s_ids)) != len(s_ids):
            raise ValueError("duplicate sensor ids")
        known = {z.id for z in self.zones}
        for s in self.iaq_sensors:
            if s.zone_hint is not None and s.zone_hint not in known:
                raise ValueError(f"sensor {s.id} hints at unknown zone {s.zone_hint}")

    @property
    def n_zones(self) -> int:
        return len(self.zones)

    def zone_by_id(self, zone_id: int) -> Zone:
        for z in self.zones:
            if z.id == zone_id:
                return z
        raise KeyError(f"no zone with id {zone_id}")

    def zone_of(self, x: float, y: float) -> int | None:
        """Zone containing the point, smallest id winning on shared edges."""
        best: int | None = None
        for z in self.zones:
            if z.contains(x, y) and (best is None or z.id < best):
                best = z.id
        return best

    def nearest_sensor(self, zone_id: int) -> IaqSensor:
        """Sensor responsible for a zone.

        A sensor whose zone_hint matches wins outright. Otherwise take the
        sensor closest to the zone center by Euclidean distance, breaking
        ties by sensor id so the answer never depends on listing order.
        """
        if not self.iaq_sensors:
            raise ValueError("deployment has no air quality sensors")
        for s in self.iaq_sensors:
            if s.zone_hint == zone_id:
                return s
        cx, cy = self.zone_by_id(zone_id).center
        return min(
            self.iaq_sensors,
            key=lambda s: (math.hypot(s.x - cx, s.y - cy), s.id),
        )


def hour_of_day(ts_ms: int) -> int:
    """Clock hour 0..23 of a UTC epoch-millisecond timestamp."""
    return (ts_ms // MS_PER_HOUR) % 24


def hour_bucket(ts_ms: int) -> int:
    """Timestamp truncated down to the start of its clock hour."""
    return (ts_ms // MS_PER_HOUR) * MS_PER_HOUR


def deployment_to_dict(dep: Deployment) -> dict:
    return {
        "name": dep.name,
        "zones": [
            {"id": z.id, "x_min": z.x_min, "y_min": z.y_min, "x_max": z.x_max, "y_max": z.y_max}
            for z in dep.zones
        ],
        "gateways": [{"id": g.id, "x": g.x, "y": g.y} for g in dep.gateways],
        "iaq_sensors": [
            {"id": s.id, "x": s.x, "y": s.y, "zone_hint": s.zone_hint}
            for s in dep.iaq_sensors
        ],
    }


def deployment_from_dict(obj: dict) -> Deployment:
    try:
        zones = tuple(
            Zone(
                id=int(z["id"]),
                x_min=float(z["x_min"]),
                y_min=float(z["y_min"]),
                x_max=float(z["x_max"]),
                y_max=float(z["y_max"]),
            )
            for z in obj["zones"]
        )
        gateways = tuple(
            Gateway(id=str(g["id"]), x=float(g["x"]), y=float(g["y"]))
            for g in obj["gateways"]
        )
        sensors = tuple(
            IaqSensor(
                id=str(s["id"]),
                x=float(s["x"]),
                y=float(s["y"]),
                zone_hint=None if s.get("zone_hint") is None else int(s["zone_hint"]),
            )
            for s in obj.get("iaq_sensors", [])
        )
        name = str(obj["name"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed deployment object: {exc}") from exc
    return Deployment(name=name, zones=zones, gateways=gateways, iaq_sensors=sensors)


def load_deployment(path: str) -> Deployment:
    with open(path, encoding="utf-8") as fh:
        return deployment_from_dict(json.load(fh))


def save_deployment(dep: Deployment, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(deployment_to_dict(dep), fh, indent=2, sort_keys=True)
        fh.write("\n")
