"""Deterministic generator of synthetic deployments and sensor streams.

Stands in for field data: a grid office, occupants doing a lazy random
walk between zones, gateways overhearing their tags through a
log-distance path-loss channel, and per-zone air quality driven by a
first-order mass balance. Everything derives from one seed through
fixed-purpose substreams, so identical configs give byte-identical
output files.

Movement runs on 1-minute steps, radio on per-second reports: behavior
is slow, signals are fast. Occupants re-draw a uniform position inside
their zone every minute; a stationary tag gets a single position draw
for its whole recording, which is exactly what makes its signal
statistics tighter than a carried tag's.

CO2 per sensor zone follows dC/dt = G*N/V - lambda*(C - C_out),
integrated by forward Euler at 60 s; the analytic steady state
C_out + G*N/(lambda*V) is also the fixed point of the discrete update,
so long constant-occupancy runs converge to it exactly.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields as dataclass_fields
from typing import Sequence

import numpy as np

from .core import (
    Deployment,
    Gateway,
    IaqReading,
    IaqSensor,
    LabeledInterval,
    RssiObservation,
    Zone,
    save_deployment,
)
from .io import IAQ_HEADER, save_truth

# 2023-03-06T00:00:00Z, a Monday at midnight, so hour-of-day arithmetic
# on timestamps starts at 0 and minute/window boundaries line up.
BASE_EPOCH_MS = 1_678_060_800_000

MINUTE_MS = 60_000

# Substream purposes under the config seed.
_STREAM_MOVEMENT = 0
_STREAM_RSSI_NOISE = 1
_STREAM_POSITIONS = 2


@dataclass(frozen=True)
class FloorSpec:
    """Zone grid plus fixed radio and air-quality hardware positions."""

    rows: int = 2
    cols: int = 7
    zone_w: float = 5.0
    zone_h: float = 4.0
    gateways: tuple[tuple[str, float, float], ...] = (
        ("gw1", 3.0, 2.0),
        ("gw2", 8.5, 6.5),
        ("gw3", 14.0, 1.5),
        ("gw4", 19.5, 6.0),
        ("gw5", 26.0, 2.5),
        ("gw6", 32.0, 5.5),
    )
    sensors: tuple[tuple[str, float, float], ...] = (
        ("aq1", 7.5, 2.0),
        ("aq2", 12.5, 6.0),
        ("aq3", 22.5, 2.0),
        ("aq4", 30.0, 6.0),
    )

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("zone grid needs at least one row and one column")
        if self.zone_w <= 0 or self.zone_h <= 0:
            raise ValueError("zone dimensions must be positive")

    @property
    def n_zones(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class RadioSpec:
    report_rate_hz: float = 1.0
    rssi_at_1m: float = -55.0
    path_loss_exponent: float = 2.5
    noise_sigma_db: float = 3.0

    def __post_init__(self) -> None:
        if self.report_rate_hz <= 0:
            raise ValueError("report_rate_hz must be positive")
        if self.noise_sigma_db < 0:
            raise ValueError("noise_sigma_db must be >= 0")
        period = 1000.0 / self.report_rate_hz
        if abs(period - round(period)) > 1e-6 or round(period) < 1:
            raise ValueError("report period must be a whole number of milliseconds")

    @property
    def period_ms(self) -> int:
        return int(round(1000.0 / self.report_rate_hz))


@dataclass(frozen=True)
class OccupantSpec:
    """Who is on the floor and how they move.

    zone_weights biases both the start zone and every move; None means
    uniform. stationary_minutes of parked-tag recording per zone start
    at work_start on day one; those tags imitate motionless occupants
    for training and are not counted as people by the air model.
    """

    count: int = 4
    work_start_h: float = 8.0
    work_end_h: float = 18.0
    move_prob: float = 0.15
    zone_weights: tuple[float, ...] | None = None
    stationary_tags: bool = True
    stationary_minutes: float = 25.0

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("occupant count must be >= 0")
        if not 0.0 <= self.move_prob <= 1.0:
            raise ValueError("move_prob must be in [0, 1]")
        if not 0.0 <= self.work_start_h < self.work_end_h <= 24.0:
            raise ValueError("work hours must satisfy 0 <= start < end <= 24")
        if self.zone_weights is not None:
            if any(w < 0 for w in self.zone_weights) or sum(self.zone_weights) <= 0:
                raise ValueError("zone_weights must be non-negative with a positive sum")
        if self.stationary_minutes <= 0:
            raise ValueError("stationary_minutes must be positive")


@dataclass(frozen=True)
class IaqSpec:
    zone_volume_m3: float = 60.0
    co2_gen_ls: float = 0.005  # per occupant
    air_exchange_per_h: float = 1.0
    outdoor_co2_ppm: float = 420.0
    pm_pulse_ugm3: float = 8.0  # PM2.5 kick per zone entry; PM10 gets 1.6x
    pm_decay_per_h: float = 1.2
    pm25_baseline: float = 6.0
    pm10_baseline: float = 9.0
    voc_baseline: float = 120.0
    voc_per_occupant: float = 15.0
    temp_base_c: float = 21.0
    temp_amp_c: float = 1.5

    def __post_init__(self) -> None:
        for name in ("zone_volume_m3", "co2_gen_ls", "air_exchange_per_h", "outdoor_co2_ppm"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pm_decay_per_h < 0 or self.pm_pulse_ugm3 < 0:
            raise ValueError("PM parameters must be >= 0")
        # forward Euler at 60 s: the update must stay a contraction
        if self.air_exchange_per_h * 60.0 / 3600.0 >= 1.0:
            raise ValueError(
                "air_exchange_per_h too high for the 60 s integration step "
                "(lambda * dt must be < 1)"
            )


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    start_ms: int = BASE_EPOCH_MS
    duration_h: float = 24.0
    floor: FloorSpec = field(default_factory=FloorSpec)
    radio: RadioSpec = field(default_factory=RadioSpec)
    occupants: OccupantSpec = field(default_factory=OccupantSpec)
    iaq: IaqSpec = field(default_factory=IaqSpec)

    def __post_init__(self) -> None:
        if self.start_ms <= 0:
            raise ValueError("start_ms must be positive")
        if self.start_ms % MINUTE_MS != 0:
            raise ValueError("start_ms must sit on a minute boundary")
        if self.duration_h <= 0:
            raise ValueError("duration_h must be positive")
        if self.occupants.zone_weights is not None and len(
            self.occupants.zone_weights
        ) != self.floor.n_zones:
            raise ValueError(
                f"zone_weights has {len(self.occupants.zone_weights)} entries "
                f"for {self.floor.n_zones} zones"
            )

    @property
    def total_minutes(self) -> int:
        return int(round(self.duration_h * 60))


@dataclass(frozen=True)
class SimulationResult:
    deployment: Deployment
    intervals: tuple[LabeledInterval, ...]
    observations: tuple[RssiObservation, ...]
    readings: tuple[IaqReading, ...]


def build_deployment(cfg: SimConfig) -> Deployment:
    """Materialize the grid floor: zone id = row * cols + col + 1."""
    f = cfg.floor
    zones = []
    for row in range(f.rows):
        for col in range(f.cols):
            zones.append(
                Zone(
                    id=row * f.cols + col + 1,
                    x_min=col * f.zone_w,
                    y_min=row * f.zone_h,
                    x_max=(col + 1) * f.zone_w,
                    y_max=(row + 1) * f.zone_h,
                )
            )
    return Deployment(
        name=f"sim-office-{f.rows}x{f.cols}",
        zones=tuple(zones),
        gateways=tuple(Gateway(id=g[0], x=g[1], y=g[2]) for g in f.gateways),
        iaq_sensors=tuple(IaqSensor(id=s[0], x=s[1], y=s[2]) for s in f.sensors),
    )


def _neighbors(f: FloorSpec) -> list[list[int]]:
    """4-neighbor adjacency over the zone grid, 0-based indices."""
    nbrs: list[list[int]] = []
    for idx in range(f.n_zones):
        row, col = divmod(idx, f.cols)
        out = []
        if row > 0:
            out.append(idx - f.cols)
        if row < f.rows - 1:
            out.append(idx + f.cols)
        if col > 0:
            out.append(idx - 1)
        if col < f.cols - 1:
            out.append(idx + 1)
        nbrs.append(out)
    return nbrs


def transition_matrix(cfg: SimConfig) -> np.ndarray:
    """Zone-to-zone step matrix of the walk (for analysis, not used by it)."""
    f = cfg.floor
    w = np.asarray(cfg.occupants.zone_weights or [1.0] * f.n_zones, dtype=np.float64)
    P = np.zeros((f.n_zones, f.n_zones))
    for i, nbrs in enumerate(_neighbors(f)):
        wsum = sum(w[j] for j in nbrs)
        if wsum <= 0:
            P[i, i] = 1.0
            continue
        P[i, i] = 1.0 - cfg.occupants.move_prob
        for j in nbrs:
            P[i, j] = cfg.occupants.move_prob * w[j] / wsum
    return P


def _work_minutes(cfg: SimConfig) -> list[tuple[int, int]]:
    """Per day: [start, end) in minutes from sim start, clipped to duration."""
    occ = cfg.occupants
    out = []
    total = cfg.total_minutes
    day = 0
    while day * 1440 < total:
        lo = day * 1440 + int(round(occ.work_start_h * 60))
        hi = day * 1440 + int(round(occ.work_end_h * 60))
        lo, hi = min(lo, total), min(hi, total)
        if lo < hi:
            out.append((lo, hi))
        day += 1
    return out


def simulate_movement(cfg: SimConfig) -> tuple[LabeledInterval, ...]:
    """Markov walk per occupant plus parked training tags.

    Each work day every occupant draws a start zone from the preference
    weights, then each minute either stays (probability 1 - move_prob)
    or steps to a 4-neighbor zone drawn by weight. Stationary tags
    (fix01..) record one zone each for stationary_minutes on day one.
    """
    f = cfg.floor
    occ = cfg.occupants
    rng = np.random.default_rng([cfg.seed, _STREAM_MOVEMENT])
    weights = np.asarray(occ.zone_weights or [1.0] * f.n_zones, dtype=np.float64)
    start_p = weights / weights.sum()
    nbrs = _neighbors(f)
    work = _work_minutes(cfg)

    intervals: list[LabeledInterval] = []
    for i in range(occ.count):
        tag = f"p{i + 1:02d}"
        for lo, hi in work:
            zone_idx = int(rng.choice(f.n_zones, p=start_p))
            run_start = lo
            for minute in range(lo + 1, hi):
                move = rng.random() < occ.move_prob
                nxt = zone_idx
                if move and nbrs[zone_idx]:
                    nw = weights[nbrs[zone_idx]]
                    if nw.sum() > 0:
                        nxt = int(nbrs[zone_idx][int(rng.choice(len(nbrs[zone_idx]), p=nw / nw.sum()))])
                if nxt != zone_idx:
                    intervals.append(
                        LabeledInterval(
                            tag=tag,
                            start_ms=cfg.start_ms + run_start * MINUTE_MS,
                            end_ms=cfg.start_ms + minute * MINUTE_MS,
                            zone=zone_idx + 1,
                            source="carried",
                        )
                    )
                    zone_idx, run_start = nxt, minute
            intervals.append(
                LabeledInterval(
                    tag=tag,
                    start_ms=cfg.start_ms + run_start * MINUTE_MS,
                    end_ms=cfg.start_ms + hi * MINUTE_MS,
                    zone=zone_idx + 1,
                    source="carried",
                )
            )

    if occ.stationary_tags and work:
        lo = work[0][0]
        hi = min(lo + int(round(occ.stationary_minutes)), work[0][1])
        if hi > lo:
            for z in range(f.n_zones):
                intervals.append(
                    LabeledInterval(
                        tag=f"fix{z + 1:02d}",
                        start_ms=cfg.start_ms + lo * MINUTE_MS,
                        end_ms=cfg.start_ms + hi * MINUTE_MS,
                        zone=z + 1,
                        source="stationary",
                    )
                )
    return tuple(sorted(intervals, key=lambda iv: (iv.tag, iv.start_ms)))


def path_loss_rssi(radio: RadioSpec, distance_m):
    """Noise-free received power at a distance, log-distance model.

    Distances are floored at 0.1 m so a tag sitting on a gateway stays
    finite. Accepts scalars or arrays; dBm out.
    """
    return radio.rssi_at_1m - 10.0 * radio.path_loss_exponent * np.log10(
        np.maximum(distance_m, 0.1)
    )


def _rssi_arrays(
    cfg: SimConfig, intervals: Sequence[LabeledInterval], deployment: Deployment
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, list[str], list[str]]:
    """Vectorized radio channel: (ts, tag_idx, gw_idx, rssi) row arrays.

    Tags are processed in sorted order, minutes chronologically, so the
    random streams are consumed in a reproducible sequence regardless of
    interval list order.
    """
    radio = cfg.radio
    rng_pos = np.random.default_rng([cfg.seed, _STREAM_POSITIONS])
    rng_noise = np.random.default_rng([cfg.seed, _STREAM_RSSI_NOISE])
    gw_xy = np.asarray([[g.x, g.y] for g in deployment.gateways])
    gw_ids = [g.id for g in deployment.gateways]
    m = len(gw_ids)
    reports_per_min = int(round(60_000 / radio.period_ms))
    zone_by_id = {z.id: z for z in deployment.zones}

    by_tag: dict[str, list[LabeledInterval]] = {}
    for iv in intervals:
        by_tag.setdefault(iv.tag, []).append(iv)

    ts_parts: list[np.ndarray] = []
    tag_parts: list[np.ndarray] = []
    gw_parts: list[np.ndarray] = []
    rssi_parts: list[np.ndarray] = []
    tags = sorted(by_tag)
    for t_idx, tag in enumerate(tags):
        ivs = sorted(by_tag[tag], key=lambda iv: iv.start_ms)
        minute_ts: list[int] = []
        minute_zone: list[int] = []
        fixed_pos: list[tuple[float, float] | None] = []
        for iv in ivs:
            pos = None
            if iv.source == "stationary":
                z = zone_by_id[iv.zone]
                u = rng_pos.uniform(size=2)
                pos = (z.x_min + u[0] * (z.x_max - z.x_min), z.y_min + u[1] * (z.y_max - z.y_min))
            t = iv.start_ms
            while t < iv.end_ms:
                minute_ts.append(t)
                minute_zone.append(iv.zone)
                fixed_pos.append(pos)
                t += MINUTE_MS
        n_min = len(minute_ts)
        if n_min == 0:
            continue

        pos_xy = np.empty((n_min, 2))
        for k, (zid, fp) in enumerate(zip(minute_zone, fixed_pos)):
            if fp is not None:
                pos_xy[k] = fp
            else:
                z = zone_by_id[zid]
                u = rng_pos.uniform(size=2)
                pos_xy[k] = (
                    z.x_min + u[0] * (z.x_max - z.x_min),
                    z.y_min + u[1] * (z.y_max - z.y_min),
                )

        d = np.hypot(
            pos_xy[:, None, 0] - gw_xy[None, :, 0], pos_xy[:, None, 1] - gw_xy[None, :, 1]
        )
        base = path_loss_rssi(radio, d)  # (n_min, m)

        rows = n_min * reports_per_min * m
        rssi = np.repeat(base, reports_per_min, axis=0).reshape(rows)
        if radio.noise_sigma_db > 0:
            rssi = rssi + rng_noise.normal(0.0, radio.noise_sigma_db, size=rows)
        np.clip(rssi, -120.0, -20.0, out=rssi)

        offs = (np.arange(reports_per_min) * radio.period_ms)[None, :, None]
        ts = (
            np.asarray(minute_ts, dtype=np.int64)[:, None, None] + offs
        ) + np.zeros((1, 1, m), dtype=np.int64)
        ts = ts.reshape(rows)
        gw_idx = np.tile(np.arange(m), n_min * reports_per_min)

        weak = rssi < -100.0
        n_weak = int(weak.sum())
        if n_weak:
            drop = rng_noise.uniform(size=n_weak) < 0.5
            keep = np.ones(rows, dtype=bool)
            keep[np.flatnonzero(weak)[drop]] = False
            ts, gw_idx, rssi = ts[keep], gw_idx[keep], rssi[keep]
        ts_parts.append(ts)
        tag_parts.append(np.full(ts.size, t_idx, dtype=np.int64))
        gw_parts.append(gw_idx)
        rssi_parts.append(rssi)

    if not ts_parts:
        ints = np.empty(0, dtype=np.int64)
        return ints, ints, ints, np.empty(0), tags, gw_ids
    ts = np.concatenate(ts_parts)
    tag_idx = np.concatenate(tag_parts)
    gw_idx = np.concatenate(gw_parts)
    rssi = np.concatenate(rssi_parts)
    order = np.lexsort((gw_idx, tag_idx, ts))
    return ts[order], tag_idx[order], gw_idx[order], rssi[order], tags, gw_ids


def simulate_rssi(
    cfg: SimConfig, intervals: Sequence[LabeledInterval]
) -> tuple[RssiObservation, ...]:
    """Materialize the radio stream as observation records."""
    deployment = build_deployment(cfg)
    ts, tag_idx, gw_idx, rssi, tags, gw_ids = _rssi_arrays(cfg, intervals, deployment)
    rssi = np.round(rssi, 2)
    return tuple(
        RssiObservation(ts=int(t), tag=tags[a], gw=gw_ids[g], rssi=float(r))
        for t, a, g, r in zip(ts, tag_idx, gw_idx, rssi)
    )


def _zone_occupancy(cfg: SimConfig, intervals: Sequence[LabeledInterval]) -> np.ndarray:
    """(n_zones, total_minutes) carried-occupant counts per minute."""
    counts = np.zeros((cfg.floor.n_zones, cfg.total_minutes), dtype=np.int64)
    for iv in intervals:
        if iv.source != "carried":
            continue
        lo = (iv.start_ms - cfg.start_ms) // MINUTE_MS
        hi = (iv.end_ms - cfg.start_ms) // MINUTE_MS
        counts[iv.zone - 1, max(lo, 0) : min(hi, cfg.total_minutes)] += 1
    return counts


def simulate_iaq(
    cfg: SimConfig, intervals: Sequence[LabeledInterval]
) -> tuple[IaqReading, ...]:
    """Per-sensor pollutant traces sampled every minute.

    CO2 integrates the mass balance of the sensor's zone; PM rides on
    exponential-decay pulses kicked by zone entries; VOC tracks
    occupancy instantly; temperature is a diurnal sine. No measurement
    noise: the traces are meant to be checkable against the ODE.
    """
    air = cfg.iaq
    deployment = build_deployment(cfg)
    occ = _zone_occupancy(cfg, intervals)
    n_minutes = cfg.total_minutes
    dt = 60.0
    lam = air.air_exchange_per_h / 3600.0  # per second
    # G*N/V in ppm/s: L/s -> m3/s (1e-3), over V m3, expressed in ppm (1e6)
    gen_ppm_s = air.co2_gen_ls * 1e-3 / air.zone_volume_m3 * 1e6
    pm_decay = math.exp(-air.pm_decay_per_h * dt / 3600.0)

    entries_by_zone: dict[int, list[int]] = {}
    for iv in intervals:
        if iv.source != "carried":
            continue
        minute = (iv.start_ms - cfg.start_ms) // MINUTE_MS
        if 0 <= minute < n_minutes:
            entries_by_zone.setdefault(iv.zone, []).append(int(minute))

    readings: list[IaqReading] = []
    for sensor in deployment.iaq_sensors:
        zone_id = sensor.zone_hint or deployment.zone_of(sensor.x, sensor.y)
        if zone_id is None:
            raise ValueError(f"sensor {sensor.id} sits outside every zone")
        n_t = occ[zone_id - 1]
        pulses = np.zeros(n_minutes)
        for minute in entries_by_zone.get(zone_id, ()):
            pulses[minute] += air.pm_pulse_ugm3

        co2 = air.outdoor_co2_ppm
        pm25_excess = 0.0
        for k in range(n_minutes):
            ts = cfg.start_ms + k * MINUTE_MS
            hours = (ts // MINUTE_MS % 1440) / 60.0
            temp = air.temp_base_c + air.temp_amp_c * math.sin(
                2 * math.pi * (hours - 10.0) / 24.0
            )
            voc = air.voc_baseline + air.voc_per_occupant * n_t[k]
            readings.append(
                IaqReading(
                    ts=ts,
                    sensor_id=sensor.id,
                    co2_ppm=co2,
                    pm25_ugm3=air.pm25_baseline + pm25_excess,
                    pm10_ugm3=air.pm10_baseline + 1.6 * pm25_excess,
                    voc_index=voc,
                    temp_c=temp,
                )
            )
            co2 = co2 + dt * (gen_ppm_s * n_t[k] - lam * (co2 - air.outdoor_co2_ppm))
            pm25_excess = pm25_excess * pm_decay + pulses[k]
    readings.sort(key=lambda r: (r.ts, r.sensor_id))
    return tuple(readings)


def simulate(cfg: SimConfig) -> SimulationResult:
    """All three generators in one pass, in memory."""
    deployment = build_deployment(cfg)
    intervals = simulate_movement(cfg)
    observations = simulate_rssi(cfg, intervals)
    readings = simulate_iaq(cfg, intervals)
    return SimulationResult(
        deployment=deployment,
        intervals=intervals,
        observations=observations,
        readings=readings,
    )


def generate(cfg: SimConfig, out_dir: str) -> dict[str, str]:
    """Run the simulators and write the four dataset files.

    Streams go to disk straight from arrays; a full office day is a few
    million radio rows and never needs to exist as objects.
    """
    os.makedirs(out_dir, exist_ok=True)
    deployment = build_deployment(cfg)
    intervals = simulate_movement(cfg)

    paths = {
        "deployment": os.path.join(out_dir, "deployment.json"),
        "rssi": os.path.join(out_dir, "rssi.jsonl"),
        "iaq": os.path.join(out_dir, "iaq.csv"),
        "truth": os.path.join(out_dir, "truth.csv"),
    }
    save_deployment(deployment, paths["deployment"])
    save_truth(intervals, paths["truth"])

    ts, tag_idx, gw_idx, rssi, tags, gw_ids = _rssi_arrays(cfg, intervals, deployment)
    rssi = np.round(rssi, 2)
    tag_json = [json.dumps(t) for t in tags]
    gw_json = [json.dumps(g) for g in gw_ids]
    with open(paths["rssi"], "w", encoding="utf-8") as fh:
        buf: list[str] = []
        for i in range(ts.size):
            buf.append(
                '{"ts":%d,"tag":%s,"gw":%s,"rssi":%.2f}'
                % (ts[i], tag_json[tag_idx[i]], gw_json[gw_idx[i]], rssi[i])
            )
            if len(buf) >= 20_000:
                fh.write("\n".join(buf) + "\n")
                buf.clear()
        if buf:
            fh.write("\n".join(buf) + "\n")

    readings = simulate_iaq(cfg, intervals)
    with open(paths["iaq"], "w", encoding="utf-8") as fh:
        fh.write(IAQ_HEADER + "\n")
        fh.write(
            "".join(
                "%d,%s,%.3f,%.3f,%.3f,%.3f,%.3f\n"
                % (r.ts, r.sensor_id, r.co2_ppm, r.pm25_ugm3, r.pm10_ugm3, r.voc_index, r.temp_c)
                for r in readings
            )
        )
    return paths


# ------------------------------------------------------------- config file


def sim_config_to_dict(cfg: SimConfig) -> dict:
    return {
        "seed": cfg.seed,
        "start_ms": cfg.start_ms,
        "duration_h": cfg.duration_h,
        "floor": {
            "rows": cfg.floor.rows,
            "cols": cfg.floor.cols,
            "zone_w": cfg.floor.zone_w,
            "zone_h": cfg.floor.zone_h,
            "gateways": [list(g) for g in cfg.floor.gateways],
            "sensors": [list(s) for s in cfg.floor.sensors],
        },
        "radio": {
            "report_rate_hz": cfg.radio.report_rate_hz,
            "rssi_at_1m": cfg.radio.rssi_at_1m,
            "path_loss_exponent": cfg.radio.path_loss_exponent,
            "noise_sigma_db": cfg.radio.noise_sigma_db,
        },
        "occupants": {
            "count": cfg.occupants.count,
            "work_start_h": cfg.occupants.work_start_h,
            "work_end_h": cfg.occupants.work_end_h,
            "move_prob": cfg.occupants.move_prob,
            "zone_weights": (
                None
                if cfg.occupants.zone_weights is None
                else list(cfg.occupants.zone_weights)
            ),
            "stationary_tags": cfg.occupants.stationary_tags,
            "stationary_minutes": cfg.occupants.stationary_minutes,
        },
        "iaq": {
            "zone_volume_m3": cfg.iaq.zone_volume_m3,
            "co2_gen_ls": cfg.iaq.co2_gen_ls,
            "air_exchange_per_h": cfg.iaq.air_exchange_per_h,
            "outdoor_co2_ppm": cfg.iaq.outdoor_co2_ppm,
            "pm_pulse_ugm3": cfg.iaq.pm_pulse_ugm3,
            "pm_decay_per_h": cfg.iaq.pm_decay_per_h,
            "pm25_baseline": cfg.iaq.pm25_baseline,
            "pm10_baseline": cfg.iaq.pm10_baseline,
            "voc_baseline": cfg.iaq.voc_baseline,
            "voc_per_occupant": cfg.iaq.voc_per_occupant,
            "temp_base_c": cfg.iaq.temp_base_c,
            "temp_amp_c": cfg.iaq.temp_amp_c,
        },
    }


def sim_config_from_dict(obj: dict) -> SimConfig:
    """Build a config from a JSON object; absent keys keep defaults."""

    def sub(cls, key):
        data = obj.get(key) or {}
        if not isinstance(data, dict):
            raise ValueError(f"config section {key!r} must be an object")
        fields = {f.name for f in dataclass_fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ValueError(f"unknown keys in config section {key!r}: {sorted(unknown)}")
        kwargs = dict(data)
        if cls is FloorSpec:
            if "gateways" in kwargs:
                kwargs["gateways"] = tuple(
                    (str(g[0]), float(g[1]), float(g[2])) for g in kwargs["gateways"]
                )
            if "sensors" in kwargs:
                kwargs["sensors"] = tuple(
                    (str(s[0]), float(s[1]), float(s[2])) for s in kwargs["sensors"]
                )
        if cls is OccupantSpec and kwargs.get("zone_weights") is not None:
            kwargs["zone_weights"] = tuple(float(w) for w in kwargs["zone_weights"])
        return cls(**kwargs)

    top_known = {"seed", "start_ms", "duration_h", "floor", "radio", "occupants", "iaq"}
    unknown = set(obj) - top_known
    if unknown:
        raise ValueError(f"unknown top-level config keys: {sorted(unknown)}")
    return SimConfig(
        seed=int(obj.get("seed", 0)),
        start_ms=int(obj.get("start_ms", BASE_EPOCH_MS)),
        duration_h=float(obj.get("duration_h", 24.0)),
        floor=sub(FloorSpec, "floor"),
        radio=sub(RadioSpec, "radio"),
        occupants=sub(OccupantSpec, "occupants"),
        iaq=sub(IaqSpec, "iaq"),
    )


def load_sim_config(path: str) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return sim_config_from_dict(obj)
