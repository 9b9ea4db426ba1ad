"""Trajectory reconstruction and mobility statistics.

A trajectory is the per-window zone sequence of one tag, with holes
where the stream was too sparse to featurize. Occupancy asks "where did
time go", visits ask "how often was a zone entered": a visit is a
maximal run of consecutive steps in the same zone, where a hole longer
than gap_tolerance windows ends the run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

from .classify import ZoneModel, predict_matrix
from .core import MS_PER_HOUR, Deployment, RssiObservation, TimeWindow, hour_bucket
from .features import sample_matrix, segment_stream
from .io import ParseError, write_csv

TRAJECTORY_HEADER = "tag,window_start_ms,window_end_ms,zone"


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered (window, zone) steps of one tag; gaps allowed."""

    tag: str
    steps: tuple[tuple[TimeWindow, int], ...]

    def __post_init__(self) -> None:
        for (a, _), (b, _) in zip(self.steps, self.steps[1:]):
            if b.start_ms < a.end_ms:
                raise ValueError(
                    f"trajectory for {self.tag!r} has overlapping steps at {b.start_ms}"
                )

    @property
    def zones(self) -> tuple[int, ...]:
        return tuple(z for _, z in self.steps)


@dataclass(frozen=True)
class OccupancyStats:
    """Step counts and dwell-time shares per tag and per zone."""

    per_tag_counts: dict[str, dict[int, int]]
    per_tag_rates: dict[str, dict[int, float]]
    zone_counts: dict[int, int]
    zone_rates: dict[int, float]
    total_steps: int


@dataclass(frozen=True)
class VisitRun:
    """One maximal same-zone run: a single visit."""

    tag: str
    zone: int
    start_ms: int
    end_ms: int
    n_steps: int


@dataclass(frozen=True)
class VisitStats:
    zone_visits: dict[int, int]
    runs: tuple[VisitRun, ...]


@dataclass(frozen=True)
class HourlyPoint:
    """One clock-hour bucket of zone traffic."""

    bucket_ms: int
    visits: int  # runs that began in this hour
    presence: int  # distinct tags with at least one step touching the hour


def infer(
    model: ZoneModel,
    observations: Sequence[RssiObservation],
    deployment: Deployment,
) -> tuple[Trajectory, ...]:
    """Reconstruct one trajectory per tag seen in the stream.

    Features are laid out by the model's own gateway order. Stream
    gateways the model never saw are ignored with a warning; model
    gateways silent in a window come out imputed, exactly as in
    training.
    """
    dep_gws = {g.id for g in deployment.gateways}
    if dep_gws != set(model.gateway_order):
        warnings.warn(
            "deployment gateways differ from the model's training layout; "
            "features follow the model"
        )
    seg = segment_stream(observations, model.windowing, model.gateway_order)
    if seg.ignored_observations:
        warnings.warn(
            f"{seg.ignored_observations} observations from gateways outside "
            "the model layout were ignored"
        )

    tags = sorted({o.tag for o in observations})
    steps_by_tag: dict[str, list[tuple[TimeWindow, int]]] = {t: [] for t in tags}
    if seg.samples:
        preds = predict_matrix(model, sample_matrix(seg.samples))
        for s, z in zip(seg.samples, preds):
            steps_by_tag[s.tag].append((s.window, int(z)))
    return tuple(
        Trajectory(tag=t, steps=tuple(sorted(steps_by_tag[t], key=lambda p: p[0].start_ms)))
        for t in tags
    )


def occupancy(trajectories: Iterable[Trajectory]) -> OccupancyStats:
    """Dwell shares: rate(tag, z) = steps in z / steps of tag."""
    per_tag_counts: dict[str, dict[int, int]] = {}
    zone_counts: dict[int, int] = {}
    total = 0
    for traj in trajectories:
        counts = per_tag_counts.setdefault(traj.tag, {})
        for _, zone in traj.steps:
            counts[zone] = counts.get(zone, 0) + 1
            zone_counts[zone] = zone_counts.get(zone, 0) + 1
            total += 1
    per_tag_rates = {
        tag: {z: c / sum(counts.values()) for z, c in sorted(counts.items())}
        for tag, counts in per_tag_counts.items()
        if counts
    }
    zone_rates = {z: c / total for z, c in sorted(zone_counts.items())} if total else {}
    return OccupancyStats(
        per_tag_counts=per_tag_counts,
        per_tag_rates=per_tag_rates,
        zone_counts=dict(sorted(zone_counts.items())),
        zone_rates=zone_rates,
        total_steps=total,
    )


def _runs_of(traj: Trajectory, gap_tolerance: int) -> list[VisitRun]:
    runs: list[VisitRun] = []
    cur: VisitRun | None = None
    for win, zone in traj.steps:
        if cur is not None and zone == cur.zone:
            gap_ms = win.start_ms - cur.end_ms
            if gap_ms <= gap_tolerance * win.duration_ms:
                cur = VisitRun(cur.tag, cur.zone, cur.start_ms, win.end_ms, cur.n_steps + 1)
                continue
        if cur is not None:
            runs.append(cur)
        cur = VisitRun(traj.tag, zone, win.start_ms, win.end_ms, 1)
    if cur is not None:
        runs.append(cur)
    return runs


def visits(
    trajectories: Iterable[Trajectory],
    gap_tolerance: int = 1,
    min_visit_len: int = 1,
) -> VisitStats:
    """Count zone entries: maximal same-zone runs, short ones filtered.

    gap_tolerance is measured in windows; a hole of more than that many
    windows splits the run even when the zone is unchanged. The default
    of 1 keeps a single dropped window from doubling a dwell.
    """
    if gap_tolerance < 0:
        raise ValueError("gap_tolerance must be >= 0")
    if min_visit_len < 1:
        raise ValueError("min_visit_len must be >= 1")
    all_runs: list[VisitRun] = []
    for traj in trajectories:
        all_runs.extend(r for r in _runs_of(traj, gap_tolerance) if r.n_steps >= min_visit_len)
    zone_visits: dict[int, int] = {}
    for r in all_runs:
        zone_visits[r.zone] = zone_visits.get(r.zone, 0) + 1
    return VisitStats(zone_visits=dict(sorted(zone_visits.items())), runs=tuple(all_runs))


def hourly_visit_counts(
    trajectories: Sequence[Trajectory],
    zone: int,
    gap_tolerance: int = 1,
    min_visit_len: int = 1,
    span: tuple[int, int] | None = None,
) -> tuple[HourlyPoint, ...]:
    """Per clock-hour zone traffic: entries and distinct tags present.

    A visit lands in the bucket of its entry time; presence counts a tag
    in every hour one of its steps touches. span (start_ms, end_ms)
    widens or narrows the bucket range, zero-filling quiet hours, so the
    series can line up with a longer sensor recording.
    """
    stats = visits(trajectories, gap_tolerance, min_visit_len)
    zone_runs = [r for r in stats.runs if r.zone == zone]

    present: dict[int, set[str]] = {}
    step_bounds: list[tuple[int, int]] = []
    for traj in trajectories:
        for win, z in traj.steps:
            if z != zone:
                continue
            step_bounds.append((win.start_ms, win.end_ms))
            b = hour_bucket(win.start_ms)
            while b < win.end_ms:
                present.setdefault(b, set()).add(traj.tag)
                b += MS_PER_HOUR

    if span is not None:
        first, last_excl = hour_bucket(span[0]), span[1]
    else:
        bounds = [r.start_ms for r in zone_runs] + [s for s, _ in step_bounds]
        ends = [r.end_ms for r in zone_runs] + [e for _, e in step_bounds]
        if not bounds:
            return ()
        first, last_excl = hour_bucket(min(bounds)), max(ends)

    entries: dict[int, int] = {}
    for r in zone_runs:
        b = hour_bucket(r.start_ms)
        entries[b] = entries.get(b, 0) + 1

    points = []
    b = first
    while b < last_excl:
        points.append(
            HourlyPoint(bucket_ms=b, visits=entries.get(b, 0), presence=len(present.get(b, ())))
        )
        b += MS_PER_HOUR
    return tuple(points)


def smooth_majority(traj: Trajectory, width: int = 3) -> Trajectory:
    """Optional majority filter over the step sequence; off by default.

    width must be odd. Each step takes the most common zone in the
    width-step window centered on it, keeping its own zone on ties.
    Holes are ignored: the filter runs over the step list as recorded.
    """
    if width < 1 or width % 2 == 0:
        raise ValueError("width must be a positive odd number")
    if width == 1 or len(traj.steps) < 3:
        return traj
    half = width // 2
    zones = traj.zones
    new_steps = []
    for i, (win, z) in enumerate(traj.steps):
        lo, hi = max(0, i - half), min(len(zones), i + half + 1)
        votes: dict[int, int] = {}
        for v in zones[lo:hi]:
            votes[v] = votes.get(v, 0) + 1
        top = max(votes.values())
        winners = [zz for zz, c in votes.items() if c == top]
        new_steps.append((win, z if z in winners else min(winners)))
    return Trajectory(tag=traj.tag, steps=tuple(new_steps))


# ----------------------------------------------------------------- file IO


def save_trajectories(trajectories: Iterable[Trajectory], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for traj in trajectories:
            for win, zone in traj.steps:
                fh.write(f"{traj.tag},{win.start_ms},{win.end_ms},{zone}\n")


def load_trajectories(path: str) -> tuple[Trajectory, ...]:
    steps_by_tag: dict[str, list[tuple[TimeWindow, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != TRAJECTORY_HEADER:
            raise ParseError(f"{path}:1: expected header {TRAJECTORY_HEADER!r}, got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                parts = line.split(",")
                if len(parts) != 4:
                    raise ValueError(f"expected 4 fields, got {len(parts)}")
                tag = parts[0]
                if not tag:
                    raise ValueError("tag must be non-empty")
                win = TimeWindow(int(parts[1]), int(parts[2]))
                steps_by_tag.setdefault(tag, []).append((win, int(parts[3])))
            except ValueError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}") from exc
    return tuple(
        Trajectory(tag=tag, steps=tuple(sorted(steps, key=lambda p: p[0].start_ms)))
        for tag, steps in sorted(steps_by_tag.items())
    )


def write_occupancy_csv(stats: OccupancyStats, path: str, zones: Sequence[int] | None = None) -> None:
    """Tag x zone rate matrix with an ALL aggregate row."""
    zone_axis = list(zones) if zones is not None else sorted(stats.zone_counts)
    header = ["tag"] + [f"zone_{z}" for z in zone_axis]
    rows = []
    for tag in sorted(stats.per_tag_rates):
        rates = stats.per_tag_rates[tag]
        rows.append([tag] + [float(rates.get(z, 0.0)) for z in zone_axis])
    rows.append(["ALL"] + [float(stats.zone_rates.get(z, 0.0)) for z in zone_axis])
    write_csv(path, header, rows)


def write_visits_csv(stats: VisitStats, path: str, zones: Sequence[int] | None = None) -> None:
    zone_axis = list(zones) if zones is not None else sorted(stats.zone_visits)
    write_csv(path, ["zone", "visits"], [(z, stats.zone_visits.get(z, 0)) for z in zone_axis])


def write_hourly_csv(
    series_by_zone: dict[int, Sequence[HourlyPoint]], path: str
) -> None:
    rows = []
    for zone in sorted(series_by_zone):
        for p in series_by_zone[zone]:
            rows.append((p.bucket_ms, zone, p.visits, p.presence))
    write_csv(path, ["bucket_start_ms", "zone", "visits", "presence"], rows)
