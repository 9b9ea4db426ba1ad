"""Air quality vs mobility analytics.

Everything here runs on clock-hour buckets: pollutant dynamics are slow,
so correlating at the featurization window width would mostly measure
sensor noise. A zone's readings come from its nearest sensor, buckets
join with the hourly mobility series on bucket start, and three
questions are asked per pollutant: does it track visit counts (Pearson,
optionally at a lag), is it elevated during busy hours (permutation
test, no normality assumption), and how does it respond to traffic
(linear model on visits and presence).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Deployment, IaqReading, hour_bucket, hour_of_day
from .io import write_csv
from .trajectory import HourlyPoint

POLLUTANTS = ("co2_ppm", "pm25_ugm3", "pm10_ugm3", "voc_index")
BUSY_HOURS = (8, 18)  # default working window, [start, end)


class DegenerateSeriesError(ValueError):
    """A statistic is undefined because a series has no variance."""


@dataclass(frozen=True)
class AlignedBucket:
    bucket_ms: int
    visits: int
    presence: int
    co2_ppm: float
    pm25_ugm3: float
    pm10_ugm3: float
    voc_index: float
    temp_c: float


@dataclass(frozen=True)
class AlignedSeries:
    """Hourly mobility and pollutant means for one zone's sensor."""

    zone: int
    sensor_id: str
    buckets: tuple[AlignedBucket, ...]

    def column(self, name: str) -> np.ndarray:
        return np.asarray([getattr(b, name) for b in self.buckets], dtype=np.float64)


@dataclass(frozen=True)
class LagResult:
    points: tuple[tuple[int, float], ...]  # (lag, r) for every defined lag
    best_lag: int
    best_r: float


@dataclass(frozen=True)
class BusyHoursResult:
    busy_mean: float
    off_mean: float
    delta: float  # busy minus off
    p_value: float
    n_busy: int
    n_off: int


@dataclass(frozen=True)
class PollutantStats:
    pollutant: str
    n: int
    r: float | None  # None when undefined (degenerate variance)
    best_lag: int | None
    best_lag_r: float | None
    busy: BusyHoursResult | None


@dataclass(frozen=True)
class CorrelationReport:
    zone: int
    sensor_id: str
    entries: tuple[PollutantStats, ...]


@dataclass(frozen=True)
class ResponseModel:
    """Linear pollutant response to hourly traffic."""

    pollutant: str
    intercept: float
    coef_visits: float
    coef_presence: float
    rmse: float
    r2: float
    degenerate: bool = False


def align(
    readings: Sequence[IaqReading],
    mobility: Sequence[HourlyPoint],
    deployment: Deployment,
    zone: int,
) -> AlignedSeries:
    """Join a zone's sensor readings with its hourly mobility series.

    Readings bucket by clock hour and average; a bucket appears in the
    output only when both streams have it. Hours with traffic but a
    silent sensor are dropped, not zero-filled: a missing mean is not a
    zero mean.
    """
    sensor = deployment.nearest_sensor(zone)
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for r in readings:
        if r.sensor_id != sensor.id:
            continue
        b = hour_bucket(r.ts)
        vec = np.array([r.co2_ppm, r.pm25_ugm3, r.pm10_ugm3, r.voc_index, r.temp_c])
        if b in sums:
            sums[b] += vec
            counts[b] += 1
        else:
            sums[b] = vec
            counts[b] = 1

    buckets = []
    for p in sorted(mobility, key=lambda p: p.bucket_ms):
        if p.bucket_ms not in sums:
            continue
        mean = sums[p.bucket_ms] / counts[p.bucket_ms]
        buckets.append(
            AlignedBucket(
                bucket_ms=p.bucket_ms,
                visits=p.visits,
                presence=p.presence,
                co2_ppm=float(mean[0]),
                pm25_ugm3=float(mean[1]),
                pm10_ugm3=float(mean[2]),
                voc_index=float(mean[3]),
                temp_c=float(mean[4]),
            )
        )
    return AlignedSeries(zone=zone, sensor_id=sensor.id, buckets=tuple(buckets))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; undefined for flat series."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two equal-length 1-D series")
    if x.size < 3:
        raise ValueError(f"pearson needs at least 3 points, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise DegenerateSeriesError("correlation undefined: a series has zero variance")
    return float((dx @ dy) / np.sqrt(sxx * syy))


def _ranks(v: np.ndarray) -> np.ndarray:
    """Average ranks, ties shared."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation, for monotone but nonlinear responses."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman needs two equal-length 1-D series")
    return pearson(_ranks(x), _ranks(y))


def lagged_correlation(
    x: Sequence[float], y: Sequence[float], max_lag: int
) -> LagResult:
    """Correlation of x against y shifted by -max_lag..max_lag buckets.

    Positive lag means y trails x by that many buckets. Lags where a
    shifted sub-series goes flat are skipped. Best = largest |r|; ties
    prefer the smaller |lag|, then the negative one.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("lagged_correlation needs two equal-length 1-D series")
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    n = x.size
    if n - max_lag < 3:
        raise ValueError(
            f"series of {n} points leaves fewer than 3 overlaps at lag {max_lag}"
        )
    points: list[tuple[int, float]] = []
    for lag in range(-max_lag, max_lag + 1):
        if lag >= 0:
            xs, ys = x[: n - lag], y[lag:]
        else:
            xs, ys = x[-lag:], y[: n + lag]
        try:
            points.append((lag, pearson(xs, ys)))
        except DegenerateSeriesError:
            continue
    if not points:
        raise DegenerateSeriesError("no lag leaves both sub-series with variance")
    best_lag, best_r = min(points, key=lambda p: (-abs(p[1]), abs(p[0]), p[0]))
    return LagResult(points=tuple(points), best_lag=best_lag, best_r=best_r)


def busy_hours_contrast(
    bucket_ms: Sequence[int],
    values: Sequence[float],
    busy: tuple[int, int] = BUSY_HOURS,
    permutations: int = 10_000,
    seed: int = 0,
) -> BusyHoursResult:
    """Two-sided permutation test of busy-hours elevation.

    p counts arrangements whose |busy - off| difference reaches the
    observed one, among the observed arrangement plus permutations-1
    random ones, so p is always in [1/permutations, 1]. Pooled values
    are sorted before drawing, making the null distribution depend only
    on the value multiset and group sizes, not on input order.
    """
    values = np.asarray(values, dtype=np.float64)
    hours = np.asarray([hour_of_day(b) for b in bucket_ms])
    if values.shape != hours.shape:
        raise ValueError("bucket_ms and values must have equal length")
    if permutations < 1:
        raise ValueError("permutations must be >= 1")
    busy_mask = (hours >= busy[0]) & (hours < busy[1])
    n_busy = int(busy_mask.sum())
    n_off = int(values.size - n_busy)
    if n_busy == 0 or n_off == 0:
        raise ValueError(
            f"need buckets in both groups, got busy={n_busy} off={n_off}"
        )
    busy_mean = float(values[busy_mask].mean())
    off_mean = float(values[~busy_mask].mean())
    delta = busy_mean - off_mean

    pooled = np.sort(values)
    total = pooled.sum()
    rng = np.random.default_rng(seed)
    tol = 1e-12 * max(1.0, abs(delta))
    hits = 1  # the observed arrangement counts as one
    remaining = permutations - 1
    while remaining > 0:
        block = min(remaining, 4096)
        # argsort of uniform draws = a uniform random permutation per row
        idx = np.argsort(rng.random((block, values.size)), axis=1)[:, :n_busy]
        s_busy = pooled[idx].sum(axis=1)
        d = s_busy / n_busy - (total - s_busy) / n_off
        hits += int((np.abs(d) >= abs(delta) - tol).sum())
        remaining -= block
    return BusyHoursResult(
        busy_mean=busy_mean,
        off_mean=off_mean,
        delta=delta,
        p_value=hits / permutations,
        n_busy=n_busy,
        n_off=n_off,
    )


def fit_response(aligned: AlignedSeries, pollutant: str) -> ResponseModel:
    """Least squares pollutant ~ 1 + visits + presence on hourly buckets.

    Normal equations, with a tiny ridge retry when the design is
    singular (zero or collinear traffic columns). A flat pollutant gets
    the trivial fit: intercept at the mean, slopes zero, R² reported 0.
    """
    if pollutant not in POLLUTANTS and pollutant != "temp_c":
        raise ValueError(f"unknown pollutant {pollutant!r}")
    n = len(aligned.buckets)
    if n < 4:
        raise ValueError(f"fit_response needs at least 4 buckets, got {n}")
    y = aligned.column(pollutant)
    X = np.column_stack(
        [np.ones(n), aligned.column("visits"), aligned.column("presence")]
    )
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot < 1e-12:
        return ResponseModel(
            pollutant=pollutant,
            intercept=float(y.mean()),
            coef_visits=0.0,
            coef_presence=0.0,
            rmse=0.0,
            r2=0.0,
            degenerate=True,
        )
    A = X.T @ X
    b = X.T @ y
    try:
        coef = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        coef = np.linalg.solve(A + 1e-8 * np.eye(3), b)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    return ResponseModel(
        pollutant=pollutant,
        intercept=float(coef[0]),
        coef_visits=float(coef[1]),
        coef_presence=float(coef[2]),
        rmse=float(np.sqrt(ss_res / n)),
        r2=1.0 - ss_res / ss_tot,
    )


def build_correlation_report(
    aligned: AlignedSeries,
    pollutants: Sequence[str] = POLLUTANTS,
    max_lag: int = 3,
    busy: tuple[int, int] = BUSY_HOURS,
    permutations: int = 10_000,
    seed: int = 0,
) -> CorrelationReport:
    """Per-pollutant statistics for one zone; undefined stats stay None.

    Direct calls to pearson or busy_hours_contrast raise on degenerate
    inputs; a report is a survey, so here those entries are recorded as
    undefined instead of aborting the other pollutants.
    """
    visits = aligned.column("visits")
    buckets = [b.bucket_ms for b in aligned.buckets]
    entries = []
    for pol in pollutants:
        y = aligned.column(pol)
        r: float | None
        try:
            r = pearson(visits, y)
        except (ValueError, DegenerateSeriesError):
            r = None
        best_lag = best_lag_r = None
        if r is not None and len(visits) - max_lag >= 3:
            try:
                lr = lagged_correlation(visits, y, max_lag)
                best_lag, best_lag_r = lr.best_lag, lr.best_r
            except (ValueError, DegenerateSeriesError):
                pass
        contrast: BusyHoursResult | None
        try:
            contrast = busy_hours_contrast(buckets, y, busy, permutations, seed)
        except ValueError:
            contrast = None
        entries.append(
            PollutantStats(
                pollutant=pol,
                n=len(aligned.buckets),
                r=r,
                best_lag=best_lag,
                best_lag_r=best_lag_r,
                busy=contrast,
            )
        )
    return CorrelationReport(zone=aligned.zone, sensor_id=aligned.sensor_id, entries=tuple(entries))


# ----------------------------------------------------------------- file IO

ALIGNED_HEADER = [
    "bucket_start_ms",
    "zone",
    "sensor_id",
    "visits",
    "presence",
    "co2_ppm",
    "pm25_ugm3",
    "pm10_ugm3",
    "voc_index",
    "temp_c",
]


def write_aligned_csv(series: Sequence[AlignedSeries], path: str) -> None:
    rows = []
    for s in series:
        for b in s.buckets:
            rows.append(
                (
                    b.bucket_ms,
                    s.zone,
                    s.sensor_id,
                    b.visits,
                    b.presence,
                    b.co2_ppm,
                    b.pm25_ugm3,
                    b.pm10_ugm3,
                    b.voc_index,
                    b.temp_c,
                )
            )
    write_csv(path, ALIGNED_HEADER, rows)


def _opt(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def write_correlation_csv(reports: Sequence[CorrelationReport], path: str) -> None:
    header = [
        "zone",
        "sensor_id",
        "pollutant",
        "n_buckets",
        "pearson_r",
        "best_lag",
        "best_lag_r",
        "busy_mean",
        "off_mean",
        "delta",
        "p_value",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for rep in reports:
            for e in rep.entries:
                busy = e.busy
                fields = [
                    str(rep.zone),
                    rep.sensor_id,
                    e.pollutant,
                    str(e.n),
                    _opt(e.r),
                    "" if e.best_lag is None else str(e.best_lag),
                    _opt(e.best_lag_r),
                    _opt(busy.busy_mean if busy else None),
                    _opt(busy.off_mean if busy else None),
                    _opt(busy.delta if busy else None),
                    _opt(busy.p_value if busy else None),
                ]
                fh.write(",".join(fields) + "\n")


def write_response_csv(models: Sequence[tuple[int, ResponseModel]], path: str) -> None:
    write_csv(
        path,
        ["zone", "pollutant", "intercept", "coef_visits", "coef_presence", "rmse", "r2", "degenerate"],
        [
            (z, m.pollutant, m.intercept, m.coef_visits, m.coef_presence, m.rmse, m.r2, int(m.degenerate))
            for z, m in models
        ],
    )


def format_correlation_text(reports: Sequence[CorrelationReport]) -> str:
    lines = []
    for rep in reports:
        lines.append(f"zone {rep.zone} (sensor {rep.sensor_id})")
        for e in rep.entries:
            r_txt = "undefined" if e.r is None else f"{e.r:+.3f}"
            lag_txt = (
                "" if e.best_lag is None else f", best lag {e.best_lag:+d}h r={e.best_lag_r:+.3f}"
            )
            lines.append(f"  {e.pollutant:<11} r={r_txt} over {e.n} buckets{lag_txt}")
            if e.busy is not None:
                lines.append(
                    f"  {'':<11} busy {e.busy.busy_mean:.1f} vs off {e.busy.off_mean:.1f}"
                    f" (delta {e.busy.delta:+.1f}, p={e.busy.p_value:.4f},"
                    f" n={e.busy.n_busy}/{e.busy.n_off})"
                )
    return "\n".join(lines) + "\n"
