"""Windowed fingerprint features from raw signal streams.

The stream is cut into tumbling windows of delta_t seconds whose
boundaries sit on multiples of delta_t, so two runs over the same data
always agree on window edges. Within one (tag, window) cell each
gateway's readings collapse to five numbers: mean, lower quartile,
median, upper quartile, and the 90th percentile. Gateways that heard
nothing in the window contribute an imputed block at the configured
floor value; silence is a signal here, not missing data.

Quantiles use linear interpolation between closest ranks, position
q*(n-1) on the sorted sample. The same formula runs in the scalar
helper and in the vectorized segmentation path so both agree to
rounding error.
"""

from __future__ import annotations

import bisect
import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Deployment, LabeledInterval, RssiObservation, TimeWindow
from .io import fmt_float

STAT_NAMES = ("mean", "q25", "median", "q75", "p90")
_QS = (0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class WindowingConfig:
    """How streams are cut into windows and how silence is encoded."""

    delta_t: float = 20.0
    min_observations_per_window: int = 3
    impute_missing_dbm: float = -100.0

    def __post_init__(self) -> None:
        if self.delta_t <= 0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if self.min_observations_per_window < 1:
            raise ValueError("min_observations_per_window must be >= 1")

    @property
    def window_ms(self) -> int:
        ms = int(round(self.delta_t * 1000))
        if ms < 1 or abs(ms - self.delta_t * 1000) > 1e-6:
            raise ValueError(f"delta_t {self.delta_t}s is not a whole millisecond count")
        return ms


@dataclass(frozen=True, eq=False)
class FingerprintSample:
    """One per-(tag, window) feature vector, optionally zone-labeled."""

    tag: str
    window: TimeWindow
    features: np.ndarray  # shape (5*m,), gateway blocks in deployment order
    label: int | None = None


@dataclass(frozen=True)
class SegmentResult:
    samples: tuple[FingerprintSample, ...]
    dropped_windows: int  # (tag, window) cells below the observation minimum
    ignored_observations: int  # readings from gateways the deployment lacks


def quantile(values: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile at position q*(n-1) of the sorted list."""
    n = len(values)
    if n == 0:
        raise ValueError("quantile of empty list")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    s = sorted(values)
    p = q * (n - 1)
    lo = math.floor(p)
    hi = math.ceil(p)
    frac = p - lo
    return s[lo] + frac * (s[hi] - s[lo])


def window_stats(values: Sequence[float]) -> list[float]:
    """The five per-gateway statistics of one window's readings."""
    if len(values) == 0:
        raise ValueError("window_stats of empty list")
    return [float(np.mean(values))] + [quantile(values, q) for q in _QS]


def feature_names(gateway_order: Sequence[str]) -> list[str]:
    return [f"{gw}_{stat}" for gw in gateway_order for stat in STAT_NAMES]


def _grouped_stats(sorted_vals: np.ndarray, starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Five stats per group; values must be ascending inside each group."""
    out = np.empty((starts.size, 5))
    out[:, 0] = np.add.reduceat(sorted_vals, starts) / counts
    for j, q in enumerate(_QS, start=1):
        p = q * (counts - 1)
        lo = np.floor(p).astype(np.int64)
        frac = p - lo
        vlo = sorted_vals[starts + lo]
        vhi = sorted_vals[starts + np.ceil(p).astype(np.int64)]
        out[:, j] = vlo + frac * (vhi - vlo)
    return out


def segment(
    observations: Sequence[RssiObservation],
    cfg: WindowingConfig,
    deployment: Deployment,
) -> SegmentResult:
    """Cut a time-sorted stream into per-(tag, window) feature vectors.

    A cell survives only if at least one gateway heard the tag
    min_observations_per_window times in the window; sparser cells are
    dropped and counted. Readings from gateways the deployment does not
    list cannot map to a feature column and are counted as ignored.
    """
    return segment_stream(observations, cfg, [g.id for g in deployment.gateways])


def segment_stream(
    observations: Sequence[RssiObservation],
    cfg: WindowingConfig,
    gateway_order: Sequence[str],
) -> SegmentResult:
    """segment() against an explicit gateway column layout.

    Trained models carry their own gateway order; inference must build
    features in that exact layout even if the deployment file lists
    gateways differently.
    """
    window_ms = cfg.window_ms
    gw_order = list(gateway_order)
    m = len(gw_order)
    if m == 0:
        raise ValueError("gateway_order must not be empty")
    if not observations:
        return SegmentResult((), 0, 0)

    gw_index = {g: i for i, g in enumerate(gw_order)}
    ts = np.fromiter((o.ts for o in observations), dtype=np.int64, count=len(observations))
    rssi = np.fromiter((o.rssi for o in observations), dtype=np.float64, count=len(observations))
    gw = np.fromiter((gw_index.get(o.gw, -1) for o in observations), dtype=np.int64, count=len(observations))
    tags, tag_idx = np.unique(np.array([o.tag for o in observations], dtype=object), return_inverse=True)

    known = gw >= 0
    ignored = int(np.count_nonzero(~known))
    if ignored:
        ts, rssi, gw, tag_idx = ts[known], rssi[known], gw[known], tag_idx[known]
    if ts.size == 0:
        return SegmentResult((), 0, ignored)

    win = ts // window_ms
    # Sort so rows group by (tag, window, gateway) with rssi ascending
    # inside each group; grouped quantiles then read pre-sorted slices.
    order = np.lexsort((rssi, gw, win, tag_idx))
    tag_idx, win, gw, rssi = tag_idx[order], win[order], gw[order], rssi[order]

    new_group = np.empty(ts.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = (
        (tag_idx[1:] != tag_idx[:-1]) | (win[1:] != win[:-1]) | (gw[1:] != gw[:-1])
    )
    starts = np.flatnonzero(new_group)
    counts = np.diff(np.append(starts, ts.size))
    stats = _grouped_stats(rssi, starts, counts)

    g_tag, g_win, g_gw = tag_idx[starts], win[starts], gw[starts]
    new_cell = np.empty(starts.size, dtype=bool)
    new_cell[0] = True
    new_cell[1:] = (g_tag[1:] != g_tag[:-1]) | (g_win[1:] != g_win[:-1])
    cell_id = np.cumsum(new_cell) - 1
    n_cells = int(cell_id[-1]) + 1

    features = np.full((n_cells, 5 * m), cfg.impute_missing_dbm, dtype=np.float64)
    col = g_gw * 5
    for j in range(5):
        features[cell_id, col + j] = stats[:, j]

    max_count = np.zeros(n_cells, dtype=np.int64)
    np.maximum.at(max_count, cell_id, counts)
    keep = max_count >= cfg.min_observations_per_window
    dropped = int(np.count_nonzero(~keep))

    cell_starts = np.flatnonzero(new_cell)
    cell_tag, cell_win = g_tag[cell_starts], g_win[cell_starts]
    samples = tuple(
        FingerprintSample(
            tag=str(tags[cell_tag[i]]),
            window=TimeWindow(int(cell_win[i]) * window_ms, (int(cell_win[i]) + 1) * window_ms),
            features=features[i],
        )
        for i in np.flatnonzero(keep)
    )
    return SegmentResult(samples, dropped, ignored)


def label_samples(
    samples: Iterable[FingerprintSample],
    intervals: Sequence[LabeledInterval],
) -> tuple[FingerprintSample, ...]:
    """Attach zone labels; a sample must sit fully inside one interval.

    Samples whose window straddles interval edges or falls outside every
    interval stay unlabeled and are omitted from the result. Overlapping
    intervals for one tag are a data error, not a tie to break.
    """
    by_tag: dict[str, list[LabeledInterval]] = {}
    for iv in intervals:
        by_tag.setdefault(iv.tag, []).append(iv)
    for tag, ivs in by_tag.items():
        ivs.sort(key=lambda iv: iv.start_ms)
        for a, b in zip(ivs, ivs[1:]):
            if a.end_ms > b.start_ms:
                raise ValueError(
                    f"overlapping truth intervals for tag {tag!r}: "
                    f"[{a.start_ms},{a.end_ms}) and [{b.start_ms},{b.end_ms})"
                )

    labeled: list[FingerprintSample] = []
    starts_cache = {tag: [iv.start_ms for iv in ivs] for tag, ivs in by_tag.items()}
    for s in samples:
        ivs = by_tag.get(s.tag)
        if not ivs:
            continue
        i = bisect.bisect_right(starts_cache[s.tag], s.window.start_ms) - 1
        if i < 0:
            continue
        iv = ivs[i]
        if s.window.end_ms <= iv.end_ms:
            labeled.append(dataclasses.replace(s, label=iv.zone))
    return tuple(labeled)


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-dimension standardization fitted on training features."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("scaler mean/std must be 1-D and congruent")


def fit_scaler(samples) -> Scaler:
    """Fit a standardizer; near-constant dimensions scale by 1, not 1/0."""
    X = samples if isinstance(samples, np.ndarray) else sample_matrix(samples)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("fit_scaler needs at least 2 samples")
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population std: deterministic even for n=2
    std = np.where(std < 1e-9, 1.0, std)
    return Scaler(mean=mean, std=std)


def apply_scaler(scaler: Scaler, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != scaler.mean.shape[0]:
        raise ValueError(
            f"feature length {features.shape[-1]} does not match scaler "
            f"dimension {scaler.mean.shape[0]}"
        )
    return (features - scaler.mean) / scaler.std


def sample_matrix(samples: Sequence[FingerprintSample]) -> np.ndarray:
    if not samples:
        return np.empty((0, 0))
    return np.vstack([s.features for s in samples])


def sample_labels(samples: Sequence[FingerprintSample]) -> np.ndarray:
    labels = [s.label for s in samples]
    if any(lb is None for lb in labels):
        raise ValueError("unlabeled sample where labels are required")
    return np.asarray(labels, dtype=np.int64)


def write_features_csv(
    samples: Sequence[FingerprintSample],
    gateway_order: Sequence[str],
    path: str,
) -> None:
    header = ["tag_id", "window_start_ms", "label"] + feature_names(gateway_order)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for s in samples:
            label = "" if s.label is None else str(s.label)
            row = [s.tag, str(s.window.start_ms), label]
            row.extend(fmt_float(v) for v in s.features)
            fh.write(",".join(row) + "\n")
