"""Readers and writers for the on-disk formats.

Four formats live here: RSSI streams as JSON lines, air quality readings
and ground-truth intervals as CSV, and trained models as a single JSON
document. All writers are deterministic — fixed key order, no wall-clock
or environment data — so the same inputs always produce byte-identical
files. Model files and derived CSVs print floats with repr (shortest
string that round-trips), keeping save/load prediction-exact; the two
telemetry formats use fixed decimals (rssi %.2f, air quality %.3f)
matching device precision.

Loading is strict by default: the first malformed line raises ParseError
with the file and line number. With strict=False bad lines are skipped
and counted instead, which is the right mode for field data where a
gateway occasionally truncates a record mid-write.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import IaqReading, LabeledInterval, RssiObservation

IAQ_HEADER = "ts,sensor_id,co2_ppm,pm25_ugm3,pm10_ugm3,voc_index,temp_c"
TRUTH_HEADER = "tag,start_ms,end_ms,zone,source"

_WRITE_CHUNK = 10_000


class ParseError(ValueError):
    """Malformed input file; message carries path and 1-based line number."""


class ModelFormatError(ValueError):
    """Model file is structurally invalid or has an unsupported version."""


def fmt_float(v: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(v))


@dataclass(frozen=True)
class LoadResult:
    """Outcome of a non-strict load: what parsed, what did not."""

    records: tuple
    skipped: int
    total: int
    errors: tuple[str, ...] = ()  # first few skip reasons, for diagnostics


def _bad(path: str, line_no: int, reason: str) -> ParseError:
    return ParseError(f"{path}:{line_no}: {reason}")


# ---------------------------------------------------------------- RSSI JSONL


def _parse_rssi_line(line: str) -> RssiObservation:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("expected a JSON object")
    ts = obj["ts"]
    tag = obj["tag"]
    gw = obj["gw"]
    rssi = obj["rssi"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ValueError(f"ts must be an integer, got {ts!r}")
    if not isinstance(tag, str) or not tag:
        raise ValueError(f"tag must be a non-empty string, got {tag!r}")
    if not isinstance(gw, str) or not gw:
        raise ValueError(f"gw must be a non-empty string, got {gw!r}")
    if isinstance(rssi, bool) or not isinstance(rssi, (int, float)):
        raise ValueError(f"rssi must be a number, got {rssi!r}")
    if ts <= 0:
        raise ValueError(f"ts must be positive, got {ts}")
    if not (-120.0 <= rssi <= 0.0):
        raise ValueError(f"rssi must be within [-120, 0] dBm, got {rssi!r}")
    return RssiObservation(ts=ts, tag=tag, gw=gw, rssi=float(rssi))


def load_rssi(path: str, strict: bool = True) -> LoadResult:
    """Read a JSONL stream of signal reports, sorted by timestamp.

    The sort is stable, so reports sharing a timestamp keep file order.
    """
    records: list[RssiObservation] = []
    skipped = 0
    total = 0
    errors: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            total += 1
            try:
                records.append(_parse_rssi_line(line))
            except (ValueError, KeyError) as exc:
                if strict:
                    raise _bad(path, line_no, str(exc)) from exc
                skipped += 1
                if len(errors) < 10:
                    errors.append(f"line {line_no}: {exc}")
    records.sort(key=lambda r: r.ts)
    return LoadResult(tuple(records), skipped, total, tuple(errors))


def save_rssi(observations: Iterable[RssiObservation], path: str) -> None:
    """Write signal reports as JSONL, rssi fixed at 2 decimals."""
    buf: list[str] = []
    with open(path, "w", encoding="utf-8") as fh:
        for o in observations:
            buf.append(
                '{"ts":%d,"tag":%s,"gw":%s,"rssi":%.2f}'
                % (o.ts, json.dumps(o.tag), json.dumps(o.gw), o.rssi)
            )
            if len(buf) >= _WRITE_CHUNK:
                fh.write("\n".join(buf) + "\n")
                buf.clear()
        if buf:
            fh.write("\n".join(buf) + "\n")


# ----------------------------------------------------------------- IAQ CSV


def load_iaq(path: str, strict: bool = True) -> LoadResult:
    """Read air quality samples from CSV, sorted by timestamp (stable)."""
    records: list[IaqReading] = []
    skipped = 0
    total = 0
    errors: list[str] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != IAQ_HEADER:
            raise _bad(path, 1, f"expected header {IAQ_HEADER!r}, got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            total += 1
            try:
                parts = line.split(",")
                if len(parts) != 7:
                    raise ValueError(f"expected 7 fields, got {len(parts)}")
                if not parts[1]:
                    raise ValueError("sensor_id must be non-empty")
                ts = int(parts[0])
                if ts <= 0:
                    raise ValueError(f"ts must be positive, got {ts}")
                co2, pm25, pm10, voc = (float(p) for p in parts[2:6])
                for name, v in (("co2_ppm", co2), ("pm25_ugm3", pm25),
                                ("pm10_ugm3", pm10), ("voc_index", voc)):
                    if not v >= 0.0:  # also rejects NaN
                        raise ValueError(f"{name} must be >= 0, got {parts[2:6]}")
                records.append(
                    IaqReading(
                        ts=ts,
                        sensor_id=parts[1],
                        co2_ppm=co2,
                        pm25_ugm3=pm25,
                        pm10_ugm3=pm10,
                        voc_index=voc,
                        temp_c=float(parts[6]),
                    )
                )
            except ValueError as exc:
                if strict:
                    raise _bad(path, line_no, str(exc)) from exc
                skipped += 1
                if len(errors) < 10:
                    errors.append(f"line {line_no}: {exc}")
    records.sort(key=lambda r: r.ts)
    return LoadResult(tuple(records), skipped, total, tuple(errors))


def save_iaq(readings: Iterable[IaqReading], path: str) -> None:
    """Write air quality samples as CSV, values fixed at 3 decimals."""
    buf: list[str] = []
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(IAQ_HEADER + "\n")
        for r in readings:
            buf.append(
                "%d,%s,%.3f,%.3f,%.3f,%.3f,%.3f"
                % (r.ts, r.sensor_id, r.co2_ppm, r.pm25_ugm3, r.pm10_ugm3, r.voc_index, r.temp_c)
            )
            if len(buf) >= _WRITE_CHUNK:
                fh.write("\n".join(buf) + "\n")
                buf.clear()
        if buf:
            fh.write("\n".join(buf) + "\n")


# --------------------------------------------------------------- truth CSV


def load_truth(path: str) -> tuple[LabeledInterval, ...]:
    """Read ground-truth zone intervals; always strict."""
    intervals: list[LabeledInterval] = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        if header != TRUTH_HEADER:
            raise _bad(path, 1, f"expected header {TRUTH_HEADER!r}, got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                parts = line.split(",")
                if len(parts) != 5:
                    raise ValueError(f"expected 5 fields, got {len(parts)}")
                intervals.append(
                    LabeledInterval(
                        tag=parts[0],
                        start_ms=int(parts[1]),
                        end_ms=int(parts[2]),
                        zone=int(parts[3]),
                        source=parts[4],
                    )
                )
            except ValueError as exc:
                raise _bad(path, line_no, str(exc)) from exc
    intervals.sort(key=lambda iv: (iv.tag, iv.start_ms))
    return tuple(intervals)


def save_truth(intervals: Iterable[LabeledInterval], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRUTH_HEADER + "\n")
        for iv in intervals:
            fh.write(f"{iv.tag},{iv.start_ms},{iv.end_ms},{iv.zone},{iv.source}\n")


# --------------------------------------------------------------- model JSON

MODEL_FORMAT_VERSION = 1


def write_model_file(doc: dict, path: str) -> None:
    """Serialize a model document with a fixed, reproducible layout."""
    doc = dict(doc)
    doc["format_version"] = MODEL_FORMAT_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_model_file(path: str) -> dict:
    """Load a model document, checking the envelope before anything else."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: model document must be a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {version!r}, "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    return doc


# ------------------------------------------------------------- CSV helpers


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Plain CSV writer for report tables; floats via repr, rest via str."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt_float(v) if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")
