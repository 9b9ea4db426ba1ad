"""Command-line pipeline: simulate - train - sweep - infer - stats - correlate.

Each subcommand reads files, writes files, and leaves a manifest.json in
its output directory recording the tool version, seed, resolved
parameters and paths, so any run can be repeated byte-for-byte. Outputs
are staged as .tmp files and renamed together; a failing command leaves
no partial results behind.

Exit codes: 0 success, 1 runtime or data error (one-line cause on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import shutil
import sys
import time

from . import __version__
from .charts import svg_bar_chart, svg_dual_line, svg_zone_map
from .classify import (
    MODEL_KINDS,
    SCENARIOS,
    evaluate,
    load_model,
    save_model,
    scenario_datasets,
    sweep,
    train_kind,
    format_eval_report,
    write_sweep_csv,
)
from .core import load_deployment
from .features import WindowingConfig
from .iaq import (
    align,
    build_correlation_report,
    fit_response,
    format_correlation_text,
    write_aligned_csv,
    write_correlation_csv,
    write_response_csv,
    POLLUTANTS,
)
from .io import LoadResult, load_iaq, load_rssi, load_truth
from .simulate import SimConfig, generate, load_sim_config, sim_config_to_dict
from .trajectory import (
    hourly_visit_counts,
    infer,
    load_trajectories,
    occupancy,
    save_trajectories,
    visits,
    write_hourly_csv,
    write_occupancy_csv,
    write_visits_csv,
)


class _Outputs:
    """Stage files as .tmp siblings; rename all on commit, none on failure."""

    def __init__(self) -> None:
        self._pending: list[tuple[str, str]] = []

    def stage(self, final: str) -> str:
        tmp = final + ".tmp"
        self._pending.append((tmp, final))
        return tmp

    def commit(self) -> None:
        for tmp, final in self._pending:
            os.replace(tmp, final)
        self._pending.clear()

    def rollback(self) -> None:
        for tmp, _ in self._pending:
            try:
                os.remove(tmp)
            except OSError:
                pass
        self._pending.clear()


def _write_manifest(
    out_dir: str,
    subcommand: str,
    seed: int | None,
    inputs: dict[str, str],
    parameters: dict,
    outputs: dict[str, str],
    wall_time_s: float,
) -> None:
    doc = {
        "tool": "mobiq",
        "version": __version__,
        "subcommand": subcommand,
        "seed": seed,
        "inputs": inputs,
        "parameters": parameters,
        "outputs": outputs,
        "wall_time_s": round(wall_time_s, 3),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _note_skipped(result: LoadResult, path: str) -> None:
    if result.skipped:
        print(
            f"note: skipped {result.skipped} malformed of {result.total} lines in {path}",
            file=sys.stderr,
        )


def _require(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise FileNotFoundError(f"{what} file not found: {path}")
    return path


# ---------------------------------------------------------------- commands


def cmd_simulate(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    if args.config:
        cfg = load_sim_config(_require(args.config, "config"))
    else:
        cfg = SimConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    tmp_dir = os.path.join(args.out, ".sim-tmp")
    try:
        paths = generate(cfg, tmp_dir)
        for name, tmp_path in paths.items():
            os.replace(tmp_path, os.path.join(args.out, os.path.basename(tmp_path)))
    except BaseException:
        shutil.rmtree(tmp_dir, ignore_errors=True)
        raise
    shutil.rmtree(tmp_dir, ignore_errors=True)
    outputs = {name: os.path.basename(p) for name, p in paths.items()}
    _write_manifest(
        args.out,
        "simulate",
        cfg.seed,
        inputs={} if not args.config else {"config": args.config},
        parameters={"config": sim_config_to_dict(cfg)},
        outputs=outputs,
        wall_time_s=time.perf_counter() - t0,
    )
    print(f"wrote {', '.join(sorted(outputs.values()))} to {args.out}")
    return 0


def _load_training_inputs(args: argparse.Namespace):
    deployment = load_deployment(_require(args.deployment, "deployment"))
    rssi = load_rssi(_require(args.rssi, "rssi"), strict=args.strict)
    _note_skipped(rssi, args.rssi)
    truth = load_truth(_require(args.truth, "truth"))
    return deployment, rssi.records, truth


def cmd_train(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    deployment, observations, truth = _load_training_inputs(args)
    windowing = WindowingConfig(delta_t=args.window)
    train, test = scenario_datasets(
        observations, truth, deployment, windowing, args.scenario, args.seed
    )
    model = train_kind(
        args.model, train, windowing, [g.id for g in deployment.gateways]
    )
    model = dataclasses.replace(
        model,
        metadata={**model.metadata, "scenario": args.scenario, "split_seed": args.seed},
    )
    report = evaluate(model, test, split_seed=args.seed)

    os.makedirs(args.out, exist_ok=True)
    staged = _Outputs()
    try:
        save_model(model, staged.stage(os.path.join(args.out, "model.json")))
        with open(staged.stage(os.path.join(args.out, "eval.txt")), "w", encoding="utf-8") as fh:
            fh.write(format_eval_report(report))
        from .io import write_csv

        write_csv(
            staged.stage(os.path.join(args.out, "eval.csv")),
            ["window_s", "kind", "accuracy", "n_train", "n_test"],
            [(args.window, args.model, report.accuracy, len(train), len(test))],
        )
        staged.commit()
    except BaseException:
        staged.rollback()
        raise
    _write_manifest(
        args.out,
        "train",
        args.seed,
        inputs={"rssi": args.rssi, "truth": args.truth, "deployment": args.deployment},
        parameters={
            "scenario": args.scenario,
            "window": args.window,
            "model": args.model,
            "strict": args.strict,
        },
        outputs={"model": "model.json", "eval_text": "eval.txt", "eval_csv": "eval.csv"},
        wall_time_s=time.perf_counter() - t0,
    )
    print(
        f"{args.model} @ {args.window:g}s [{args.scenario}]: "
        f"accuracy {report.accuracy:.4f} on {len(test)} test samples"
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    deployment, observations, truth = _load_training_inputs(args)
    windows = [float(w) for w in args.windows.split(",") if w]
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    result = sweep(
        observations,
        truth,
        deployment,
        window_sizes=windows,
        kinds=kinds,
        scenario=args.scenario,
        seed=args.seed,
    )
    best_model = dataclasses.replace(
        result.best_model,
        metadata={
            **result.best_model.metadata,
            "scenario": args.scenario,
            "split_seed": args.seed,
        },
    )

    os.makedirs(args.out, exist_ok=True)
    staged = _Outputs()
    try:
        write_sweep_csv(result, staged.stage(os.path.join(args.out, "grid.csv")))
        save_model(best_model, staged.stage(os.path.join(args.out, "model.json")))
        staged.commit()
    except BaseException:
        staged.rollback()
        raise
    _write_manifest(
        args.out,
        "sweep",
        args.seed,
        inputs={"rssi": args.rssi, "truth": args.truth, "deployment": args.deployment},
        parameters={
            "scenario": args.scenario,
            "windows": windows,
            "kinds": kinds,
            "strict": args.strict,
        },
        outputs={"grid": "grid.csv", "model": "model.json"},
        wall_time_s=time.perf_counter() - t0,
    )
    for cell in result.cells:
        print(f"  {cell.kind:<7} @ {cell.window_s:g}s  accuracy {cell.accuracy:.4f}")
    print(f"best: {result.best.kind} @ {result.best.window_s:g}s ({result.best.accuracy:.4f})")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    model = load_model(_require(args.model, "model"))
    deployment = load_deployment(_require(args.deployment, "deployment"))
    rssi = load_rssi(_require(args.rssi, "rssi"), strict=args.strict)
    _note_skipped(rssi, args.rssi)
    trajectories = infer(model, rssi.records, deployment)

    os.makedirs(args.out, exist_ok=True)
    staged = _Outputs()
    try:
        save_trajectories(trajectories, staged.stage(os.path.join(args.out, "trajectories.csv")))
        staged.commit()
    except BaseException:
        staged.rollback()
        raise
    _write_manifest(
        args.out,
        "infer",
        None,
        inputs={"model": args.model, "rssi": args.rssi, "deployment": args.deployment},
        parameters={"strict": args.strict},
        outputs={"trajectories": "trajectories.csv"},
        wall_time_s=time.perf_counter() - t0,
    )
    n_steps = sum(len(t.steps) for t in trajectories)
    print(f"inferred {n_steps} steps across {len(trajectories)} tags")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    trajectories = load_trajectories(_require(args.trajectories, "trajectories"))
    deployment = (
        load_deployment(_require(args.deployment, "deployment")) if args.deployment else None
    )
    occ = occupancy(trajectories)
    vis = visits(trajectories, args.gap_tolerance, args.min_visit_len)
    zone_axis = (
        [z.id for z in deployment.zones]
        if deployment
        else sorted(set(occ.zone_counts) | set(vis.zone_visits))
    )
    all_steps = [
        (win.start_ms, win.end_ms) for t in trajectories for win, _ in t.steps
    ]
    series_by_zone = {}
    if all_steps:
        span = (min(s for s, _ in all_steps), max(e for _, e in all_steps))
        for zone in zone_axis:
            series_by_zone[zone] = hourly_visit_counts(
                trajectories, zone, args.gap_tolerance, args.min_visit_len, span=span
            )

    os.makedirs(args.out, exist_ok=True)
    staged = _Outputs()
    try:
        write_occupancy_csv(occ, staged.stage(os.path.join(args.out, "occupancy.csv")), zone_axis)
        write_visits_csv(vis, staged.stage(os.path.join(args.out, "visits.csv")), zone_axis)
        write_hourly_csv(series_by_zone, staged.stage(os.path.join(args.out, "hourly.csv")))
        outputs = {
            "occupancy": "occupancy.csv",
            "visits": "visits.csv",
            "hourly": "hourly.csv",
        }
        if args.charts:
            rates = [occ.zone_rates.get(z, 0.0) for z in zone_axis]
            counts = [vis.zone_visits.get(z, 0) for z in zone_axis]
            with open(
                staged.stage(os.path.join(args.out, "occupancy.svg")), "w", encoding="utf-8"
            ) as fh:
                fh.write(
                    svg_bar_chart([str(z) for z in zone_axis], rates, "Occupancy rate by zone")
                )
            with open(
                staged.stage(os.path.join(args.out, "visits.svg")), "w", encoding="utf-8"
            ) as fh:
                fh.write(
                    svg_bar_chart(
                        [str(z) for z in zone_axis],
                        [float(c) for c in counts],
                        "Visit count by zone",
                    )
                )
            outputs["occupancy_chart"] = "occupancy.svg"
            outputs["visits_chart"] = "visits.svg"
            if deployment:
                with open(
                    staged.stage(os.path.join(args.out, "occupancy_map.svg")),
                    "w",
                    encoding="utf-8",
                ) as fh:
                    fh.write(
                        svg_zone_map(deployment, occ.zone_rates, "Occupancy rate floor map")
                    )
                outputs["occupancy_map"] = "occupancy_map.svg"
        staged.commit()
    except BaseException:
        staged.rollback()
        raise
    _write_manifest(
        args.out,
        "stats",
        None,
        inputs={
            "trajectories": args.trajectories,
            **({"deployment": args.deployment} if args.deployment else {}),
        },
        parameters={
            "gap_tolerance": args.gap_tolerance,
            "min_visit_len": args.min_visit_len,
            "charts": args.charts,
        },
        outputs=outputs,
        wall_time_s=time.perf_counter() - t0,
    )
    print(
        f"{occ.total_steps} steps over {len(occ.per_tag_rates)} tags; "
        f"{sum(vis.zone_visits.values())} visits"
    )
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    trajectories = load_trajectories(_require(args.trajectories, "trajectories"))
    readings = load_iaq(_require(args.iaq, "iaq"), strict=args.strict)
    _note_skipped(readings, args.iaq)
    deployment = load_deployment(_require(args.deployment, "deployment"))
    if not readings.records:
        raise ValueError(f"no usable readings in {args.iaq}")
    span = (readings.records[0].ts, readings.records[-1].ts + 1)

    if args.zones:
        zones = [int(z) for z in args.zones.split(",") if z]
    else:
        zones = sorted({z for t in trajectories for _, z in t.steps})
    busy = (args.busy_start, args.busy_end)

    aligned_all = []
    reports = []
    responses = []
    for zone in zones:
        hourly = hourly_visit_counts(
            trajectories, zone, args.gap_tolerance, args.min_visit_len, span=span
        )
        series = align(readings.records, hourly, deployment, zone)
        if len(series.buckets) < 3:
            print(f"note: zone {zone} has {len(series.buckets)} aligned buckets; skipped",
                  file=sys.stderr)
            continue
        aligned_all.append(series)
        reports.append(
            build_correlation_report(
                series,
                max_lag=args.max_lag,
                busy=busy,
                permutations=args.permutations,
                seed=args.seed,
            )
        )
        if len(series.buckets) >= 4:
            for pol in POLLUTANTS:
                responses.append((zone, fit_response(series, pol)))

    if not aligned_all:
        raise ValueError("no zone had enough aligned data to analyze")

    os.makedirs(args.out, exist_ok=True)
    staged = _Outputs()
    try:
        write_aligned_csv(aligned_all, staged.stage(os.path.join(args.out, "aligned.csv")))
        write_correlation_csv(reports, staged.stage(os.path.join(args.out, "correlation.csv")))
        text = format_correlation_text(reports)
        with open(
            staged.stage(os.path.join(args.out, "correlation.txt")), "w", encoding="utf-8"
        ) as fh:
            fh.write(text)
        write_response_csv(responses, staged.stage(os.path.join(args.out, "response.csv")))
        outputs = {
            "aligned": "aligned.csv",
            "correlation_csv": "correlation.csv",
            "correlation_text": "correlation.txt",
            "response": "response.csv",
        }
        if args.charts:
            charts_dir = os.path.join(args.out, "charts")
            os.makedirs(charts_dir, exist_ok=True)
            for series in aligned_all:
                hours = [
                    f"{(b.bucket_ms // 3_600_000) % 24:02d}" for b in series.buckets
                ]
                svg = svg_dual_line(
                    hours,
                    "visits",
                    [float(b.visits) for b in series.buckets],
                    "co2_ppm",
                    [b.co2_ppm for b in series.buckets],
                    f"Zone {series.zone}: visits vs CO2",
                )
                with open(
                    staged.stage(os.path.join(charts_dir, f"zone_{series.zone}.svg")),
                    "w",
                    encoding="utf-8",
                ) as fh:
                    fh.write(svg)
                outputs[f"chart_zone_{series.zone}"] = f"charts/zone_{series.zone}.svg"
        staged.commit()
    except BaseException:
        staged.rollback()
        raise
    _write_manifest(
        args.out,
        "correlate",
        args.seed,
        inputs={
            "trajectories": args.trajectories,
            "iaq": args.iaq,
            "deployment": args.deployment,
        },
        parameters={
            "zones": zones,
            "busy_start": args.busy_start,
            "busy_end": args.busy_end,
            "max_lag": args.max_lag,
            "permutations": args.permutations,
            "gap_tolerance": args.gap_tolerance,
            "min_visit_len": args.min_visit_len,
            "charts": args.charts,
            "strict": args.strict,
        },
        outputs=outputs,
        wall_time_s=time.perf_counter() - t0,
    )
    sys.stdout.write(format_correlation_text(reports))
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mobiq",
        description="Indoor mobility and air-quality analytics pipeline",
    )
    parser.add_argument("--version", action="version", version=f"mobiq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset with ground truth")
    p.add_argument("--config", help="sim config JSON; defaults used when omitted")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    def add_training_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--rssi", required=True, help="RSSI JSONL stream")
        p.add_argument("--truth", required=True, help="ground-truth intervals CSV")
        p.add_argument("--deployment", required=True, help="deployment JSON")
        p.add_argument(
            "--scenario",
            choices=SCENARIOS,
            default="carried",
            help="training data protocol",
        )
        p.add_argument("--seed", type=int, default=0, help="train/test split seed")
        p.add_argument("--strict", action="store_true", help="abort on malformed input lines")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train one zone classifier")
    add_training_args(p)
    p.add_argument("--window", type=float, default=20.0, help="segmentation window seconds")
    p.add_argument("--model", choices=MODEL_KINDS, default="knn", help="classifier kind")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="accuracy grid over windows x classifiers")
    add_training_args(p)
    p.add_argument("--windows", default="10,20,30", help="comma-separated window seconds")
    p.add_argument("--kinds", default=",".join(MODEL_KINDS), help="comma-separated kinds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("infer", help="reconstruct trajectories with a trained model")
    p.add_argument("--model", required=True, help="model JSON from train/sweep")
    p.add_argument("--rssi", required=True, help="RSSI JSONL stream")
    p.add_argument("--deployment", required=True, help="deployment JSON")
    p.add_argument("--strict", action="store_true", help="abort on malformed input lines")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("stats", help="occupancy and visit statistics from trajectories")
    p.add_argument("--trajectories", required=True, help="trajectories CSV from infer")
    p.add_argument("--deployment", help="deployment JSON (fixes zone axis, enables floor map)")
    p.add_argument("--gap-tolerance", type=int, default=1, help="windows a visit may skip")
    p.add_argument("--min-visit-len", type=int, default=1, help="minimum steps per visit")
    p.add_argument("--charts", action="store_true", help="also write SVG charts")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("correlate", help="air quality vs mobility per zone")
    p.add_argument("--trajectories", required=True, help="trajectories CSV from infer")
    p.add_argument("--iaq", required=True, help="air quality CSV")
    p.add_argument("--deployment", required=True, help="deployment JSON")
    p.add_argument("--zones", help="comma-separated zone ids (default: zones with steps)")
    p.add_argument("--busy-start", type=int, default=8, help="busy hours start (inclusive)")
    p.add_argument("--busy-end", type=int, default=18, help="busy hours end (exclusive)")
    p.add_argument("--max-lag", type=int, default=3, help="lag scan half-width, hours")
    p.add_argument("--permutations", type=int, default=10_000, help="permutation test draws")
    p.add_argument("--gap-tolerance", type=int, default=1, help="windows a visit may skip")
    p.add_argument("--min-visit-len", type=int, default=1, help="minimum steps per visit")
    p.add_argument("--seed", type=int, default=0, help="permutation test seed")
    p.add_argument("--strict", action="store_true", help="abort on malformed input lines")
    p.add_argument("--charts", action="store_true", help="also write SVG charts")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_correlate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # contract: one-line cause, exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
