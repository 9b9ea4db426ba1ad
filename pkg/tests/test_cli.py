"""End-to-end command-line pipeline on a small synthetic office."""

import hashlib
import json
import os

import pytest

from mobiq.classify import load_model
from mobiq.cli import main
from mobiq.core import load_deployment
from mobiq.io import load_iaq, load_rssi, load_truth
from mobiq.simulate import sim_config_from_dict
from mobiq.trajectory import load_trajectories

SIM_CONFIG = {
    "seed": 13,
    "duration_h": 4.0,
    "floor": {
        "rows": 2,
        "cols": 2,
        "zone_w": 5.0,
        "zone_h": 4.0,
        "gateways": [["gw1", 2.0, 2.0], ["gw2", 8.0, 6.0]],
        "sensors": [["aq1", 5.0, 4.0]],
    },
    "radio": {"noise_sigma_db": 2.0},
    "occupants": {
        "count": 3,
        "work_start_h": 0.0,
        "work_end_h": 4.0,
        "stationary_minutes": 10.0,
    },
}


def _sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def _manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One simulate-train-sweep-infer-stats-correlate chain, reused by tests."""
    root = tmp_path_factory.mktemp("cli")
    config_path = root / "sim.json"
    config_path.write_text(json.dumps(SIM_CONFIG))
    d = {
        "root": root,
        "config": str(config_path),
        "data": str(root / "data"),
        "train": str(root / "train"),
        "sweep": str(root / "sweep"),
        "infer": str(root / "infer"),
        "stats": str(root / "stats"),
        "corr": str(root / "corr"),
    }
    steps = [
        ["simulate", "--config", d["config"], "--out", d["data"]],
        [
            "train",
            "--rssi", f"{d['data']}/rssi.jsonl",
            "--truth", f"{d['data']}/truth.csv",
            "--deployment", f"{d['data']}/deployment.json",
            "--scenario", "mixed",
            "--out", d["train"],
        ],
        [
            "sweep",
            "--rssi", f"{d['data']}/rssi.jsonl",
            "--truth", f"{d['data']}/truth.csv",
            "--deployment", f"{d['data']}/deployment.json",
            "--windows", "10,20",
            "--kinds", "knn,logreg",
            "--out", d["sweep"],
        ],
        [
            "infer",
            "--model", f"{d['train']}/model.json",
            "--rssi", f"{d['data']}/rssi.jsonl",
            "--deployment", f"{d['data']}/deployment.json",
            "--out", d["infer"],
        ],
        [
            "stats",
            "--trajectories", f"{d['infer']}/trajectories.csv",
            "--deployment", f"{d['data']}/deployment.json",
            "--charts",
            "--out", d["stats"],
        ],
        [
            "correlate",
            "--trajectories", f"{d['infer']}/trajectories.csv",
            "--iaq", f"{d['data']}/iaq.csv",
            "--deployment", f"{d['data']}/deployment.json",
            "--busy-start", "1",
            "--busy-end", "3",
            "--permutations", "200",
            "--charts",
            "--out", d["corr"],
        ],
    ]
    for argv in steps:
        rc = main(argv)
        assert rc == 0, f"mobiq {' '.join(argv)} failed"
    return d


# -------------------------------------------------------------- simulate


def test_simulate_wrote_parseable_dataset(pipeline):
    data = pipeline["data"]
    dep = load_deployment(f"{data}/deployment.json")
    assert dep.n_zones == 4
    rssi = load_rssi(f"{data}/rssi.jsonl", strict=True)
    assert rssi.skipped == 0 and len(rssi.records) > 10_000
    truth = load_truth(f"{data}/truth.csv")
    assert {iv.source for iv in truth} == {"carried", "stationary"}
    iaq = load_iaq(f"{data}/iaq.csv", strict=True)
    assert len(iaq.records) == 4 * 60  # one sensor, one reading per minute


def test_simulate_manifest(pipeline):
    m = _manifest(pipeline["data"])
    assert m["tool"] == "mobiq"
    assert m["subcommand"] == "simulate"
    assert m["seed"] == 13
    assert m["inputs"] == {"config": pipeline["config"]}
    assert set(m["outputs"].values()) == {
        "deployment.json", "rssi.jsonl", "iaq.csv", "truth.csv",
    }
    for name in m["outputs"].values():
        assert os.path.exists(os.path.join(pipeline["data"], name))
    assert isinstance(m["wall_time_s"], float)
    # the embedded config is complete: it reconstructs the exact SimConfig
    cfg = sim_config_from_dict(m["parameters"]["config"])
    assert cfg.seed == 13 and cfg.occupants.count == 3


def test_simulate_reproducible_from_manifest(pipeline, tmp_path):
    m = _manifest(pipeline["data"])
    replay = tmp_path / "replay.json"
    replay.write_text(json.dumps(m["parameters"]["config"]))
    rc = main(["simulate", "--config", str(replay), "--out", str(tmp_path / "out")])
    assert rc == 0
    for name in ("rssi.jsonl", "iaq.csv", "truth.csv", "deployment.json"):
        assert _sha(f"{tmp_path}/out/{name}") == _sha(f"{pipeline['data']}/{name}")


def test_simulate_seed_flag_overrides_config(tmp_path, capsys):
    cfg = dict(SIM_CONFIG, duration_h=0.25)
    cfg["occupants"] = dict(SIM_CONFIG["occupants"], work_end_h=0.25, count=1)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path), "--seed", "99", "--out", str(tmp_path / "o")]) == 0
    assert _manifest(str(tmp_path / "o"))["seed"] == 99
    capsys.readouterr()


# ----------------------------------------------------------------- train


def test_train_outputs(pipeline):
    out = pipeline["train"]
    model = load_model(f"{out}/model.json")
    assert model.kind == "knn"
    assert model.metadata["scenario"] == "mixed"
    assert model.metadata["split_seed"] == 0
    eval_txt = open(f"{out}/eval.txt").read()
    assert "accuracy:" in eval_txt
    eval_lines = open(f"{out}/eval.csv").read().splitlines()
    assert eval_lines[0] == "window_s,kind,accuracy,n_train,n_test"
    assert eval_lines[1].startswith("20.0,knn,")
    m = _manifest(out)
    assert m["subcommand"] == "train"
    assert m["parameters"]["scenario"] == "mixed"


def test_train_rerun_from_manifest_is_identical(pipeline, tmp_path, capsys):
    m = _manifest(pipeline["train"])
    rc = main([
        "train",
        "--rssi", m["inputs"]["rssi"],
        "--truth", m["inputs"]["truth"],
        "--deployment", m["inputs"]["deployment"],
        "--scenario", m["parameters"]["scenario"],
        "--window", str(m["parameters"]["window"]),
        "--model", m["parameters"]["model"],
        "--seed", str(m["seed"]),
        "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "accuracy" in out and "[mixed]" in out
    for name in ("model.json", "eval.txt", "eval.csv"):
        assert _sha(f"{tmp_path}/{name}") == _sha(f"{pipeline['train']}/{name}")


# ----------------------------------------------------------------- sweep


def test_sweep_outputs(pipeline):
    out = pipeline["sweep"]
    lines = open(f"{out}/grid.csv").read().splitlines()
    assert lines[0] == "window_s,kind,accuracy,n_train,n_test"
    assert len(lines) == 1 + 4  # {10,20} x {knn,logreg}
    model = load_model(f"{out}/model.json")
    assert model.kind in ("knn", "logreg")
    m = _manifest(out)
    assert m["parameters"]["windows"] == [10.0, 20.0]
    assert m["parameters"]["kinds"] == ["knn", "logreg"]


def test_sweep_rejects_unknown_kind(pipeline, tmp_path, capsys):
    rc = main([
        "sweep",
        "--rssi", f"{pipeline['data']}/rssi.jsonl",
        "--truth", f"{pipeline['data']}/truth.csv",
        "--deployment", f"{pipeline['data']}/deployment.json",
        "--kinds", "knn,forest",
        "--out", str(tmp_path),
    ])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and "forest" in err
    assert not os.path.exists(tmp_path / "grid.csv")


# ----------------------------------------------------------------- infer


def test_infer_outputs(pipeline):
    trajectories = load_trajectories(f"{pipeline['infer']}/trajectories.csv")
    truth_tags = {iv.tag for iv in load_truth(f"{pipeline['data']}/truth.csv")}
    assert {t.tag for t in trajectories} == truth_tags
    assert all(t.steps for t in trajectories)
    assert all(1 <= z <= 4 for t in trajectories for z in t.zones)
    m = _manifest(pipeline["infer"])
    assert m["seed"] is None
    assert m["outputs"] == {"trajectories": "trajectories.csv"}


def test_infer_is_deterministic(pipeline, tmp_path, capsys):
    rc = main([
        "infer",
        "--model", f"{pipeline['train']}/model.json",
        "--rssi", f"{pipeline['data']}/rssi.jsonl",
        "--deployment", f"{pipeline['data']}/deployment.json",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    assert "inferred" in capsys.readouterr().out
    assert _sha(f"{tmp_path}/trajectories.csv") == _sha(
        f"{pipeline['infer']}/trajectories.csv"
    )


# ----------------------------------------------------------------- stats


def test_stats_outputs(pipeline):
    out = pipeline["stats"]
    occ_lines = open(f"{out}/occupancy.csv").read().splitlines()
    assert occ_lines[0] == "tag,zone_1,zone_2,zone_3,zone_4"
    all_row = occ_lines[-1].split(",")
    assert all_row[0] == "ALL"
    assert sum(float(v) for v in all_row[1:]) == pytest.approx(1.0, abs=1e-9)
    visit_lines = open(f"{out}/visits.csv").read().splitlines()
    assert visit_lines[0] == "zone,visits"
    assert len(visit_lines) == 5
    hourly_lines = open(f"{out}/hourly.csv").read().splitlines()
    assert hourly_lines[0] == "bucket_start_ms,zone,visits,presence"
    assert len(hourly_lines) == 1 + 4 * 4  # four zones x four hours, zero-filled


def test_stats_charts(pipeline):
    out = pipeline["stats"]
    for name in ("occupancy.svg", "visits.svg", "occupancy_map.svg"):
        content = open(f"{out}/{name}").read()
        assert content.startswith("<svg"), name
        assert content.rstrip().endswith("</svg>"), name
    m = _manifest(out)
    assert m["outputs"]["occupancy_map"] == "occupancy_map.svg"


# ------------------------------------------------------------- correlate


def test_correlate_outputs(pipeline):
    out = pipeline["corr"]
    aligned = open(f"{out}/aligned.csv").read().splitlines()
    assert aligned[0].startswith("bucket_start_ms,zone,sensor_id,")
    assert len(aligned) == 1 + 4 * 4  # four zones, four hourly buckets each
    corr = open(f"{out}/correlation.csv").read().splitlines()
    assert len(corr) == 1 + 4 * 4  # four zones x four pollutants
    text = open(f"{out}/correlation.txt").read()
    assert "zone 1 (sensor aq1)" in text
    resp = open(f"{out}/response.csv").read().splitlines()
    assert resp[0].startswith("zone,pollutant,intercept,")
    assert len(resp) == 1 + 4 * 4
    m = _manifest(out)
    assert m["parameters"]["permutations"] == 200
    assert m["parameters"]["zones"] == [1, 2, 3, 4]
    for zone in (1, 2, 3, 4):
        chart = f"{out}/charts/zone_{zone}.svg"
        assert os.path.exists(chart)
        assert open(chart).read().startswith("<svg")


def test_correlate_prints_the_report(pipeline, tmp_path, capsys):
    rc = main([
        "correlate",
        "--trajectories", f"{pipeline['infer']}/trajectories.csv",
        "--iaq", f"{pipeline['data']}/iaq.csv",
        "--deployment", f"{pipeline['data']}/deployment.json",
        "--zones", "1",
        "--permutations", "100",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "zone 1 (sensor aq1)" in out
    assert "co2_ppm" in out and "r=" in out


# ------------------------------------------------------- errors and usage


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["train", "--no-such-flag"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("mobiq ")


def test_missing_input_exits_1(pipeline, tmp_path, capsys):
    rc = main([
        "train",
        "--rssi", str(tmp_path / "absent.jsonl"),
        "--truth", f"{pipeline['data']}/truth.csv",
        "--deployment", f"{pipeline['data']}/deployment.json",
        "--out", str(tmp_path / "out"),
    ])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error:") and "absent.jsonl" in err


def test_corrupt_line_strict_vs_lenient(pipeline, tmp_path, capsys):
    dirty = tmp_path / "dirty.jsonl"
    with open(f"{pipeline['data']}/rssi.jsonl") as fh:
        head = [next(fh) for _ in range(5000)]
    dirty.write_text("".join(head) + "not json at all\n")

    base = [
        "--model", f"{pipeline['train']}/model.json",
        "--rssi", str(dirty),
        "--deployment", f"{pipeline['data']}/deployment.json",
    ]
    rc = main(["infer", *base, "--strict", "--out", str(tmp_path / "strict")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err
    assert not os.path.exists(tmp_path / "strict" / "trajectories.csv")

    rc = main(["infer", *base, "--out", str(tmp_path / "lenient")])
    assert rc == 0
    captured = capsys.readouterr()
    assert "note: skipped 1 malformed" in captured.err
    assert os.path.exists(tmp_path / "lenient" / "trajectories.csv")


def test_failed_command_leaves_no_partial_outputs(pipeline, tmp_path, capsys):
    # an unwritable chart directory fails the command after CSVs were staged
    out = tmp_path / "statsfail"
    out.mkdir()
    blocker = out / "occupancy.svg.tmp"
    blocker.mkdir()  # open() for write will hit IsADirectoryError
    rc = main([
        "stats",
        "--trajectories", f"{pipeline['infer']}/trajectories.csv",
        "--charts",
        "--out", str(out),
    ])
    assert rc == 1
    capsys.readouterr()
    assert not os.path.exists(out / "occupancy.csv")
    assert not os.path.exists(out / "manifest.json")
    leftovers = [p for p in os.listdir(out) if p.endswith(".tmp") and p != blocker.name]
    assert leftovers == []
