#!/usr/bin/env python3
"""Train zone classifiers on RSSI fingerprints and compare them.

Raw per-second reports are grouped into tumbling windows; each
(tag, window) cell becomes a feature vector of per-gateway statistics
(mean and the 25/50/75/90 percentiles). Three from-scratch classifiers
learn the zone from those fingerprints. The script scores the three
data-collection protocols, then runs the full window-size x classifier
sweep and prints the accuracy grid.
"""

import numpy as np

from mobiq import simulate as sim
from mobiq.classify import (
    MODEL_KINDS,
    evaluate,
    scenario_datasets,
    sweep,
    train_knn,
)
from mobiq.features import WindowingConfig

W20 = WindowingConfig(delta_t=20.0)


def main() -> None:
    cfg = sim.SimConfig(
        seed=11,
        duration_h=4.0,
        floor=sim.FloorSpec(
            rows=2,
            cols=3,
            gateways=(
                ("gw1", 2.0, 2.0),
                ("gw2", 7.5, 6.0),
                ("gw3", 13.0, 2.0),
                ("gw4", 7.5, 2.0),
            ),
            sensors=(("aq1", 4.0, 3.0), ("aq2", 11.0, 5.0)),
        ),
        occupants=sim.OccupantSpec(
            count=3, work_start_h=0.0, work_end_h=4.0, stationary_minutes=15.0
        ),
    )
    res = sim.simulate(cfg)
    gw_order = [g.id for g in res.deployment.gateways]
    print(f"{len(res.observations)} radio reports, "
          f"{len(res.deployment.zones)} zones, "
          f"noise sigma {cfg.radio.noise_sigma_db:g} dB\n")

    # the same k-NN under the three ways of collecting training data
    print("k-NN accuracy @ 20 s windows, by collection protocol:")
    for scenario in ("carried", "stationary", "mixed"):
        train, test = scenario_datasets(
            res.observations, res.intervals, res.deployment, W20, scenario, seed=0
        )
        model = train_knn(train, k=5, windowing=W20, gateway_order=gw_order)
        report = evaluate(model, test)
        print(f"  {scenario:<11} train {len(train):>4}  test {len(test):>4}  "
              f"accuracy {report.accuracy:.4f}")

    # window size x classifier grid on the mixed protocol
    result = sweep(
        res.observations, res.intervals, res.deployment, scenario="mixed", seed=0
    )
    print("\naccuracy grid (mixed protocol):")
    windows = sorted({c.window_s for c in result.cells})
    print("  window  " + "".join(f"{k:>9}" for k in MODEL_KINDS))
    for w in windows:
        row = {c.kind: c.accuracy for c in result.cells if c.window_s == w}
        print(f"  {w:>5.0f}s  " + "".join(f"{row[k]:>9.4f}" for k in MODEL_KINDS))
    best = result.best
    print(f"\nbest cell: {best.kind} @ {best.window_s:g}s "
          f"(accuracy {best.accuracy:.4f})")

    # where the best model still goes wrong
    train, test = scenario_datasets(
        res.observations, res.intervals, res.deployment,
        WindowingConfig(delta_t=best.window_s), "mixed", seed=0,
    )
    report = evaluate(result.best_model, test)
    off = ~np.eye(len(report.zones), dtype=bool)
    confused = np.argwhere(report.confusion * off == (report.confusion * off).max())
    print("confusion matrix rows = true zone, cols = predicted:")
    for i, zone in enumerate(report.zones):
        print(f"  zone {zone}: " + " ".join(f"{v:>4}" for v in report.confusion[i]))
    t, p = confused[0]
    print(f"most common mix-up: true zone {report.zones[t]} "
          f"read as zone {report.zones[p]}")


if __name__ == "__main__":
    main()
