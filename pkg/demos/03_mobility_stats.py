#!/usr/bin/env python3
"""Reconstruct trajectories and turn them into occupancy statistics.

A model trained on one noiseless office shift relabels the whole RSSI
stream window by window. The zone sequences then roll up three ways:
dwell shares per zone, visit counts (maximal same-zone runs), and an
hourly series of entries and distinct tags. The occupancy table is
printed against the schedule's true dwell shares, and the summaries are
written out as CSV plus two SVG charts.
"""

from pathlib import Path

from mobiq import simulate as sim
from mobiq.charts import svg_bar_chart, svg_zone_map
from mobiq.classify import scenario_datasets, train_knn
from mobiq.features import WindowingConfig
from mobiq.trajectory import (
    hourly_visit_counts,
    infer,
    occupancy,
    visits,
    write_hourly_csv,
    write_occupancy_csv,
    write_visits_csv,
)

OUT = Path(__file__).parent / "out" / "03-stats"
W20 = WindowingConfig(delta_t=20.0)


def main() -> None:
    cfg = sim.SimConfig(
        seed=1,
        duration_h=6.0,
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
        radio=sim.RadioSpec(noise_sigma_db=0.0),
        occupants=sim.OccupantSpec(
            count=4, work_start_h=0.0, work_end_h=6.0, stationary_tags=False
        ),
    )
    res = sim.simulate(cfg)
    train, _ = scenario_datasets(
        res.observations, res.intervals, res.deployment, W20, "carried", seed=0
    )
    model = train_knn(
        train, k=5, windowing=W20, gateway_order=[g.id for g in res.deployment.gateways]
    )
    trajs = infer(model, res.observations, res.deployment)
    print(f"reconstructed {sum(len(t.steps) for t in trajs)} steps "
          f"across {len(trajs)} tags\n")

    occ = occupancy(trajs)
    dwell: dict[int, float] = {}
    for iv in res.intervals:
        dwell[iv.zone] = dwell.get(iv.zone, 0.0) + (iv.end_ms - iv.start_ms)
    total = sum(dwell.values())
    print("zone   inferred dwell   true dwell")
    for zone in sorted(dwell):
        print(f"  {zone:>2}   {occ.zone_rates.get(zone, 0.0):>13.1%}"
              f"   {dwell[zone] / total:>9.1%}")

    vis = visits(trajs, gap_tolerance=1, min_visit_len=2)
    print("\nvisits per zone (runs of >= 2 windows):")
    for zone in sorted(vis.zone_visits):
        print(f"  zone {zone}: {vis.zone_visits[zone]:>3}")
    busiest = max(vis.zone_visits, key=vis.zone_visits.get)

    pts = hourly_visit_counts(trajs, busiest, min_visit_len=2)
    print(f"\nhour-by-hour traffic in zone {busiest} (the busiest):")
    for p in pts:
        hour = (p.bucket_ms // 3_600_000) % 24
        print(f"  {hour:02d}:00  visits {p.visits:>2}  distinct tags {p.presence}")

    OUT.mkdir(parents=True, exist_ok=True)
    write_occupancy_csv(occ, str(OUT / "occupancy.csv"))
    write_visits_csv(vis, str(OUT / "visits.csv"), zones=[z.id for z in res.deployment.zones])
    write_hourly_csv({busiest: pts}, str(OUT / "hourly.csv"))
    (OUT / "occupancy_map.svg").write_text(
        svg_zone_map(
            res.deployment,
            {z.id: occ.zone_rates.get(z.id, 0.0) for z in res.deployment.zones},
            "dwell share by zone",
        ),
        encoding="utf-8",
    )
    (OUT / "visits.svg").write_text(
        svg_bar_chart(
            [str(z) for z in sorted(vis.zone_visits)],
            [float(vis.zone_visits[z]) for z in sorted(vis.zone_visits)],
            "visits by zone",
        ),
        encoding="utf-8",
    )
    print(f"\nwrote occupancy.csv, visits.csv, hourly.csv and two SVG charts to {OUT}")


if __name__ == "__main__":
    main()
