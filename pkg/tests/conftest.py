"""Shared fixtures: small deterministic simulations and deployments.

Session-scoped simulations are built once and reused; every test that
touches randomness pins its own seed so the suite is reproducible
run-to-run and machine-to-machine.
"""

import dataclasses

import pytest

from mobiq import simulate as sim
from mobiq.core import Deployment, Gateway, IaqSensor, Zone

# Lines registered by acceptance tests; printed after the run so each
# criterion's verdict is visible in the captured pytest output.
_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


SMALL_FLOOR = sim.FloorSpec(
    rows=2,
    cols=3,
    gateways=(
        ("gw1", 2.0, 2.0),
        ("gw2", 7.5, 6.0),
        ("gw3", 13.0, 2.0),
        ("gw4", 7.5, 2.0),
    ),
    sensors=(("aq1", 4.0, 3.0), ("aq2", 11.0, 5.0)),
)

TINY_FLOOR = sim.FloorSpec(
    rows=2,
    cols=2,
    gateways=(
        ("gw1", 2.0, 2.0),
        ("gw2", 8.0, 2.0),
        ("gw3", 2.0, 6.0),
        ("gw4", 8.0, 6.0),
    ),
    sensors=(("aq1", 5.0, 4.0),),
)


def small_config(**overrides) -> sim.SimConfig:
    """A 6-zone, 4-gateway office over a short shift; cheap to simulate."""
    base = dict(
        seed=7,
        duration_h=4,
        floor=SMALL_FLOOR,
        occupants=sim.OccupantSpec(
            count=3, work_start_h=0.0, work_end_h=4.0, stationary_minutes=15.0
        ),
    )
    base.update(overrides)
    return sim.SimConfig(**base)


@pytest.fixture(scope="session")
def small_sim() -> sim.SimulationResult:
    """6 zones, sigma=3 dB, 4 h, carried + stationary tags."""
    return sim.simulate(small_config())


@pytest.fixture(scope="session")
def small_sim_noiseless() -> sim.SimulationResult:
    cfg = small_config(seed=3, radio=sim.RadioSpec(noise_sigma_db=0.0))
    return sim.simulate(cfg)


@pytest.fixture(scope="session")
def tiny_sim_noiseless() -> sim.SimulationResult:
    """4 zones, sigma=0, carried tags only; cleanly separable classes."""
    cfg = sim.SimConfig(
        seed=3,
        duration_h=4,
        floor=TINY_FLOOR,
        radio=sim.RadioSpec(noise_sigma_db=0.0),
        occupants=sim.OccupantSpec(
            count=3, work_start_h=0.0, work_end_h=4.0, stationary_tags=False
        ),
    )
    return sim.simulate(cfg)


@pytest.fixture(scope="session")
def day_sim() -> sim.SimulationResult:
    """The stock 14-zone office day: 6 gateways, sigma=3, 24 h, seed 0."""
    return sim.simulate(sim.SimConfig(seed=0))


@pytest.fixture
def square_deployment() -> Deployment:
    """Hand-built 2x2 deployment for geometry-level tests."""
    zones = (
        Zone(1, 0.0, 0.0, 5.0, 4.0),
        Zone(2, 5.0, 0.0, 10.0, 4.0),
        Zone(3, 0.0, 4.0, 5.0, 8.0),
        Zone(4, 5.0, 4.0, 10.0, 8.0),
    )
    gateways = (Gateway("gw1", 1.0, 1.0), Gateway("gw2", 9.0, 7.0))
    sensors = (IaqSensor("aq1", 2.5, 2.0), IaqSensor("aq2", 7.5, 6.0))
    return Deployment(name="unit-square", zones=zones, gateways=gateways, iaq_sensors=sensors)
