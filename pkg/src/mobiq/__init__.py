"""Indoor mobility analytics from BLE RSSI streams.

The package reconstructs where beacon-carrying occupants were inside a
building, summarizes how the space is used, and relates that movement to
indoor air quality readings:

- ``core``: deployments (zones, gateways, sensors) and record types
- ``io``: line-oriented readers/writers with per-line validation
- ``features``: windowed RSSI fingerprints and scaling
- ``classify``: zone classifiers (k-NN, softmax regression, linear SVM),
  train/test protocols and the window x model accuracy sweep
- ``trajectory``: zone sequences, occupancy, visits and hourly series
- ``iaq``: alignment of mobility with air quality plus correlation,
  lag and permutation-contrast analyses
- ``simulate``: deterministic synthetic office generator (movement,
  radio propagation, air-quality dynamics) for end-to-end testing
- ``cli``: the ``mobiq`` command
"""

from .core import (
    Deployment,
    Gateway,
    IaqReading,
    IaqSensor,
    LabeledInterval,
    RssiObservation,
    TimeWindow,
    Zone,
    load_deployment,
    save_deployment,
)
from .features import (
    FingerprintSample,
    Scaler,
    WindowingConfig,
    apply_scaler,
    feature_names,
    fit_scaler,
    label_samples,
    quantile,
    segment,
    window_stats,
)
from .classify import (
    EvalReport,
    SweepCell,
    SweepResult,
    ZoneModel,
    evaluate,
    load_model,
    predict,
    save_model,
    scenario_datasets,
    split,
    sweep,
    train_kind,
    train_knn,
    train_linsvm,
    train_logreg,
)
from .trajectory import (
    OccupancyStats,
    Trajectory,
    VisitRun,
    VisitStats,
    hourly_visit_counts,
    infer,
    load_trajectories,
    occupancy,
    save_trajectories,
    smooth_majority,
    visits,
)
from .iaq import (
    AlignedSeries,
    BusyHoursResult,
    CorrelationReport,
    DegenerateSeriesError,
    LagResult,
    ResponseModel,
    align,
    build_correlation_report,
    busy_hours_contrast,
    fit_response,
    lagged_correlation,
    pearson,
    spearman,
)
from .simulate import SimConfig, SimulationResult, generate

__version__ = "0.1.0"

__all__ = [
    "Deployment",
    "Gateway",
    "IaqReading",
    "IaqSensor",
    "LabeledInterval",
    "RssiObservation",
    "TimeWindow",
    "Zone",
    "load_deployment",
    "save_deployment",
    "FingerprintSample",
    "Scaler",
    "WindowingConfig",
    "apply_scaler",
    "feature_names",
    "fit_scaler",
    "label_samples",
    "quantile",
    "segment",
    "window_stats",
    "EvalReport",
    "SweepCell",
    "SweepResult",
    "ZoneModel",
    "evaluate",
    "load_model",
    "predict",
    "save_model",
    "scenario_datasets",
    "split",
    "sweep",
    "train_kind",
    "train_knn",
    "train_linsvm",
    "train_logreg",
    "OccupancyStats",
    "Trajectory",
    "VisitRun",
    "VisitStats",
    "hourly_visit_counts",
    "infer",
    "load_trajectories",
    "occupancy",
    "save_trajectories",
    "smooth_majority",
    "visits",
    "AlignedSeries",
    "BusyHoursResult",
    "CorrelationReport",
    "DegenerateSeriesError",
    "LagResult",
    "ResponseModel",
    "align",
    "build_correlation_report",
    "busy_hours_contrast",
    "fit_response",
    "lagged_correlation",
    "pearson",
    "spearman",
    "SimConfig",
    "SimulationResult",
    "generate",
    "__version__",
]
