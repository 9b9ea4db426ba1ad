"""Zone classifiers over fingerprint samples.

Three families, all written directly on numpy so every step is
inspectable and gradients can be checked against finite differences:

* knn     - majority vote over the stored scaled training matrix
* logreg  - multinomial logistic regression, full-batch gradient descent
* linsvm  - one-vs-rest linear SVMs, full-batch subgradient descent

Training is deterministic: weights start at zero, batches are never
shuffled, and the train/test split derives every draw from its seed.
A trained ZoneModel carries its own scaler, windowing config and
gateway order, so prediction needs nothing but the model file.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Deployment, LabeledInterval, RssiObservation
from .features import (
    FingerprintSample,
    Scaler,
    WindowingConfig,
    apply_scaler,
    fit_scaler,
    label_samples,
    sample_labels,
    sample_matrix,
    segment,
)
from .io import read_model_file, write_model_file

MODEL_KINDS = ("knn", "logreg", "linsvm")
SCENARIOS = ("carried", "stationary", "mixed")

# Tie order for sweep winners: earlier kind wins at equal accuracy.
_KIND_RANK = {kind: i for i, kind in enumerate(MODEL_KINDS)}

STATIONARY_CAP_MINUTES = 20.0  # per-zone budget of stationary data in mixed runs


@dataclass(frozen=True, eq=False)
class ZoneModel:
    """A deployable localizer: classifier + scaler + feature layout."""

    kind: str
    windowing: WindowingConfig
    gateway_order: tuple[str, ...]
    zones: tuple[int, ...]  # classes the model can emit, ascending
    scaler: Scaler
    params: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if list(self.zones) != sorted(set(self.zones)):
            raise ValueError("model zones must be strictly ascending")
        d = 5 * len(self.gateway_order)
        if self.scaler.mean.shape[0] != d:
            raise ValueError(
                f"scaler dimension {self.scaler.mean.shape[0]} does not match "
                f"5 x {len(self.gateway_order)} gateways"
            )


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Accuracy plus confusion counts; axis order given by zones."""

    accuracy: float
    confusion: np.ndarray  # confusion[i, j] = true zones[i] predicted zones[j]
    zones: tuple[int, ...]
    split_seed: int | None = None


@dataclass(frozen=True)
class SweepCell:
    window_s: float
    kind: str
    accuracy: float
    n_train: int
    n_test: int


@dataclass(frozen=True, eq=False)
class SweepResult:
    cells: tuple[SweepCell, ...]
    best: SweepCell
    best_model: ZoneModel


# -------------------------------------------------------------------- split


def split(
    samples: Sequence[FingerprintSample],
    train_fraction: float = 0.8,
    seed: int = 0,
) -> tuple[tuple[FingerprintSample, ...], tuple[FingerprintSample, ...]]:
    """Stratified train/test split, deterministic for a given seed.

    Every class with at least two samples keeps at least one on each
    side. A single-sample class goes entirely to train with a warning,
    because a test set can never score a class the model never saw.
    """
    if not samples:
        raise ValueError("cannot split an empty sample set")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    labels = sample_labels(samples)
    by_class: dict[int, list[int]] = {}
    for i, lb in enumerate(labels):
        by_class.setdefault(int(lb), []).append(i)

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for zone in sorted(by_class):
        idx = np.asarray(by_class[zone])
        n = idx.size
        if n == 1:
            warnings.warn(f"zone {zone} has a single sample; sending it to train")
            train_idx.append(int(idx[0]))
            continue
        n_train = int(round(train_fraction * n))
        n_train = min(max(n_train, 1), n - 1)
        perm = rng.permutation(n)
        train_idx.extend(int(i) for i in idx[perm[:n_train]])
        test_idx.extend(int(i) for i in idx[perm[n_train:]])

    train_idx.sort()
    test_idx.sort()
    return (
        tuple(samples[i] for i in train_idx),
        tuple(samples[i] for i in test_idx),
    )


# ----------------------------------------------------------------- knn


def train_knn(
    train: Sequence[FingerprintSample],
    k: int = 5,
    *,
    windowing: WindowingConfig,
    gateway_order: Sequence[str],
) -> ZoneModel:
    if not train:
        raise ValueError("empty training set")
    if not 1 <= k <= len(train):
        raise ValueError(f"k must be in [1, {len(train)}], got {k}")
    X_raw = sample_matrix(train)
    y = sample_labels(train)
    scaler = fit_scaler(X_raw)
    return ZoneModel(
        kind="knn",
        windowing=windowing,
        gateway_order=tuple(gateway_order),
        zones=tuple(sorted(set(int(v) for v in y))),
        scaler=scaler,
        params={"k": k, "train_x": apply_scaler(scaler, X_raw), "train_y": y},
        metadata={"n_train": len(train), "n_features": X_raw.shape[1]},
    )


def _knn_predict_one(
    xq: np.ndarray, train_x: np.ndarray, train_y: np.ndarray, k: int
) -> int:
    d2 = ((train_x - xq) ** 2).sum(axis=1)
    # stable sort: equal distances at the k-th rank resolve to the lower
    # training index
    nn = np.argsort(d2, kind="stable")[:k]
    nn_labels = train_y[nn]
    classes, counts = np.unique(nn_labels, return_counts=True)
    top = classes[counts == counts.max()]
    if top.size == 1:
        return int(top[0])
    # vote tie: smallest mean neighbor distance, then lowest zone id
    dist = np.sqrt(d2[nn])
    best_zone = -1
    best_mean = np.inf
    for zone in np.sort(top):
        md = dist[nn_labels == zone].mean()
        if md < best_mean:
            best_mean = md
            best_zone = int(zone)
    return best_zone


# -------------------------------------------------- logistic regression


def logreg_loss_grad(
    W: np.ndarray,
    b: np.ndarray,
    X: np.ndarray,
    y_idx: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with L2 on weights (bias unpenalized)."""
    n = X.shape[0]
    logits = X @ W.T + b
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    loss = float(
        (log_z - shifted[np.arange(n), y_idx]).mean() + 0.5 * l2 * (W * W).sum()
    )
    P = np.exp(shifted - log_z[:, None])
    P[np.arange(n), y_idx] -= 1.0
    gW = P.T @ X / n + l2 * W
    gb = P.mean(axis=0)
    return loss, gW, gb


def logreg_fit(
    X: np.ndarray,
    y_idx: np.ndarray,
    n_classes: int,
    epochs: int,
    learning_rate: float,
    l2: float,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Full-batch gradient descent from zero weights; returns loss trace."""
    W = np.zeros((n_classes, X.shape[1]))
    b = np.zeros(n_classes)
    losses: list[float] = []
    for epoch in range(epochs):
        loss, gW, gb = logreg_loss_grad(W, b, X, y_idx, l2)
        if not np.isfinite(loss):
            raise ValueError(
                f"non-finite loss at epoch {epoch}; lower the learning rate"
            )
        losses.append(loss)
        W -= learning_rate * gW
        b -= learning_rate * gb
    return W, b, losses


def train_logreg(
    train: Sequence[FingerprintSample],
    epochs: int = 300,
    learning_rate: float = 0.5,
    l2: float = 1e-3,
    *,
    windowing: WindowingConfig,
    gateway_order: Sequence[str],
) -> ZoneModel:
    if not train:
        raise ValueError("empty training set")
    X_raw = sample_matrix(train)
    y = sample_labels(train)
    zones = tuple(sorted(set(int(v) for v in y)))
    if len(zones) < 2:
        raise ValueError("logreg needs at least 2 classes")
    zone_to_idx = {z: i for i, z in enumerate(zones)}
    y_idx = np.asarray([zone_to_idx[int(v)] for v in y])
    scaler = fit_scaler(X_raw)
    X = apply_scaler(scaler, X_raw)
    W, b, losses = logreg_fit(X, y_idx, len(zones), epochs, learning_rate, l2)
    return ZoneModel(
        kind="logreg",
        windowing=windowing,
        gateway_order=tuple(gateway_order),
        zones=zones,
        scaler=scaler,
        params={"weights": W, "bias": b},
        metadata={
            "n_train": len(train),
            "n_features": X.shape[1],
            "final_loss": losses[-1],
        },
    )


# ------------------------------------------------------------ linear svm


def svm_loss_grad(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y_pm: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Mean hinge loss + L2; subgradient treats the kink's flat side as 0."""
    n = X.shape[0]
    margins = y_pm * (X @ w + b)
    slack = np.maximum(0.0, 1.0 - margins)
    loss = float(0.5 * l2 * (w @ w) + slack.mean())
    active = margins < 1.0
    gw = l2 * w - (X[active] * y_pm[active, None]).sum(axis=0) / n
    gb = -float(y_pm[active].sum()) / n
    return loss, gw, gb


def svm_fit(
    X: np.ndarray,
    y_pm: np.ndarray,
    epochs: int,
    learning_rate: float,
    l2: float,
) -> tuple[np.ndarray, float, list[float]]:
    w = np.zeros(X.shape[1])
    b = 0.0
    losses: list[float] = []
    for epoch in range(epochs):
        loss, gw, gb = svm_loss_grad(w, b, X, y_pm, l2)
        if not np.isfinite(loss):
            raise ValueError(
                f"non-finite loss at epoch {epoch}; lower the learning rate"
            )
        losses.append(loss)
        w = w - learning_rate * gw
        b = b - learning_rate * gb
    return w, b, losses


def train_linsvm(
    train: Sequence[FingerprintSample],
    epochs: int = 400,
    learning_rate: float = 0.05,
    l2: float = 1e-3,
    *,
    windowing: WindowingConfig,
    gateway_order: Sequence[str],
) -> ZoneModel:
    if not train:
        raise ValueError("empty training set")
    X_raw = sample_matrix(train)
    y = sample_labels(train)
    zones = tuple(sorted(set(int(v) for v in y)))
    if len(zones) < 2:
        raise ValueError("linsvm needs at least 2 classes")
    scaler = fit_scaler(X_raw)
    X = apply_scaler(scaler, X_raw)
    W = np.zeros((len(zones), X.shape[1]))
    bias = np.zeros(len(zones))
    for i, zone in enumerate(zones):
        y_pm = np.where(y == zone, 1.0, -1.0)
        W[i], bias[i], _ = svm_fit(X, y_pm, epochs, learning_rate, l2)
    return ZoneModel(
        kind="linsvm",
        windowing=windowing,
        gateway_order=tuple(gateway_order),
        zones=zones,
        scaler=scaler,
        params={"weights": W, "bias": bias},
        metadata={"n_train": len(train), "n_features": X.shape[1]},
    )


# -------------------------------------------------------------- prediction


def predict_matrix(model: ZoneModel, features: np.ndarray) -> np.ndarray:
    """Predict zone ids for raw (unscaled) feature rows."""
    X = apply_scaler(model.scaler, np.atleast_2d(np.asarray(features, dtype=np.float64)))
    zones = np.asarray(model.zones)
    if model.kind == "knn":
        tx, ty, k = model.params["train_x"], model.params["train_y"], model.params["k"]
        return np.asarray([_knn_predict_one(row, tx, ty, k) for row in X], dtype=np.int64)
    scores = X @ model.params["weights"].T + model.params["bias"]
    # argmax takes the first maximum; zones ascend, so score ties fall to
    # the lowest zone id
    return zones[np.argmax(scores, axis=1)]


def predict(model: ZoneModel, features: np.ndarray) -> int:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1:
        raise ValueError("predict takes a single feature vector; use predict_matrix")
    return int(predict_matrix(model, features[None, :])[0])


def evaluate(
    model: ZoneModel,
    test: Sequence[FingerprintSample],
    split_seed: int | None = None,
) -> EvalReport:
    if not test:
        raise ValueError("cannot evaluate on an empty test set")
    y_true = sample_labels(test)
    y_pred = predict_matrix(model, sample_matrix(test))
    axis = tuple(sorted(set(model.zones) | set(int(v) for v in y_true)))
    pos = {z: i for i, z in enumerate(axis)}
    confusion = np.zeros((len(axis), len(axis)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[pos[int(t)], pos[int(p)]] += 1
    accuracy = float(np.trace(confusion) / confusion.sum())
    return EvalReport(accuracy=accuracy, confusion=confusion, zones=axis, split_seed=split_seed)


# ------------------------------------------------------- scenario protocol


def cap_stationary_intervals(
    intervals: Sequence[LabeledInterval],
    cap_minutes: float = STATIONARY_CAP_MINUTES,
) -> tuple[LabeledInterval, ...]:
    """Limit stationary collection to a time budget per zone.

    Intervals are consumed in time order; the one that crosses the budget
    is truncated, later ones for that zone are dropped.
    """
    cap_ms = int(round(cap_minutes * 60_000))
    used: dict[int, int] = {}
    out: list[LabeledInterval] = []
    for iv in sorted(intervals, key=lambda iv: (iv.start_ms, iv.tag)):
        have = used.get(iv.zone, 0)
        room = cap_ms - have
        if room <= 0:
            continue
        take = min(iv.duration_ms, room)
        used[iv.zone] = have + take
        if take == iv.duration_ms:
            out.append(iv)
        else:
            out.append(dataclasses.replace(iv, end_ms=iv.start_ms + take))
    return tuple(out)


def scenario_datasets(
    observations: Sequence[RssiObservation],
    truth: Sequence[LabeledInterval],
    deployment: Deployment,
    windowing: WindowingConfig,
    scenario: str = "carried",
    seed: int = 0,
    train_fraction: float = 0.8,
) -> tuple[tuple[FingerprintSample, ...], tuple[FingerprintSample, ...]]:
    """Build (train, test) per collection scenario.

    carried / stationary use only intervals of that source, split 80/20.
    mixed trains on the capped stationary pool plus 80% of the carried
    samples and tests on the held-out 20% carried, so the score always
    reflects tags that actually moved.
    """
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    seg = segment(observations, windowing, deployment)
    carried = [iv for iv in truth if iv.source == "carried"]
    stationary = [iv for iv in truth if iv.source == "stationary"]
    if scenario == "carried":
        return split(label_samples(seg.samples, carried), train_fraction, seed)
    if scenario == "stationary":
        return split(label_samples(seg.samples, stationary), train_fraction, seed)
    capped = cap_stationary_intervals(stationary)
    stat_samples = label_samples(seg.samples, capped)
    c_train, c_test = split(label_samples(seg.samples, carried), train_fraction, seed)
    return stat_samples + c_train, c_test


_TRAINERS = {
    "knn": lambda train, windowing, gateway_order: train_knn(
        train, windowing=windowing, gateway_order=gateway_order
    ),
    "logreg": lambda train, windowing, gateway_order: train_logreg(
        train, windowing=windowing, gateway_order=gateway_order
    ),
    "linsvm": lambda train, windowing, gateway_order: train_linsvm(
        train, windowing=windowing, gateway_order=gateway_order
    ),
}


def train_kind(
    kind: str,
    train: Sequence[FingerprintSample],
    windowing: WindowingConfig,
    gateway_order: Sequence[str],
) -> ZoneModel:
    if kind not in _TRAINERS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return _TRAINERS[kind](train, windowing, gateway_order)


# ------------------------------------------------------------------ sweep


def sweep(
    observations: Sequence[RssiObservation],
    truth: Sequence[LabeledInterval],
    deployment: Deployment,
    window_sizes: Sequence[float] = (10.0, 20.0, 30.0),
    kinds: Sequence[str] = MODEL_KINDS,
    scenario: str = "carried",
    seed: int = 0,
    base_windowing: WindowingConfig | None = None,
) -> SweepResult:
    """Accuracy grid over window sizes and classifier kinds.

    Each window size re-featurizes the raw stream. The winner is the
    highest accuracy; ties prefer the smaller window, then the earlier
    kind in MODEL_KINDS.
    """
    base = base_windowing or WindowingConfig()
    gw_order = [g.id for g in deployment.gateways]
    cells: list[SweepCell] = []
    models: dict[tuple[float, str], ZoneModel] = {}
    for window_s in sorted(window_sizes):
        windowing = dataclasses.replace(base, delta_t=float(window_s))
        train, test = scenario_datasets(
            observations, truth, deployment, windowing, scenario, seed
        )
        for kind in kinds:
            model = train_kind(kind, train, windowing, gw_order)
            report = evaluate(model, test, split_seed=seed)
            cells.append(
                SweepCell(
                    window_s=float(window_s),
                    kind=kind,
                    accuracy=report.accuracy,
                    n_train=len(train),
                    n_test=len(test),
                )
            )
            models[(float(window_s), kind)] = model
    best = min(cells, key=lambda c: (-c.accuracy, c.window_s, _KIND_RANK[c.kind]))
    return SweepResult(cells=tuple(cells), best=best, best_model=models[(best.window_s, best.kind)])


# ------------------------------------------------------------ persistence


def model_to_dict(model: ZoneModel) -> dict:
    params: dict
    if model.kind == "knn":
        params = {
            "k": model.params["k"],
            "train_x": model.params["train_x"].tolist(),
            "train_y": model.params["train_y"].tolist(),
        }
    else:
        params = {
            "weights": model.params["weights"].tolist(),
            "bias": model.params["bias"].tolist(),
        }
    return {
        "kind": model.kind,
        "windowing": {
            "delta_t": model.windowing.delta_t,
            "min_observations_per_window": model.windowing.min_observations_per_window,
            "impute_missing_dbm": model.windowing.impute_missing_dbm,
        },
        "gateway_order": list(model.gateway_order),
        "zones": list(model.zones),
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "params": params,
        "metadata": model.metadata,
    }


def model_from_dict(doc: dict) -> ZoneModel:
    from .io import ModelFormatError

    try:
        kind = doc["kind"]
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        w = doc["windowing"]
        windowing = WindowingConfig(
            delta_t=float(w["delta_t"]),
            min_observations_per_window=int(w["min_observations_per_window"]),
            impute_missing_dbm=float(w["impute_missing_dbm"]),
        )
        gateway_order = tuple(str(g) for g in doc["gateway_order"])
        zones = tuple(int(z) for z in doc["zones"])
        scaler = Scaler(
            mean=np.asarray(doc["scaler"]["mean"], dtype=np.float64),
            std=np.asarray(doc["scaler"]["std"], dtype=np.float64),
        )
        raw = doc["params"]
        if kind == "knn":
            params = {
                "k": int(raw["k"]),
                "train_x": np.asarray(raw["train_x"], dtype=np.float64),
                "train_y": np.asarray(raw["train_y"], dtype=np.int64),
            }
            if params["train_x"].ndim != 2 or params["train_x"].shape[1] != scaler.mean.shape[0]:
                raise ValueError("knn training matrix does not match scaler dimension")
            if params["train_x"].shape[0] != params["train_y"].shape[0]:
                raise ValueError("knn training matrix and labels disagree on sample count")
        else:
            params = {
                "weights": np.asarray(raw["weights"], dtype=np.float64),
                "bias": np.asarray(raw["bias"], dtype=np.float64),
            }
            if params["weights"].shape != (len(zones), scaler.mean.shape[0]):
                raise ValueError("weight matrix shape does not match zones x features")
            if params["bias"].shape != (len(zones),):
                raise ValueError("bias vector does not match zone count")
        metadata = dict(doc.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    return ZoneModel(
        kind=kind,
        windowing=windowing,
        gateway_order=gateway_order,
        zones=zones,
        scaler=scaler,
        params=params,
        metadata=metadata,
    )


def save_model(model: ZoneModel, path: str) -> None:
    write_model_file(model_to_dict(model), path)


def load_model(path: str) -> ZoneModel:
    return model_from_dict(read_model_file(path))


# -------------------------------------------------------------- reporting


def write_sweep_csv(result: SweepResult, path: str) -> None:
    from .io import write_csv

    write_csv(
        path,
        ["window_s", "kind", "accuracy", "n_train", "n_test"],
        [(c.window_s, c.kind, c.accuracy, c.n_train, c.n_test) for c in result.cells],
    )


def format_eval_report(report: EvalReport) -> str:
    lines = [f"accuracy: {report.accuracy:.4f}"]
    if report.split_seed is not None:
        lines.append(f"split seed: {report.split_seed}")
    width = max(5, max(len(str(z)) for z in report.zones) + 2)
    header = "true\\pred".ljust(10) + "".join(str(z).rjust(width) for z in report.zones)
    lines.append(header)
    for i, z in enumerate(report.zones):
        row = str(z).ljust(10) + "".join(
            str(int(v)).rjust(width) for v in report.confusion[i]
        )
        lines.append(row)
    return "\n".join(lines) + "\n"
