"""The six-model surrogate bundle for the condenser water loop.

Three roles, six boosted-tree models:

* chiller power as a function of (t_cws, q_load),
* heat rejection as a function of (q_load, t_cws),
* tower fan power as a function of (t_wb, q_rej), one model per fan
  stage in {2, 4, 6, 8}.

At prediction time the models chain: chiller power -> heat rejection ->
the tower model for the requested fan stage. The bundle also records the
training-data bounding box (for extrapolation warnings), a content hash
of the training data, and the training rows themselves so the bundle can
later be refined against measured data without the original files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from cwloop.datagen import Dataset
from cwloop.errors import BundleError, DomainError
from cwloop.gbt import GBTHyperparams, GBTModel, fit_arrays

BUNDLE_SCHEMA_VERSION = 1

TOWER_STAGES = (2, 4, 6, 8)

CHILLER_FEATURES = ["t_cws", "q_load"]
REJECTION_FEATURES = ["q_load", "t_cws"]
TOWER_FEATURES = ["t_wb", "q_rej"]


@dataclass
class SurrogateBundle:
    chiller_power_model: GBTModel
    heat_rejection_model: GBTModel
    tower_power_models: dict[int, GBTModel]
    created_at: str
    training_data_fingerprint: str
    envelope: dict[str, tuple[float, float]]
    schema_version: int = BUNDLE_SCHEMA_VERSION
    training_data: Dataset | None = None

    def __post_init__(self):
        if tuple(sorted(self.tower_power_models)) != TOWER_STAGES:
            raise BundleError(
                f"tower models must cover stages {TOWER_STAGES}, "
                f"got {sorted(self.tower_power_models)}"
            )

    def models(self) -> dict[str, GBTModel]:
        """All six models keyed by a stable name."""
        named = {
            "chiller_power": self.chiller_power_model,
            "heat_rejection": self.heat_rejection_model,
        }
        for stage in TOWER_STAGES:
            named[f"tower_power_{stage}"] = self.tower_power_models[stage]
        return named

    def predict_components(self, q_load, t_wb, t_cws, n_fans, pump_power: float):
        """Chained per-row loop power components for aligned input arrays."""
        q_load = np.atleast_1d(np.asarray(q_load, dtype=float))
        t_wb = np.atleast_1d(np.asarray(t_wb, dtype=float))
        t_cws = np.atleast_1d(np.asarray(t_cws, dtype=float))
        fans = np.atleast_1d(np.asarray(n_fans, dtype=int))
        p_chiller = self.chiller_power_model.predict_batch(
            np.column_stack([t_cws, q_load])
        )
        q_rej = self.heat_rejection_model.predict_batch(
            np.column_stack([q_load, t_cws])
        )
        p_fan = np.empty_like(p_chiller)
        for stage in np.unique(fans):
            stage = int(stage)
            if stage not in self.tower_power_models:
                raise DomainError(
                    f"no tower model for fan stage {stage}; have {TOWER_STAGES}"
                )
            mask = fans == stage
            p_fan[mask] = self.tower_power_models[stage].predict_batch(
                np.column_stack([t_wb[mask], q_rej[mask]])
            )
        p_pump = np.where(q_load > 0, pump_power, 0.0)
        return {
            "p_chiller": p_chiller,
            "q_rej": q_rej,
            "p_fan": p_fan,
            "p_pump": p_pump,
            "total": p_chiller + p_fan + p_pump,
        }

    def envelope_warnings(self, q_load: float, t_wb: float, margin: float = 0.05):
        """Extrapolation warnings against the training bounding box."""
        warnings = []
        for name, value in (("q_load", q_load), ("t_wb", t_wb)):
            lo, hi = self.envelope[name]
            slack = margin * (hi - lo)
            if value < lo - slack or value > hi + slack:
                warnings.append(
                    f"{name}={value:g} outside training envelope "
                    f"[{lo:g}, {hi:g}] (+/-{margin:.0%})"
                )
        return warnings


def _column_matrix(data: Dataset, columns: list[str]) -> np.ndarray:
    return np.column_stack([data.column(c) for c in columns]).astype(float)


def train_bundle(
    data: Dataset,
    hyperparams: GBTHyperparams | None = None,
    created_at: str | None = None,
    sample_weight=None,
    embed_training_data: bool = True,
) -> SurrogateBundle:
    """Train the six-model bundle from one sweep dataset.

    Chiller and rejection models see every row; each tower model sees only
    the rows at its fan stage. Raises if any stage is missing or too thin.
    """
    if hyperparams is None:
        hyperparams = GBTHyperparams()
    fans = data.column("n_fans").astype(int)
    weights = (
        None if sample_weight is None else np.asarray(sample_weight, dtype=float)
    )
    minimum = 2 * hyperparams.min_samples_leaf
    for stage in TOWER_STAGES:
        count = int((fans == stage).sum())
        if count < minimum:
            raise BundleError(
                f"fan stage {stage} has {count} rows; need at least {minimum} "
                "to train its tower model"
            )

    chiller = fit_arrays(
        _column_matrix(data, CHILLER_FEATURES),
        data.column("p_chiller"),
        CHILLER_FEATURES,
        "p_chiller",
        hyperparams,
        weights,
    )
    rejection = fit_arrays(
        _column_matrix(data, REJECTION_FEATURES),
        data.column("q_rej"),
        REJECTION_FEATURES,
        "q_rej",
        hyperparams,
        weights,
    )
    towers = {}
    X_tower = _column_matrix(data, TOWER_FEATURES)
    y_tower = data.column("p_fan")
    for stage in TOWER_STAGES:
        mask = fans == stage
        towers[stage] = fit_arrays(
            X_tower[mask],
            y_tower[mask],
            TOWER_FEATURES,
            "p_fan",
            hyperparams,
            None if weights is None else weights[mask],
        )

    envelope = {
        name: (float(data.column(name).min()), float(data.column(name).max()))
        for name in ("q_load", "t_wb", "t_cws")
    }
    return SurrogateBundle(
        chiller_power_model=chiller,
        heat_rejection_model=rejection,
        tower_power_models=towers,
        created_at=created_at
        or datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
        training_data_fingerprint=data.fingerprint(),
        envelope=envelope,
        training_data=data if embed_training_data else None,
    )


def evaluate(model: GBTModel, data: Dataset) -> dict:
    """Standard calibration metrics for one model over a dataset.

    MBE% is the mean signed error as a percent of mean actual; CV(RMSE)% is
    RMSE as a percent of mean actual. ``by_wetbulb_bin`` reports the mean
    absolute percentage difference per integer degF wet-bulb bin.
    """
    if len(data) == 0:
        raise DomainError("cannot evaluate on an empty dataset")
    X = _column_matrix(data, model.feature_names)
    actual = data.column(model.target_name).astype(float)
    mean_actual = float(np.mean(actual))
    if mean_actual == 0.0:
        raise DomainError(
            f"mean of {model.target_name} is zero; MBE/CV(RMSE) undefined"
        )
    pred = model.predict_batch(X)
    error = pred - actual
    rmse = float(np.sqrt(np.mean(error**2)))

    bins = {}
    t_wb = data.column("t_wb").astype(float)
    nonzero = actual != 0
    pct = np.abs(error[nonzero] / actual[nonzero]) * 100.0
    for wb, p in zip(np.rint(t_wb[nonzero]).astype(int), pct):
        bins.setdefault(int(wb), []).append(float(p))
    return {
        "rmse": rmse,
        "mbe_percent": 100.0 * float(np.mean(error)) / mean_actual,
        "cv_rmse_percent": 100.0 * rmse / mean_actual,
        "n_rows": len(data),
        "by_wetbulb_bin": {wb: float(np.mean(v)) for wb, v in sorted(bins.items())},
    }


def rejection_sanity(bundle: SurrogateBundle, n_grid: int = 40) -> float:
    """Fraction of a validation grid where predicted q_rej >= q_load.

    Physically the condenser must reject at least the building load; a
    well-trained rejection model respects this almost everywhere. This is
    a soft health indicator to report, not an assertion.
    """
    q_lo, q_hi = bundle.envelope["q_load"]
    t_lo, t_hi = bundle.envelope["t_cws"]
    q = np.linspace(q_lo, q_hi, n_grid)
    t = np.linspace(t_lo, t_hi, n_grid)
    qq, tt = (a.ravel() for a in np.meshgrid(q, t))
    predicted = bundle.heat_rejection_model.predict_batch(np.column_stack([qq, tt]))
    return float(np.mean(predicted >= qq))


def evaluate_bundle(bundle: SurrogateBundle, data: Dataset) -> dict[str, dict]:
    """Evaluate all six models; tower models see only their stage's rows."""
    fans = data.column("n_fans").astype(int)
    out = {
        "chiller_power": evaluate(bundle.chiller_power_model, data),
        "heat_rejection": evaluate(bundle.heat_rejection_model, data),
    }
    for stage in TOWER_STAGES:
        subset = Dataset(
            [r for r, f in zip(data.records, fans) if f == stage],
            data.schema_version,
            data.provenance,
        )
        if len(subset):
            out[f"tower_power_{stage}"] = evaluate(
                bundle.tower_power_models[stage], subset
            )
    return out


@dataclass
class RefinementReport:
    accepted: bool
    weight: float
    measured_rows: int
    per_model: dict[str, dict] = field(default_factory=dict)
    warning: str | None = None


def refine(
    bundle: SurrogateBundle, measured: Dataset, weight: float = 10.0
) -> tuple[SurrogateBundle, RefinementReport]:
    """Retrain on synthetic + measured rows, weighting measured by ``weight``.

    Measured rows replace synthetic rows with the same (timestamp, t_cws,
    n_fans) key. The refinement is accepted only if no retrained model's
    |MBE%| on the measured data got worse; otherwise the original bundle
    is returned untouched, with the comparison in the report.
    """
    if weight < 1.0:
        raise DomainError(f"weight must be >= 1, got {weight}")
    if len(measured) == 0:
        return bundle, RefinementReport(
            accepted=False, weight=weight, measured_rows=0,
            warning="empty measured dataset; refinement skipped",
        )
    if bundle.training_data is None:
        raise BundleError(
            "bundle carries no training data; it cannot be refined in place"
        )
    for record in measured.records:
        record.validate()

    measured_keys = {(r.timestamp, r.t_cws, r.n_fans) for r in measured.records}
    combined_records = [
        r
        for r in bundle.training_data.records
        if (r.timestamp, r.t_cws, r.n_fans) not in measured_keys
    ] + list(measured.records)
    combined = Dataset(
        records=combined_records,
        provenance=bundle.training_data.provenance + " | refined with measured",
    )
    weights = np.array(
        [weight if r.source == "measured" else 1.0 for r in combined.records]
    )
    hyper = bundle.chiller_power_model.hyperparams
    refined = train_bundle(combined, hyper, sample_weight=weights)

    report = RefinementReport(
        accepted=True, weight=weight, measured_rows=len(measured)
    )
    measured_fans = measured.column("n_fans").astype(int)
    for name, old_model in bundle.models().items():
        new_model = refined.models()[name]
        if name.startswith("tower_power_"):
            stage = int(name.rsplit("_", 1)[1])
            subset = Dataset(
                [r for r, f in zip(measured.records, measured_fans) if f == stage]
            )
            if not len(subset):
                continue
        else:
            subset = measured
        old_mbe = evaluate(old_model, subset)["mbe_percent"]
        new_mbe = evaluate(new_model, subset)["mbe_percent"]
        report.per_model[name] = {"old_mbe_percent": old_mbe, "new_mbe_percent": new_mbe}
        if abs(new_mbe) > abs(old_mbe) + 1e-9:
            report.accepted = False
    if not report.accepted:
        report.warning = (
            "refinement rejected: at least one model's |MBE%| on the measured "
            "data worsened; returning the original bundle"
        )
        return bundle, report
    return refined, report


def bundle_to_dict(bundle: SurrogateBundle) -> dict:
    return {
        "schema_version": bundle.schema_version,
        "created_at": bundle.created_at,
        "training_data_fingerprint": bundle.training_data_fingerprint,
        "envelope": {k: list(v) for k, v in bundle.envelope.items()},
        "chiller_power_model": bundle.chiller_power_model.to_dict(),
        "heat_rejection_model": bundle.heat_rejection_model.to_dict(),
        "tower_power_models": {
            str(stage): model.to_dict()
            for stage, model in sorted(bundle.tower_power_models.items())
        },
        "training_data": (
            None if bundle.training_data is None else bundle.training_data.to_rows()
        ),
    }


def bundle_from_dict(payload: dict) -> SurrogateBundle:
    try:
        version = payload["schema_version"]
        if version != BUNDLE_SCHEMA_VERSION:
            raise BundleError(
                f"bundle schema_version {version} is not supported by this "
                f"build (expected {BUNDLE_SCHEMA_VERSION})"
            )
        rows = payload.get("training_data")
        return SurrogateBundle(
            chiller_power_model=GBTModel.from_dict(payload["chiller_power_model"]),
            heat_rejection_model=GBTModel.from_dict(payload["heat_rejection_model"]),
            tower_power_models={
                int(stage): GBTModel.from_dict(model)
                for stage, model in payload["tower_power_models"].items()
            },
            created_at=payload["created_at"],
            training_data_fingerprint=payload["training_data_fingerprint"],
            envelope={
                k: (float(v[0]), float(v[1]))
                for k, v in payload["envelope"].items()
            },
            schema_version=version,
            training_data=None if rows is None else Dataset.from_rows(
                rows, provenance="embedded in bundle"
            ),
        )
    except BundleError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise BundleError(f"malformed bundle payload: {exc!r}") from exc


def save_bundle(bundle: SurrogateBundle, path: str) -> None:
    with open(path, "w") as f:
        json.dump(bundle_to_dict(bundle), f, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def load_bundle(path: str) -> SurrogateBundle:
    try:
        with open(path) as f:
            payload = json.load(f)
    except json.JSONDecodeError as exc:
        raise BundleError(f"bundle file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise BundleError(f"bundle file {path} does not contain an object")
    return bundle_from_dict(payload)
