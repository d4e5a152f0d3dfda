"""Training-data generation and analysis for the loop surrogate.

Runs parametric sweeps over the plant simulator (setpoint grid x fan
stages x hours), cleans the resulting table, and computes the Pearson
correlation matrix used to confirm which variables dominate fan and
chiller power.

The dataset is a flat table with a fixed column schema, interchanged as
CSV with the exact header::

    timestamp,t_wb_f,q_load_tons,t_cws_f,t_cwr_f,n_fans,p_chiller_kw,
    p_fan_kw,p_pump_kw,q_rej_tons,source

Column accessors accept either the CSV header names or the short field
names (t_wb, q_load, t_cws, t_cwr, n_fans, p_chiller, p_fan, p_pump,
q_rej).
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from cwloop.errors import DomainError, SchemaError, ZeroVarianceColumnError
from cwloop.plant import FAN_STAGES, PlantConfig, PlantState, simulate_point

DATASET_SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "timestamp",
    "t_wb_f",
    "q_load_tons",
    "t_cws_f",
    "t_cwr_f",
    "n_fans",
    "p_chiller_kw",
    "p_fan_kw",
    "p_pump_kw",
    "q_rej_tons",
    "source",
]

# CSV header name -> SampleRecord attribute.
_COLUMN_TO_FIELD = {
    "timestamp": "timestamp",
    "t_wb_f": "t_wb",
    "q_load_tons": "q_load",
    "t_cws_f": "t_cws",
    "t_cwr_f": "t_cwr",
    "n_fans": "n_fans",
    "p_chiller_kw": "p_chiller",
    "p_fan_kw": "p_fan",
    "p_pump_kw": "p_pump",
    "q_rej_tons": "q_rej",
    "source": "source",
}
_FIELD_NAMES = set(_COLUMN_TO_FIELD.values())


def _field_for(column: str) -> str:
    if column in _COLUMN_TO_FIELD:
        return _COLUMN_TO_FIELD[column]
    if column in _FIELD_NAMES:
        return column
    raise SchemaError(f"unknown dataset column {column!r}")


@dataclass(frozen=True)
class SampleRecord:
    """One observed or simulated operating point of the loop."""

    timestamp: str
    t_wb: float
    q_load: float
    t_cws: float
    t_cwr: float
    n_fans: int
    p_chiller: float
    p_fan: float
    p_pump: float
    q_rej: float
    source: str = "synthetic"

    def validate(self) -> None:
        numerics = (
            self.t_wb, self.q_load, self.t_cws, self.t_cwr,
            self.p_chiller, self.p_fan, self.p_pump, self.q_rej,
        )
        if not all(math.isfinite(v) for v in numerics):
            raise DomainError(f"non-finite value in record at {self.timestamp}")
        if self.n_fans not in FAN_STAGES:
            raise DomainError(
                f"n_fans must be one of {FAN_STAGES}, got {self.n_fans}"
            )
        if min(self.p_chiller, self.p_fan, self.p_pump) < 0:
            raise DomainError(f"negative power in record at {self.timestamp}")
        if self.source not in ("synthetic", "measured"):
            raise DomainError(f"source must be synthetic or measured, got {self.source}")
        # Measured rows are exempt from the energy balance (sensor noise).
        if self.source == "synthetic":
            residual = self.q_rej - self.q_load - self.p_chiller / 3.517
            if abs(residual) > 1e-6 * max(abs(self.q_rej), 1.0):
                raise DomainError(
                    f"energy balance violated at {self.timestamp}: residual {residual:g}"
                )

    @classmethod
    def from_state(cls, timestamp: str, state: PlantState, source: str = "synthetic"):
        return cls(
            timestamp=timestamp,
            t_wb=state.t_wb,
            q_load=state.q_load,
            t_cws=state.t_cws,
            t_cwr=state.t_cwr,
            n_fans=state.n_fans,
            p_chiller=state.p_chiller,
            p_fan=state.p_fan,
            p_pump=state.p_pump,
            q_rej=state.q_rej,
            source=source,
        )


@dataclass
class Dataset:
    """Ordered collection of sample records with a fixed column schema."""

    records: list[SampleRecord] = field(default_factory=list)
    schema_version: int = DATASET_SCHEMA_VERSION
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        attr = _field_for(name)
        if attr in ("timestamp", "source"):
            return np.array([getattr(r, attr) for r in self.records], dtype=object)
        return np.array([getattr(r, attr) for r in self.records], dtype=float)

    def validate(self) -> None:
        for record in self.records:
            record.validate()
        keys = [(r.timestamp, r.t_cws, r.n_fans) for r in self.records]
        if len(set(keys)) != len(keys):
            raise DomainError("duplicate (timestamp, t_cws, n_fans) keys in dataset")

    def fingerprint(self) -> str:
        """Stable content hash used to tie trained models to their data."""
        digest = hashlib.sha256()
        for record in self.records:
            digest.update(_format_row(record).encode())
            digest.update(b"\n")
        return digest.hexdigest()

    def to_rows(self) -> list[list]:
        """JSON-friendly row dump in CSV column order."""
        return [
            [
                r.timestamp, r.t_wb, r.q_load, r.t_cws, r.t_cwr, r.n_fans,
                r.p_chiller, r.p_fan, r.p_pump, r.q_rej, r.source,
            ]
            for r in self.records
        ]

    @classmethod
    def from_rows(cls, rows: list[list], provenance: str = "") -> "Dataset":
        records = [
            SampleRecord(
                timestamp=row[0],
                t_wb=float(row[1]),
                q_load=float(row[2]),
                t_cws=float(row[3]),
                t_cwr=float(row[4]),
                n_fans=int(row[5]),
                p_chiller=float(row[6]),
                p_fan=float(row[7]),
                p_pump=float(row[8]),
                q_rej=float(row[9]),
                source=row[10],
            )
            for row in rows
        ]
        return cls(records=records, provenance=provenance)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for record in self.records:
                writer.writerow(_format_row(record).split(","))

    @classmethod
    def from_csv(cls, path: str, provenance: str | None = None) -> "Dataset":
        with open(path, newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path} is empty") from None
            if header != CSV_COLUMNS:
                raise SchemaError(
                    f"{path} header {header} does not match dataset schema {CSV_COLUMNS}"
                )
            records = []
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(CSV_COLUMNS):
                    raise SchemaError(f"{path}:{line_no} has {len(row)} fields")
                try:
                    records.append(
                        SampleRecord(
                            timestamp=row[0],
                            t_wb=float(row[1]),
                            q_load=float(row[2]),
                            t_cws=float(row[3]),
                            t_cwr=float(row[4]),
                            n_fans=int(row[5]),
                            p_chiller=float(row[6]),
                            p_fan=float(row[7]),
                            p_pump=float(row[8]),
                            q_rej=float(row[9]),
                            source=row[10],
                        )
                    )
                except ValueError as exc:
                    raise SchemaError(f"{path}:{line_no}: {exc}") from exc
        return cls(records=records, provenance=provenance or f"loaded from {path}")


def _format_row(r: SampleRecord) -> str:
    return ",".join(
        [
            r.timestamp,
            repr(r.t_wb),
            repr(r.q_load),
            repr(r.t_cws),
            repr(r.t_cwr),
            str(r.n_fans),
            repr(r.p_chiller),
            repr(r.p_fan),
            repr(r.p_pump),
            repr(r.q_rej),
            r.source,
        ]
    )


@dataclass(frozen=True)
class SweepSpec:
    """Which (setpoint, fan stage) grid to run over which hours.

    One setpoint per run is the recommended shape for surrogate training:
    fan modulation then depends only on conditions, so per-stratum fan
    power stays a learnable function of (wet bulb, rejection). Multiple
    setpoints are supported; combinations that collapse onto the same
    achieved operating point are recorded once.
    """

    t_cws_values: tuple[float, ...] = (75.0,)
    n_fans_values: tuple[int, ...] = FAN_STAGES
    months: tuple[int, ...] = (5, 6, 7, 8, 9)
    weather: str | None = None   # optional path to the weather/load CSV

    def __post_init__(self):
        if not self.t_cws_values or not self.n_fans_values:
            raise DomainError("sweep value lists must be non-empty")
        for t in self.t_cws_values:
            if not 60.0 <= t <= 90.0:
                raise DomainError(f"setpoint {t} outside [60, 90] degF")
        for n in self.n_fans_values:
            if n not in FAN_STAGES:
                raise DomainError(f"fan count {n} not in {FAN_STAGES}")


@dataclass
class CleaningRules:
    min_load_tons: float = 50.0
    require_finite: bool = True
    drop_reversed_delta_t: bool = True


@dataclass
class CleaningReport:
    input_rows: int = 0
    output_rows: int = 0
    drops: dict = field(default_factory=dict)

    def total_dropped(self) -> int:
        return sum(self.drops.values())


def load_weather_csv(path: str) -> list[tuple[str, float, float]]:
    """Read an hourly (timestamp, t_wb_f, q_load_tons) series."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["timestamp", "t_wb_f", "q_load_tons"]:
            raise SchemaError(
                f"{path} header {header} does not match timestamp,t_wb_f,q_load_tons"
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise SchemaError(f"{path}:{line_no} has {len(row)} fields")
            try:
                rows.append((row[0], float(row[1]), float(row[2])))
            except ValueError as exc:
                raise SchemaError(f"{path}:{line_no}: {exc}") from exc
    return rows


def save_weather_csv(series: list[tuple[str, float, float]], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["timestamp", "t_wb_f", "q_load_tons"])
        for timestamp, t_wb, q_load in series:
            writer.writerow([timestamp, repr(t_wb), repr(q_load)])


def synthetic_year(
    config: PlantConfig | None = None,
    seed: int = 0,
    year: int = 2021,
) -> list[tuple[str, float, float]]:
    """Generate an 8760-hour NYC-like wet-bulb and cooling-load series.

    Load is mostly occupancy-driven with a secondary weather term, so load
    and wet bulb are only loosely coupled; that keeps the dominant-variable
    analysis honest. Loads are capped safely inside plant capacity.
    """
    if config is None:
        config = PlantConfig()
    rng = np.random.default_rng(seed)
    start = datetime(year, 1, 1)
    cap = 0.93 * config.total_capacity
    series = []
    for hour in range(8760):
        stamp = start + timedelta(hours=hour)
        day = stamp.timetuple().tm_yday
        seasonal = math.cos(2.0 * math.pi * (day - 201) / 365.0)
        t_wb = (
            47.0
            + 23.0 * seasonal
            + 4.0 * math.sin(2.0 * math.pi * (stamp.hour - 15) / 24.0)
            + float(rng.normal(0.0, 2.0))
        )
        t_wb = min(max(t_wb, 15.0), 80.0)

        weekday = stamp.weekday() < 5
        if 8 <= stamp.hour < 18:
            occupancy = 1.0 if weekday else 0.35
        elif 6 <= stamp.hour < 20:
            occupancy = 0.55 if weekday else 0.25
        else:
            occupancy = 0.15
        season_frac = min(max((seasonal - 0.15) / 0.85, 0.0), 1.0)
        q_load = (
            season_frac * (400.0 + 1900.0 * occupancy)
            + 10.0 * max(t_wb - 62.0, 0.0)
            + float(rng.normal(0.0, 60.0))
        )
        if q_load < 150.0:
            q_load = 0.0
        q_load = min(q_load, cap)
        series.append((stamp.isoformat(), round(t_wb, 3), round(q_load, 2)))
    return series


def run_sweep(
    config: PlantConfig,
    spec: SweepSpec,
    weather: list[tuple[str, float, float]],
) -> Dataset:
    """Simulate every (hour x setpoint x fan stage) combination.

    Ordering is time-major, then setpoint, then fan count. Combinations
    with zero load still simulate (and are typically removed by clean()).
    Simulator errors propagate with the offending combination attached.
    """
    records = []
    seen = set()
    month_set = set(spec.months)
    for timestamp, t_wb, q_load in weather:
        month = datetime.fromisoformat(timestamp).month
        if month not in month_set:
            continue
        for t_set in spec.t_cws_values:
            for n_fans in spec.n_fans_values:
                try:
                    state = simulate_point(config, t_wb, q_load, t_set, n_fans)
                except Exception as exc:
                    raise type(exc)(
                        f"{exc} [at timestamp={timestamp}, t_cws={t_set}, n_fans={n_fans}]"
                    ) from exc
                key = (timestamp, state.t_cws, n_fans)
                if key in seen:
                    continue  # two setpoints collapsed onto one physical point
                seen.add(key)
                records.append(SampleRecord.from_state(timestamp, state))
    provenance = (
        f"sweep t_cws={list(spec.t_cws_values)} n_fans={list(spec.n_fans_values)} "
        f"months={sorted(month_set)} hours={len(weather)}"
    )
    return Dataset(records=records, provenance=provenance)


def clean(
    data: Dataset, rules: CleaningRules | None = None
) -> tuple[Dataset, CleaningReport]:
    """Drop physically uninformative rows; never fails, always reports.

    Rules fire in a fixed order (non-finite, min-load, reversed-delta-t)
    and each dropped row is counted under the first rule it hits, so
    output rows + total drops == input rows.
    """
    if rules is None:
        rules = CleaningRules()
    report = CleaningReport(input_rows=len(data))
    kept = []
    for record in data.records:
        numerics = (
            record.t_wb, record.q_load, record.t_cws, record.t_cwr,
            record.p_chiller, record.p_fan, record.p_pump, record.q_rej,
        )
        if rules.require_finite and not all(math.isfinite(v) for v in numerics):
            report.drops["non-finite"] = report.drops.get("non-finite", 0) + 1
            continue
        if record.q_load <= rules.min_load_tons:
            report.drops["min-load"] = report.drops.get("min-load", 0) + 1
            continue
        if rules.drop_reversed_delta_t and record.t_cwr <= record.t_cws:
            report.drops["reversed-delta-t"] = (
                report.drops.get("reversed-delta-t", 0) + 1
            )
            continue
        kept.append(record)
    report.output_rows = len(kept)
    cleaned = Dataset(
        records=kept,
        schema_version=data.schema_version,
        provenance=data.provenance + " | cleaned",
    )
    return cleaned, report


def correlation_matrix(
    data: Dataset, columns: list[str]
) -> tuple[np.ndarray, list[str]]:
    """Pearson correlation matrix over the selected numeric columns."""
    if len(data) < 3:
        raise DomainError(f"need at least 3 rows for correlation, got {len(data)}")
    arrays = []
    for name in columns:
        values = data.column(name)
        if values.dtype == object:
            raise SchemaError(f"column {name!r} is not numeric")
        if np.var(values) == 0.0:
            raise ZeroVarianceColumnError(name)
        arrays.append(values)
    matrix = np.corrcoef(np.vstack(arrays))
    matrix = np.clip(matrix, -1.0, 1.0)
    np.fill_diagonal(matrix, 1.0)
    return matrix, list(columns)


def split(data: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled train/test split."""
    if not 0.0 < fraction < 1.0:
        raise DomainError(f"fraction must be in (0, 1), got {fraction}")
    n = len(data)
    n_train = int(round(fraction * n))
    if n_train == 0 or n_train == n:
        raise DomainError(
            f"split of {n} rows at fraction {fraction} leaves an empty side"
        )
    order = np.random.default_rng(seed).permutation(n)
    train_records = [data.records[i] for i in order[:n_train]]
    test_records = [data.records[i] for i in order[n_train:]]
    tag = f" | split {fraction} seed {seed}"
    train = Dataset(train_records, data.schema_version, data.provenance + tag + " train")
    test = Dataset(test_records, data.schema_version, data.provenance + tag + " test")
    return train, test


def reference_sweep(
    config: PlantConfig | None = None, seed: int = 0
) -> Dataset:
    """The standard synthetic training sweep used across tests and docs.

    One 75 degF setpoint over all four fan stages across the cooling
    months of a synthetic year, cleaned. Roughly 10k rows.
    """
    if config is None:
        config = PlantConfig()
    weather = synthetic_year(config, seed=seed)
    data = run_sweep(config, SweepSpec(), weather)
    cleaned, _ = clean(data)
    return cleaned
