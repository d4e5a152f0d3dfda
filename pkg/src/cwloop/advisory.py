"""Operational layer: look-up tables, live recommendations, and savings.

Everything here composes the surrogate bundle with the optimizer:

* ``build_table`` precomputes optimal (t_cws, n_fans) over a load x
  wet-bulb grid for offline use by operators;
* ``advise`` answers one live query, optionally comparing against the
  operator's current settings;
* ``savings_pipeline`` replays measured interval data through the bundle
  at measured settings and at advised settings and bills both series, a
  model-vs-model comparison that isolates the effect of the settings;
* ``ingest_measured`` maps external CSV columns onto the dataset schema.

The savings comparison always includes the measured settings as a
candidate, so the optimized series can never bill above the baseline.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from cwloop.datagen import Dataset, SampleRecord
from cwloop.errors import (
    DomainError,
    IngestionError,
    SchemaError,
    TableError,
)
from cwloop.mipso import Candidate, SwarmConfig, loop_objective, optimize
from cwloop.plant import PlantConfig
from cwloop.surrogate import SurrogateBundle
from cwloop.tariff import IntervalSeries, SavingsReport, TariffSchedule, compare_costs

DEFAULT_Q_LOAD_GRID = tuple(float(q) for q in range(200, 2701, 100))
DEFAULT_T_WB_GRID = tuple(float(t) for t in range(60, 81))


@dataclass(frozen=True)
class LookupCell:
    q_load: float
    t_wb: float
    t_cws_opt: float
    n_fans_opt: int
    predicted_power_kw: float
    feasible: bool = True


@dataclass
class LookupTable:
    q_load_grid: tuple[float, ...]
    t_wb_grid: tuple[float, ...]
    cells: list[list[LookupCell]]       # indexed [i_load][j_wb]
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        for grid, name in ((self.q_load_grid, "q_load"), (self.t_wb_grid, "t_wb")):
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise DomainError(f"{name} grid must be strictly increasing: {grid}")

    def cell_at(self, q_load: float, t_wb: float) -> LookupCell:
        try:
            i = self.q_load_grid.index(q_load)
            j = self.t_wb_grid.index(t_wb)
        except ValueError:
            raise DomainError(
                f"({q_load}, {t_wb}) is not a grid point of this table"
            ) from None
        return self.cells[i][j]

    def to_dict(self) -> dict:
        return {
            "q_load_grid": list(self.q_load_grid),
            "t_wb_grid": list(self.t_wb_grid),
            "context": dict(self.context),
            "cells": [
                [
                    {
                        "q_load": c.q_load,
                        "t_wb": c.t_wb,
                        "t_cws_opt": c.t_cws_opt,
                        "n_fans_opt": c.n_fans_opt,
                        "predicted_power_kw": c.predicted_power_kw,
                        "feasible": c.feasible,
                    }
                    for c in row
                ]
                for row in self.cells
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LookupTable":
        return cls(
            q_load_grid=tuple(payload["q_load_grid"]),
            t_wb_grid=tuple(payload["t_wb_grid"]),
            context=dict(payload.get("context", {})),
            cells=[
                [
                    LookupCell(
                        q_load=c["q_load"],
                        t_wb=c["t_wb"],
                        t_cws_opt=c["t_cws_opt"],
                        n_fans_opt=c["n_fans_opt"],
                        predicted_power_kw=c["predicted_power_kw"],
                        feasible=c["feasible"],
                    )
                    for c in row
                ]
                for row in payload["cells"]
            ],
        )

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["q_load_tons", "t_wb_f", "t_cws_opt_f", "n_fans_opt",
                 "predicted_power_kw", "feasible"]
            )
            for row in self.cells:
                for c in row:
                    writer.writerow(
                        [c.q_load, c.t_wb, round(c.t_cws_opt, 3), c.n_fans_opt,
                         round(c.predicted_power_kw, 3), int(c.feasible)]
                    )


def build_table(
    bundle: SurrogateBundle,
    plant: PlantConfig,
    q_load_grid: tuple[float, ...] = DEFAULT_Q_LOAD_GRID,
    t_wb_grid: tuple[float, ...] = DEFAULT_T_WB_GRID,
    swarm_config: SwarmConfig | None = None,
) -> LookupTable:
    """Optimize every grid cell. Deterministic under a deterministic swarm."""
    if swarm_config is None:
        swarm_config = SwarmConfig(stochastic=False)
    if not q_load_grid or not t_wb_grid:
        raise DomainError("grids must be non-empty")
    cells = []
    for q_load in q_load_grid:
        row = []
        for t_wb in t_wb_grid:
            try:
                objective = loop_objective(bundle, plant, q_load, t_wb)
                cand, _ = optimize(objective, swarm_config)
            except Exception as exc:
                raise TableError(
                    f"cell (q_load={q_load}, t_wb={t_wb}) failed: {exc}"
                ) from exc
            power = objective.components(cand.t_cws, cand.n_fans)["total"]
            row.append(
                LookupCell(
                    q_load=q_load,
                    t_wb=t_wb,
                    t_cws_opt=cand.t_cws,
                    n_fans_opt=cand.n_fans,
                    predicted_power_kw=power,
                    feasible=cand.feasible,
                )
            )
        cells.append(row)
    return LookupTable(
        q_load_grid=tuple(q_load_grid),
        t_wb_grid=tuple(t_wb_grid),
        cells=cells,
        context={
            "n_chillers": plant.n_chillers,
            "chw_setpoint_f": plant.chw_supply_temp,
            "bundle_fingerprint": bundle.training_data_fingerprint,
            "t_cws_bounds": list(swarm_config.t_cws_bounds),
            "fan_strata": list(swarm_config.fan_strata),
            "deterministic": not swarm_config.stochastic,
        },
    )


@dataclass
class Recommendation:
    q_load: float
    t_wb: float
    timestamp: str | None
    t_cws_opt: float
    n_fans_opt: int
    predicted_power_kw: float
    predicted_cost_rate: float | None
    feasible: bool
    baseline_delta: dict | None
    bundle_fingerprint: str
    computed_at: str
    warnings: list[str] = field(default_factory=list)
    trace_length: int = 0

    def as_dict(self) -> dict:
        return {
            "inputs": {
                "q_load_tons": self.q_load,
                "t_wb_f": self.t_wb,
                "timestamp": self.timestamp,
            },
            "t_cws_opt_f": self.t_cws_opt,
            "n_fans_opt": self.n_fans_opt,
            "predicted_power_kw": self.predicted_power_kw,
            "predicted_cost_rate_per_h": self.predicted_cost_rate,
            "feasible": self.feasible,
            "baseline_delta": self.baseline_delta,
            "bundle_fingerprint": self.bundle_fingerprint,
            "computed_at": self.computed_at,
            "warnings": list(self.warnings),
            "trace_length": self.trace_length,
        }


# Only move the operator off their current settings for a real gain;
# sub-0.1% churn is inside model noise and costs actuator wear.
SWITCH_MARGIN = 1e-3


def advise(
    bundle: SurrogateBundle,
    plant: PlantConfig,
    q_load: float,
    t_wb: float,
    current: tuple[float, int] | None = None,
    tariff: TariffSchedule | None = None,
    timestamp: str | None = None,
    swarm_config: SwarmConfig | None = None,
) -> Recommendation:
    """One live recommendation, optionally delta'd against current settings.

    A supplied current operating point is first projected onto what the
    tower can physically deliver (a setpoint below the achievable floor
    runs at the floor, exactly as the plant would), injected into the
    swarm, and only abandoned if the optimum beats it by more than
    SWITCH_MARGIN. The recommendation therefore never predicts more power
    than the (projected) current settings.
    """
    if swarm_config is None:
        swarm_config = SwarmConfig(stochastic=False)
    mode = "cost" if tariff is not None and timestamp is not None else "power"
    objective = loop_objective(
        bundle, plant, q_load, t_wb, mode=mode, tariff=tariff, timestamp=timestamp
    )
    warnings = bundle.envelope_warnings(q_load, t_wb)

    projected = None
    if current is not None:
        t_cur, n_cur = float(current[0]), int(current[1])
        q_rej_cur = objective.components(t_cur, n_cur)["q_rej"]
        floor = objective.feasibility_floor(n_cur, q_rej_cur)
        projected = (max(t_cur, floor), n_cur)
        if projected[0] > t_cur:
            warnings.append(
                f"current setpoint {t_cur:g} F is below the achievable floor "
                f"{floor:.2f} F for {n_cur} fans; comparing against the floor"
            )

    cand, trace = optimize(objective, swarm_config, baseline=projected)
    if projected is not None:
        base_value = objective(*projected)
        if cand.objective_value >= base_value * (1.0 - SWITCH_MARGIN):
            cand = Candidate(
                t_cws=projected[0],
                n_fans=projected[1],
                objective_value=base_value,
                feasible=objective.penalty(*projected) == 0.0,
                penalty=objective.penalty(*projected),
            )
    parts = objective.components(cand.t_cws, cand.n_fans)
    rate = objective._rate if mode == "cost" else None

    baseline_delta = None
    if projected is not None:
        base_parts = objective.components(*projected)
        delta_power = base_parts["total"] - parts["total"]
        baseline_delta = {
            "power_kw": delta_power,
            "cost_rate_per_h": delta_power * rate if rate is not None else None,
            "current_t_cws_f": float(current[0]),
            "current_n_fans": int(current[1]),
            "current_effective_t_cws_f": projected[0],
            "current_power_kw": base_parts["total"],
        }
    return Recommendation(
        q_load=q_load,
        t_wb=t_wb,
        timestamp=timestamp,
        t_cws_opt=cand.t_cws,
        n_fans_opt=cand.n_fans,
        predicted_power_kw=parts["total"],
        predicted_cost_rate=parts["total"] * rate if rate is not None else None,
        feasible=cand.feasible,
        baseline_delta=baseline_delta,
        bundle_fingerprint=bundle.training_data_fingerprint,
        computed_at=datetime.now(timezone.utc).replace(microsecond=0).isoformat(),
        warnings=warnings,
        trace_length=len(trace.values),
    )


# Savings optimization reuses one swarm result per rounded (load, wet bulb)
# key; the measured settings always stay in the running as a candidate, so
# cache coarseness cannot push the optimized bill above the baseline.
_CACHE_Q_STEP = 25.0    # tons
_CACHE_WB_STEP = 1.0    # degF


@dataclass
class IntervalDecision:
    timestamp: str
    q_load: float
    t_wb: float
    measured_t_cws: float
    measured_n_fans: int
    advised_t_cws: float
    advised_n_fans: int
    baseline_power_kw: float
    optimized_power_kw: float


@dataclass
class MonthlySavings:
    month: str
    report: SavingsReport
    intervals: list[IntervalDecision] = field(default_factory=list)


def _pipeline_swarm(seed: int) -> SwarmConfig:
    return SwarmConfig(
        n_particles_per_stratum=5, n_iterations=20, seed=seed, stochastic=True
    )


def savings_pipeline(
    bundle: SurrogateBundle,
    plant: PlantConfig,
    measured: Dataset,
    tariff: TariffSchedule,
    months: list[str],
    swarm_config: SwarmConfig | None = None,
) -> list[MonthlySavings]:
    """Monthly measured-vs-optimized savings, model-vs-model.

    Both series come from the same bundle: the baseline is the bundle's
    prediction at the measured settings, the optimized series its
    prediction at advised settings. Never compares raw meter readings to
    model output, so model bias cancels out of the delta.
    """
    if len(measured) == 0:
        raise DomainError("measured dataset is empty")
    by_month: dict[str, list[SampleRecord]] = {}
    for record in measured.records:
        month = record.timestamp[:7]
        if month in months:
            by_month.setdefault(month, []).append(record)
    missing = [m for m in months if m not in by_month]
    if missing:
        raise DomainError(f"measured data has no rows for months {missing}")

    cache: dict[tuple, Candidate] = {}
    results = []
    for month in months:
        records = sorted(by_month[month], key=lambda r: r.timestamp)
        timestamps = [datetime.fromisoformat(r.timestamp) for r in records]
        if len(timestamps) < 2:
            raise SchemaError(f"month {month} has fewer than 2 intervals")
        interval_minutes = int(
            (timestamps[1] - timestamps[0]).total_seconds() // 60
        )

        q = np.array([r.q_load for r in records])
        wb = np.array([r.t_wb for r in records])
        t_meas = np.array([r.t_cws for r in records])
        fans_meas = np.array([r.n_fans for r in records], dtype=int)
        running = q > 0
        base_parts = bundle.predict_components(
            q, wb, t_meas, fans_meas, plant.pump_power
        )
        baseline_power = np.where(running, base_parts["total"], 0.0)

        # Pass 1: one swarm run per distinct rounded operating point.
        keys = [
            (
                round(r.q_load / _CACHE_Q_STEP) * _CACHE_Q_STEP,
                round(r.t_wb / _CACHE_WB_STEP) * _CACHE_WB_STEP,
            )
            for r in records
        ]
        for key, is_on in zip(keys, running):
            if not is_on or key in cache:
                continue
            seed = zlib.crc32(repr(key).encode())
            objective = loop_objective(bundle, plant, key[0], key[1])
            cache[key], _ = optimize(objective, swarm_config or _pipeline_swarm(seed))

        # Pass 2: evaluate the advised settings for the whole month at once.
        adv_t = np.array(
            [cache[k].t_cws if on else r.t_cws for k, on, r in zip(keys, running, records)]
        )
        adv_n = np.array(
            [cache[k].n_fans if on else r.n_fans for k, on, r in zip(keys, running, records)],
            dtype=int,
        )
        advised_power = np.where(
            running,
            bundle.predict_components(q, wb, adv_t, adv_n, plant.pump_power)["total"],
            0.0,
        )
        # Baseline inclusion: measured settings stay in the candidate set.
        keep_measured = advised_power >= baseline_power
        optimized_power = np.where(keep_measured, baseline_power, advised_power)

        decisions = [
            IntervalDecision(
                timestamp=r.timestamp,
                q_load=r.q_load,
                t_wb=r.t_wb,
                measured_t_cws=r.t_cws,
                measured_n_fans=r.n_fans,
                advised_t_cws=r.t_cws if keep_measured[i] else float(adv_t[i]),
                advised_n_fans=r.n_fans if keep_measured[i] else int(adv_n[i]),
                baseline_power_kw=float(baseline_power[i]),
                optimized_power_kw=float(optimized_power[i]),
            )
            for i, r in enumerate(records)
        ]

        base_series = IntervalSeries(
            interval_minutes,
            [(ts, float(p)) for ts, p in zip(timestamps, baseline_power)],
        )
        opt_series = IntervalSeries(
            interval_minutes,
            [(ts, float(p)) for ts, p in zip(timestamps, optimized_power)],
        )
        report = compare_costs(tariff, base_series, opt_series, month)
        results.append(MonthlySavings(month=month, report=report, intervals=decisions))
    return results


_TEMPERATURE_COLUMNS = {"t_wb_f", "t_cws_f", "t_cwr_f"}
_POWER_COLUMNS = {"p_chiller_kw", "p_fan_kw", "p_pump_kw"}
_REQUIRED_COLUMNS = ("timestamp", "t_wb_f", "q_load_tons", "t_cws_f", "n_fans")


@dataclass
class IngestReport:
    total_rows: int = 0
    accepted_rows: int = 0
    rejected: list[str] = field(default_factory=list)


def _convert(value: float, column: str, unit: str | None) -> float:
    if unit is None:
        return value
    unit = unit.lower()
    if column in _TEMPERATURE_COLUMNS:
        if unit == "f":
            return value
        if unit == "c":
            return value * 9.0 / 5.0 + 32.0
    if column in _POWER_COLUMNS:
        if unit == "kw":
            return value
        if unit == "w":
            return value / 1000.0
    if column == "q_load_tons" or column == "q_rej_tons":
        if unit == "tons":
            return value
        if unit == "kw":
            return value / 3.517
    raise SchemaError(f"unsupported unit {unit!r} for column {column}")


def ingest_measured(
    path: str, mapping: dict, max_reject_fraction: float = 0.05
) -> tuple[Dataset, IngestReport]:
    """Load measured interval data via an explicit column mapping.

    ``mapping`` maps dataset column names to either a source header name or
    ``{"column": name, "unit": u}`` for unit coercion (temperatures f/c,
    powers kw/w, loads tons/kw). Rows that fail to parse or violate the
    measured-record invariants are dropped into a line-numbered report;
    more than ``max_reject_fraction`` unparseable rows fails the ingest.
    """
    for required in _REQUIRED_COLUMNS:
        if required not in mapping:
            raise SchemaError(f"mapping is missing required column {required!r}")

    spec = {}
    for column, entry in mapping.items():
        if isinstance(entry, str):
            spec[column] = (entry, None)
        elif isinstance(entry, dict) and "column" in entry:
            spec[column] = (entry["column"], entry.get("unit"))
        else:
            raise SchemaError(f"bad mapping entry for {column!r}: {entry!r}")

    report = IngestReport()
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise SchemaError(f"{path} has no header row")
        header = set(reader.fieldnames)
        for column, (source, _) in spec.items():
            if source not in header:
                raise SchemaError(
                    f"mapped source column {source!r} for {column} not in {path}"
                )
        for line_no, row in enumerate(reader, start=2):
            report.total_rows += 1

            def grab(column: str, default=None):
                if column not in spec:
                    return default
                source, unit = spec[column]
                raw = row[source]
                if column in ("timestamp", "source"):
                    return raw
                return _convert(float(raw), column, unit)

            try:
                p_chiller = grab("p_chiller_kw", 0.0)
                q_load = grab("q_load_tons")
                t_cws = grab("t_cws_f")
                record = SampleRecord(
                    timestamp=grab("timestamp"),
                    t_wb=grab("t_wb_f"),
                    q_load=q_load,
                    t_cws=t_cws,
                    t_cwr=grab("t_cwr_f", t_cws),
                    n_fans=int(grab("n_fans")),
                    p_chiller=p_chiller,
                    p_fan=grab("p_fan_kw", 0.0),
                    p_pump=grab("p_pump_kw", 0.0),
                    q_rej=grab("q_rej_tons", q_load + p_chiller / 3.517),
                    source=grab("source", "measured"),
                )
                record.validate()
            except (ValueError, DomainError, SchemaError) as exc:
                report.rejected.append(f"line {line_no}: {exc}")
                continue
            records.append(record)
            report.accepted_rows += 1

    if report.total_rows and len(report.rejected) > max_reject_fraction * report.total_rows:
        raise IngestionError(
            f"{len(report.rejected)} of {report.total_rows} rows rejected "
            f"(threshold {max_reject_fraction:.0%}); first: "
            f"{report.rejected[0] if report.rejected else 'n/a'}"
        )
    dataset = Dataset(records=records, provenance=f"ingested from {path}")
    return dataset, report


def simulate_measured_month(
    plant: PlantConfig,
    month: str,
    seed: int = 0,
    interval_minutes: int = 15,
    policy=None,
) -> Dataset:
    """Synthesize a month of 15-minute 'measured' data from the simulator.

    Used by tests and demos in place of a real building's meter trend. The
    operating policy defaults to a plausibly suboptimal manual one.
    """
    from cwloop.plant import SettingsPolicy, simulate_point

    if policy is None:
        policy = SettingsPolicy(mode="staged", wetbulb_offset=4.0)
    year, mon = (int(v) for v in month.split("-"))
    start = datetime(year, mon, 1)
    end = datetime(year + 1, 1, 1) if mon == 12 else datetime(year, mon + 1, 1)
    rng = np.random.default_rng(seed)
    records = []
    ts = start
    while ts < end:
        hour_angle = 2.0 * math.pi * (ts.hour + ts.minute / 60.0 - 15.0) / 24.0
        t_wb = 62.0 + 8.0 * math.cos(hour_angle) * 0.5 + 6.0 * math.sin(
            2.0 * math.pi * ts.timetuple().tm_yday / 365.0
        ) + float(rng.normal(0.0, 1.0))
        t_wb = min(max(t_wb, 50.0), 78.0)
        occupied = ts.weekday() < 5 and 7 <= ts.hour < 19
        q_load = (
            (900.0 if occupied else 350.0)
            + 25.0 * max(t_wb - 58.0, 0.0)
            + float(rng.normal(0.0, 50.0))
        )
        q_load = min(max(q_load, 200.0), 0.9 * plant.total_capacity)
        setpoint, n_fans = policy.settings(plant, t_wb, q_load)
        state = simulate_point(plant, t_wb, q_load, setpoint, n_fans)
        records.append(
            SampleRecord.from_state(ts.isoformat(), state, source="measured")
        )
        ts += timedelta(minutes=interval_minutes)
    return Dataset(records=records, provenance=f"synthetic measured month {month}")
