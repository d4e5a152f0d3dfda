"""Time-of-use demand tariff engine.

A schedule is a set of labeled periods (weekday set x time-of-day window
x months) that must partition every minute of every billing month exactly
once, with an energy rate ($/kWh) and a demand rate ($/kW-month) per
label plus a fixed monthly charge. Bills are computed from an interval
power series: energy per period is the kWh sum times the rate; demand per
period is the single highest interval power times the rate (no ratchets,
no rolling windows). Money is handled in Decimal with half-up rounding to
cents applied once per line item, so bill totals reconstruct exactly.

Conventions, documented for reproducibility:

* time windows are half-open [start, end) in local wall-clock time, so a
  boundary instant belongs to the following period;
* naive timestamps are interpreted in the schedule's IANA zone; aware
  timestamps are converted to it; billing arithmetic then runs on the
  local wall clock;
* rate values shipped with this package are synthetic placeholders, not
  any utility's actual tariff.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from decimal import Decimal, ROUND_HALF_UP
from zoneinfo import ZoneInfo

from cwloop.errors import (
    AlignmentError,
    CoverageError,
    ScheduleGapError,
    SchemaError,
)

TARIFF_SCHEMA_VERSION = 1

_CENT = Decimal("0.01")
_MINUTES_PER_DAY = 1440
ALL_MONTHS = tuple(range(1, 13))
ALL_WEEKDAYS = tuple(range(7))  # Monday=0 .. Sunday=6


def round_cents(amount: float | Decimal) -> Decimal:
    if not isinstance(amount, Decimal):
        amount = Decimal(repr(float(amount)))
    return amount.quantize(_CENT, rounding=ROUND_HALF_UP)


def _parse_minutes(text: str) -> int:
    """'HH:MM' to minute-of-day; '24:00' is allowed as an end marker."""
    try:
        hours, minutes = text.split(":")
        value = int(hours) * 60 + int(minutes)
    except (ValueError, AttributeError):
        raise SchemaError(f"bad time of day {text!r}, expected HH:MM") from None
    if not 0 <= value <= _MINUTES_PER_DAY:
        raise SchemaError(f"time of day {text!r} out of range")
    return value


def _format_minutes(value: int) -> str:
    return f"{value // 60:02d}:{value % 60:02d}"


@dataclass(frozen=True)
class TariffPeriod:
    label: str
    weekdays: tuple[int, ...] = ALL_WEEKDAYS
    start_minute: int = 0
    end_minute: int = _MINUTES_PER_DAY
    months: tuple[int, ...] = ALL_MONTHS

    def windows(self) -> list[tuple[int, int]]:
        """Half-open minute windows; a start past the end wraps midnight."""
        if self.start_minute == self.end_minute:
            raise SchemaError(
                f"period {self.label!r} has an empty time window "
                f"({_format_minutes(self.start_minute)})"
            )
        if self.start_minute < self.end_minute:
            return [(self.start_minute, self.end_minute)]
        return [(self.start_minute, _MINUTES_PER_DAY), (0, self.end_minute)]


@dataclass
class TariffSchedule:
    name: str
    periods: list[TariffPeriod]
    energy_rates: dict[str, float]
    demand_rates: dict[str, float]
    fixed_monthly_charge: float = 0.0
    timezone: str = "America/New_York"
    schema_version: int = TARIFF_SCHEMA_VERSION
    _lookup: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        ZoneInfo(self.timezone)  # raises on unknown zone names
        labels = {p.label for p in self.periods}
        for label in labels:
            if label not in self.energy_rates or label not in self.demand_rates:
                raise SchemaError(f"period {label!r} is missing a rate entry")
        for mapping in (self.energy_rates, self.demand_rates):
            for label, rate in mapping.items():
                if rate < 0:
                    raise SchemaError(f"negative rate for period {label!r}: {rate}")
        if self.fixed_monthly_charge < 0:
            raise SchemaError("fixed_monthly_charge must be >= 0")
        self._build_lookup()

    def _build_lookup(self) -> None:
        """Exhaustive minute-resolution partition check per (month, weekday)."""
        for month in ALL_MONTHS:
            for weekday in ALL_WEEKDAYS:
                owner: list[str | None] = [None] * _MINUTES_PER_DAY
                for period in self.periods:
                    if month not in period.months or weekday not in period.weekdays:
                        continue
                    for lo, hi in period.windows():
                        for minute in range(lo, hi):
                            if owner[minute] is not None:
                                raise SchemaError(
                                    f"periods {owner[minute]!r} and {period.label!r} "
                                    f"overlap at month={month} weekday={weekday} "
                                    f"{_format_minutes(minute)}"
                                )
                            owner[minute] = period.label
                gaps = [m for m, label in enumerate(owner) if label is None]
                if gaps:
                    raise SchemaError(
                        f"schedule leaves month={month} weekday={weekday} uncovered "
                        f"from {_format_minutes(gaps[0])} "
                        f"({len(gaps)} minutes total)"
                    )
                self._lookup[(month, weekday)] = owner

    def to_local(self, timestamp: datetime | str) -> datetime:
        if isinstance(timestamp, str):
            try:
                timestamp = datetime.fromisoformat(timestamp)
            except ValueError as exc:
                raise SchemaError(f"bad timestamp {timestamp!r}: {exc}") from exc
        if timestamp.tzinfo is not None:
            timestamp = timestamp.astimezone(ZoneInfo(self.timezone)).replace(
                tzinfo=None
            )
        return timestamp


def period_of(schedule: TariffSchedule, timestamp: datetime | str) -> str:
    """The unique period label covering this instant."""
    local = schedule.to_local(timestamp)
    key = (local.month, local.weekday())
    owner = schedule._lookup.get(key)
    if owner is None:
        raise ScheduleGapError(f"no period covers {local.isoformat()}")
    label = owner[local.hour * 60 + local.minute]
    if label is None:
        raise ScheduleGapError(f"no period covers {local.isoformat()}")
    return label


def interval_rate(schedule: TariffSchedule, timestamp: datetime | str) -> float:
    """Energy rate ($/kWh) in force at this instant."""
    return schedule.energy_rates[period_of(schedule, timestamp)]


@dataclass
class IntervalSeries:
    """Uniformly spaced power readings, e.g. a 15-minute demand meter."""

    interval_minutes: int
    points: list[tuple[datetime, float]]

    def __post_init__(self):
        if self.interval_minutes <= 0:
            raise SchemaError(
                f"interval_minutes must be > 0, got {self.interval_minutes}"
            )
        step = timedelta(minutes=self.interval_minutes)
        previous = None
        for ts, power in self.points:
            if power < 0:
                raise SchemaError(f"negative power {power} at {ts.isoformat()}")
            if previous is not None and ts - previous != step:
                raise SchemaError(
                    f"timestamps must be uniformly spaced at {self.interval_minutes} "
                    f"minutes; {previous.isoformat()} -> {ts.isoformat()}"
                )
            previous = ts

    def __len__(self) -> int:
        return len(self.points)

    def slice_month(self, month_start: datetime, month_end: datetime):
        return [
            (ts, power) for ts, power in self.points if month_start <= ts < month_end
        ]

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["timestamp", "power_kw"])
            for ts, power in self.points:
                writer.writerow([ts.isoformat(), repr(power)])

    @classmethod
    def from_csv(cls, path: str, interval_minutes: int | None = None):
        points = []
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != ["timestamp", "power_kw"]:
                raise SchemaError(
                    f"{path} header {header} does not match timestamp,power_kw"
                )
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    points.append((datetime.fromisoformat(row[0]), float(row[1])))
                except (ValueError, IndexError) as exc:
                    raise SchemaError(f"{path}:{line_no}: {exc}") from exc
        if interval_minutes is None:
            if len(points) < 2:
                raise SchemaError(f"{path}: cannot infer interval from <2 points")
            interval_minutes = int(
                (points[1][0] - points[0][0]).total_seconds() // 60
            )
        return cls(interval_minutes=interval_minutes, points=points)


@dataclass
class BillResult:
    month: str
    energy_kwh_per_period: dict[str, float]
    peak_kw_per_period: dict[str, float]
    energy_charge_per_period: dict[str, Decimal]
    demand_charge_per_period: dict[str, Decimal]
    fixed_charge: Decimal
    total: Decimal

    def as_dict(self) -> dict:
        return {
            "month": self.month,
            "energy_kwh_per_period": dict(self.energy_kwh_per_period),
            "peak_kw_per_period": dict(self.peak_kw_per_period),
            "energy_charge_per_period": {
                k: float(v) for k, v in self.energy_charge_per_period.items()
            },
            "demand_charge_per_period": {
                k: float(v) for k, v in self.demand_charge_per_period.items()
            },
            "fixed_charge": float(self.fixed_charge),
            "total": float(self.total),
        }


def _month_bounds(month: str) -> tuple[datetime, datetime]:
    try:
        start = datetime.strptime(month, "%Y-%m")
    except ValueError as exc:
        raise SchemaError(f"month must be YYYY-MM, got {month!r}") from exc
    if start.month == 12:
        end = datetime(start.year + 1, 1, 1)
    else:
        end = datetime(start.year, start.month + 1, 1)
    return start, end


def compute_bill(
    schedule: TariffSchedule, series: IntervalSeries, month: str
) -> BillResult:
    """Bill one calendar month of interval data under the schedule."""
    start, end = _month_bounds(month)
    step = timedelta(minutes=series.interval_minutes)
    points = [
        (schedule.to_local(ts), power)
        for ts, power in series.slice_month(start, end)
    ]

    expected = start
    gaps = []
    have = {ts for ts, _ in points}
    while expected < end:
        if expected not in have:
            gaps.append(expected.isoformat())
        expected += step
    if gaps:
        shown = ", ".join(gaps[:5]) + ("..." if len(gaps) > 5 else "")
        raise CoverageError(
            f"series does not cover {month} at {series.interval_minutes}-minute "
            f"intervals; {len(gaps)} missing ({shown})",
            gaps=gaps,
        )

    hours = series.interval_minutes / 60.0
    energy_kwh: dict[str, float] = {}
    peak_kw: dict[str, float] = {}
    for ts, power in points:
        label = period_of(schedule, ts)
        energy_kwh[label] = energy_kwh.get(label, 0.0) + power * hours
        peak_kw[label] = max(peak_kw.get(label, 0.0), power)

    energy_charges = {
        label: round_cents(kwh * schedule.energy_rates[label])
        for label, kwh in sorted(energy_kwh.items())
    }
    demand_charges = {
        label: round_cents(kw * schedule.demand_rates[label])
        for label, kw in sorted(peak_kw.items())
    }
    fixed = round_cents(schedule.fixed_monthly_charge)
    total = fixed + sum(energy_charges.values(), Decimal("0")) + sum(
        demand_charges.values(), Decimal("0")
    )
    return BillResult(
        month=month,
        energy_kwh_per_period=dict(sorted(energy_kwh.items())),
        peak_kw_per_period=dict(sorted(peak_kw.items())),
        energy_charge_per_period=energy_charges,
        demand_charge_per_period=demand_charges,
        fixed_charge=fixed,
        total=total,
    )


@dataclass
class SavingsReport:
    """Baseline-vs-optimized bill delta, split the way Table-style energy
    savings summaries are usually read: kWh saved, energy dollars saved,
    demand dollars saved, and the total."""

    month: str
    kwh_saved: float
    kwh_dollar_saved: Decimal
    demand_dollar_saved: Decimal
    total_saved: Decimal
    percent_saved: float
    baseline_total: Decimal
    optimized_total: Decimal

    def as_dict(self) -> dict:
        return {
            "month": self.month,
            "kwh_saved": self.kwh_saved,
            "kwh_dollar_saved": float(self.kwh_dollar_saved),
            "demand_dollar_saved": float(self.demand_dollar_saved),
            "total_saved": float(self.total_saved),
            "percent_saved": self.percent_saved,
            "baseline_total": float(self.baseline_total),
            "optimized_total": float(self.optimized_total),
        }


def compare_costs(
    schedule: TariffSchedule,
    baseline: IntervalSeries,
    optimized: IntervalSeries,
    month: str,
) -> SavingsReport:
    """Bill both series and report the saving split by charge type."""
    if baseline.interval_minutes != optimized.interval_minutes or [
        ts for ts, _ in baseline.points
    ] != [ts for ts, _ in optimized.points]:
        raise AlignmentError(
            "baseline and optimized series must share identical timestamps"
        )
    bill_base = compute_bill(schedule, baseline, month)
    bill_opt = compute_bill(schedule, optimized, month)
    kwh_saved = sum(bill_base.energy_kwh_per_period.values()) - sum(
        bill_opt.energy_kwh_per_period.values()
    )
    energy_saved = sum(bill_base.energy_charge_per_period.values(), Decimal("0")) - sum(
        bill_opt.energy_charge_per_period.values(), Decimal("0")
    )
    demand_saved = sum(bill_base.demand_charge_per_period.values(), Decimal("0")) - sum(
        bill_opt.demand_charge_per_period.values(), Decimal("0")
    )
    total_saved = bill_base.total - bill_opt.total
    percent = (
        100.0 * float(total_saved) / float(bill_base.total)
        if bill_base.total != 0
        else 0.0
    )
    return SavingsReport(
        month=month,
        kwh_saved=kwh_saved,
        kwh_dollar_saved=energy_saved,
        demand_dollar_saved=demand_saved,
        total_saved=total_saved,
        percent_saved=percent,
        baseline_total=bill_base.total,
        optimized_total=bill_opt.total,
    )


def example_schedule() -> TariffSchedule:
    """A synthetic weekday-peak ToU demand schedule for demos and tests.

    The rate values are invented; replace them with a real tariff file
    before using bills for anything but relative comparisons.
    """
    return TariffSchedule(
        name="example-tou-demand (synthetic rates)",
        periods=[
            TariffPeriod(
                label="peak",
                weekdays=(0, 1, 2, 3, 4),
                start_minute=8 * 60,
                end_minute=18 * 60,
            ),
            TariffPeriod(
                label="offpeak",
                weekdays=(0, 1, 2, 3, 4),
                start_minute=18 * 60,
                end_minute=8 * 60,
            ),
            TariffPeriod(label="offpeak", weekdays=(5, 6)),
        ],
        energy_rates={"peak": 0.18, "offpeak": 0.09},
        demand_rates={"peak": 28.0, "offpeak": 11.0},
        fixed_monthly_charge=500.0,
    )


def schedule_to_dict(schedule: TariffSchedule) -> dict:
    return {
        "schema_version": schedule.schema_version,
        "name": schedule.name,
        "timezone": schedule.timezone,
        "fixed_monthly_charge": schedule.fixed_monthly_charge,
        "energy_rates": dict(schedule.energy_rates),
        "demand_rates": dict(schedule.demand_rates),
        "periods": [
            {
                "label": p.label,
                "weekdays": list(p.weekdays),
                "start": _format_minutes(p.start_minute),
                "end": _format_minutes(p.end_minute)
                if p.end_minute < _MINUTES_PER_DAY
                else "24:00",
                "months": list(p.months),
            }
            for p in schedule.periods
        ],
    }


def schedule_from_dict(payload: dict) -> TariffSchedule:
    try:
        version = payload["schema_version"]
        if version != TARIFF_SCHEMA_VERSION:
            raise SchemaError(
                f"tariff schema_version {version} not supported "
                f"(expected {TARIFF_SCHEMA_VERSION})"
            )
        periods = [
            TariffPeriod(
                label=entry["label"],
                weekdays=tuple(entry.get("weekdays", ALL_WEEKDAYS)),
                start_minute=_parse_minutes(entry.get("start", "00:00")),
                end_minute=_parse_minutes(entry.get("end", "24:00")),
                months=tuple(entry.get("months", ALL_MONTHS)),
            )
            for entry in payload["periods"]
        ]
        return TariffSchedule(
            name=payload.get("name", "unnamed"),
            periods=periods,
            energy_rates=dict(payload["energy_rates"]),
            demand_rates=dict(payload["demand_rates"]),
            fixed_monthly_charge=float(payload.get("fixed_monthly_charge", 0.0)),
            timezone=payload.get("timezone", "America/New_York"),
            schema_version=version,
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed tariff payload: {exc!r}") from exc


def save_schedule(schedule: TariffSchedule, path: str) -> None:
    with open(path, "w") as f:
        json.dump(schedule_to_dict(schedule), f, indent=2)
        f.write("\n")


def load_schedule(path: str) -> TariffSchedule:
    with open(path) as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"tariff file {path} is not valid JSON: {exc}") from exc
    return schedule_from_dict(payload)
