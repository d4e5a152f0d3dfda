"""Tariff schedule validation, billing arithmetic, and savings comparison."""

from datetime import datetime, timedelta
from decimal import Decimal

import pytest

from cwloop import tariff
from cwloop.errors import AlignmentError, CoverageError, SchemaError
from cwloop.tariff import (
    IntervalSeries,
    TariffPeriod,
    TariffSchedule,
    compare_costs,
    compute_bill,
    example_schedule,
    period_of,
)


def flat_schedule(energy=0.10, demand=10.0, fixed=0.0):
    return TariffSchedule(
        name="flat",
        periods=[TariffPeriod(label="all")],
        energy_rates={"all": energy},
        demand_rates={"all": demand},
        fixed_monthly_charge=fixed,
    )


def month_series(month_start, power=0.0, interval=15, spikes=None):
    """Full-coverage series for the month at a constant power, plus spikes."""
    if month_start.month == 12:
        end = datetime(month_start.year + 1, 1, 1)
    else:
        end = datetime(month_start.year, month_start.month + 1, 1)
    points = []
    ts = month_start
    while ts < end:
        points.append((ts, power))
        ts += timedelta(minutes=interval)
    if spikes:
        lookup = {ts: i for i, (ts, _) in enumerate(points)}
        for ts, value in spikes.items():
            points[lookup[ts]] = (ts, value)
    return IntervalSeries(interval, points)


class TestPeriodOf:
    def test_single_period_covers_everything(self):
        schedule = flat_schedule()
        assert period_of(schedule, "2021-06-15T03:12:00") == "all"
        assert period_of(schedule, "2021-12-31T23:59:00") == "all"

    def test_weekday_peak_window(self):
        schedule = example_schedule()
        assert period_of(schedule, "2021-06-02T12:00:00") == "peak"      # Wednesday
        assert period_of(schedule, "2021-06-05T12:00:00") == "offpeak"   # Saturday
        assert period_of(schedule, "2021-06-02T03:00:00") == "offpeak"

    def test_boundary_belongs_to_following_period(self):
        schedule = example_schedule()
        assert period_of(schedule, "2021-06-02T17:59:59") == "peak"
        assert period_of(schedule, "2021-06-02T18:00:00") == "offpeak"
        assert period_of(schedule, "2021-06-02T08:00:00") == "peak"
        assert period_of(schedule, "2021-06-02T07:59:59") == "offpeak"

    def test_aware_timestamp_converted(self):
        schedule = example_schedule()
        # 16:00 UTC in June is 12:00 in New York
        assert period_of(schedule, "2021-06-02T16:00:00+00:00") == "peak"


class TestScheduleValidation:
    def test_gap_rejected(self):
        with pytest.raises(SchemaError) as err:
            TariffSchedule(
                name="gappy",
                periods=[TariffPeriod(label="only", weekdays=(0, 1, 2, 3, 4))],
                energy_rates={"only": 0.1},
                demand_rates={"only": 1.0},
            )
        assert "uncovered" in str(err.value)

    def test_overlap_rejected(self):
        with pytest.raises(SchemaError) as err:
            TariffSchedule(
                name="overlappy",
                periods=[
                    TariffPeriod(label="a"),
                    TariffPeriod(label="b", start_minute=600, end_minute=660),
                ],
                energy_rates={"a": 0.1, "b": 0.1},
                demand_rates={"a": 1.0, "b": 1.0},
            )
        assert "overlap" in str(err.value)

    def test_missing_rate_rejected(self):
        with pytest.raises(SchemaError):
            TariffSchedule(
                name="rateless",
                periods=[TariffPeriod(label="all")],
                energy_rates={},
                demand_rates={"all": 1.0},
            )

    def test_negative_rate_rejected(self):
        with pytest.raises(SchemaError):
            flat_schedule(energy=-0.1)

    def test_partition_exhaustive_minute_resolution(self):
        schedule = example_schedule()
        probe = datetime(2021, 6, 7)  # a Monday
        for day in range(7):
            base = probe + timedelta(days=day)
            for minute in range(0, 1440, 7):
                period_of(schedule, base + timedelta(minutes=minute))  # never raises

    def test_unknown_timezone_rejected(self):
        with pytest.raises(Exception):
            TariffSchedule(
                name="zones",
                periods=[TariffPeriod(label="all")],
                energy_rates={"all": 0.1},
                demand_rates={"all": 1.0},
                timezone="Mars/Olympus_Mons",
            )


class TestComputeBill:
    def test_two_interval_fixture(self):
        series = month_series(
            datetime(2021, 6, 1),
            spikes={
                datetime(2021, 6, 1, 0, 0): 100.0,
                datetime(2021, 6, 1, 0, 15): 100.0,
            },
        )
        bill = compute_bill(flat_schedule(), series, "2021-06")
        assert bill.energy_charge_per_period["all"] == Decimal("5.00")
        assert bill.demand_charge_per_period["all"] == Decimal("1000.00")
        assert bill.total == Decimal("1005.00")

    def test_all_zero_month_is_fixed_charge(self):
        series = month_series(datetime(2021, 6, 1))
        bill = compute_bill(flat_schedule(fixed=123.45), series, "2021-06")
        assert bill.total == Decimal("123.45")

    def test_power_scaling_doubles_line_items(self):
        series1 = month_series(datetime(2021, 6, 1), power=50.0)
        series2 = month_series(datetime(2021, 6, 1), power=100.0)
        bill1 = compute_bill(flat_schedule(), series1, "2021-06")
        bill2 = compute_bill(flat_schedule(), series2, "2021-06")
        assert bill2.energy_charge_per_period["all"] == 2 * bill1.energy_charge_per_period["all"]
        assert bill2.demand_charge_per_period["all"] == 2 * bill1.demand_charge_per_period["all"]

    def test_total_reconstructs_from_line_items(self):
        series = month_series(datetime(2021, 7, 1), power=80.0,
                              spikes={datetime(2021, 7, 14, 13, 0): 250.0})
        bill = compute_bill(example_schedule(), series, "2021-07")
        recomputed = (
            bill.fixed_charge
            + sum(bill.energy_charge_per_period.values(), Decimal("0"))
            + sum(bill.demand_charge_per_period.values(), Decimal("0"))
        )
        assert bill.total == recomputed

    def test_demand_is_single_max_interval_per_period(self):
        series = month_series(
            datetime(2021, 6, 1), power=10.0,
            spikes={datetime(2021, 6, 9, 12, 0): 400.0,      # Wednesday noon: peak
                    datetime(2021, 6, 12, 12, 0): 300.0},    # Saturday: offpeak
        )
        bill = compute_bill(example_schedule(), series, "2021-06")
        assert bill.peak_kw_per_period["peak"] == 400.0
        assert bill.peak_kw_per_period["offpeak"] == 300.0

    def test_missing_interval_reported(self):
        series = month_series(datetime(2021, 6, 1), power=10.0)
        broken = IntervalSeries(15, series.points[:-4])
        with pytest.raises(CoverageError) as err:
            compute_bill(flat_schedule(), broken, "2021-06")
        assert err.value.gaps
        assert "missing" in str(err.value)

    def test_half_up_rounding_at_line_items(self):
        # one interval at 1 kW for 15 min at 0.10/kWh = $0.025 -> $0.03
        schedule = flat_schedule(energy=0.10, demand=0.0)
        series = month_series(datetime(2021, 6, 1),
                              spikes={datetime(2021, 6, 1, 0, 0): 1.0})
        bill = compute_bill(schedule, series, "2021-06")
        assert bill.energy_charge_per_period["all"] == Decimal("0.03")

    def test_bad_month_string(self):
        series = month_series(datetime(2021, 6, 1))
        with pytest.raises(SchemaError):
            compute_bill(flat_schedule(), series, "June 2021")


class TestIntervalSeries:
    def test_nonuniform_spacing_rejected(self):
        points = [
            (datetime(2021, 6, 1, 0, 0), 1.0),
            (datetime(2021, 6, 1, 0, 15), 1.0),
            (datetime(2021, 6, 1, 0, 45), 1.0),
        ]
        with pytest.raises(SchemaError):
            IntervalSeries(15, points)

    def test_negative_power_rejected(self):
        with pytest.raises(SchemaError):
            IntervalSeries(15, [(datetime(2021, 6, 1), -1.0)])

    def test_csv_round_trip(self, tmp_path):
        series = IntervalSeries(
            15,
            [(datetime(2021, 6, 1, 0, 0), 12.5), (datetime(2021, 6, 1, 0, 15), 14.25)],
        )
        path = tmp_path / "series.csv"
        series.to_csv(str(path))
        loaded = IntervalSeries.from_csv(str(path))
        assert loaded.interval_minutes == 15
        assert loaded.points == series.points


class TestCompareCosts:
    def test_identical_series_zero_savings(self):
        series = month_series(datetime(2021, 6, 1), power=75.0)
        report = compare_costs(example_schedule(), series, series, "2021-06")
        assert report.total_saved == Decimal("0.00")
        assert report.kwh_saved == 0.0
        assert report.kwh_dollar_saved == Decimal("0.00")
        assert report.demand_dollar_saved == Decimal("0.00")
        assert report.percent_saved == 0.0

    def test_uniform_reduction_arithmetic(self):
        schedule = flat_schedule(energy=0.10, demand=10.0)
        base = month_series(datetime(2021, 6, 1), power=100.0)
        opt = month_series(datetime(2021, 6, 1), power=90.0)
        report = compare_costs(schedule, base, opt, "2021-06")
        hours_in_june = 30 * 24
        assert report.kwh_saved == pytest.approx(10.0 * hours_in_june, rel=1e-12)
        assert report.kwh_dollar_saved == Decimal("720.00")   # 7200 kWh * 0.10
        assert report.demand_dollar_saved == Decimal("100.00")  # 10 kW * $10
        assert report.total_saved == Decimal("820.00")

    def test_misaligned_series_rejected(self):
        base = month_series(datetime(2021, 6, 1), power=10.0)
        shifted = IntervalSeries(
            15, [(ts + timedelta(minutes=15), p) for ts, p in base.points]
        )
        with pytest.raises(AlignmentError):
            compare_costs(flat_schedule(), base, shifted, "2021-06")


class TestScheduleIO:
    def test_round_trip(self, tmp_path):
        schedule = example_schedule()
        path = tmp_path / "tariff.json"
        tariff.save_schedule(schedule, str(path))
        loaded = tariff.load_schedule(str(path))
        assert loaded.energy_rates == schedule.energy_rates
        assert loaded.demand_rates == schedule.demand_rates
        assert loaded.fixed_monthly_charge == schedule.fixed_monthly_charge
        assert len(loaded.periods) == len(schedule.periods)
        stamp = "2021-06-02T12:00:00"
        assert period_of(loaded, stamp) == period_of(schedule, stamp)

    def test_version_mismatch(self, tmp_path):
        payload = tariff.schedule_to_dict(example_schedule())
        payload["schema_version"] = 9
        path = tmp_path / "tariff.json"
        path.write_text(__import__("json").dumps(payload))
        with pytest.raises(SchemaError):
            tariff.load_schedule(str(path))

    def test_interval_rate(self):
        schedule = example_schedule()
        assert tariff.interval_rate(schedule, "2021-06-02T12:00:00") == 0.18
        assert tariff.interval_rate(schedule, "2021-06-05T12:00:00") == 0.09
