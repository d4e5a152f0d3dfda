"""Command-line interface for the condenser water loop toolkit.

One subcommand per pipeline stage: simulate the reference plant, sweep it
into a training set, inspect correlations, train/evaluate/refine the
surrogate bundle, optimize a single operating point, bill interval data,
compare baseline vs optimized costs, build the operator look-up table,
and serve the HTTP advisory API.
"""

from __future__ import annotations

import json
import sys

import click

from cwloop import advisory, datagen, surrogate, tariff as tariff_mod
from cwloop.errors import CwloopError
from cwloop.gbt import GBTHyperparams
from cwloop.mipso import SwarmConfig, grid_oracle, loop_objective, optimize
from cwloop.plant import PlantConfig, SettingsPolicy, load_config, save_config, simulate_year


def _plant(path: str | None) -> PlantConfig:
    return load_config(path) if path else PlantConfig()


@click.group()
@click.version_option(package_name="cwloop")
def main():
    """Condenser water loop optimization toolkit."""


@main.command("init-config")
@click.option("--out", required=True, type=click.Path(), help="Where to write the config.")
def init_config(out):
    """Write the default (synthetic) plant config as a starting point."""
    save_config(PlantConfig(), out)
    click.echo(f"wrote default plant config to {out}")


@main.command("init-tariff")
@click.option("--out", required=True, type=click.Path(), help="Where to write the schedule.")
def init_tariff(out):
    """Write the example ToU demand schedule (synthetic rates) to edit."""
    tariff_mod.save_schedule(tariff_mod.example_schedule(), out)
    click.echo(f"wrote example tariff schedule to {out} (rates are synthetic)")


@main.command("synth-weather")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--year", default=2021, show_default=True)
def synth_weather(out, seed, year):
    """Generate a synthetic hourly weather+load year (NYC-like shape)."""
    series = datagen.synthetic_year(PlantConfig(), seed=seed, year=year)
    datagen.save_weather_csv(series, out)
    click.echo(f"wrote {len(series)} hours to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--weather", "weather_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--setpoint", default=75.0, show_default=True, help="Fixed t_cws setpoint (degF).")
@click.option("--fans", default=8, show_default=True, help="Fixed tower fan count.")
@click.option("--policy", type=click.Choice(["fixed", "staged"]), default="fixed", show_default=True)
def simulate(config_path, weather_path, out, setpoint, fans, policy):
    """Run the physics simulator over an hourly weather/load series."""
    config = _plant(config_path)
    weather = datagen.load_weather_csv(weather_path)
    states = simulate_year(
        config, weather, SettingsPolicy(mode=policy, t_cws_setpoint=setpoint, n_fans=fans)
    )
    records = [
        datagen.SampleRecord.from_state(ts, state) for ts, state in states
    ]
    datagen.Dataset(records, provenance=f"simulate {weather_path}").to_csv(out)
    click.echo(f"wrote {len(records)} rows to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--weather", "weather_path", type=click.Path(exists=True),
              help="Overrides the weather path in the spec file.")
@click.option("--out", required=True, type=click.Path())
@click.option("--no-clean", is_flag=True, help="Keep off-hours and reversed-dT rows.")
def sweep(config_path, spec_path, weather_path, out, no_clean):
    """Run a (setpoint x fans x hours) sweep into a training CSV."""
    config = _plant(config_path)
    with open(spec_path) as f:
        payload = json.load(f)
    spec = datagen.SweepSpec(
        t_cws_values=tuple(payload.get("t_cws_values", [75.0])),
        n_fans_values=tuple(payload.get("n_fans_values", [2, 4, 6, 8])),
        months=tuple(payload.get("months", [5, 6, 7, 8, 9])),
        weather=payload.get("weather"),
    )
    source = weather_path or spec.weather
    if not source:
        raise click.UsageError("no weather file: set --weather or 'weather' in the spec")
    weather = datagen.load_weather_csv(source)
    data = datagen.run_sweep(config, spec, weather)
    if not no_clean:
        data, report = datagen.clean(data)
        click.echo(f"cleaned: {report.drops or 'no drops'}")
    data.to_csv(out)
    click.echo(f"wrote {len(data)} rows to {out}")


@main.group()
def analyze():
    """Dataset analysis commands."""


@analyze.command("corr")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--cols", default="p_fan,t_wb,q_load,p_chiller,t_cws,q_rej",
              show_default=True, help="Comma-separated column names.")
def analyze_corr(data_path, cols):
    """Print the Pearson correlation matrix for the selected columns."""
    data = datagen.Dataset.from_csv(data_path)
    columns = [c.strip() for c in cols.split(",") if c.strip()]
    matrix, names = datagen.correlation_matrix(data, columns)
    width = max(len(n) for n in names) + 2
    click.echo(" " * width + "".join(f"{n:>{width}}" for n in names))
    for name, row in zip(names, matrix):
        click.echo(f"{name:>{width}}" + "".join(f"{v:>{width}.3f}" for v in row))


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--hyper", "hyper_path", type=click.Path(exists=True),
              help="JSON file overriding hyperparameters.")
@click.option("--holdout", default=0.0, show_default=True,
              help="Held-out fraction for reporting (0 trains on everything).")
@click.option("--seed", default=42, show_default=True)
def train(data_path, out, hyper_path, holdout, seed):
    """Train the 6-model surrogate bundle from a sweep CSV."""
    data = datagen.Dataset.from_csv(data_path)
    hyper = GBTHyperparams()
    if hyper_path:
        with open(hyper_path) as f:
            hyper = GBTHyperparams(**json.load(f))
    if holdout > 0:
        train_set, test_set = datagen.split(data, 1.0 - holdout, seed)
    else:
        train_set, test_set = data, None
    bundle = surrogate.train_bundle(train_set, hyper)
    surrogate.save_bundle(bundle, out)
    click.echo(f"trained 6 models on {len(train_set)} rows -> {out}")
    sanity = surrogate.rejection_sanity(bundle)
    click.echo(f"  physical sanity: predicted q_rej >= q_load on {sanity:.1%} of grid")
    if test_set is not None:
        for name, metrics in surrogate.evaluate_bundle(bundle, test_set).items():
            click.echo(
                f"  {name}: cv_rmse {metrics['cv_rmse_percent']:.2f}%  "
                f"mbe {metrics['mbe_percent']:+.3f}%  (n={metrics['n_rows']})"
            )


@main.command("eval")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--bins/--no-bins", default=False, help="Show per-wet-bulb-bin differences.")
def eval_cmd(bundle_path, data_path, bins):
    """Evaluate a bundle's models against a dataset."""
    bundle = surrogate.load_bundle(bundle_path)
    data = datagen.Dataset.from_csv(data_path)
    for name, metrics in surrogate.evaluate_bundle(bundle, data).items():
        click.echo(
            f"{name}: rmse {metrics['rmse']:.3f}  "
            f"mbe {metrics['mbe_percent']:+.3f}%  "
            f"cv_rmse {metrics['cv_rmse_percent']:.2f}%  (n={metrics['n_rows']})"
        )
        if bins:
            for wb, pct in metrics["by_wetbulb_bin"].items():
                click.echo(f"    t_wb {wb}F: avg diff {pct:.2f}%")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--measured", "measured_path", required=True, type=click.Path(exists=True))
@click.option("--weight", default=10.0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def refine(bundle_path, measured_path, weight, out):
    """Refine a bundle with weighted measured data (kept only if it helps)."""
    bundle = surrogate.load_bundle(bundle_path)
    measured = datagen.Dataset.from_csv(measured_path)
    refined, report = surrogate.refine(bundle, measured, weight)
    surrogate.save_bundle(refined, out)
    click.echo(f"accepted: {report.accepted}")
    for name, entry in report.per_model.items():
        click.echo(
            f"  {name}: mbe {entry['old_mbe_percent']:+.3f}% -> "
            f"{entry['new_mbe_percent']:+.3f}%"
        )
    if report.warning:
        click.echo(f"warning: {report.warning}")


@main.command("optimize")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--plant", "plant_path", type=click.Path(exists=True))
@click.option("--load", "q_load", required=True, type=float, help="Cooling load (tons).")
@click.option("--twb", "t_wb", required=True, type=float, help="Wet bulb (degF).")
@click.option("--tariff", "tariff_path", type=click.Path(exists=True))
@click.option("--at", "timestamp", help="Timestamp for cost mode (ISO-8601).")
@click.option("--baseline", help="Current settings as 't_cws,n_fans'.")
@click.option("--seed", default=0, show_default=True)
@click.option("--deterministic", is_flag=True, help="Lattice init, no random multipliers.")
@click.option("--oracle", is_flag=True, help="Also run the 0.1 degF exhaustive grid oracle.")
def optimize_cmd(bundle_path, plant_path, q_load, t_wb, tariff_path, timestamp,
                 baseline, seed, deterministic, oracle):
    """Find the minimum-power (t_cws, n_fans) for one operating point."""
    bundle = surrogate.load_bundle(bundle_path)
    plant = _plant(plant_path)
    schedule = tariff_mod.load_schedule(tariff_path) if tariff_path else None
    mode = "cost" if schedule and timestamp else "power"
    objective = loop_objective(
        bundle, plant, q_load, t_wb, mode=mode, tariff=schedule, timestamp=timestamp
    )
    config = SwarmConfig(seed=seed, stochastic=not deterministic)
    base = None
    if baseline:
        t_str, n_str = baseline.split(",")
        base = (float(t_str), int(n_str))
    cand, trace = optimize(objective, config, baseline=base)
    unit = "$/h" if mode == "cost" else "kW"
    click.echo(f"t_cws_opt: {cand.t_cws:.2f} F")
    click.echo(f"n_fans_opt: {cand.n_fans}")
    click.echo(f"objective: {cand.objective_value:.3f} {unit}")
    click.echo(f"feasible: {cand.feasible}")
    click.echo(f"trace length: {len(trace.values)}")
    if oracle:
        best = grid_oracle(objective, config.t_cws_bounds, 0.1, config.fan_strata)
        gap = cand.objective_value - best.objective_value
        click.echo(
            f"oracle: t={best.t_cws:.1f} n={best.n_fans} "
            f"value={best.objective_value:.3f} (gap {gap:+.4f})"
        )


@main.command()
@click.option("--tariff", "tariff_path", required=True, type=click.Path(exists=True))
@click.option("--series", "series_path", required=True, type=click.Path(exists=True))
@click.option("--month", required=True, help="Billing month, YYYY-MM.")
def bill(tariff_path, series_path, month):
    """Bill one month of interval power data."""
    schedule = tariff_mod.load_schedule(tariff_path)
    series = tariff_mod.IntervalSeries.from_csv(series_path)
    result = tariff_mod.compute_bill(schedule, series, month)
    click.echo(json.dumps(result.as_dict(), indent=2))


@main.command()
@click.option("--tariff", "tariff_path", required=True, type=click.Path(exists=True))
@click.option("--baseline", "baseline_path", required=True, type=click.Path(exists=True))
@click.option("--optimized", "optimized_path", required=True, type=click.Path(exists=True))
@click.option("--month", required=True, help="Billing month, YYYY-MM.")
def savings(tariff_path, baseline_path, optimized_path, month):
    """Compare two billed interval series (baseline vs optimized)."""
    schedule = tariff_mod.load_schedule(tariff_path)
    base = tariff_mod.IntervalSeries.from_csv(baseline_path)
    opt = tariff_mod.IntervalSeries.from_csv(optimized_path)
    report = tariff_mod.compare_costs(schedule, base, opt, month)
    click.echo(json.dumps(report.as_dict(), indent=2))


@main.command("savings-pipeline")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--plant", "plant_path", type=click.Path(exists=True))
@click.option("--measured", "measured_path", required=True, type=click.Path(exists=True))
@click.option("--tariff", "tariff_path", required=True, type=click.Path(exists=True))
@click.option("--months", required=True, help="Comma-separated YYYY-MM months.")
@click.option("--detail-out", type=click.Path(), help="Write per-interval decisions CSV.")
def savings_pipeline_cmd(bundle_path, plant_path, measured_path, tariff_path, months, detail_out):
    """Measured-vs-optimized monthly savings through the surrogate."""
    bundle = surrogate.load_bundle(bundle_path)
    plant = _plant(plant_path)
    measured = datagen.Dataset.from_csv(measured_path)
    schedule = tariff_mod.load_schedule(tariff_path)
    month_list = [m.strip() for m in months.split(",") if m.strip()]
    results = advisory.savings_pipeline(bundle, plant, measured, schedule, month_list)
    for monthly in results:
        click.echo(json.dumps(monthly.report.as_dict(), indent=2))
    if detail_out:
        import csv as _csv

        with open(detail_out, "w", newline="") as f:
            writer = _csv.writer(f)
            writer.writerow(
                ["timestamp", "q_load_tons", "t_wb_f", "measured_t_cws_f",
                 "measured_n_fans", "advised_t_cws_f", "advised_n_fans",
                 "baseline_power_kw", "optimized_power_kw"]
            )
            for monthly in results:
                for d in monthly.intervals:
                    writer.writerow(
                        [d.timestamp, d.q_load, d.t_wb, d.measured_t_cws,
                         d.measured_n_fans, d.advised_t_cws, d.advised_n_fans,
                         round(d.baseline_power_kw, 3), round(d.optimized_power_kw, 3)]
                    )
        click.echo(f"wrote interval detail to {detail_out}")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--plant", "plant_path", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--csv-out", type=click.Path(), help="Also export one-row-per-cell CSV.")
@click.option("--q-grid", help="Load grid as 'start:stop:step' (tons).")
@click.option("--wb-grid", help="Wet-bulb grid as 'start:stop:step' (degF).")
def table(bundle_path, plant_path, out, csv_out, q_grid, wb_grid):
    """Build the operator look-up table over a load x wet-bulb grid."""
    def parse_grid(text, fallback):
        if not text:
            return fallback
        start, stop, step = (float(v) for v in text.split(":"))
        values, v = [], start
        while v <= stop + 1e-9:
            values.append(round(v, 6))
            v += step
        return tuple(values)

    bundle = surrogate.load_bundle(bundle_path)
    plant = _plant(plant_path)
    lookup = advisory.build_table(
        bundle, plant,
        parse_grid(q_grid, advisory.DEFAULT_Q_LOAD_GRID),
        parse_grid(wb_grid, advisory.DEFAULT_T_WB_GRID),
    )
    with open(out, "w") as f:
        json.dump(lookup.to_dict(), f)
        f.write("\n")
    click.echo(
        f"built {len(lookup.q_load_grid)}x{len(lookup.t_wb_grid)} table -> {out}"
    )
    if csv_out:
        lookup.to_csv(csv_out)
        click.echo(f"wrote cell CSV to {csv_out}")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--plant", "plant_path", type=click.Path(exists=True))
@click.option("--load", "q_load", required=True, type=float)
@click.option("--twb", "t_wb", required=True, type=float)
@click.option("--current", help="Current settings as 't_cws,n_fans'.")
@click.option("--tariff", "tariff_path", type=click.Path(exists=True))
@click.option("--at", "timestamp", help="Timestamp for cost mode (ISO-8601).")
def advise(bundle_path, plant_path, q_load, t_wb, current, tariff_path, timestamp):
    """Live recommendation for one operating point."""
    bundle = surrogate.load_bundle(bundle_path)
    plant = _plant(plant_path)
    schedule = tariff_mod.load_schedule(tariff_path) if tariff_path else None
    cur = None
    if current:
        t_str, n_str = current.split(",")
        cur = (float(t_str), int(n_str))
    rec = advisory.advise(
        bundle, plant, q_load, t_wb, current=cur, tariff=schedule, timestamp=timestamp
    )
    click.echo(json.dumps(rec.as_dict(), indent=2))


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--mapping", "mapping_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def ingest(data_path, mapping_path, out):
    """Ingest external measured CSV data via a column mapping file."""
    with open(mapping_path) as f:
        mapping = json.load(f)
    dataset, report = advisory.ingest_measured(data_path, mapping)
    dataset.to_csv(out)
    click.echo(f"accepted {report.accepted_rows}/{report.total_rows} rows -> {out}")
    for line in report.rejected[:10]:
        click.echo(f"  rejected {line}")


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--plant", "plant_path", type=click.Path(exists=True))
@click.option("--tariff", "tariff_path", type=click.Path(exists=True))
@click.option("--table", "table_path", type=click.Path(exists=True))
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--token", help="Require this shared token on API requests.")
def serve(bundle_path, plant_path, tariff_path, table_path, port, host, token):
    """Run the HTTP advisory service."""
    import uvicorn

    from cwloop.service import create_app_from_paths

    app = create_app_from_paths(bundle_path, plant_path, tariff_path, table_path, token)
    uvicorn.run(app, host=host, port=port)


def run():
    try:
        main(standalone_mode=True)
    except CwloopError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
