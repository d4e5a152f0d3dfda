/**
 * UI acceptance: the release criterion for the dashboard, in one place.
 * Runs entirely against recorded API fixtures; no backend required.
 */

import { describe, expect, it } from "vitest";

import { heatmap, layerValue } from "../src/heatmap.js";
import { Store } from "../src/state.js";
import { advisePanel, savingsReport, whatifReadout } from "../src/views.js";
import { fixtures } from "./fixtures.js";

describe("UI acceptance", () => {
  it("every rendered numeric equals its payload field", () => {
    const store = new Store();

    const advise = fixtures.advise();
    store.applyAdvise(advise);
    const panel = advisePanel(store.state);
    expect(panel.tCwsOpt!.value).toBe(advise.t_cws_opt_f);
    expect(panel.nFansOpt!.value).toBe(advise.n_fans_opt);
    expect(panel.predictedPower!.value).toBe(advise.predicted_power_kw);
    expect(panel.deltaPower!.value).toBe(advise.baseline_delta!.power_kw);
    expect(panel.currentPower!.value).toBe(advise.baseline_delta!.current_power_kw);

    const whatif = fixtures.whatifOffOptimum();
    store.applyWhatif(whatif);
    const readout = whatifReadout(store.state);
    expect(readout.chiller!.value).toBe(whatif.p_chiller_kw);
    expect(readout.fan!.value).toBe(whatif.p_fan_kw);
    expect(readout.pump!.value).toBe(whatif.p_pump_kw);
    expect(readout.total!.value).toBe(whatif.total_power_kw);

    const table = fixtures.table();
    for (const layer of ["t_cws_opt", "n_fans_opt", "power"] as const) {
      const grid = heatmap(table, layer);
      grid.rows.forEach((row, i) =>
        row.forEach((cellView, j) =>
          expect(cellView.value).toBe(layerValue(table.cells[i][j], layer)),
        ),
      );
    }

    const job = fixtures.savingsDone();
    store.applySavings(job);
    const savings = savingsReport(store.state);
    const report = job.result![0].report;
    expect(savings.kwhSaved!.value).toBe(report.kwh_saved);
    expect(savings.energyDollars!.value).toBe(report.kwh_dollar_saved);
    expect(savings.demandDollars!.value).toBe(report.demand_dollar_saved);
    expect(savings.totalDollars!.value).toBe(report.total_saved);
    expect(savings.percent!.value).toBe(report.percent_saved);
  });

  it("what-if at the recommended settings shows zero gap", () => {
    const store = new Store();
    store.applyAdvise(fixtures.advise());
    store.applyWhatif(fixtures.whatifAtRecommended());
    expect(whatifReadout(store.state).gapToOptimum!.value).toBe(0);
  });

  it("heatmap cell click pre-fills the what-if explorer", () => {
    const table = fixtures.table();
    const store = new Store();
    store.applyTable(table);
    const cell = table.cells[3][2];
    store.clickCell(cell);
    expect(store.state.whatifDraft).toEqual({
      tCwsF: cell.t_cws_opt,
      nFans: cell.n_fans_opt,
    });
    expect(store.state.conditions.qLoadTons).toBe(cell.q_load);
    expect(store.state.conditions.tWbF).toBe(cell.t_wb);
  });
});
