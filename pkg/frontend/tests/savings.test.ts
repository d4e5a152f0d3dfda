import { describe, expect, it } from "vitest";

import { Store } from "../src/state.js";
import { savingsReport } from "../src/views.js";
import { fixtures } from "./fixtures.js";

describe("monthly savings report", () => {
  it("renders the report numerics straight from the payload", () => {
    const job = fixtures.savingsDone();
    const store = new Store();
    store.applySavings(job);
    const view = savingsReport(store.state);
    const report = job.result![0].report;

    expect(view.status).toBe("ready");
    expect(view.selected).toBe(report.month);
    expect(view.kwhSaved?.value).toBe(report.kwh_saved);
    expect(view.energyDollars?.value).toBe(report.kwh_dollar_saved);
    expect(view.demandDollars?.value).toBe(report.demand_dollar_saved);
    expect(view.totalDollars?.value).toBe(report.total_saved);
    expect(view.percent?.value).toBe(report.percent_saved);
    expect(view.baselineTotal?.value).toBe(report.baseline_total);
    expect(view.optimizedTotal?.value).toBe(report.optimized_total);
  });

  it("energy and demand line items reconcile with the served totals", () => {
    const report = fixtures.savingsDone().result![0].report;
    // the served split adds up; the UI never recomputes it
    expect(report.kwh_dollar_saved + report.demand_dollar_saved).toBeCloseTo(
      report.total_saved,
      6,
    );
    expect(report.optimized_total).toBeLessThanOrEqual(report.baseline_total);
  });

  it("shows a progress state while the job runs", () => {
    const store = new Store();
    store.applySavings(fixtures.savingsRunning());
    const view = savingsReport(store.state);
    expect(view.status).toBe("running");
    expect(view.totalDollars).toBeNull();
  });

  it("shows the failure detail when the job fails", () => {
    const store = new Store();
    store.applySavings(fixtures.savingsFailed());
    const view = savingsReport(store.state);
    expect(view.status).toBe("failed");
    expect(view.error).toContain("SchemaError");
  });

  it("a month with no data is an explicit empty state, not zeros", () => {
    const store = new Store();
    store.applySavings(fixtures.savingsDone());
    store.selectMonth("2020-01");
    const view = savingsReport(store.state);
    expect(view.status).toBe("no-data");
    expect(view.totalDollars).toBeNull();
    expect(view.kwhSaved).toBeNull();
  });

  it("a zero-savings month renders as all zeros, not an empty state", () => {
    const job = fixtures.savingsDone();
    const zeroed = {
      ...job,
      result: job.result!.map((m) => ({
        ...m,
        report: {
          ...m.report,
          kwh_saved: 0,
          kwh_dollar_saved: 0,
          demand_dollar_saved: 0,
          total_saved: 0,
          percent_saved: 0,
          optimized_total: m.report.baseline_total,
        },
      })),
    };
    const store = new Store();
    store.applySavings(zeroed);
    const view = savingsReport(store.state);
    expect(view.status).toBe("ready");
    expect(view.totalDollars?.value).toBe(0);
    expect(view.kwhSaved?.value).toBe(0);
    expect(view.percent?.value).toBe(0);
  });
});
