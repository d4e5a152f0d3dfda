/**
 * Pure view-model builders: payload in, display structure out.
 *
 * Every numeric carries the raw payload value next to its display text so
 * the contract tests can assert rendered == served with no tolerance. The
 * one derived figure on the dashboard is the what-if gap to optimum,
 * which is the difference of two served totals, never a local model.
 */

import type { DashboardState } from "./state.js";
import type { SavingsMonth } from "./types.js";

export interface Numeric {
  value: number;
  text: string;
  unit: string;
}

function numeric(value: number, unit: string, digits = 1): Numeric {
  return { value, text: value.toFixed(digits), unit };
}

export interface AdvisePanelView {
  available: boolean;
  stale: boolean;
  tCwsOpt: Numeric | null;
  nFansOpt: Numeric | null;
  predictedPower: Numeric | null;
  predictedCostRate: Numeric | null;
  deltaPower: Numeric | null;
  currentPower: Numeric | null;
  warnings: string[];
  fingerprint: string | null;
  computedAt: string | null;
}

export function advisePanel(state: DashboardState): AdvisePanelView {
  const rec = state.recommendation;
  if (!rec) {
    return {
      available: false,
      stale: false,
      tCwsOpt: null,
      nFansOpt: null,
      predictedPower: null,
      predictedCostRate: null,
      deltaPower: null,
      currentPower: null,
      warnings: [],
      fingerprint: null,
      computedAt: null,
    };
  }
  return {
    available: true,
    stale: state.recommendationStale,
    tCwsOpt: numeric(rec.t_cws_opt_f, "°F"),
    nFansOpt: numeric(rec.n_fans_opt, "fans", 0),
    predictedPower: numeric(rec.predicted_power_kw, "kW"),
    predictedCostRate:
      rec.predicted_cost_rate_per_h === null
        ? null
        : numeric(rec.predicted_cost_rate_per_h, "$/h", 2),
    deltaPower:
      rec.baseline_delta === null
        ? null
        : numeric(rec.baseline_delta.power_kw, "kW"),
    currentPower:
      rec.baseline_delta === null
        ? null
        : numeric(rec.baseline_delta.current_power_kw, "kW"),
    warnings: rec.warnings,
    fingerprint: rec.bundle_fingerprint,
    computedAt: rec.computed_at,
  };
}

export interface WhatIfView {
  available: boolean;
  chiller: Numeric | null;
  fan: Numeric | null;
  pump: Numeric | null;
  total: Numeric | null;
  costRate: Numeric | null;
  /** total_power_kw minus the recommendation's predicted_power_kw; zero
   * when exploring exactly the recommended settings. */
  gapToOptimum: Numeric | null;
  warnings: string[];
}

export function whatifReadout(state: DashboardState): WhatIfView {
  const result = state.whatif;
  if (!result) {
    return {
      available: false,
      chiller: null,
      fan: null,
      pump: null,
      total: null,
      costRate: null,
      gapToOptimum: null,
      warnings: [],
    };
  }
  const rec = state.recommendation;
  return {
    available: true,
    chiller: numeric(result.p_chiller_kw, "kW"),
    fan: numeric(result.p_fan_kw, "kW"),
    pump: numeric(result.p_pump_kw, "kW"),
    total: numeric(result.total_power_kw, "kW"),
    costRate:
      result.cost_rate_per_h === null
        ? null
        : numeric(result.cost_rate_per_h, "$/h", 2),
    gapToOptimum: rec
      ? numeric(result.total_power_kw - rec.predicted_power_kw, "kW")
      : null,
    warnings: result.warnings,
  };
}

export interface SavingsView {
  status: "empty" | "running" | "failed" | "no-data" | "ready";
  error: string | null;
  months: string[];
  selected: string | null;
  kwhSaved: Numeric | null;
  energyDollars: Numeric | null;
  demandDollars: Numeric | null;
  totalDollars: Numeric | null;
  percent: Numeric | null;
  baselineTotal: Numeric | null;
  optimizedTotal: Numeric | null;
}

const EMPTY_SAVINGS: Omit<SavingsView, "status" | "error"> = {
  months: [],
  selected: null,
  kwhSaved: null,
  energyDollars: null,
  demandDollars: null,
  totalDollars: null,
  percent: null,
  baselineTotal: null,
  optimizedTotal: null,
};

export function savingsReport(state: DashboardState): SavingsView {
  const job = state.savings;
  if (!job) {
    return { status: "empty", error: null, ...EMPTY_SAVINGS };
  }
  if (job.status === "running") {
    return { status: "running", error: null, ...EMPTY_SAVINGS };
  }
  if (job.status === "failed") {
    return { status: "failed", error: job.error ?? "savings job failed", ...EMPTY_SAVINGS };
  }
  const months = (job.result ?? []).map((m) => m.month);
  const chosen: SavingsMonth | undefined = (job.result ?? []).find(
    (m) => m.month === state.selectedMonth,
  );
  if (!chosen) {
    // month with no data is an explicit empty state, never a zero report
    return { status: "no-data", error: null, ...EMPTY_SAVINGS, months };
  }
  const report = chosen.report;
  return {
    status: "ready",
    error: null,
    months,
    selected: chosen.month,
    kwhSaved: numeric(report.kwh_saved, "kWh"),
    energyDollars: numeric(report.kwh_dollar_saved, "$", 2),
    demandDollars: numeric(report.demand_dollar_saved, "$", 2),
    totalDollars: numeric(report.total_saved, "$", 2),
    percent: numeric(report.percent_saved, "%"),
    baselineTotal: numeric(report.baseline_total, "$", 2),
    optimizedTotal: numeric(report.optimized_total, "$", 2),
  };
}
