/** API payload shapes, mirrored 1:1 from the /v1 JSON endpoints. */

export interface HealthResponse {
  status: string;
  bundle_fingerprint: string;
}

export interface CurrentSettings {
  t_cws_f: number;
  n_fans: number;
}

export interface AdviseRequest {
  q_load_tons: number;
  t_wb_f: number;
  current?: CurrentSettings;
  timestamp?: string;
}

export interface BaselineDelta {
  power_kw: number;
  cost_rate_per_h: number | null;
  current_t_cws_f: number;
  current_n_fans: number;
  current_effective_t_cws_f: number;
  current_power_kw: number;
}

export interface AdviseResponse {
  inputs: { q_load_tons: number; t_wb_f: number; timestamp: string | null };
  t_cws_opt_f: number;
  n_fans_opt: number;
  predicted_power_kw: number;
  predicted_cost_rate_per_h: number | null;
  feasible: boolean;
  baseline_delta: BaselineDelta | null;
  bundle_fingerprint: string;
  computed_at: string;
  warnings: string[];
  trace_length: number;
}

export interface WhatIfRequest {
  q_load_tons: number;
  t_wb_f: number;
  t_cws_f: number;
  n_fans: number;
  timestamp?: string;
}

export interface WhatIfResponse {
  p_chiller_kw: number;
  q_rej_tons: number;
  p_fan_kw: number;
  p_pump_kw: number;
  total_power_kw: number;
  cost_rate_per_h: number | null;
  warnings: string[];
  bundle_fingerprint: string;
}

export interface TableCell {
  q_load: number;
  t_wb: number;
  t_cws_opt: number;
  n_fans_opt: number;
  predicted_power_kw: number;
  feasible: boolean;
}

export interface TableResponse {
  q_load_grid: number[];
  t_wb_grid: number[];
  context: Record<string, unknown>;
  cells: TableCell[][];
}

export interface SavingsReport {
  month: string;
  kwh_saved: number;
  kwh_dollar_saved: number;
  demand_dollar_saved: number;
  total_saved: number;
  percent_saved: number;
  baseline_total: number;
  optimized_total: number;
}

export interface SavingsMonth {
  month: string;
  report: SavingsReport;
  n_intervals: number;
}

export interface SavingsJob {
  status: "running" | "done" | "failed";
  result?: SavingsMonth[];
  error?: string;
}

export interface ApiErrorBody {
  errors: { field: string; message: string }[];
}

/** Fan stages the plant supports; the selector never offers anything else. */
export const FAN_STAGES = [2, 4, 6, 8] as const;
export type FanStage = (typeof FAN_STAGES)[number];
