/** Recorded advisory-service responses; see scripts/record_fixtures.py. */

import { readFileSync } from "node:fs";

import type {
  AdviseResponse,
  ApiErrorBody,
  SavingsJob,
  TableResponse,
  WhatIfResponse,
} from "../src/types.js";

function load<T>(name: string): T {
  const url = new URL(`./fixtures/${name}.json`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export const fixtures = {
  health: () => load<{ status: string; bundle_fingerprint: string }>("health"),
  advise: () => load<AdviseResponse>("advise"),
  adviseNoCurrent: () => load<AdviseResponse>("advise_no_current"),
  adviseExtrapolation: () => load<AdviseResponse>("advise_extrapolation"),
  adviseAtGridPoint: () => load<AdviseResponse>("advise_at_grid_point"),
  whatifAtRecommended: () => load<WhatIfResponse>("whatif_at_recommended"),
  whatifOffOptimum: () => load<WhatIfResponse>("whatif_off_optimum"),
  table: () => load<TableResponse>("table"),
  savingsDone: () => load<SavingsJob>("savings_done"),
  savingsRunning: () => load<SavingsJob>("savings_running"),
  savingsFailed: () => load<SavingsJob>("savings_failed"),
  validationError: () => load<ApiErrorBody>("validation_error"),
};
