/**
 * Dashboard state and its transitions.
 *
 * Pure data in, pure data out: the DOM layer subscribes and re-renders.
 * The store never computes plant numbers itself; it only files away API
 * payloads and the operator's draft inputs.
 */

import type {
  AdviseResponse,
  FanStage,
  SavingsJob,
  TableCell,
  TableResponse,
  WhatIfResponse,
} from "./types.js";

export type HeatmapLayer = "t_cws_opt" | "n_fans_opt" | "power";

export interface Conditions {
  qLoadTons: number;
  tWbF: number;
  tCwsF: number;
  nFans: FanStage;
}

export interface DashboardState {
  conditions: Conditions;
  recommendation: AdviseResponse | null;
  recommendationStale: boolean;
  whatifDraft: { tCwsF: number; nFans: FanStage };
  whatif: WhatIfResponse | null;
  tableLayer: HeatmapLayer;
  table: TableResponse | null;
  savings: SavingsJob | null;
  selectedMonth: string | null;
  connection: "ok" | "down";
  banner: string | null;
  fieldErrors: Record<string, string>;
}

export function initialState(): DashboardState {
  return {
    conditions: { qLoadTons: 1200, tWbF: 68, tCwsF: 78, nFans: 8 },
    recommendation: null,
    recommendationStale: false,
    whatifDraft: { tCwsF: 78, nFans: 8 },
    whatif: null,
    tableLayer: "t_cws_opt",
    table: null,
    savings: null,
    selectedMonth: null,
    connection: "ok",
    banner: null,
    fieldErrors: {},
  };
}

type Listener = (state: DashboardState) => void;

export class Store {
  private listeners: Listener[] = [];

  constructor(public state: DashboardState = initialState()) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  setConditions(conditions: Partial<Conditions>): void {
    this.state = {
      ...this.state,
      conditions: { ...this.state.conditions, ...conditions },
      fieldErrors: {},
    };
    this.emit();
  }

  applyAdvise(response: AdviseResponse): void {
    this.state = {
      ...this.state,
      recommendation: response,
      recommendationStale: false,
      connection: "ok",
      banner: null,
      fieldErrors: {},
    };
    this.emit();
  }

  applyAdviseFailure(message: string, fields: { field: string; message: string }[] = []): void {
    // keep the last good recommendation on screen, flagged stale
    this.state = {
      ...this.state,
      recommendationStale: this.state.recommendation !== null,
      connection: fields.length ? this.state.connection : "down",
      banner: message,
      fieldErrors: Object.fromEntries(fields.map((f) => [f.field, f.message])),
    };
    this.emit();
  }

  setWhatifDraft(draft: Partial<{ tCwsF: number; nFans: FanStage }>): void {
    this.state = {
      ...this.state,
      whatifDraft: { ...this.state.whatifDraft, ...draft },
    };
    this.emit();
  }

  applyWhatif(response: WhatIfResponse): void {
    this.state = { ...this.state, whatif: response, connection: "ok", banner: null };
    this.emit();
  }

  setLayer(layer: HeatmapLayer): void {
    this.state = { ...this.state, tableLayer: layer };
    this.emit();
  }

  applyTable(table: TableResponse): void {
    this.state = { ...this.state, table };
    this.emit();
  }

  /** A heatmap cell click loads that cell's conditions and settings into
   * the what-if explorer, ready to submit. */
  clickCell(cell: TableCell): void {
    this.state = {
      ...this.state,
      conditions: {
        ...this.state.conditions,
        qLoadTons: cell.q_load,
        tWbF: cell.t_wb,
      },
      whatifDraft: {
        tCwsF: cell.t_cws_opt,
        nFans: cell.n_fans_opt as FanStage,
      },
    };
    this.emit();
  }

  applySavings(job: SavingsJob): void {
    const months = job.result?.map((m) => m.month) ?? [];
    const keep =
      this.state.selectedMonth && months.includes(this.state.selectedMonth)
        ? this.state.selectedMonth
        : months[0] ?? null;
    this.state = { ...this.state, savings: job, selectedMonth: keep };
    this.emit();
  }

  selectMonth(month: string): void {
    this.state = { ...this.state, selectedMonth: month };
    this.emit();
  }
}
