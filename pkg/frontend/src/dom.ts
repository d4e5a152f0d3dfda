/**
 * DOM bindings: render view models into the static index.html skeleton
 * and forward operator input to the store. No numbers are produced here.
 */

import { heatmap } from "./heatmap.js";
import type { DashboardState, HeatmapLayer, Store } from "./state.js";
import { FAN_STAGES, type FanStage } from "./types.js";
import { advisePanel, savingsReport, whatifReadout, type Numeric } from "./views.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id} in index.html`);
  }
  return node as T;
}

function show(target: HTMLElement, value: Numeric | null, fallback = "—"): void {
  target.textContent = value === null ? fallback : `${value.text} ${value.unit}`;
}

export interface Handlers {
  onAdvise: () => void;
  onWhatif: () => void;
  onLayer: (layer: HeatmapLayer) => void;
  onRefreshTable: () => void;
}

export function bindInputs(store: Store, handlers: Handlers): void {
  const qLoad = el<HTMLInputElement>("in-qload");
  const tWb = el<HTMLInputElement>("in-twb");
  const tCws = el<HTMLInputElement>("in-tcws");
  const fans = el<HTMLSelectElement>("in-fans");
  const draftT = el<HTMLInputElement>("whatif-tcws");
  const draftFans = el<HTMLSelectElement>("whatif-fans");

  for (const select of [fans, draftFans]) {
    select.innerHTML = "";
    for (const stage of FAN_STAGES) {
      const option = document.createElement("option");
      option.value = String(stage);
      option.textContent = String(stage);
      select.appendChild(option);
    }
  }

  qLoad.addEventListener("change", () =>
    store.setConditions({ qLoadTons: Number(qLoad.value) }),
  );
  tWb.addEventListener("change", () => store.setConditions({ tWbF: Number(tWb.value) }));
  tCws.addEventListener("change", () =>
    store.setConditions({ tCwsF: Number(tCws.value) }),
  );
  fans.addEventListener("change", () =>
    store.setConditions({ nFans: Number(fans.value) as FanStage }),
  );
  el<HTMLButtonElement>("btn-advise").addEventListener("click", handlers.onAdvise);

  let debounce: ReturnType<typeof setTimeout> | null = null;
  const queueWhatif = () => {
    store.setWhatifDraft({
      tCwsF: Number(draftT.value),
      nFans: Number(draftFans.value) as FanStage,
    });
    if (debounce) {
      clearTimeout(debounce);
    }
    debounce = setTimeout(handlers.onWhatif, 250);
  };
  draftT.addEventListener("input", queueWhatif);
  draftFans.addEventListener("change", queueWhatif);

  el<HTMLSelectElement>("layer-select").addEventListener("change", (event) => {
    handlers.onLayer((event.target as HTMLSelectElement).value as HeatmapLayer);
  });
  el<HTMLButtonElement>("btn-table").addEventListener("click", handlers.onRefreshTable);
}

export function render(state: DashboardState, store: Store): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = state.banner ?? "";
  banner.hidden = state.banner === null;

  for (const [field, message] of Object.entries(state.fieldErrors)) {
    const slot = document.getElementById(`err-${field}`);
    if (slot) {
      slot.textContent = message;
    }
  }
  if (!Object.keys(state.fieldErrors).length) {
    for (const slot of Array.from(document.querySelectorAll(".field-error"))) {
      slot.textContent = "";
    }
  }

  const advise = advisePanel(state);
  el("rec-stale").hidden = !advise.stale;
  show(el("rec-tcws"), advise.tCwsOpt);
  show(el("rec-fans"), advise.nFansOpt);
  show(el("rec-power"), advise.predictedPower);
  show(el("rec-cost"), advise.predictedCostRate, "no tariff attached");
  show(el("rec-delta"), advise.deltaPower, "enter current settings");
  el("rec-meta").textContent = advise.available
    ? `bundle ${advise.fingerprint?.slice(0, 12)} at ${advise.computedAt}`
    : "";
  el("rec-warnings").textContent = advise.warnings.join("\n");

  const whatif = whatifReadout(state);
  show(el("wi-chiller"), whatif.chiller);
  show(el("wi-fan"), whatif.fan);
  show(el("wi-pump"), whatif.pump);
  show(el("wi-total"), whatif.total);
  show(el("wi-gap"), whatif.gapToOptimum, "request a recommendation first");
  el("wi-warnings").textContent = whatif.warnings.join("\n");

  renderHeatmap(state, store);
  renderSavings(state, store);
}

function renderHeatmap(state: DashboardState, store: Store): void {
  const host = el<HTMLTableElement>("heatmap");
  host.innerHTML = "";
  if (!state.table) {
    el("heatmap-empty").hidden = false;
    return;
  }
  el("heatmap-empty").hidden = true;
  const view = heatmap(state.table, state.tableLayer);

  const head = host.createTHead().insertRow();
  head.insertCell().textContent = "tons \\ °F wb";
  for (const label of view.columnLabels) {
    head.insertCell().textContent = String(label);
  }
  const body = host.createTBody();
  view.rows.forEach((row, i) => {
    const tr = body.insertRow();
    tr.insertCell().textContent = String(view.rowLabels[i]);
    for (const cellView of row) {
      const td = tr.insertCell();
      td.textContent =
        view.layer === "n_fans_opt"
          ? String(cellView.value)
          : cellView.value.toFixed(1);
      td.style.background = cellView.color;
      td.title = cellView.hover;
      td.addEventListener("click", () => {
        store.clickCell(cellView.cell);
        (document.getElementById("in-qload") as HTMLInputElement).value = String(
          cellView.cell.q_load,
        );
        (document.getElementById("in-twb") as HTMLInputElement).value = String(
          cellView.cell.t_wb,
        );
        (document.getElementById("whatif-tcws") as HTMLInputElement).value = String(
          cellView.cell.t_cws_opt,
        );
        (document.getElementById("whatif-fans") as HTMLSelectElement).value = String(
          cellView.cell.n_fans_opt,
        );
      });
    }
  });
}

function renderSavings(state: DashboardState, store: Store): void {
  const view = savingsReport(state);
  el("sv-status").textContent = view.status;
  el("sv-error").textContent = view.error ?? "";

  const selector = el<HTMLSelectElement>("sv-month");
  selector.innerHTML = "";
  for (const month of view.months) {
    const option = document.createElement("option");
    option.value = month;
    option.textContent = month;
    option.selected = month === view.selected;
    selector.appendChild(option);
  }
  selector.onchange = () => store.selectMonth(selector.value);

  show(el("sv-kwh"), view.kwhSaved);
  show(el("sv-energy"), view.energyDollars);
  show(el("sv-demand"), view.demandDollars);
  show(el("sv-total"), view.totalDollars);
  show(el("sv-percent"), view.percent);
}
