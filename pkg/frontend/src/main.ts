/** Dashboard bootstrap: wire the store, the API client, and the poller. */

import { AdvisoryClient, ApiError, Poller, StaleResponseError } from "./api.js";
import { bindInputs, render } from "./dom.js";
import type { HeatmapLayer } from "./state.js";
import { Store } from "./state.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "";
const pollSeconds = Number(params.get("poll") ?? "60");

const client = new AdvisoryClient(baseUrl);
const store = new Store();

async function refreshAdvice(): Promise<void> {
  const { qLoadTons, tWbF, tCwsF, nFans } = store.state.conditions;
  try {
    const response = await client.advise({
      q_load_tons: qLoadTons,
      t_wb_f: tWbF,
      current: { t_cws_f: tCwsF, n_fans: nFans },
    });
    store.applyAdvise(response);
  } catch (error) {
    if (error instanceof StaleResponseError) {
      return;
    }
    if (error instanceof ApiError) {
      store.applyAdviseFailure(error.message, error.fields);
    } else {
      store.applyAdviseFailure("advisory service unreachable; retrying");
    }
  }
}

async function refreshWhatif(): Promise<void> {
  const { qLoadTons, tWbF } = store.state.conditions;
  const draft = store.state.whatifDraft;
  try {
    const response = await client.whatif({
      q_load_tons: qLoadTons,
      t_wb_f: tWbF,
      t_cws_f: draft.tCwsF,
      n_fans: draft.nFans,
    });
    store.applyWhatif(response);
  } catch (error) {
    if (!(error instanceof StaleResponseError)) {
      store.applyAdviseFailure("what-if request failed");
    }
  }
}

async function refreshTable(): Promise<void> {
  try {
    store.applyTable(await client.table());
  } catch {
    store.applyAdviseFailure("no look-up table available");
  }
}

store.subscribe((state) => render(state, store));
bindInputs(store, {
  onAdvise: refreshAdvice,
  onWhatif: refreshWhatif,
  onLayer: (layer: HeatmapLayer) => store.setLayer(layer),
  onRefreshTable: refreshTable,
});

void refreshAdvice();
void refreshTable();
new Poller(() => void refreshAdvice(), pollSeconds * 1000).start();
