import { describe, expect, it } from "vitest";

import { heatmap, layerValue } from "../src/heatmap.js";
import { Store } from "../src/state.js";
import { fixtures } from "./fixtures.js";

describe("look-up table heatmap", () => {
  const table = fixtures.table();

  it("cell values equal the served table for every layer", () => {
    for (const layer of ["t_cws_opt", "n_fans_opt", "power"] as const) {
      const view = heatmap(table, layer);
      expect(view.rowLabels).toEqual(table.q_load_grid);
      expect(view.columnLabels).toEqual(table.t_wb_grid);
      view.rows.forEach((row, i) => {
        row.forEach((cellView, j) => {
          expect(cellView.cell).toBe(table.cells[i][j]);
          expect(cellView.value).toBe(layerValue(table.cells[i][j], layer));
        });
      });
    }
  });

  it("hover text carries the full cell", () => {
    const view = heatmap(table, "t_cws_opt");
    const cell = table.cells[1][2];
    const hover = view.rows[1][2].hover;
    expect(hover).toContain(String(cell.q_load));
    expect(hover).toContain(String(cell.n_fans_opt));
    expect(hover).toContain(cell.t_cws_opt.toFixed(2));
  });

  it("clicking a cell pre-fills the what-if explorer", () => {
    const store = new Store();
    store.applyTable(table);
    const cell = table.cells[2][1];
    store.clickCell(cell);
    expect(store.state.whatifDraft.tCwsF).toBe(cell.t_cws_opt);
    expect(store.state.whatifDraft.nFans).toBe(cell.n_fans_opt);
    expect(store.state.conditions.qLoadTons).toBe(cell.q_load);
    expect(store.state.conditions.tWbF).toBe(cell.t_wb);
  });

  it("switching layers leaves the table and inputs untouched", () => {
    const store = new Store();
    store.applyTable(table);
    const conditionsBefore = store.state.conditions;
    store.setLayer("power");
    expect(store.state.table).toBe(table);
    expect(store.state.conditions).toEqual(conditionsBefore);
    expect(store.state.tableLayer).toBe("power");
  });

  it("color ramp stays inside the layer's own range", () => {
    const view = heatmap(table, "power");
    const values = view.rows.flat().map((c) => c.value);
    expect(view.min).toBe(Math.min(...values));
    expect(view.max).toBe(Math.max(...values));
    for (const cellView of view.rows.flat()) {
      expect(cellView.color).toMatch(/^hsl\(/);
    }
  });
});
