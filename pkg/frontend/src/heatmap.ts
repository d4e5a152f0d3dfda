/**
 * Look-up-table heatmap view model.
 *
 * Rows are load levels, columns wet-bulb levels; the selected layer picks
 * which cell field drives the color ramp. Cell values are served numbers
 * verbatim; only the color is computed here.
 */

import type { HeatmapLayer } from "./state.js";
import type { TableCell, TableResponse } from "./types.js";

export interface HeatmapCellView {
  cell: TableCell;
  value: number;
  color: string;
  hover: string;
}

export interface HeatmapView {
  layer: HeatmapLayer;
  columnLabels: number[];
  rowLabels: number[];
  rows: HeatmapCellView[][];
  min: number;
  max: number;
}

export function layerValue(cell: TableCell, layer: HeatmapLayer): number {
  switch (layer) {
    case "t_cws_opt":
      return cell.t_cws_opt;
    case "n_fans_opt":
      return cell.n_fans_opt;
    case "power":
      return cell.predicted_power_kw;
  }
}

export function colorFor(value: number, min: number, max: number): string {
  const t = max > min ? (value - min) / (max - min) : 0.5;
  // cool blue (cheap/cold) to warm orange (expensive/hot)
  const hue = 210 - 180 * t;
  return `hsl(${hue.toFixed(0)}, 70%, ${((1 - t) * 25 + 40).toFixed(0)}%)`;
}

export function hoverText(cell: TableCell): string {
  return [
    `load ${cell.q_load} tons, wet bulb ${cell.t_wb} °F`,
    `t_cws_opt ${cell.t_cws_opt.toFixed(2)} °F`,
    `n_fans_opt ${cell.n_fans_opt}`,
    `predicted ${cell.predicted_power_kw.toFixed(1)} kW`,
    cell.feasible ? "feasible" : "INFEASIBLE",
  ].join("\n");
}

export function heatmap(table: TableResponse, layer: HeatmapLayer): HeatmapView {
  const values = table.cells.flat().map((cell) => layerValue(cell, layer));
  const min = Math.min(...values);
  const max = Math.max(...values);
  return {
    layer,
    columnLabels: table.t_wb_grid,
    rowLabels: table.q_load_grid,
    rows: table.cells.map((row) =>
      row.map((cell) => {
        const value = layerValue(cell, layer);
        return { cell, value, color: colorFor(value, min, max), hover: hoverText(cell) };
      }),
    ),
    min,
    max,
  };
}
