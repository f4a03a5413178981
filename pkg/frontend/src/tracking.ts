/**
 * Tracking figures: true vs estimated bearing and range over time, overlaying
 * one or more runs (typically the ekf / pf / no-filter variants of the same
 * scenario). The plots re-draw stored values only; nothing is recomputed.
 */

import { buildChart, Figure, seriesColor, Series } from "./chart.js";
import { column, requireColumns, RunTable, vehicleIndices } from "./csv.js";

export interface LabeledRun {
  label: string;
  table: RunTable;
}

const RAD2DEG = 180.0 / Math.PI;

function trackingSeries(runs: LabeledRun[], vehicle: number,
                        trueCol: string, estCol: string, scale: number): Series[] {
  const series: Series[] = [];
  runs.forEach((run, i) => {
    requireColumns(run.table, ["time_s", trueCol, estCol]);
    const t = column(run.table, "time_s");
    if (i === 0) {
      series.push({
        label: "true",
        x: t,
        y: column(run.table, trueCol).map((v) => v * scale),
        color: "#333333",
        width: 1.0,
        dash: "5,3",
      });
    }
    series.push({
      label: run.label,
      x: t,
      y: column(run.table, estCol).map((v) => v * scale),
      color: seriesColor(i),
    });
  });
  return series;
}

export function buildTrackingFigures(runs: LabeledRun[], vehicle?: number):
    { angle: Figure; distance: Figure } {
  if (runs.length === 0) throw new Error("tracking figure needs at least one run");
  const v = vehicle ?? vehicleIndices(runs[0].table)[0];
  if (v === undefined) {
    throw new Error(`${runs[0].table.path}: no vehicle state columns found`);
  }
  const angle = buildChart({
    title: `Bearing tracking, vehicle ${v}`,
    xLabel: "time (s)",
    yLabel: "angle (deg)",
    series: trackingSeries(runs, v, `true_theta_v${v}`, `post_theta_v${v}`, RAD2DEG),
  });
  const distance = buildChart({
    title: `Range tracking, vehicle ${v}`,
    xLabel: "time (s)",
    yLabel: "distance (m)",
    series: trackingSeries(runs, v, `true_dist_v${v}`, `post_dist_v${v}`, 1.0),
  });
  return { angle, distance };
}
