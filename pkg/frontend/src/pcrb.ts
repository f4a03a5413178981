/**
 * Sensing figure: the angle PCRB over time for every tracked vehicle, with
 * optional overlay of a second run (e.g. semantic communication disabled) for
 * like-for-like comparison.
 */

import { buildChart, Figure, seriesColor } from "./chart.js";
import { column, requireColumns, RunTable, vehicleIndices } from "./csv.js";
import { LabeledRun } from "./tracking.js";

export function buildPcrbFigure(runs: LabeledRun[]): Figure {
  if (runs.length === 0) throw new Error("pcrb figure needs at least one run");
  const vehicles = vehicleIndices(runs[0].table, "pcrb_theta_v");
  if (vehicles.length === 0) {
    throw new Error(`${runs[0].table.path}: no PCRB columns found`);
  }
  const series = [];
  let colorIdx = 0;
  for (const run of runs) {
    for (const v of vehicles) {
      requireColumns(run.table, ["time_s", `pcrb_theta_v${v}`]);
      series.push({
        label: runs.length > 1 ? `${run.label}, vehicle ${v}` : `vehicle ${v}`,
        x: column(run.table, "time_s"),
        y: column(run.table, `pcrb_theta_v${v}`),
        color: seriesColor(colorIdx),
        dash: run === runs[0] ? undefined : "6,3",
      });
      colorIdx += 1;
    }
  }
  return buildChart({
    title: "Angle posterior CRB",
    xLabel: "time (s)",
    yLabel: "PCRB (rad^2)",
    yMin: 0,
    series,
  });
}
