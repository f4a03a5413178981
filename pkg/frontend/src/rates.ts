/**
 * Communication figures from one run: the semantic vs conventional rate
 * overlay, and the worst-case semantic secrecy rate with its zero touches
 * annotated (the slots where the eavesdropper matched the intended link).
 */

import { buildChart, Figure, Marker } from "./chart.js";
import { column, requireColumns, RunTable, vehicleIndices } from "./csv.js";

export function intendedVehicle(table: RunTable): number {
  const idx = vehicleIndices(table, "sem_rate_true_v");
  if (idx.length === 0) {
    throw new Error(`${table.path}: no intended-vehicle rate columns found`);
  }
  return idx[0];
}

export function buildRatesFigure(table: RunTable, vehicle?: number): Figure {
  const v = vehicle ?? intendedVehicle(table);
  const cols = ["time_s", `sem_rate_true_v${v}`, `conv_rate_true_v${v}`];
  requireColumns(table, cols);
  const t = column(table, "time_s");
  return buildChart({
    title: `Transmission rate, vehicle ${v}`,
    xLabel: "time (s)",
    yLabel: "rate (bits/s/Hz)",
    yMin: 0,
    series: [
      { label: "semantic", x: t, y: column(table, `sem_rate_true_v${v}`), color: "#1f77b4" },
      { label: "conventional", x: t, y: column(table, `conv_rate_true_v${v}`), color: "#d62728" },
    ],
  });
}

export function buildSecrecyFigure(table: RunTable, vehicle?: number): Figure {
  const v = vehicle ?? intendedVehicle(table);
  requireColumns(table, ["time_s", `ssr_true_v${v}`]);
  const t = column(table, "time_s");
  const ssr = column(table, `ssr_true_v${v}`);
  const markers: Marker[] = [];
  for (let i = 0; i < ssr.length; i++) {
    const isZero = ssr[i] === 0;
    const edge = i === 0 || ssr[i - 1] !== 0;
    if (isZero && edge) {
      markers.push({ x: t[i], y: 0, label: `SSR=0 @ ${t[i].toFixed(2)}s`, color: "#d62728" });
    }
  }
  return buildChart({
    title: `Semantic secrecy rate, vehicle ${v}`,
    xLabel: "time (s)",
    yLabel: "SSR (bits/s/Hz)",
    yMin: 0,
    series: [{ label: "worst-case SSR", x: t, y: ssr, color: "#2ca02c" }],
    markers,
  });
}
