import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import path from "path";
import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { parseRunCsv } from "../src/csv.js";
import { buildPcrbFigure } from "../src/pcrb.js";
import { buildRatesFigure, buildSecrecyFigure } from "../src/rates.js";
import { buildTrackingFigures } from "../src/tracking.js";

/** Synthetic run CSV in schema v1 shape; values are arbitrary but exact. */
function sampleCsv(slots = 6): string {
  const header = [
    "slot", "time_s",
    "true_theta_v0", "true_dist_v0", "post_theta_v0", "post_dist_v0", "pcrb_theta_v0",
    "true_theta_v1", "true_dist_v1", "post_theta_v1", "post_dist_v1", "pcrb_theta_v1",
    "sem_rate_true_v0", "conv_rate_true_v0", "ssr_true_v0",
  ];
  const rows = [header.join(",")];
  for (let t = 1; t <= slots; t++) {
    const ssr = t === 3 || t === 4 ? 0 : 1.5 + 0.25 * t;
    rows.push([
      t, 0.02 * t,
      0.26 + 0.01 * t, 8 - 0.1 * t, 0.26 + 0.011 * t, 8 - 0.09 * t, 1e-6 * t,
      0.08 + 0.02 * t, 55 - 0.4 * t, 0.081 + 0.02 * t, 55 - 0.41 * t, 2e-6 * t,
      3.1 + 0.1 * t, 2.0 + 0.065 * t, ssr,
    ].join(","));
  }
  return rows.join("\n");
}

function csvColumn(text: string, name: string): number[] {
  const lines = text.trim().split("\n");
  const idx = lines[0].split(",").indexOf(name);
  expect(idx).toBeGreaterThanOrEqual(0);
  return lines.slice(1).map((l) => Number(l.split(",")[idx]));
}

describe("tracking figures", () => {
  it("plots exactly the CSV values", () => {
    const text = sampleCsv();
    const table = parseRunCsv(text, "sample.csv");
    const { angle, distance } = buildTrackingFigures([{ label: "ekf", table }]);
    const rad2deg = 180 / Math.PI;
    expect(angle.series["ekf"].y).toEqual(
      csvColumn(text, "post_theta_v0").map((v) => v * rad2deg));
    expect(angle.series["true"].y).toEqual(
      csvColumn(text, "true_theta_v0").map((v) => v * rad2deg));
    expect(distance.series["ekf"].y).toEqual(csvColumn(text, "post_dist_v0"));
    expect(angle.svg).toContain("<svg");
    expect(angle.svg).toContain("polyline");
  });

  it("overlays multiple runs with one shared truth", () => {
    const table = parseRunCsv(sampleCsv(), "a.csv");
    const { angle } = buildTrackingFigures([
      { label: "ekf", table },
      { label: "pf", table },
      { label: "none", table },
    ]);
    expect(Object.keys(angle.series)).toEqual(["true", "ekf", "pf", "none"]);
  });

  it("reports missing columns by name", () => {
    const table = parseRunCsv("slot,time_s\n1,0.02", "broken.csv");
    expect(() => buildTrackingFigures([{ label: "x", table }]))
      .toThrow(/no vehicle state columns/);
  });
});

describe("rates figures", () => {
  it("plots semantic and conventional series equal to CSV values", () => {
    const text = sampleCsv();
    const fig = buildRatesFigure(parseRunCsv(text, "s.csv"));
    expect(fig.series["semantic"].y).toEqual(csvColumn(text, "sem_rate_true_v0"));
    expect(fig.series["conventional"].y).toEqual(csvColumn(text, "conv_rate_true_v0"));
    expect(fig.series["semantic"].x).toEqual(csvColumn(text, "time_s"));
  });

  it("annotates secrecy zero touches", () => {
    const text = sampleCsv();
    const fig = buildSecrecyFigure(parseRunCsv(text, "s.csv"));
    expect(fig.series["worst-case SSR"].y).toEqual(csvColumn(text, "ssr_true_v0"));
    expect(fig.svg).toContain("SSR=0 @");
  });

  it("diagnoses a missing ssr column", () => {
    const table = parseRunCsv(sampleCsv().replace(/ssr_true_v0/, "other"), "s.csv");
    expect(() => buildSecrecyFigure(table, 0)).toThrow(/ssr_true_v0/);
  });
});

describe("pcrb figure", () => {
  it("plots per-vehicle PCRB equal to CSV values", () => {
    const text = sampleCsv();
    const fig = buildPcrbFigure([{ label: "run", table: parseRunCsv(text, "p.csv") }]);
    expect(fig.series["vehicle 0"].y).toEqual(csvColumn(text, "pcrb_theta_v0"));
    expect(fig.series["vehicle 1"].y).toEqual(csvColumn(text, "pcrb_theta_v1"));
  });

  it("overlays a comparison run with labels", () => {
    const table = parseRunCsv(sampleCsv(), "p.csv");
    const fig = buildPcrbFigure([
      { label: "semantic", table },
      { label: "no-semantic", table },
    ]);
    expect(Object.keys(fig.series)).toContain("semantic, vehicle 0");
    expect(Object.keys(fig.series)).toContain("no-semantic, vehicle 1");
  });
});

describe("cli", () => {
  it("writes vector and raster figure files from a CSV", async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "plots-"));
    const csvPath = path.join(dir, "run.csv");
    writeFileSync(csvPath, sampleCsv());
    const outDir = path.join(dir, "figs");

    expect(await main(["rates", "--out", outDir, csvPath])).toBe(0);
    const svg = readFileSync(path.join(outDir, "rates.svg"), "utf-8");
    expect(svg).toContain("<svg");
    expect(readFileSync(path.join(outDir, "secrecy.svg"), "utf-8")).toContain("SSR");
    // PNG magic bytes on the rasterized copy
    const png = readFileSync(path.join(outDir, "rates.png"));
    expect(png.subarray(0, 4)).toEqual(Buffer.from([0x89, 0x50, 0x4e, 0x47]));

    expect(await main(["tracking", "--out", outDir, `${csvPath}:ekf`])).toBe(0);
    expect(readFileSync(path.join(outDir, "tracking_angle.svg"), "utf-8")).toContain("Bearing");

    expect(await main(["pcrb", "--out", outDir, csvPath])).toBe(0);
    expect(readFileSync(path.join(outDir, "pcrb.svg"), "utf-8")).toContain("PCRB");
  });

  it("fails cleanly on a schema mismatch", async () => {
    const dir = mkdtempSync(path.join(tmpdir(), "plots-"));
    const csvPath = path.join(dir, "bad.csv");
    writeFileSync(csvPath, "slot,time_s\n1,0.02\n");
    expect(await main(["rates", "--out", dir, csvPath])).toBe(1);
  });
});
