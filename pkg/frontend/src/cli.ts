#!/usr/bin/env node
/**
 * Figure CLI over saved run CSVs.
 *
 *   isacsim-plots tracking --out figs run_ekf.csv:ekf run_pf.csv:pf run_none.csv:none
 *   isacsim-plots rates    --out figs run.csv
 *   isacsim-plots pcrb     --out figs run_on.csv:semantic run_off.csv:no-semantic
 *
 * Inputs are `path` or `path:label`. Each figure is written twice: as the
 * vector source of truth (.svg) and a rasterized copy (.png).
 */

import { mkdirSync, writeFileSync } from "fs";
import path from "path";
import sharp from "sharp";
import { loadRunCsv, MissingColumnsError } from "./csv.js";
import { buildPcrbFigure } from "./pcrb.js";
import { buildRatesFigure, buildSecrecyFigure } from "./rates.js";
import { buildTrackingFigures, LabeledRun } from "./tracking.js";

function usage(): never {
  console.error("usage: isacsim-plots <tracking|rates|pcrb> --out <dir> <csv[:label]>...");
  process.exit(2);
}

function parseArgs(argv: string[]): { kind: string; out: string; runs: LabeledRun[] } {
  const [kind, ...rest] = argv;
  if (!kind || !["tracking", "rates", "pcrb"].includes(kind)) usage();
  let out = ".";
  const inputs: string[] = [];
  for (let i = 0; i < rest.length; i++) {
    if (rest[i] === "--out") {
      out = rest[++i] ?? usage();
    } else {
      inputs.push(rest[i]);
    }
  }
  if (inputs.length === 0) usage();
  const runs = inputs.map((spec) => {
    const sep = spec.lastIndexOf(":");
    const hasLabel = sep > 1; // keep windows-style paths intact
    const file = hasLabel ? spec.slice(0, sep) : spec;
    const label = hasLabel ? spec.slice(sep + 1) : path.basename(file, ".csv");
    return { label, table: loadRunCsv(file) };
  });
  return { kind, out, runs };
}

async function write(outDir: string, name: string, svg: string): Promise<void> {
  const svgFile = path.join(outDir, `${name}.svg`);
  writeFileSync(svgFile, svg);
  const pngFile = path.join(outDir, `${name}.png`);
  await sharp(Buffer.from(svg), { density: 144 }).png().toFile(pngFile);
  console.log(`wrote ${svgFile} + ${pngFile}`);
}

export async function main(argv: string[]): Promise<number> {
  try {
    const { kind, out, runs } = parseArgs(argv);
    mkdirSync(out, { recursive: true });
    if (kind === "tracking") {
      const { angle, distance } = buildTrackingFigures(runs);
      await write(out, "tracking_angle", angle.svg);
      await write(out, "tracking_distance", distance.svg);
    } else if (kind === "rates") {
      await write(out, "rates", buildRatesFigure(runs[0].table).svg);
      await write(out, "secrecy", buildSecrecyFigure(runs[0].table).svg);
    } else {
      await write(out, "pcrb", buildPcrbFigure(runs).svg);
    }
    return 0;
  } catch (err) {
    if (err instanceof MissingColumnsError) {
      console.error(`column error: ${err.message}`);
      return 1;
    }
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
