/**
 * Minimal SVG line-chart builder. No DOM, no canvas: the chart is assembled
 * as an SVG string, which keeps the output vector-exact and the plotted
 * values auditable (every figure carries its series back to the caller).
 */

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  width?: number;
  dash?: string;
}

export interface Marker {
  x: number;
  y: number;
  label?: string;
  color?: string;
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  markers?: Marker[];
  width?: number;
  height?: number;
  yMin?: number;
  yMax?: number;
}

export interface Figure {
  svg: string;
  /** exactly the numbers that were drawn, keyed by series label */
  series: Record<string, { x: number[]; y: number[] }>;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export function seriesColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || Math.abs(max) || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

export function buildChart(opts: ChartOptions): Figure {
  const W = opts.width ?? 720;
  const H = opts.height ?? 400;
  const ml = 68, mr = 20, mt = 34, mb = 48;
  const pw = W - ml - mr;
  const ph = H - mt - mb;

  const allX = opts.series.flatMap((s) => s.x);
  const allY = opts.series.flatMap((s) => s.y);
  if (allX.length === 0) throw new Error(`chart "${opts.title}" has no data`);
  const xMin = Math.min(...allX), xMax = Math.max(...allX);
  const yMin = opts.yMin ?? Math.min(...allY);
  const yMaxRaw = opts.yMax ?? Math.max(...allY);
  const yMax = yMaxRaw === yMin ? yMin + 1 : yMaxRaw;

  const xOf = (v: number) => ml + ((v - xMin) / (xMax - xMin || 1)) * pw;
  const yOf = (v: number) => mt + ph - ((v - yMin) / (yMax - yMin)) * ph;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#ffffff"/>\n`;
  s += `<text x="${ml}" y="${mt - 14}" font-size="13" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;

  for (const v of niceTicks(yMin, yMax, 6)) {
    const y = yOf(v);
    s += `<line x1="${ml}" y1="${y.toFixed(1)}" x2="${ml + pw}" y2="${y.toFixed(1)}" stroke="#eeeeee" stroke-width="0.6"/>\n`;
    s += `<text x="${ml - 6}" y="${(y + 3.5).toFixed(1)}" text-anchor="end" font-size="10" fill="#555">${esc(fmt(v))}</text>\n`;
  }
  for (const v of niceTicks(xMin, xMax, 8)) {
    const x = xOf(v);
    s += `<line x1="${x.toFixed(1)}" y1="${mt + ph}" x2="${x.toFixed(1)}" y2="${mt + ph + 4}" stroke="#333333" stroke-width="0.6"/>\n`;
    s += `<text x="${x.toFixed(1)}" y="${mt + ph + 16}" text-anchor="middle" font-size="10" fill="#555">${esc(fmt(v))}</text>\n`;
  }

  const figure: Figure = { svg: "", series: {} };
  for (const sr of opts.series) {
    if (sr.x.length !== sr.y.length) {
      throw new Error(`series "${sr.label}" has mismatched x/y lengths`);
    }
    const pts = sr.x.map((x, i) => `${xOf(x).toFixed(2)},${yOf(sr.y[i]).toFixed(2)}`).join(" ");
    s += `<polyline fill="none" stroke="${sr.color}" stroke-width="${sr.width ?? 1.4}"` +
      `${sr.dash ? ` stroke-dasharray="${sr.dash}"` : ""} points="${pts}"/>\n`;
    figure.series[sr.label] = { x: [...sr.x], y: [...sr.y] };
  }

  for (const m of opts.markers ?? []) {
    const color = m.color ?? "#000000";
    s += `<circle cx="${xOf(m.x).toFixed(2)}" cy="${yOf(m.y).toFixed(2)}" r="3.2" fill="${color}"/>\n`;
    if (m.label) {
      s += `<text x="${(xOf(m.x) + 5).toFixed(1)}" y="${(yOf(m.y) - 5).toFixed(1)}" font-size="9" fill="${color}">${esc(m.label)}</text>\n`;
    }
  }

  // axes frame
  s += `<line x1="${ml}" y1="${mt}" x2="${ml}" y2="${mt + ph}" stroke="#333333" stroke-width="0.8"/>\n`;
  s += `<line x1="${ml}" y1="${mt + ph}" x2="${ml + pw}" y2="${mt + ph}" stroke="#333333" stroke-width="0.8"/>\n`;
  s += `<text x="${ml + pw / 2}" y="${H - 10}" text-anchor="middle" font-size="11" fill="#333">${esc(opts.xLabel)}</text>\n`;
  s += `<text x="16" y="${mt + ph / 2}" text-anchor="middle" font-size="11" fill="#333" transform="rotate(-90,16,${mt + ph / 2})">${esc(opts.yLabel)}</text>\n`;

  // legend
  const legendW = Math.max(...opts.series.map((sr) => sr.label.length)) * 5.6 + 30;
  let ly = mt + 8;
  s += `<rect x="${ml + pw - legendW - 4}" y="${ly - 10}" width="${legendW}" height="${opts.series.length * 14 + 6}" rx="3" fill="#ffffff" fill-opacity="0.88" stroke="#dddddd" stroke-width="0.5"/>\n`;
  for (const sr of opts.series) {
    const lx = ml + pw - legendW + 2;
    s += `<line x1="${lx}" y1="${ly}" x2="${lx + 16}" y2="${ly}" stroke="${sr.color}" stroke-width="2"${sr.dash ? ` stroke-dasharray="${sr.dash}"` : ""}/>\n`;
    s += `<text x="${lx + 20}" y="${ly + 3.5}" font-size="10" fill="#333">${esc(sr.label)}</text>\n`;
    ly += 14;
  }

  s += "</svg>\n";
  figure.svg = s;
  return figure;
}
