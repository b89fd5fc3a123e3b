/** The three figure kinds rendered from harness CSVs.
 *
 * Aggregation across seeds uses medians with interquartile bands.  Rendering
 * is deterministic: series colors follow sorted algorithm order unless a
 * style map overrides them.
 */

import { EmptyDataError, num, readCsv, requireColumns, Table } from "./csv";
import { logLogSlope, median, quantile } from "./stats";
import { axes, legend, Margins, PALETTE, Scale, SvgCanvas } from "./svg";

export type FigureKind = "stability" | "cost-per-phase" | "regret-sweep";

export interface PlotSpec {
  kind: FigureKind;
  input: string;
  output: string;
  /** extra CSV carrying the optimal average cost (column lambda_opt) for the cost panel */
  reference?: string;
  styles?: Record<string, string>;
}

const MARGINS: Margins = { top: 20, right: 30, bottom: 45, left: 60 };
const W = 800;
const H = 500;

function seriesColor(algorithms: string[], styles: Record<string, string> | undefined): Map<string, string> {
  const map = new Map<string, string>();
  [...algorithms].sort().forEach((a, i) => {
    map.set(a, styles?.[a] ?? PALETTE[i % PALETTE.length]);
  });
  return map;
}

function groupBy(table: Table, key: string): Map<string, Record<string, string>[]> {
  const out = new Map<string, Record<string, string>[]>();
  for (const row of table.rows) {
    const k = row[key];
    if (!out.has(k)) {
      out.set(k, []);
    }
    out.get(k)!.push(row);
  }
  return out;
}

/** Stability fraction against horizon, one series per algorithm. */
export function renderStability(spec: PlotSpec): string {
  const table = readCsv(spec.input);
  requireColumns(table, ["algorithm", "T", "stability_fraction"], spec.input);
  const groups = groupBy(table, "algorithm");
  const Ts = table.rows.map((r) => num(r, "T")).filter(Number.isFinite);
  const xScale = new Scale(Math.min(...Ts), Math.max(...Ts), MARGINS.left, W - MARGINS.right, true);
  const yScale = new Scale(0, 1, H - MARGINS.bottom, MARGINS.top);
  const canvas = new SvgCanvas(W, H);
  axes(canvas, xScale, yScale, MARGINS, "trajectory length T", "stable-run fraction");
  const colors = seriesColor([...groups.keys()], spec.styles);
  for (const [alg, rows] of [...groups.entries()].sort()) {
    const pts = rows
      .map((r) => [num(r, "T"), num(r, "stability_fraction")] as [number, number])
      .filter(([x, y]) => Number.isFinite(x) && Number.isFinite(y))
      .sort((a, b) => a[0] - b[0]);
    const color = colors.get(alg)!;
    canvas.polyline(pts.map(([x, y]) => [xScale.at(x), yScale.at(y)]), color, 2);
    for (const [x, y] of pts) {
      canvas.circle(xScale.at(x), yScale.at(y), 3, color);
    }
  }
  legend(canvas, [...colors.entries()].map(([a, c]) => [a, c] as [string, string]), W - 210, MARGINS.top + 16);
  return canvas.render();
}

/** Median per-phase average cost (IQR band) per algorithm, with the optimal cost line. */
export function renderCostPerPhase(spec: PlotSpec): string {
  const table = readCsv(spec.input);
  requireColumns(table, ["algorithm", "phase_index", "phase_avg_cost"], spec.input);
  let lambdaOpt: number | undefined;
  if (spec.reference) {
    const ref = readCsv(spec.reference);
    requireColumns(ref, ["lambda_opt"], spec.reference);
    lambdaOpt = num(ref.rows[0], "lambda_opt");
  }
  const groups = groupBy(table, "algorithm");
  type Band = { phase: number; med: number; lo: number; hi: number };
  const series = new Map<string, Band[]>();
  for (const [alg, rows] of groups) {
    const byPhase = new Map<number, number[]>();
    for (const r of rows) {
      const p = num(r, "phase_index");
      const c = num(r, "phase_avg_cost");
      if (!Number.isFinite(p) || !Number.isFinite(c)) {
        continue;
      }
      if (!byPhase.has(p)) {
        byPhase.set(p, []);
      }
      byPhase.get(p)!.push(c);
    }
    const bands = [...byPhase.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([phase, cs]) => ({ phase, med: median(cs), lo: quantile(cs, 0.25), hi: quantile(cs, 0.75) }));
    if (bands.length > 0) {
      series.set(alg, bands);
    }
  }
  if (series.size === 0) {
    throw new EmptyDataError(spec.input);
  }
  const allBands = [...series.values()].flat();
  const phases = allBands.map((b) => b.phase);
  const values = allBands.flatMap((b) => [b.lo, b.hi]).concat(lambdaOpt !== undefined ? [lambdaOpt] : []);
  const xScale = new Scale(Math.min(...phases), Math.max(...phases), MARGINS.left, W - MARGINS.right);
  const yMax = Math.max(...values);
  const yMin = Math.min(...values, 0);
  const yScale = new Scale(yMin, yMax * 1.05, H - MARGINS.bottom, MARGINS.top);
  const canvas = new SvgCanvas(W, H);
  axes(canvas, xScale, yScale, MARGINS, "phase", "average cost per phase");
  const colors = seriesColor([...series.keys()], spec.styles);
  for (const [alg, bands] of [...series.entries()].sort()) {
    const color = colors.get(alg)!;
    const upper = bands.map((b) => [xScale.at(b.phase), yScale.at(b.hi)] as [number, number]);
    const lower = bands.map((b) => [xScale.at(b.phase), yScale.at(b.lo)] as [number, number]).reverse();
    canvas.polygon([...upper, ...lower], color, 0.15);
    canvas.polyline(bands.map((b) => [xScale.at(b.phase), yScale.at(b.med)]), color, 2);
  }
  if (lambdaOpt !== undefined) {
    const y = yScale.at(lambdaOpt);
    canvas.line(MARGINS.left, y, W - MARGINS.right, y, "#444", 1.5, "6,4");
    canvas.text(W - MARGINS.right - 4, y - 6, "optimal average cost", { anchor: "end", size: 11, fill: "#444" });
  }
  legend(canvas, [...colors.entries()].map(([a, c]) => [a, c] as [string, string]), W - 210, MARGINS.top + 16);
  return canvas.render();
}

/** Median cumulative regret against horizon on log-log axes with the fitted slope. */
export function renderRegretSweep(spec: PlotSpec): string {
  const table = readCsv(spec.input);
  requireColumns(table, ["T", "median_cumulative_regret"], spec.input);
  const pts = table.rows
    .map((r) => [num(r, "T"), num(r, "median_cumulative_regret")] as [number, number])
    .filter(([x, y]) => Number.isFinite(x) && Number.isFinite(y) && x > 0 && y > 0)
    .sort((a, b) => a[0] - b[0]);
  if (pts.length === 0) {
    throw new EmptyDataError(spec.input);
  }
  const slope = logLogSlope(pts.map(([x]) => x), pts.map(([, y]) => y));
  const xScale = new Scale(pts[0][0], pts[pts.length - 1][0], MARGINS.left, W - MARGINS.right, true);
  const ys = pts.map(([, y]) => y);
  const yScale = new Scale(Math.min(...ys) / 1.2, Math.max(...ys) * 1.2, H - MARGINS.bottom, MARGINS.top, true);
  const canvas = new SvgCanvas(W, H);
  axes(canvas, xScale, yScale, MARGINS, "horizon T", "median cumulative regret");
  canvas.polyline(pts.map(([x, y]) => [xScale.at(x), yScale.at(y)]), PALETTE[0], 2);
  for (const [x, y] of pts) {
    canvas.circle(xScale.at(x), yScale.at(y), 3.5, PALETTE[0]);
  }
  if (Number.isFinite(slope)) {
    canvas.text(MARGINS.left + 12, MARGINS.top + 18, `slope=${slope.toFixed(8)}`, { size: 14 });
  }
  legend(canvas, [["median regret", PALETTE[0]]], W - 210, MARGINS.top + 16);
  return canvas.render();
}

export function render(spec: PlotSpec): string {
  switch (spec.kind) {
    case "stability":
      return renderStability(spec);
    case "cost-per-phase":
      return renderCostPerPhase(spec);
    case "regret-sweep":
      return renderRegretSweep(spec);
    default:
      throw new Error(`unknown figure kind '${(spec as PlotSpec).kind}'`);
  }
}
