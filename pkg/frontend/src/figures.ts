/**
 * The four figure kinds rendered from the simulation CSV files.
 *
 * Fit overlays and the numbers in annotations come straight from the
 * `# key=value` block of the input; nothing is refitted here.
 */

import {
  DataTable,
  SchemaError,
  numericColumn,
  parseCsv,
  requireColumns,
  stringColumn,
} from "./csv.js";
import { AxisSpec, Panel, Rect, document as svgDocument, panel } from "./svg.js";

export type FigureKind = "trajectory" | "correlator" | "scaling" | "finite";

export interface PlotSpec {
  kind: FigureKind;
  /** Raw CSV text of the input file. */
  csv: string;
  /** Overlay fitted decay lines where the kind supports them. */
  fitOverlay?: boolean;
  title?: string;
}

const WIDTH = 860;
const HEIGHT = 420;
const LEFT: Rect = { x: 70, y: 40, width: 330, height: 300 };
const RIGHT: Rect = { x: 490, y: 40, width: 330, height: 300 };
const SINGLE: Rect = { x: 80, y: 40, width: 700, height: 300 };

function extent(values: number[], padFrac = 0.05): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!(hi > lo)) {
    hi = lo + 1;
  }
  const pad = (hi - lo) * padFrac;
  return [lo - pad, hi + pad];
}

function positive(values: number[]): number[] {
  return values.filter((v) => v > 0);
}

export function render(spec: PlotSpec): string {
  const table = parseCsv(spec.csv);
  switch (spec.kind) {
    case "trajectory":
      return renderTrajectory(table, spec);
    case "correlator":
      return renderCorrelator(table, spec);
    case "scaling":
      return renderScaling(table, spec);
    case "finite":
      return renderFinite(table, spec);
    default:
      throw new SchemaError(`unknown figure kind ${String(spec.kind)}`);
  }
}

function renderTrajectory(table: DataTable, spec: PlotSpec): string {
  requireColumns(table, ["beta", "Z", "X"], "trajectory");
  const beta = numericColumn(table, "beta");
  const z = numericColumn(table, "Z");
  const x = numericColumn(table, "X");
  const [blo, bhi] = extent(beta);
  const [vlo, vhi] = extent([...z, ...x, 0]);
  const p = panel(
    SINGLE,
    { label: "beta", lo: blo, hi: bhi },
    { label: "expectation value", lo: vlo, hi: vhi }
  );
  p.polyline(beta, z, "#c0392b");
  p.markers(beta, z, "#c0392b", 2);
  p.polyline(beta, x, "#2980b9");
  p.annotation("Z", 0.92, 0.15, "#c0392b");
  p.annotation("X", 0.92, 0.3, "#2980b9");
  return svgDocument(WIDTH, HEIGHT, spec.title ?? "magnetization trajectory", [p]);
}

function renderCorrelator(table: DataTable, spec: PlotSpec): string {
  requireColumns(table, ["R", "Czz"], "correlator");
  const r = numericColumn(table, "R");
  const c = numericColumn(table, "Czz");
  const keep = r.map((_, i) => i).filter((i) => c[i]! > 0);
  const rp = keep.map((i) => r[i]!);
  const cp = keep.map((i) => c[i]!);
  if (rp.length < 2) throw new SchemaError("correlator has fewer than 2 positive samples");
  const clo = Math.min(...cp);
  const chi = Math.max(...cp);

  // semi-log panel: exponential tails appear straight
  const semi = panel(
    LEFT,
    { label: "R", lo: Math.min(...rp), hi: Math.max(...rp) },
    { label: "Czz", lo: clo, hi: chi, log: true }
  );
  semi.polyline(rp, cp, "#2c3e50");

  // log-log panel: power-law decay appears straight
  const loglog = panel(
    RIGHT,
    { label: "R", lo: Math.min(...rp), hi: Math.max(...rp), log: true },
    { label: "Czz", lo: clo, hi: chi, log: true }
  );
  loglog.polyline(rp, cp, "#2c3e50");

  const fits = table.fits;
  if (spec.fitOverlay !== false) {
    if ("fit_xi" in fits) {
      const xi = fits["fit_xi"]!;
      const lo = fits["fit_xi_window_lo"] ?? Math.max(...rp) / 3;
      const hi = fits["fit_xi_window_hi"] ?? Math.max(...rp);
      const anchorIdx = keep.length
        ? keep.reduce((best, i) => (Math.abs(r[i]! - lo) < Math.abs(r[best]! - lo) ? i : best), keep[0]!)
        : 0;
      const amp = c[anchorIdx]! / Math.exp(-r[anchorIdx]! / xi);
      const xs: number[] = [];
      const ys: number[] = [];
      for (let k = 0; k <= 40; k++) {
        const rv = lo + ((hi - lo) * k) / 40;
        xs.push(rv);
        ys.push(amp * Math.exp(-rv / xi));
      }
      semi.polyline(xs, ys, "#c0392b", 1.4, "5,3");
    }
    if ("fit_eta" in fits) {
      const eta = fits["fit_eta"]!;
      const lo = Math.max(fits["fit_eta_window_lo"] ?? 3, Math.min(...rp));
      const hi = Math.min(fits["fit_eta_window_hi"] ?? Math.max(...rp) / 3, Math.max(...rp));
      const anchorIdx = keep.reduce(
        (best, i) => (Math.abs(r[i]! - lo) < Math.abs(r[best]! - lo) ? i : best),
        keep[0]!
      );
      const amp = c[anchorIdx]! / Math.pow(r[anchorIdx]!, -eta);
      const xs: number[] = [];
      const ys: number[] = [];
      for (let k = 0; k <= 40; k++) {
        const rv = lo * Math.pow(hi / lo, k / 40);
        xs.push(rv);
        ys.push(amp * Math.pow(rv, -eta));
      }
      loglog.polyline(xs, ys, "#c0392b", 1.4, "5,3");
    }
  }
  if ("fit_xi" in fits) semi.annotation(`xi = ${fits["fit_xi"]}`, 0.35, 0.12);
  if ("fit_eta" in fits) loglog.annotation(`eta = ${fits["fit_eta"]}`, 0.35, 0.12);
  return svgDocument(WIDTH, HEIGHT, spec.title ?? "connected correlator", [semi, loglog]);
}

function renderScaling(table: DataTable, spec: PlotSpec): string {
  requireColumns(table, ["M", "xi", "Z"], "scaling");
  const m = numericColumn(table, "M");
  const xi = numericColumn(table, "xi");
  const z = numericColumn(table, "Z");
  if (positive(m).length !== m.length) throw new SchemaError("column M must be positive");
  const lo = Math.min(...m) * 0.9;
  const hi = Math.max(...m) * 1.1;

  const pXi = panel(
    LEFT,
    { label: "M", lo, hi, log: true },
    { label: "xi", lo: Math.min(...xi) * 0.8, hi: Math.max(...xi) * 1.2, log: true }
  );
  pXi.markers(m, xi, "#2c3e50", 3);
  const pZ = panel(
    RIGHT,
    { label: "M", lo, hi, log: true },
    { label: "Z", lo: Math.min(...z) * 0.8, hi: Math.max(...z) * 1.2, log: true }
  );
  pZ.markers(m, z, "#2c3e50", 3);

  const fits = table.fits;
  const overlay = (p: Panel, exp: number, amp: number): void => {
    const xs: number[] = [];
    const ys: number[] = [];
    for (let k = 0; k <= 40; k++) {
      const mv = lo * Math.pow(hi / lo, k / 40);
      xs.push(mv);
      ys.push(amp * Math.pow(mv, exp));
    }
    p.polyline(xs, ys, "#c0392b", 1.4, "5,3");
  };
  if (spec.fitOverlay !== false && "fit_xi_exponent" in fits && "fit_xi_amplitude" in fits) {
    overlay(pXi, fits["fit_xi_exponent"]!, fits["fit_xi_amplitude"]!);
  }
  if (spec.fitOverlay !== false && "fit_z_exponent" in fits && "fit_z_amplitude" in fits) {
    overlay(pZ, fits["fit_z_exponent"]!, fits["fit_z_amplitude"]!);
  }
  if ("fit_xi_exponent" in fits) {
    pXi.annotation(`xi ~ M^${fits["fit_xi_exponent"]}`, 0.2, 0.12);
  }
  if ("fit_z_exponent" in fits) {
    pZ.annotation(`Z ~ M^${fits["fit_z_exponent"]}`, 0.2, 0.12);
  }
  return svgDocument(WIDTH, HEIGHT, spec.title ?? "environment-dimension scaling", [pXi, pZ]);
}

function renderFinite(table: DataTable, spec: PlotSpec): string {
  requireColumns(table, ["beta", "site1", "site2", "value"], "finite");
  const beta = numericColumn(table, "beta");
  const value = numericColumn(table, "value");
  const s1 = stringColumn(table, "site1");
  const s2 = stringColumn(table, "site2");
  const series = new Map<string, { x: number[]; y: number[] }>();
  for (let i = 0; i < beta.length; i++) {
    const key = `(${s1[i]})-(${s2[i]})`;
    if (!series.has(key)) series.set(key, { x: [], y: [] });
    series.get(key)!.x.push(beta[i]!);
    series.get(key)!.y.push(value[i]!);
  }
  const [blo, bhi] = extent(beta);
  const [vlo, vhi] = extent([...value, 0]);
  const p = panel(
    SINGLE,
    { label: "beta", lo: blo, hi: bhi },
    { label: "ZZ correlator", lo: vlo, hi: vhi }
  );
  const colors = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400"];
  let k = 0;
  for (const [key, s] of [...series.entries()].sort()) {
    const color = colors[k % colors.length]!;
    p.polyline(s.x, s.y, color);
    p.markers(s.x, s.y, color, 2);
    p.annotation(key, 0.72, 0.12 + 0.08 * k, color);
    k += 1;
  }
  return svgDocument(WIDTH, HEIGHT, spec.title ?? "finite-lattice correlator", [p]);
}
