/**
 * Minimal deterministic SVG scene builder: linear and logarithmic axes,
 * polylines, markers and text.  No DOM, no randomness; the same inputs
 * always produce byte-identical output.
 */

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

export type Scale = (v: number) => number;

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  return (v) => outLo + ((v - lo) / span) * (outHi - outLo);
}

export function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const llo = Math.log10(lo);
  const span = Math.log10(hi) - llo || 1;
  return (v) => outLo + ((Math.log10(v) - llo) / span) * (outHi - outLo);
}

const fmt = (v: number): string => {
  if (!Number.isFinite(v)) return "0";
  return String(Math.round(v * 100) / 100);
};

export function tickValues(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo;
  if (span <= 0) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= n + 1) ?? 10;
  const s = step * mult;
  const first = Math.ceil(lo / s) * s;
  const out: number[] = [];
  for (let v = first; v <= hi + 1e-12 * span; v += s) out.push(Math.abs(v) < s * 1e-9 ? 0 : v);
  return out;
}

export function logTickValues(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let e = Math.ceil(Math.log10(lo)); Math.pow(10, e) <= hi * (1 + 1e-12); e++) {
    out.push(Math.pow(10, e));
  }
  return out.length >= 2 ? out : [lo, hi];
}

function label(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(0);
  }
  return fmt(v);
}

export class Panel {
  readonly parts: string[] = [];

  constructor(
    readonly rect: Rect,
    readonly sx: Scale,
    readonly sy: Scale
  ) {}

  polyline(xs: number[], ys: number[], stroke: string, width = 1.2, dash = ""): void {
    const pts: string[] = [];
    for (let i = 0; i < xs.length; i++) {
      const px = this.sx(xs[i]!);
      const py = this.sy(ys[i]!);
      if (Number.isFinite(px) && Number.isFinite(py)) pts.push(`${fmt(px)},${fmt(py)}`);
    }
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr} points="${pts.join(" ")}"/>`
    );
  }

  markers(xs: number[], ys: number[], fill: string, r = 2.5): void {
    for (let i = 0; i < xs.length; i++) {
      const px = this.sx(xs[i]!);
      const py = this.sy(ys[i]!);
      if (Number.isFinite(px) && Number.isFinite(py)) {
        this.parts.push(`<circle cx="${fmt(px)}" cy="${fmt(py)}" r="${r}" fill="${fill}"/>`);
      }
    }
  }

  annotation(text: string, xFrac: number, yFrac: number, fill = "#333"): void {
    const x = this.rect.x + xFrac * this.rect.width;
    const y = this.rect.y + yFrac * this.rect.height;
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="12" fill="${fill}" class="annotation">${escapeXml(text)}</text>`
    );
  }
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface AxisSpec {
  label: string;
  lo: number;
  hi: number;
  log?: boolean;
}

export function panel(rect: Rect, xAxis: AxisSpec, yAxis: AxisSpec): Panel {
  const sx = (xAxis.log ? logScale : linearScale)(xAxis.lo, xAxis.hi, rect.x, rect.x + rect.width);
  const sy = (yAxis.log ? logScale : linearScale)(yAxis.lo, yAxis.hi, rect.y + rect.height, rect.y);
  const p = new Panel(rect, sx, sy);
  p.parts.push(
    `<rect x="${rect.x}" y="${rect.y}" width="${rect.width}" height="${rect.height}" fill="none" stroke="#888"/>`
  );
  const xticks = xAxis.log ? logTickValues(xAxis.lo, xAxis.hi) : tickValues(xAxis.lo, xAxis.hi);
  for (const t of xticks) {
    const px = sx(t);
    p.parts.push(
      `<line x1="${fmt(px)}" y1="${fmt(rect.y + rect.height)}" x2="${fmt(px)}" y2="${fmt(rect.y + rect.height + 4)}" stroke="#888"/>`,
      `<text x="${fmt(px)}" y="${fmt(rect.y + rect.height + 16)}" font-size="10" fill="#444" text-anchor="middle">${label(t)}</text>`
    );
  }
  const yticks = yAxis.log ? logTickValues(yAxis.lo, yAxis.hi) : tickValues(yAxis.lo, yAxis.hi);
  for (const t of yticks) {
    const py = sy(t);
    p.parts.push(
      `<line x1="${fmt(rect.x - 4)}" y1="${fmt(py)}" x2="${fmt(rect.x)}" y2="${fmt(py)}" stroke="#888"/>`,
      `<text x="${fmt(rect.x - 6)}" y="${fmt(py + 3)}" font-size="10" fill="#444" text-anchor="end">${label(t)}</text>`
    );
  }
  p.parts.push(
    `<text x="${fmt(rect.x + rect.width / 2)}" y="${fmt(rect.y + rect.height + 32)}" font-size="12" fill="#222" text-anchor="middle">${escapeXml(xAxis.label)}</text>`,
    `<text x="${fmt(rect.x - 40)}" y="${fmt(rect.y + rect.height / 2)}" font-size="12" fill="#222" text-anchor="middle" transform="rotate(-90 ${fmt(rect.x - 40)} ${fmt(rect.y + rect.height / 2)})">${escapeXml(yAxis.label)}</text>`
  );
  return p;
}

export function document(width: number, height: number, title: string, panels: Panel[]): string {
  const body = panels.map((p) => p.parts.join("\n  ")).join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">\n` +
    `  <rect width="${width}" height="${height}" fill="white"/>\n` +
    `  <text x="${width / 2}" y="20" font-size="14" fill="#111" text-anchor="middle">${escapeXml(title)}</text>\n` +
    `  ${body}\n` +
    `</svg>\n`
  );
}
