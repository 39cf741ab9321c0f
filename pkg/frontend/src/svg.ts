/** Minimal deterministic SVG plotting: axes, error bars, legends. */

export interface Scale {
  map(x: number): number;
  readonly min: number;
  readonly max: number;
  ticks(): number[];
}

export class LinearScale implements Scale {
  constructor(
    readonly min: number,
    readonly max: number,
    private readonly rangeMin: number,
    private readonly rangeMax: number,
    private readonly tickCount = 6,
  ) {
    if (!(max > min)) throw new Error(`degenerate linear domain [${min}, ${max}]`);
  }

  map(x: number): number {
    const t = (x - this.min) / (this.max - this.min);
    return this.rangeMin + t * (this.rangeMax - this.rangeMin);
  }

  ticks(): number[] {
    const span = this.max - this.min;
    const step = niceStep(span / this.tickCount);
    const start = Math.ceil(this.min / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.max + 1e-12 * span; v += step) {
      out.push(Math.abs(v) < 1e-12 * span ? 0 : v);
    }
    return out;
  }
}

export class LogScale implements Scale {
  constructor(
    readonly min: number,
    readonly max: number,
    private readonly rangeMin: number,
    private readonly rangeMax: number,
  ) {
    if (!(min > 0 && max > min)) throw new Error(`log scale needs 0 < min < max, got [${min}, ${max}]`);
  }

  map(x: number): number {
    const t = (Math.log(x) - Math.log(this.min)) / (Math.log(this.max) - Math.log(this.min));
    return this.rangeMin + t * (this.rangeMax - this.rangeMin);
  }

  ticks(): number[] {
    const out: number[] = [];
    const lo = Math.floor(Math.log10(this.min));
    const hi = Math.ceil(Math.log10(this.max));
    for (let e = lo; e <= hi; e++) {
      for (const m of [1, 2, 5]) {
        const v = m * 10 ** e;
        if (v >= this.min * 0.999 && v <= this.max * 1.001) out.push(v);
      }
    }
    return out;
  }
}

function niceStep(raw: number): number {
  const mag = 10 ** Math.floor(Math.log10(raw));
  const norm = raw / mag;
  if (norm <= 1) return mag;
  if (norm <= 2) return 2 * mag;
  if (norm <= 5) return 5 * mag;
  return 10 * mag;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return String(Number(v.toPrecision(6)));
  }
  return v.toExponential(1);
}

export const PALETTE = ["#c01f2f", "#1f4fc0", "#e07b18", "#1c8a3c", "#7b2d8e", "#4a4a4a"];
export const MARKERS = ["circle", "square", "triangle-down", "triangle-up", "diamond"] as const;
export type MarkerShape = (typeof MARKERS)[number];

export interface SeriesPoint {
  x: number;
  y: number;
  /** half-height of the error bar in data units; omit for no bar */
  err?: number;
}

const W = 640;
const H = 440;
const MARGIN = { top: 28, right: 24, bottom: 52, left: 64 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export class Figure {
  private body: string[] = [];
  readonly xScale: Scale;
  readonly yScale: Scale;

  constructor(
    xScale: (rangeMin: number, rangeMax: number) => Scale,
    yScale: (rangeMin: number, rangeMax: number) => Scale,
    private readonly title: string,
    private readonly xLabel: string,
    private readonly yLabel: string,
  ) {
    this.xScale = xScale(MARGIN.left, W - MARGIN.right);
    this.yScale = yScale(H - MARGIN.bottom, MARGIN.top); // inverted: y grows upward
  }

  private drawAxes(): string {
    const x0 = MARGIN.left;
    const x1 = W - MARGIN.right;
    const y0 = H - MARGIN.bottom;
    const y1 = MARGIN.top;
    const parts: string[] = [];
    parts.push(`<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#222"/>`);
    for (const t of this.xScale.ticks()) {
      const px = this.xScale.map(t);
      parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 - 5}" stroke="#222"/>`);
      parts.push(
        `<text x="${px.toFixed(2)}" y="${y0 + 18}" text-anchor="middle" font-size="12">${formatTick(t)}</text>`,
      );
    }
    for (const t of this.yScale.ticks()) {
      const py = this.yScale.map(t);
      parts.push(`<line x1="${x0}" y1="${py.toFixed(2)}" x2="${x0 + 5}" y2="${py.toFixed(2)}" stroke="#222"/>`);
      parts.push(
        `<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="12">${formatTick(t)}</text>`,
      );
    }
    parts.push(
      `<text x="${(x0 + x1) / 2}" y="${H - 12}" text-anchor="middle" font-size="14">${esc(this.xLabel)}</text>`,
    );
    parts.push(
      `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="14" transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(this.yLabel)}</text>`,
    );
    parts.push(`<text x="${(x0 + x1) / 2}" y="18" text-anchor="middle" font-size="14">${esc(this.title)}</text>`);
    return parts.join("\n");
  }

  polyline(points: SeriesPoint[], color: string, dashed = false): void {
    const path = points.map((p) => `${this.xScale.map(p.x).toFixed(2)},${this.yScale.map(p.y).toFixed(2)}`).join(" ");
    const dash = dashed ? ` stroke-dasharray="6,4"` : "";
    this.body.push(`<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.6"${dash}/>`);
  }

  errorBars(points: SeriesPoint[], color: string): void {
    for (const p of points) {
      if (p.err === undefined || p.err === 0) continue;
      const px = this.xScale.map(p.x);
      const yLo = this.yScale.map(p.y - p.err);
      const yHi = this.yScale.map(p.y + p.err);
      this.body.push(
        `<g class="errorbar" data-x="${p.x}" data-half="${p.err}">` +
          `<line x1="${px.toFixed(2)}" y1="${yLo.toFixed(2)}" x2="${px.toFixed(2)}" y2="${yHi.toFixed(2)}" stroke="${color}"/>` +
          `<line x1="${(px - 4).toFixed(2)}" y1="${yLo.toFixed(2)}" x2="${(px + 4).toFixed(2)}" y2="${yLo.toFixed(2)}" stroke="${color}"/>` +
          `<line x1="${(px - 4).toFixed(2)}" y1="${yHi.toFixed(2)}" x2="${(px + 4).toFixed(2)}" y2="${yHi.toFixed(2)}" stroke="${color}"/>` +
          `</g>`,
      );
    }
  }

  markers(points: SeriesPoint[], color: string, shape: MarkerShape): void {
    for (const p of points) {
      const x = this.xScale.map(p.x);
      const y = this.yScale.map(p.y);
      this.body.push(markerElement(x, y, 4, color, shape));
    }
  }

  /** Text block anchored inside the top-left of the plot frame. */
  annotate(lines: string[]): void {
    const x = MARGIN.left + 10;
    let y = MARGIN.top + 18;
    for (const line of lines) {
      this.body.push(
        `<text class="annotation" x="${x}" y="${y}" font-size="12" font-family="monospace">${esc(line)}</text>`,
      );
      y += 16;
    }
  }

  legend(entries: { label: string; color: string; shape: MarkerShape }[]): void {
    const x = W - MARGIN.right - 150;
    let y = MARGIN.top + 14;
    for (const e of entries) {
      this.body.push(markerElement(x, y - 4, 4, e.color, e.shape));
      this.body.push(
        `<text class="legend" x="${x + 12}" y="${y}" font-size="12" fill="#111">${esc(e.label)}</text>`,
      );
      y += 18;
    }
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica,Arial,sans-serif">`,
      `<rect width="${W}" height="${H}" fill="white"/>`,
      this.drawAxes(),
      ...this.body,
      `</svg>`,
    ].join("\n");
  }
}

function markerElement(x: number, y: number, r: number, color: string, shape: MarkerShape): string {
  const cx = x.toFixed(2);
  const cy = y.toFixed(2);
  switch (shape) {
    case "circle":
      return `<circle cx="${cx}" cy="${cy}" r="${r}" fill="${color}"/>`;
    case "square":
      return `<rect x="${(x - r).toFixed(2)}" y="${(y - r).toFixed(2)}" width="${2 * r}" height="${2 * r}" fill="${color}"/>`;
    case "triangle-down":
      return `<polygon points="${(x - r).toFixed(2)},${(y - r).toFixed(2)} ${(x + r).toFixed(2)},${(y - r).toFixed(2)} ${cx},${(y + r).toFixed(2)}" fill="${color}"/>`;
    case "triangle-up":
      return `<polygon points="${(x - r).toFixed(2)},${(y + r).toFixed(2)} ${(x + r).toFixed(2)},${(y + r).toFixed(2)} ${cx},${(y - r).toFixed(2)}" fill="${color}"/>`;
    case "diamond":
      return `<polygon points="${cx},${(y - r).toFixed(2)} ${(x + r).toFixed(2)},${cy} ${cx},${(y + r).toFixed(2)} ${(x - r).toFixed(2)},${cy}" fill="${color}"/>`;
  }
}

/** Padded [min, max] covering every value (plus error bars) in the data. */
export function dataExtent(values: number[], padFraction = 0.08): [number, number] {
  if (values.length === 0) throw new Error("no data for axis extent");
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * padFraction;
  return [lo - pad, hi + pad];
}
