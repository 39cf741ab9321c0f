/**
 * The three figure kinds: entropy time series, long-time entropy vs system
 * size with fit overlays, and long-time entropy vs bond dimension.
 *
 * Error-bar conventions are fixed per figure kind: time series carry one
 * standard deviation (individual-run fluctuations), the other two carry
 * the standard error of the mean. A PlotSpec violating this is rejected.
 */

import { existsSync } from "node:fs";

import {
  ChiScanDocument,
  EnsembleStats,
  FitDocument,
  exact,
  loadChiScan,
  loadFit,
  loadStats,
  thetaLegend,
} from "./schema.js";
import {
  Figure,
  LinearScale,
  LogScale,
  MARKERS,
  PALETTE,
  SeriesPoint,
  dataExtent,
} from "./svg.js";

export type FigureKind = "timeseries" | "scaling" | "chi_scan";
export type ErrorBarKind = "std" | "sem";
export type AxisScale = "linear" | "log-N";

export interface PlotSpec {
  kind: FigureKind;
  inputs: string[];
  /** fit parameters file; required for scaling plots */
  fitPath?: string;
  errorBar: ErrorBarKind;
  axis: AxisScale;
  output: string;
}

const ERROR_BAR_BY_KIND: Record<FigureKind, ErrorBarKind> = {
  timeseries: "std",
  scaling: "sem",
  chi_scan: "sem",
};

export function validateSpec(spec: PlotSpec): void {
  const expected = ERROR_BAR_BY_KIND[spec.kind];
  if (spec.errorBar !== expected) {
    throw new Error(
      `${spec.kind} figures use ${expected} error bars, not ${spec.errorBar}`,
    );
  }
  if (spec.kind === "scaling" && spec.axis !== "log-N") {
    throw new Error("scaling figures use the log-N axis");
  }
  if (spec.inputs.length === 0) {
    throw new Error("no input files given");
  }
  const absent = spec.inputs.filter((p) => !existsSync(p));
  if (absent.length > 0) {
    throw new Error(`missing input series: ${absent.join(", ")}`);
  }
}

function loadAllStats(paths: string[]): EnsembleStats[] {
  return paths.map(loadStats);
}

/** One curve per config: mean S(t) with one-standard-deviation bars. */
export function renderTimeseries(spec: PlotSpec): string {
  validateSpec(spec);
  const series = loadAllStats(spec.inputs);
  const ys: number[] = [];
  for (const s of series) {
    s.mean_s.forEach((m, i) => {
      ys.push(m - s.std_s[i], m + s.std_s[i]);
    });
  }
  const [yLo, yHi] = dataExtent(ys.concat([0]));
  const tMax = Math.max(...series.map((s) => s.times[s.times.length - 1] ?? 1));
  const fig = new Figure(
    (r0, r1) => new LinearScale(0, tMax, r0, r1),
    (r0, r1) => new LinearScale(yLo, yHi, r0, r1),
    "Entanglement entropy vs time",
    "t",
    "S(t)",
  );
  const legend: { label: string; color: string; shape: (typeof MARKERS)[number] }[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const shape = MARKERS[i % MARKERS.length];
    const pts: SeriesPoint[] = s.times.map((t, k) => ({
      x: t,
      y: s.mean_s[k],
      err: s.std_s[k],
    }));
    fig.polyline(pts, color);
    fig.errorBars(pts, color);
    fig.markers(pts, color, shape);
    legend.push({ label: thetaLegend(s), color, shape });
  });
  fig.legend(legend);
  return fig.render();
}

/**
 * S(inf) +- sem against N on a log-N axis, one series per theta, with the
 * fitted lines and their parameters annotated verbatim from the fit file.
 */
export function renderScaling(spec: PlotSpec): string {
  validateSpec(spec);
  if (!spec.fitPath) {
    throw new Error("scaling figures need --fit with fit_scaling output");
  }
  const series = loadAllStats(spec.inputs);
  const fits: FitDocument = loadFit(spec.fitPath);

  const byTheta = new Map<string, EnsembleStats[]>();
  for (const s of series) {
    const key = s.theta_label ?? String(s.theta);
    const group = byTheta.get(key) ?? [];
    group.push(s);
    byTheta.set(key, group);
  }
  for (const [key, group] of byTheta) {
    if (group.length < 3) {
      throw new Error(`theta=${key}: need at least 3 sizes, got ${group.length}`);
    }
    group.sort((a, b) => a.n_qubits - b.n_qubits);
  }

  const ns = series.map((s) => s.n_qubits);
  const ys = series.flatMap((s) => [
    s.s_inf - (s.s_inf_sem ?? 0),
    s.s_inf + (s.s_inf_sem ?? 0),
  ]);
  const [yLo, yHi] = dataExtent(ys);
  const nLo = Math.min(...ns) * 0.9;
  const nHi = Math.max(...ns) * 1.1;
  const fig = new Figure(
    (r0, r1) => new LogScale(nLo, nHi, r0, r1),
    (r0, r1) => new LinearScale(yLo, yHi, r0, r1),
    "Long-time entanglement entropy vs system size",
    "N",
    "S(t→∞)",
  );

  const legend: { label: string; color: string; shape: (typeof MARKERS)[number] }[] = [];
  const annotations: string[] = [];
  let i = 0;
  for (const [key, group] of byTheta) {
    const color = PALETTE[i % PALETTE.length];
    const shape = MARKERS[i % MARKERS.length];
    const pts: SeriesPoint[] = group.map((s) => ({
      x: s.n_qubits,
      y: s.s_inf,
      err: s.s_inf_sem ?? 0,
    }));
    fig.errorBars(pts, color);
    fig.markers(pts, color, shape);
    legend.push({ label: thetaLegend(group[0]), color, shape });

    const fit = fits[key];
    if (fit !== undefined) {
      const line: SeriesPoint[] = [];
      for (let k = 0; k <= 50; k++) {
        const n = nLo * Math.exp((Math.log(nHi) - Math.log(nLo)) * (k / 50));
        const x = fit.model === "log" ? Math.log(n) : n;
        line.push({ x: n, y: fit.slope * x + fit.intercept });
      }
      fig.polyline(line, color, true);
      annotations.push(
        `${thetaLegend(group[0])} [${fit.model}]: slope=${exact(fit.slope)} intercept=${exact(fit.intercept)}`,
      );
    }
    i += 1;
  }
  fig.legend(legend);
  fig.annotate(annotations);
  return fig.render();
}

/** S(inf) +- sem against the bond dimension, chi on a log axis. */
export function renderChiScan(spec: PlotSpec): string {
  validateSpec(spec);
  const scans: ChiScanDocument[] = spec.inputs.map(loadChiScan);
  const ys = scans.flatMap((d) =>
    d.s_inf.flatMap((s, k) => [s - (d.sem[k] ?? 0), s + (d.sem[k] ?? 0)]),
  );
  const chis = scans.flatMap((d) => d.chi);
  const [yLo, yHi] = dataExtent(ys);
  const fig = new Figure(
    (r0, r1) => new LogScale(Math.min(...chis) * 0.8, Math.max(...chis) * 1.25, r0, r1),
    (r0, r1) => new LinearScale(yLo, yHi, r0, r1),
    "Long-time entanglement entropy vs bond dimension",
    "χ",
    "S(t→∞)",
  );
  const legend: { label: string; color: string; shape: (typeof MARKERS)[number] }[] = [];
  scans.forEach((d, i) => {
    const color = PALETTE[i % PALETTE.length];
    const shape = MARKERS[i % MARKERS.length];
    const pts: SeriesPoint[] = d.chi.map((chi, k) => ({
      x: chi,
      y: d.s_inf[k],
      err: d.sem[k] ?? 0,
    }));
    fig.polyline(pts, color);
    fig.errorBars(pts, color);
    fig.markers(pts, color, shape);
    legend.push({ label: d.config_id, color, shape });
  });
  fig.legend(legend);
  return fig.render();
}
