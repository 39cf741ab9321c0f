/**
 * Parsers for the simulation harness's output files.
 *
 * These scripts never recompute physics: every plotted number is read
 * verbatim from the stats / fit / chi-scan documents written by the
 * harness. Parsed doubles are annotated with String(x), which is the
 * shortest round-trip representation, so annotations equal file contents
 * exactly.
 */

import { readFileSync } from "node:fs";

/** Aggregated ensemble statistics for one config (stats_<id>.json). */
export interface EnsembleStats {
  config_id: string;
  n_qubits: number;
  theta: number;
  theta_label: string | null;
  p: number;
  chi_max: number;
  n_trajectories: number;
  n_failed: number;
  times: number[];
  mean_s: number[];
  std_s: number[];
  sem_s: number[] | null;
  s_inf: number;
  s_inf_sem: number | null;
  peak_bond: number;
  wall_time: number;
  failed: boolean;
}

/** One fitted scaling model from fit_<name>.json, keyed by theta label. */
export interface FitEntry {
  model: "log" | "linear";
  slope: number;
  intercept: number;
  residuals: number[];
  points: [number, number, number | null][];
}

export type FitDocument = Record<string, FitEntry>;

/** Bond-dimension scan summary (chi_scan_<id>.json). */
export interface ChiScanDocument {
  config_id: string;
  chi: number[];
  s_inf: number[];
  sem: (number | null)[];
}

const STATS_KEYS = [
  "config_id",
  "n_qubits",
  "theta",
  "times",
  "mean_s",
  "std_s",
  "s_inf",
];

export function loadStats(path: string): EnsembleStats {
  const doc = JSON.parse(readFileSync(path, "utf8"));
  for (const key of STATS_KEYS) {
    if (!(key in doc)) {
      throw new Error(`${path}: missing stats key '${key}'`);
    }
  }
  return doc as EnsembleStats;
}

export function loadFit(path: string): FitDocument {
  const doc = JSON.parse(readFileSync(path, "utf8")) as FitDocument;
  for (const [key, entry] of Object.entries(doc)) {
    if (entry.model !== "log" && entry.model !== "linear") {
      throw new Error(`${path}: fit '${key}' has unknown model '${entry.model}'`);
    }
  }
  return doc;
}

export function loadChiScan(path: string): ChiScanDocument {
  const doc = JSON.parse(readFileSync(path, "utf8"));
  if (!Array.isArray(doc.chi) || !Array.isArray(doc.s_inf)) {
    throw new Error(`${path}: not a chi-scan document`);
  }
  return doc as ChiScanDocument;
}

/**
 * Render a measurement-strength label from the exact rational metadata
 * ("pi/3" -> "π/3", "2pi/3" -> "2π/3"). Falls back to the numeric theta
 * only when no label was recorded.
 */
export function thetaLegend(stats: Pick<EnsembleStats, "theta" | "theta_label">): string {
  const label = stats.theta_label;
  if (label === null || label === undefined) {
    return `θ = ${String(stats.theta)}`;
  }
  const m = label.match(/^(\d*)pi(?:\/(\d+))?$/);
  if (!m) {
    return `θ = ${label}`;
  }
  const num = m[1] === "" ? "" : m[1];
  const den = m[2] === undefined ? "" : `/${m[2]}`;
  return `θ = ${num}π${den}`;
}

/** Exact decimal annotation for a parsed double (round-trips via JSON). */
export function exact(value: number): string {
  return String(value);
}
