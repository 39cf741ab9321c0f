/**
 * Figure-script entry point.
 *
 *   node dist/cli.js timeseries --stats <stats.json...> --out fig.svg
 *   node dist/cli.js scaling    --stats <stats.json...> --fit fit.json --out fig.svg
 *   node dist/cli.js chi-scan   --scan <chi_scan.json...> --out fig.svg
 *
 * Inputs are the harness's documented output files; nothing is recomputed.
 */

import { writeFileSync } from "node:fs";

import { PlotSpec, renderChiScan, renderScaling, renderTimeseries } from "./plots.js";

interface Parsed {
  command: string;
  lists: Map<string, string[]>;
  scalars: Map<string, string>;
}

function parseArgs(argv: string[]): Parsed {
  if (argv.length === 0) {
    throw new Error("usage: <timeseries|scaling|chi-scan> [options]");
  }
  const [command, ...rest] = argv;
  const lists = new Map<string, string[]>();
  const scalars = new Map<string, string>();
  let current: string | null = null;
  for (const token of rest) {
    if (token.startsWith("--")) {
      current = token.slice(2);
      if (!lists.has(current)) lists.set(current, []);
    } else if (current !== null) {
      lists.get(current)!.push(token);
    } else {
      throw new Error(`unexpected argument '${token}'`);
    }
  }
  for (const [key, values] of lists) {
    if (values.length === 1) scalars.set(key, values[0]);
  }
  return { command, lists, scalars };
}

function requireList(parsed: Parsed, key: string): string[] {
  const values = parsed.lists.get(key);
  if (!values || values.length === 0) {
    throw new Error(`--${key} requires at least one value`);
  }
  return values;
}

function requireScalar(parsed: Parsed, key: string): string {
  const value = parsed.scalars.get(key);
  if (value === undefined) {
    throw new Error(`--${key} <value> is required`);
  }
  return value;
}

export function run(argv: string[]): number {
  const parsed = parseArgs(argv);
  let spec: PlotSpec;
  let svg: string;
  switch (parsed.command) {
    case "timeseries":
      spec = {
        kind: "timeseries",
        inputs: requireList(parsed, "stats"),
        errorBar: "std",
        axis: "linear",
        output: requireScalar(parsed, "out"),
      };
      svg = renderTimeseries(spec);
      break;
    case "scaling":
      spec = {
        kind: "scaling",
        inputs: requireList(parsed, "stats"),
        fitPath: requireScalar(parsed, "fit"),
        errorBar: "sem",
        axis: "log-N",
        output: requireScalar(parsed, "out"),
      };
      svg = renderScaling(spec);
      break;
    case "chi-scan":
      spec = {
        kind: "chi_scan",
        inputs: requireList(parsed, "scan"),
        errorBar: "sem",
        axis: "linear",
        output: requireScalar(parsed, "out"),
      };
      svg = renderChiScan(spec);
      break;
    default:
      throw new Error(`unknown command '${parsed.command}'`);
  }
  writeFileSync(spec.output, svg);
  console.log(`wrote ${spec.output}`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  try {
    process.exit(run(process.argv.slice(2)));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  }
}
