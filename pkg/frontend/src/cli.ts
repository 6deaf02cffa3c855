#!/usr/bin/env node
/**
 * saddlemesh-plots — render metrics CSVs from a grid run into SVG figures.
 *
 * Usage:
 *   saddlemesh-plots <dir-or-csv...> --out DIR [--metric NAME] [--linear]
 *
 * Inputs are per-repetition metrics CSVs named
 * {estimator}_{strategy}_{topology}_rep{N}.csv; a directory argument is
 * expanded to the *.csv files inside it (summary.csv is skipped). Emits one
 * line figure per topology plus a bar chart of oracle calls.
 *
 * Exit codes: 0 success, 1 unreadable/invalid input, 2 usage error.
 */

import { readdirSync, readFileSync, statSync, mkdirSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";
import { parseArgs } from "node:util";
import process from "node:process";

import { METRIC_NAMES, parseRunText, type MetricName, type RunFile } from "./csv.js";
import { buildFigure, groupByTopology, oracleTotals } from "./series.js";
import { renderBarFigure, renderLineFigure } from "./svg.js";

const USAGE =
  "usage: saddlemesh-plots <dir-or-csv...> --out DIR [--metric NAME] [--linear]\n" +
  `  --metric NAME   metric column to plot (default grad_x_sq); one of ${METRIC_NAMES.join(", ")}\n` +
  "  --linear        linear y axis (default: log scale)\n" +
  "  --out DIR       output directory for SVG files (required)\n";

function fail(code: 1 | 2, message: string): never {
  process.stderr.write(message.endsWith("\n") ? message : message + "\n");
  process.exit(code);
}

/** Expand an argument into CSV paths: file, directory, or '*' basename glob. */
function expandInput(arg: string): string[] {
  const base = basename(arg);
  if (base.includes("*")) {
    const dir = dirname(arg);
    const re = new RegExp(
      "^" + base.split("*").map((p) => p.replace(/[.+?^${}()|[\]\\]/g, "\\$&")).join(".*") + "$",
    );
    let names: string[];
    try {
      names = readdirSync(dir);
    } catch {
      fail(1, `cannot read directory ${dir}`);
    }
    return names.filter((n) => re.test(n)).sort().map((n) => join(dir, n));
  }
  let st;
  try {
    st = statSync(arg);
  } catch {
    fail(1, `cannot read ${arg}`);
  }
  if (st.isDirectory()) {
    return readdirSync(arg)
      .filter((n) => n.endsWith(".csv") && n !== "summary.csv")
      .sort()
      .map((n) => join(arg, n));
  }
  return [arg];
}

export function main(argv: string[]): void {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string" },
        metric: { type: "string", default: "grad_x_sq" },
        linear: { type: "boolean", default: false },
        help: { type: "boolean", default: false },
      },
    });
  } catch (e) {
    fail(2, `${(e as Error).message}\n${USAGE}`);
  }
  if (parsed.values.help) {
    process.stdout.write(USAGE);
    process.exit(0);
  }
  if (parsed.positionals.length === 0) {
    fail(2, `no input files given\n${USAGE}`);
  }
  if (!parsed.values.out) {
    fail(2, `--out DIR is required\n${USAGE}`);
  }
  const metric = parsed.values.metric as string;
  if (!(METRIC_NAMES as readonly string[]).includes(metric)) {
    fail(2, `unknown metric '${metric}'; expected one of ${METRIC_NAMES.join(", ")}\n${USAGE}`);
  }
  const logY = !parsed.values.linear;

  const paths = parsed.positionals.flatMap(expandInput);
  if (paths.length === 0) {
    fail(1, "no CSV files matched the inputs");
  }

  const runs: RunFile[] = [];
  for (const path of paths) {
    let text: string;
    try {
      text = readFileSync(path, "utf8");
    } catch {
      fail(1, `cannot read ${path}`);
    }
    try {
      runs.push(parseRunText(path, text));
    } catch (e) {
      fail(1, (e as Error).message);
    }
  }

  const outDir = parsed.values.out as string;
  mkdirSync(outDir, { recursive: true });

  const written: string[] = [];
  for (const [topology, topoRuns] of groupByTopology(runs)) {
    const fig = buildFigure(topology, topoRuns, metric as MetricName, logY);
    for (const w of fig.warnings) {
      process.stderr.write(`warning: ${w}\n`);
    }
    const out = join(outDir, `${metric}_${topology}.svg`);
    writeFileSync(out, renderLineFigure(fig), "utf8");
    written.push(out);
  }
  const bars = oracleTotals(runs);
  const barOut = join(outDir, "oracle_calls.svg");
  writeFileSync(barOut, renderBarFigure(bars), "utf8");
  written.push(barOut);

  for (const w of written) {
    process.stdout.write(`wrote ${w}\n`);
  }
}

main(process.argv.slice(2));
