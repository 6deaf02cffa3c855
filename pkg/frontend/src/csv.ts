/**
 * The metrics CSV schema — the only interface to the simulation side.
 *
 * Every run file carries the canonical nine-column header and one row per
 * recorded round; cell identity is encoded in the file name as
 * `{estimator}_{strategy}_{topology}_rep{r}.csv`. Everything here validates
 * strictly and names the offending file (and line) in its errors.
 */

export const CANONICAL_HEADER =
  "round,grad_x_sq,grad_y_sq,consensus_x,consensus_y,oracle_max,oracle_mean,pi,wallclock_us";

export interface MetricsRow {
  round: number;
  grad_x_sq: number;
  grad_y_sq: number;
  consensus_x: number;
  consensus_y: number;
  oracle_max: number;
  oracle_mean: number;
  pi: number;
  wallclock_us: number;
}

export type MetricName = "grad_x_sq" | "grad_y_sq" | "consensus_x" | "consensus_y";

export const METRIC_NAMES: readonly MetricName[] = [
  "grad_x_sq",
  "grad_y_sq",
  "consensus_x",
  "consensus_y",
];

/** A parsed run file: cell identity plus its recorded rows. */
export interface RunFile {
  path: string;
  estimator: string;
  strategy: string;
  topology: string;
  rep: number;
  rows: MetricsRow[];
}

export interface CellName {
  estimator: string;
  strategy: string;
  topology: string;
  rep: number;
}

// Strategy and topology names anchor the right end of a file name, which is
// what makes the underscore-bearing estimator names (loopless_sarah, ...)
// unambiguous. These lists are part of the documented naming contract.
export const STRATEGIES = ["semi_atc_gt", "non_atc_gt", "atc_gt", "extra", "ed"];
export const TOPOLOGIES = ["metropolis_random", "complete", "ring", "line"];

/** Split `{estimator}_{strategy}_{topology}_rep{r}.csv` into its parts. */
export function parseCellName(fileName: string): CellName {
  const base = fileName.replace(/^.*\//, "");
  const m = /^(.+)_rep(\d+)\.csv$/.exec(base);
  if (!m) {
    throw new Error(`${base}: not a cell file (expected {estimator}_{strategy}_{topology}_rep{r}.csv)`);
  }
  let rest = m[1]!;
  const rep = Number(m[2]!);
  const topology = TOPOLOGIES.find((t) => rest.endsWith("_" + t));
  if (!topology) {
    throw new Error(`${base}: no known topology in file name`);
  }
  rest = rest.slice(0, rest.length - topology.length - 1);
  const strategy = STRATEGIES.find((s) => rest.endsWith("_" + s));
  if (!strategy) {
    throw new Error(`${base}: no known strategy in file name`);
  }
  const estimator = rest.slice(0, rest.length - strategy.length - 1);
  if (!estimator) {
    throw new Error(`${base}: empty estimator in file name`);
  }
  return { estimator, strategy, topology, rep };
}

const COLUMNS = CANONICAL_HEADER.split(",") as (keyof MetricsRow)[];

/** Parse one run file's text. `path` is used only for error messages. */
export function parseRunText(path: string, text: string): RunFile {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new Error(`${path}: empty file`);
  }
  if (lines[0] !== CANONICAL_HEADER) {
    throw new Error(`${path}: header mismatch (got ${JSON.stringify(lines[0])})`);
  }
  const rows: MetricsRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i]!.split(",");
    if (parts.length !== COLUMNS.length) {
      throw new Error(`${path}:${i + 1}: expected ${COLUMNS.length} fields, got ${parts.length}`);
    }
    const row = {} as MetricsRow;
    for (let c = 0; c < COLUMNS.length; c++) {
      const v = Number(parts[c]);
      if (Number.isNaN(v)) {
        throw new Error(`${path}:${i + 1}: field ${COLUMNS[c]} is not a number (${JSON.stringify(parts[c])})`);
      }
      row[COLUMNS[c]!] = v;
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  return { path, ...parseCellName(path), rows };
}
