export {
  CANONICAL_HEADER,
  METRIC_NAMES,
  STRATEGIES,
  TOPOLOGIES,
  parseCellName,
  parseRunText,
} from "./csv.js";
export type { CellName, MetricName, MetricsRow, RunFile } from "./csv.js";

export { buildFigure, groupByTopology, oracleTotals } from "./series.js";
export type { BarDatum, CellSeries, FigureData } from "./series.js";

export { renderBarFigure, renderLineFigure } from "./svg.js";
