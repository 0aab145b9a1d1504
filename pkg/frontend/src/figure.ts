/** Figure assembly: one curve per method of per-sweep-value means, error bars
 * from the per-realization standard deviation, cross-checked against the
 * harness's own summary block. */

import { readdirSync, statSync, writeFileSync } from "fs";
import { join, resolve } from "path";

import { CsvFormatError, SweepCsv, aggregate, metricsOf, parseSweepCsv } from "./csv.js";
import { renderChart } from "./svg.js";

export interface FigureSpec {
  csvPath: string;
  metricColumn?: string; // default: first metric in the file
  outputPath: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
  errorBars?: boolean;
  meanTolerance?: number; // relative mismatch allowed vs the summary block
}

const AXIS_LABELS: Record<string, string> = {
  eh_w: "harvested power [W]",
  total_rate: "sum rate [bps/Hz]",
  min_user_rate: "minimum user rate [bps/Hz]",
  min_user_eh_w: "minimum harvested power [W]",
  ee_bits_per_joule: "energy efficiency [bits/Hz/J]",
  harvested_w: "harvested power [W]",
};

const X_LABELS: Record<string, string> = {
  "eh-vs-pmax": "maximum transmit power [dBm]",
  "rate-vs-pmax": "maximum transmit power [dBm]",
  "ee-vs-pmax": "maximum transmit power [dBm]",
  "throughput-vs-pmax": "maximum transmit power [dBm]",
  "harvest-vs-pmax": "maximum transmit power [dBm]",
  "eh-vs-rmin": "minimum rate requirement [bps/Hz]",
  "rate-vs-rmin": "minimum rate requirement [bps/Hz]",
  "ee-vs-rmin": "minimum rate requirement [bps/Hz]",
  "eh-vs-distance": "user distance [m]",
  "ee-vs-distance": "user distance [m]",
  "rate-vs-cells": "number of cells",
  "eh-vs-iterations": "iteration",
  "rate-vs-iterations": "iteration",
  "ee-convergence": "iteration",
};

export class FigureError extends Error {}

export function buildSeries(csv: SweepCsv, metric: string, meanTolerance = 1e-9) {
  const metrics = metricsOf(csv);
  if (!metrics.includes(metric)) {
    throw new FigureError(`metric column ${metric} not present (have: ${metrics.join(", ")})`);
  }
  const grouped = aggregate(csv, metric);
  // cross-check against the harness's own summary block
  for (const s of csv.summary) {
    if (s.metric !== metric) continue;
    const got = grouped.get(s.method)?.get(s.sweepValue);
    if (!got || got.count === 0) continue;
    const rel = Math.abs(got.mean - s.mean) / Math.max(1e-300, Math.abs(s.mean));
    if (rel > meanTolerance) {
      throw new FigureError(
        `recomputed mean ${got.mean} disagrees with the summary ${s.mean} ` +
        `for ${s.method}@${s.sweepValue} (${metric})`,
      );
    }
  }
  const series = [];
  const skipped: string[] = [];
  for (const [method, byValue] of grouped) {
    const points = [];
    for (const [x, stats] of byValue) {
      if (stats.count === 0) {
        skipped.push(`${method}@${x}`);
        continue; // infeasible-only sweep point: omitted
      }
      points.push({ x, y: stats.mean, std: stats.std });
    }
    if (points.length) series.push({ name: method, points });
  }
  if (skipped.length) {
    console.warn(`swipt-plots: omitted infeasible-only points: ${skipped.join(", ")}`);
  }
  if (!series.length) {
    throw new FigureError("no feasible data to plot");
  }
  series.sort((a, b) => a.name.localeCompare(b.name));
  return series;
}

export function renderFigure(spec: FigureSpec): string {
  const csv = parseSweepCsv(spec.csvPath);
  const metric = spec.metricColumn ?? metricsOf(csv)[0];
  if (!metric) {
    throw new FigureError("CSV contains no data rows");
  }
  const series = buildSeries(csv, metric, spec.meanTolerance ?? 1e-9);
  const experiment = csv.header["experiment"] ?? "sweep";
  const svg = renderChart({
    title: spec.title ?? `${experiment}: ${metric}`,
    xLabel: spec.xLabel ?? X_LABELS[experiment] ?? "sweep value",
    yLabel: spec.yLabel ?? AXIS_LABELS[metric] ?? metric,
    series,
    errorBars: spec.errorBars ?? true,
  });
  writeFileSync(spec.outputPath, svg);
  return spec.outputPath;
}

export interface RenderAllReport {
  rendered: { csv: string; image: string; experiment: string }[];
  failures: { csv: string; error: string }[];
}

export function renderAll(directory: string, outDir?: string): RenderAllReport {
  const report: RenderAllReport = { rendered: [], failures: [] };
  const target = outDir ?? directory;
  const entries = readdirSync(directory)
    .filter((name) => name.endsWith(".csv"))
    .sort();
  for (const name of entries) {
    const csvPath = join(directory, name);
    if (!statSync(csvPath).isFile()) continue;
    try {
      const csv = parseSweepCsv(csvPath);
      const experiment = csv.header["experiment"];
      if (!experiment) {
        throw new FigureError("no experiment tag in the header comments");
      }
      const image = resolve(target, `${experiment}.svg`);
      renderFigure({ csvPath, outputPath: image });
      report.rendered.push({ csv: csvPath, image, experiment });
    } catch (err) {
      report.failures.push({ csv: csvPath, error: err instanceof Error ? err.message : String(err) });
    }
  }
  return report;
}

export { CsvFormatError };
