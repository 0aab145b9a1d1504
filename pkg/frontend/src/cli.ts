#!/usr/bin/env node
/** swipt-plots: render sweep CSVs to static SVG figures.
 *
 *   swipt-plots render --csv results.csv --out figure.svg [--metric total_rate]
 *   swipt-plots render-all --dir results/ [--out figures/]
 */

import { mkdirSync } from "fs";

import { FigureError, renderAll, renderFigure } from "./figure.js";
import { CsvFormatError } from "./csv.js";

function parseArgs(argv: string[]): { command: string; flags: Map<string, string> } {
  const [command, ...rest] = argv;
  const flags = new Map<string, string>();
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key?.startsWith("--") || rest[i + 1] === undefined) {
      throw new Error(`malformed arguments near ${key}`);
    }
    flags.set(key.slice(2), rest[i + 1]);
  }
  return { command: command ?? "", flags };
}

function main(): number {
  const { command, flags } = parseArgs(process.argv.slice(2));
  try {
    if (command === "render") {
      const csv = flags.get("csv");
      const out = flags.get("out");
      if (!csv || !out) {
        console.error("usage: swipt-plots render --csv <file.csv> --out <file.svg> [--metric <name>]");
        return 2;
      }
      renderFigure({ csvPath: csv, outputPath: out, metricColumn: flags.get("metric") });
      console.log(`wrote ${out}`);
      return 0;
    }
    if (command === "render-all") {
      const dir = flags.get("dir");
      if (!dir) {
        console.error("usage: swipt-plots render-all --dir <results-dir> [--out <figures-dir>]");
        return 2;
      }
      const out = flags.get("out");
      if (out) mkdirSync(out, { recursive: true });
      const report = renderAll(dir, out);
      for (const item of report.rendered) {
        console.log(`rendered ${item.experiment}: ${item.image}`);
      }
      for (const failure of report.failures) {
        console.error(`failed ${failure.csv}: ${failure.error}`);
      }
      console.log(`${report.rendered.length} figure(s), ${report.failures.length} failure(s)`);
      return 0;
    }
    console.error("usage: swipt-plots <render|render-all> ...");
    return 2;
  } catch (err) {
    if (err instanceof FigureError || err instanceof CsvFormatError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

process.exit(main());
