/** Hand-rolled SVG line charts: deterministic output, no DOM dependency. */

export interface Series {
  name: string;
  points: { x: number; y: number; std: number }[];
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  errorBars?: boolean;
}

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 48, right: 32, bottom: 56, left: 86 };
const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARKERS = ["circle", "square", "diamond", "triangle"] as const;

function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 1;
    [lo, hi] = [lo - pad, hi + pad];
  }
  const span = hi - lo;
  const step0 = span / Math.max(1, n - 1);
  const mag = 10 ** Math.floor(Math.log10(step0));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? 10 * mag;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = start; t <= hi + 1e-12 * span; t += step) ticks.push(t);
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return Number(v.toPrecision(5)).toString();
}

function marker(kind: (typeof MARKERS)[number], cx: number, cy: number, color: string, value: number): string {
  const attrs = `fill="${color}" stroke="none" data-value="${value}"`;
  switch (kind) {
    case "circle":
      return `<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="4" ${attrs}/>`;
    case "square":
      return `<rect x="${(cx - 3.5).toFixed(2)}" y="${(cy - 3.5).toFixed(2)}" width="7" height="7" ${attrs}/>`;
    case "diamond":
      return `<path d="M ${cx.toFixed(2)} ${(cy - 5).toFixed(2)} L ${(cx + 5).toFixed(2)} ${cy.toFixed(2)} L ${cx.toFixed(2)} ${(cy + 5).toFixed(2)} L ${(cx - 5).toFixed(2)} ${cy.toFixed(2)} Z" ${attrs}/>`;
    case "triangle":
      return `<path d="M ${cx.toFixed(2)} ${(cy - 5).toFixed(2)} L ${(cx + 4.5).toFixed(2)} ${(cy + 4).toFixed(2)} L ${(cx - 4.5).toFixed(2)} ${(cy + 4).toFixed(2)} Z" ${attrs}/>`;
  }
}

export function renderChart(spec: ChartSpec): string {
  const xs = spec.series.flatMap((s) => s.points.map((p) => p.x));
  const ys = spec.series.flatMap((s) =>
    s.points.flatMap((p) => (spec.errorBars ? [p.y - p.std, p.y + p.std] : [p.y])),
  );
  if (xs.length === 0) {
    throw new Error("nothing to plot: no feasible data points");
  }
  let [xLo, xHi] = [Math.min(...xs), Math.max(...xs)];
  let [yLo, yHi] = [Math.min(...ys), Math.max(...ys)];
  if (xLo === xHi) [xLo, xHi] = [xLo - 1, xHi + 1];
  if (yLo === yHi) [yLo, yHi] = [yLo - Math.abs(yLo || 1) * 0.1, yHi + Math.abs(yHi || 1) * 0.1];
  const yPad = (yHi - yLo) * 0.06;
  yLo -= yPad;
  yHi += yPad;

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const px = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const py = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(`<text x="${WIDTH / 2}" y="26" text-anchor="middle" font-size="16">${spec.title}</text>`);

  for (const t of niceTicks(xLo, xHi)) {
    const x = px(t);
    parts.push(`<line x1="${x.toFixed(2)}" y1="${MARGIN.top}" x2="${x.toFixed(2)}" y2="${MARGIN.top + plotH}" stroke="#e0e0e0" stroke-width="1"/>`);
    parts.push(`<text x="${x.toFixed(2)}" y="${MARGIN.top + plotH + 20}" text-anchor="middle" font-size="12">${fmt(t)}</text>`);
  }
  for (const t of niceTicks(yLo, yHi)) {
    const y = py(t);
    parts.push(`<line x1="${MARGIN.left}" y1="${y.toFixed(2)}" x2="${MARGIN.left + plotW}" y2="${y.toFixed(2)}" stroke="#e0e0e0" stroke-width="1"/>`);
    parts.push(`<text x="${MARGIN.left - 8}" y="${(y + 4).toFixed(2)}" text-anchor="end" font-size="12">${fmt(t)}</text>`);
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`);
  parts.push(`<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="13">${spec.xLabel}</text>`);
  parts.push(`<text x="20" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 20 ${MARGIN.top + plotH / 2})">${spec.yLabel}</text>`);

  spec.series.forEach((series, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const kind = MARKERS[idx % MARKERS.length];
    const pts = [...series.points].sort((a, b) => a.x - b.x);
    const path = pts.map((p, i) => `${i === 0 ? "M" : "L"} ${px(p.x).toFixed(2)} ${py(p.y).toFixed(2)}`).join(" ");
    parts.push(`<path class="curve" data-method="${series.name}" d="${path}" fill="none" stroke="${color}" stroke-width="2"/>`);
    for (const p of pts) {
      if (spec.errorBars && p.std > 0) {
        const x = px(p.x);
        parts.push(`<line x1="${x.toFixed(2)}" y1="${py(p.y - p.std).toFixed(2)}" x2="${x.toFixed(2)}" y2="${py(p.y + p.std).toFixed(2)}" stroke="${color}" stroke-width="1"/>`);
        parts.push(`<line x1="${(x - 4).toFixed(2)}" y1="${py(p.y - p.std).toFixed(2)}" x2="${(x + 4).toFixed(2)}" y2="${py(p.y - p.std).toFixed(2)}" stroke="${color}" stroke-width="1"/>`);
        parts.push(`<line x1="${(x - 4).toFixed(2)}" y1="${py(p.y + p.std).toFixed(2)}" x2="${(x + 4).toFixed(2)}" y2="${py(p.y + p.std).toFixed(2)}" stroke="${color}" stroke-width="1"/>`);
      }
      parts.push(marker(kind, px(p.x), py(p.y), color, p.y));
    }
    const ly = MARGIN.top + 14 + idx * 20;
    const lx = MARGIN.left + plotW - 150;
    parts.push(`<line x1="${lx}" y1="${ly - 4}" x2="${lx + 26}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    parts.push(marker(kind, lx + 13, ly - 4, color, NaN));
    parts.push(`<text x="${lx + 32}" y="${ly}" font-size="12">${series.name}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
