// Optional outlierness sparkline above the bar: one polyline over the scored
// windows, gaps where windows are unscored. Hidden behind a toggle.

import type { ScoreSeriesPayload } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderSparkline(series: ScoreSeriesPayload, width = 800, height = 60): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("preserveAspectRatio", "none");
  svg.classList.add("sparkline");

  const scored = series.windows.filter((w) => !w.unscored && w.outlierness !== null);
  if (scored.length === 0) return svg;

  const duration = series.windows[series.windows.length - 1].end_s;
  const values = scored.map((w) => w.outlierness as number);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;

  // split into segments at unscored gaps so the line does not bridge them
  let segment: string[] = [];
  const flush = () => {
    if (segment.length > 1) {
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", segment.join(" "));
      line.setAttribute("fill", "none");
      svg.appendChild(line);
    }
    segment = [];
  };
  for (const w of series.windows) {
    if (w.unscored || w.outlierness === null) {
      flush();
      continue;
    }
    const x = ((w.start_s + w.end_s) / 2 / duration) * width;
    const y = height - ((w.outlierness - lo) / span) * (height - 4) - 2;
    segment.push(`${x.toFixed(1)},${y.toFixed(1)}`);
  }
  flush();
  return svg;
}
