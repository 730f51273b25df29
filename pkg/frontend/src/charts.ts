// SVG chart rendering for one section: prediction error vs adaptive
// threshold on a shared time axis, alarm markers, model-version annotations
// and a visible discontinuity where the event stream reported a gap.

import type { SectionTrace } from "./store.js";
import type { AlarmInfo } from "./types.js";

export interface ChartOptions {
  width: number;
  height: number;
  logScale?: boolean;
}

const MARGIN = { left: 48, right: 8, top: 8, bottom: 20 };

function scale(value: number, lo: number, hi: number, outLo: number, outHi: number): number {
  if (hi <= lo) return (outLo + outHi) / 2;
  return outLo + ((value - lo) / (hi - lo)) * (outHi - outLo);
}

export function renderSectionChart(
  section: number,
  trace: SectionTrace,
  alarms: AlarmInfo[],
  versionChanges: number[],
  options: ChartOptions = { width: 860, height: 180 },
): string {
  const { width, height } = options;
  const points = trace.points;
  if (points.length === 0) {
    return `<svg width="${width}" height="${height}" data-section="${section}"><text x="10" y="20">waiting for data</text></svg>`;
  }
  const transform = options.logScale
    ? (v: number) => Math.log10(Math.max(v, 1e-12))
    : (v: number) => v;
  const tLo = points[0].t;
  const tHi = points[points.length - 1].t;
  const values = points.flatMap((p) => [transform(p.mse), transform(p.threshold)]);
  const vLo = Math.min(...values);
  const vHi = Math.max(...values);
  const x = (t: number) => scale(t, tLo, tHi, MARGIN.left, width - MARGIN.right);
  const y = (v: number) => scale(transform(v), vLo, vHi, height - MARGIN.bottom, MARGIN.top);

  const line = (key: "mse" | "threshold") =>
    points.map((p) => `${x(p.t).toFixed(1)},${y(p[key]).toFixed(1)}`).join(" ");

  const parts: string[] = [];
  parts.push(
    `<svg width="${width}" height="${height}" data-section="${section}" xmlns="http://www.w3.org/2000/svg">`,
  );
  parts.push(`<polyline class="mse" fill="none" stroke="#2563eb" stroke-width="1" points="${line("mse")}"/>`);
  parts.push(
    `<polyline class="threshold" fill="none" stroke="#dc2626" stroke-width="1.2" points="${line("threshold")}"/>`,
  );
  for (const alarm of alarms) {
    if (alarm.source === "section" && alarm.section === section &&
        alarm.t_reported >= tLo && alarm.t_reported <= tHi) {
      parts.push(
        `<circle class="alarm" cx="${x(alarm.t_reported).toFixed(1)}" cy="${MARGIN.top + 4}" r="4" fill="#f59e0b" data-alarm="${alarm.id}"/>`,
      );
    }
  }
  for (const t of versionChanges) {
    if (t >= tLo && t <= tHi) {
      parts.push(
        `<line class="version" x1="${x(t).toFixed(1)}" y1="${MARGIN.top}" x2="${x(t).toFixed(1)}" y2="${height - MARGIN.bottom}" stroke="#16a34a" stroke-dasharray="4 3"/>`,
      );
    }
  }
  if (trace.discontinuityAt !== null && trace.discontinuityAt >= tLo && trace.discontinuityAt <= tHi) {
    parts.push(
      `<rect class="gap" x="${x(trace.discontinuityAt).toFixed(1)}" y="${MARGIN.top}" width="6" height="${height - MARGIN.top - MARGIN.bottom}" fill="#9ca3af" opacity="0.6"/>`,
    );
  }
  parts.push(`<text x="4" y="${height / 2}" font-size="11">S${section}</text>`);
  parts.push("</svg>");
  return parts.join("");
}
