/** Hand-rolled SVG builders (no chart dependency): marker timeline,
 * belief bars, marker histogram, benchmark radar. */

import type { RadarReport, SessionView } from "./types.js";
import { beliefBars, scaleTimeline } from "./model.js";

const esc = (s: string) => s.replace(/&/g, "&amp;").replace(/</g, "&lt;");

export function timelineSvg(view: SessionView, width = 640, height = 220): string {
  const pts = scaleTimeline(view, width - 50, height - 30);
  const shift = (p: { x: number; y: number }) => ({ x: p.x + 40, y: p.y + 10 });
  const path = pts
    .filter((p) => !p.terminal)
    .map(shift)
    .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`)
    .join(" ");
  const dots = pts
    .map((p, i) => ({ ...shift(p), terminal: p.terminal, i }))
    .map((p) =>
      p.terminal
        ? `<text x="${p.x}" y="${p.y}" class="death-mark">†</text>`
        : `<circle cx="${p.x}" cy="${p.y}" r="3" class="obs-dot"><title>visit ${p.i}</title></circle>`,
    )
    .join("");
  const yGuide = (level: number, name: string) => {
    const y = height - 20 - ((level + 2) / 44) * (height - 30) + 10;
    return (
      `<line x1="40" x2="${width - 10}" y1="${y}" y2="${y}" class="guide"/>` +
      `<text x="2" y="${y + 4}" class="axis">${name}</text>`
    );
  };
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="timeline">` +
    yGuide(1, "nominal") +
    yGuide(40, "death") +
    `<path d="${path}" class="marker-path"/>` +
    dots +
    `</svg>`
  );
}

export function beliefSvg(view: SessionView, width = 300): string {
  const bars = beliefBars(view);
  const rowH = 26;
  const rows = bars
    .map((b, i) => {
      const y = i * rowH + 8;
      const w = Math.max(1, b.p * (width - 120));
      return (
        `<text x="0" y="${y + 13}" class="axis">${esc(b.label)}</text>` +
        `<rect x="86" y="${y}" width="${w.toFixed(1)}" height="16" class="belief-bar m${i}"/>` +
        `<text x="${90 + w}" y="${y + 13}" class="axis">${(b.p * 100).toFixed(0)}%</text>`
      );
    })
    .join("");
  return `<svg viewBox="0 0 ${width} ${bars.length * rowH + 12}" class="belief">${rows}</svg>`;
}

export function histogramSvg(view: SessionView, width = 300, height = 110): string {
  const { edges, mass } = view.belief.marker_histogram;
  const maxMass = Math.max(1e-9, ...mass);
  const n = mass.length;
  const bars = mass
    .map((m, i) => {
      const h = (m / maxMass) * (height - 30);
      const x = (i / n) * (width - 40) + 30;
      return `<rect x="${x.toFixed(1)}" y="${(height - 20 - h).toFixed(1)}" width="${(
        (width - 40) / n -
        1
      ).toFixed(1)}" height="${h.toFixed(1)}" class="hist-bar"/>`;
    })
    .join("");
  const lo = edges[0] ?? 0;
  const hi = edges[edges.length - 1] ?? 0;
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="hist">` +
    bars +
    `<text x="30" y="${height - 4}" class="axis">${lo.toFixed(0)}</text>` +
    `<text x="${width - 30}" y="${height - 4}" class="axis">${hi.toFixed(0)}</text>` +
    `</svg>`
  );
}

/** Radar chart of normalized benchmark metrics (0 = center = ideal). */
export function radarSvg(report: RadarReport, size = 360): string {
  const cx = size / 2;
  const cy = size / 2;
  const r = size / 2 - 60;
  const axes = report.axes;
  const angle = (i: number) => (Math.PI * 2 * i) / axes.length - Math.PI / 2;
  const point = (i: number, v: number) => {
    const rr = Math.min(Math.max(v, 0), 1.25) * r;
    return `${(cx + rr * Math.cos(angle(i))).toFixed(1)},${(cy + rr * Math.sin(angle(i))).toFixed(1)}`;
  };
  const grid = [0.25, 0.5, 0.75, 1.0]
    .map(
      (level) =>
        `<polygon points="${axes.map((_, i) => point(i, level)).join(" ")}" class="radar-grid"/>`,
    )
    .join("");
  const spokes = axes
    .map(
      (name, i) =>
        `<line x1="${cx}" y1="${cy}" x2="${point(i, 1.15).split(",")[0]}" y2="${point(i, 1.15).split(",")[1]}" class="radar-grid"/>` +
        `<text x="${point(i, 1.22).split(",")[0]}" y="${point(i, 1.22).split(",")[1]}" class="axis radar-label">${esc(name)}</text>`,
    )
    .join("");
  const strategies = Object.entries(report.strategies)
    .map(([name, metrics], k) => {
      const pts = axes.map((a, i) => point(i, metrics[a] ?? 0)).join(" ");
      return `<polygon points="${pts}" class="radar-shape s${k % 5}"><title>${esc(name)}</title></polygon>`;
    })
    .join("");
  const legend = Object.keys(report.strategies)
    .map(
      (name, k) =>
        `<rect x="8" y="${8 + k * 18}" width="12" height="12" class="radar-shape s${k % 5}"/>` +
        `<text x="24" y="${18 + k * 18}" class="axis">${esc(name)}</text>`,
    )
    .join("");
  return `<svg viewBox="0 0 ${size} ${size}" class="radar">${grid}${spokes}${strategies}${legend}</svg>`;
}
