/** Pure view-model logic: everything the DOM layer renders is built here
 * from service responses, never recomputed from model assumptions. */

import type { Recommendation, SessionView } from "./types.js";
import { DELAYS, TREATMENTS } from "./types.js";

export interface DecisionCell {
  treatment: string;
  delay: number;
  label: string;
  value: number;
  count: number;
  recommended: boolean;
}

/** Index of the minimal value, first wins on ties (matches the planner's
 * lexicographic tie-break over the same ordering). */
export function argminIndex(values: readonly number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    const v = values[i]!;
    if (v < values[best]!) best = i;
  }
  return best;
}

/** The 3x3 decision grid; the highlighted cell is the argmin of the
 * displayed values, which must agree with the service's recommendation. */
export function decisionGrid(rec: Recommendation): DecisionCell[] {
  const highlight = argminIndex(rec.values);
  return rec.values.map((value, i) => {
    const treatment = TREATMENTS[Math.floor(i / 3)]!;
    const delay = DELAYS[i % 3]!;
    return {
      treatment,
      delay,
      label: `${treatment}/${delay}`,
      value,
      count: rec.counts[i]!,
      recommended: i === highlight,
    };
  });
}

/** Sanity check surfaced in the UI footer: the service's recommended label
 * must be the argmin of the values it sent along. */
export function recommendationConsistent(rec: Recommendation): boolean {
  return decisionGrid(rec)[argminIndex(rec.values)]!.label === rec.label;
}

export type Phase = "observe" | "decide" | "terminal";

export function phase(view: SessionView): Phase {
  if (view.status === "awaiting_observation") return "observe";
  if (view.status === "awaiting_decision") return "decide";
  return "terminal";
}

export interface SummaryLine {
  label: string;
  value: string;
}

export function sessionSummary(view: SessionView): SummaryLine[] {
  const last = view.timeline[view.timeline.length - 1];
  const out: SummaryLine[] = [
    { label: "session", value: view.id },
    { label: "status", value: view.status },
    { label: "visits", value: String(view.timeline.length) },
    { label: "overrides", value: String(view.overrides) },
  ];
  if (view.status === "awaiting_observation") {
    out.push({ label: "next visit", value: `day ${view.scheduled_time}` });
  }
  if (last !== undefined) {
    out.push({
      label: "last reading",
      value: last.terminal ? "terminal" : (last.y ?? NaN).toFixed(2),
    });
  }
  return out;
}

/** Scale (t, y) points into a width x height viewport, fixed y-range. */
export function scaleTimeline(
  view: SessionView,
  width: number,
  height: number,
  yMin = -2,
  yMax = 42,
): { x: number; y: number; terminal: boolean }[] {
  const tMax = Math.max(view.horizon, ...view.timeline.map((p) => p.t));
  return view.timeline.map((p) => ({
    x: (p.t / tMax) * width,
    y: height - (((p.y ?? yMax) - yMin) / (yMax - yMin)) * height,
    terminal: p.terminal,
  }));
}

/** Belief condition-marginal as labelled fractions (drops death unless
 * it carries mass). */
export function beliefBars(view: SessionView): { label: string; p: number }[] {
  const names = ["remission", "disease 1", "disease 2", "death"];
  const out = view.belief.modes.map((p, i) => ({ label: names[i]!, p }));
  return out[3]!.p > 1e-9 ? out : out.slice(0, 3);
}
