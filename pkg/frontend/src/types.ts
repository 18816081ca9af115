/** Wire types of the session service (mirrors the JSON payloads 1:1). */

export interface Recommendation {
  treatment: number;
  delay: number;
  label: string;
  values: number[];
  counts: number[];
  alpha_prime: number;
  wall_ms: number;
}

export interface TimelinePoint {
  t: number;
  y: number | null;
  terminal: boolean;
}

export interface DecisionEntry {
  visit: number;
  label: string;
  override: boolean;
}

export interface BeliefView {
  modes: number[];
  marker_histogram: { edges: number[]; mass: number[] };
}

export interface SessionView {
  id: string;
  status: string;
  visit: number;
  simulated: boolean;
  scheduled_time: number;
  horizon: number;
  belief: BeliefView;
  recommendation: Recommendation | null;
  timeline: TimelinePoint[];
  decisions: DecisionEntry[];
  overrides: number;
  event_count: number;
}

export interface CreateResponse {
  id: string;
  status: string;
  observation: { y: number; t: number };
  simulated: boolean;
}

export interface CommitAck {
  id: string;
  status: string;
  next_visit_time: number;
  visit: number;
  override: boolean;
}

export interface RadarReport {
  axes: string[];
  baselines: Record<string, number>;
  strategies: Record<string, Record<string, number>>;
}

export const TREATMENTS = ["none", "a", "b"] as const;
export const DELAYS = [15, 30, 60] as const;
