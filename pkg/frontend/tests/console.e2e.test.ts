/** End-to-end console flow against a live session service.
 *
 * Boots the Python service on a scratch port, then plays a full
 * practitioner session through the same api/model modules the DOM layer
 * uses: at least ten visits with a mix of committed recommendations and
 * overrides, checking at every step that the highlighted cell equals the
 * argmin of the displayed values, and that rebuilding the view from a
 * fresh GET (the "page reload") reproduces it exactly.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionApi } from "../src/api.js";
import { argminIndex, decisionGrid, phase } from "../src/model.js";
import type { SessionView } from "../src/types.js";

const PORT = 8947;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

async function waitForService(timeoutMs = 60_000) {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/sessions`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("session service did not come up");
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  service = spawn(
    "python3",
    ["-m", "followup.cli", "serve", "--port", String(PORT),
     "--data-dir", dataDir],
    { stdio: "ignore" },
  );
  await waitForService();
}, 90_000);

afterAll(() => {
  service?.kill();
});

describe("console end-to-end", () => {
  it(
    "steps through 10+ visits with commits and overrides",
    async () => {
      const api = new SessionApi(BASE);
      const created = await api.createSession({
        simulated: true,
        seed: 6,
        filter: "particle",
        n_search: 48,
        k: 24,
      });
      expect(created.observation).toEqual({ y: 1.0, t: 0.0 });

      let visits = 0;
      let overrides = 0;
      let view: SessionView | null = null;
      while (visits < 12) {
        view = await api.drawObservation(created.id);
        if (phase(view) === "terminal") break;
        expect(phase(view)).toBe("decide");
        const rec = view.recommendation!;
        expect(rec.values).toHaveLength(9);
        expect(rec.counts).toHaveLength(9);

        // the recommendation highlight is exactly the argmin of the table
        const grid = decisionGrid(rec);
        const highlighted = grid.filter((c) => c.recommended);
        expect(highlighted).toHaveLength(1);
        expect(highlighted[0]!.label).toBe(rec.label);
        expect(argminIndex(rec.values)).toBe(grid.indexOf(highlighted[0]!));

        // reload: a fresh GET rebuilds the identical view
        const reloaded = await api.getSession(created.id);
        expect(reloaded).toEqual(view);

        // every third visit the practitioner overrides with a watchful wait
        let treatment = highlighted[0]!.treatment;
        let delay = highlighted[0]!.delay;
        const willOverride = visits % 3 === 2 && rec.label !== "none/15";
        if (willOverride) {
          treatment = "none";
          delay = 15;
          overrides += 1;
        }
        const ack = await api.commit(created.id, treatment, delay, willOverride);
        expect(ack.override).toBe(willOverride);
        expect(ack.next_visit_time).toBeGreaterThan(view.timeline.at(-1)!.t);
        visits += 1;
      }

      expect(visits).toBeGreaterThanOrEqual(10);
      const final = await api.getSession(created.id);
      expect(final.overrides).toBe(overrides);
      expect(final.decisions.filter((d) => d.override)).toHaveLength(overrides);
      const again = await api.getSession(created.id);
      expect(again).toEqual(final);
    },
    240_000,
  );

  it("ends with a terminal summary on death or horizon", async () => {
    const api = new SessionApi(BASE);
    // aggressive dynamics so the simulated patient dies within a few visits
    const created = await api.createSession({
      simulated: true,
      seed: 1,
      n_search: 8,
      k: 4,
      config: {
        planner: { n_search: 8, k_root: 4 },
        model: {
          mu_knots_u: [0.0, 1.0],
          mu1_knots_y: [2.0, 2.0],
          mu2_knots_y: [0.0, 0.0],
          v1_none: 5.0,
        },
      },
    });
    let view: SessionView | null = null;
    for (let i = 0; i < 8; i++) {
      view = await api.drawObservation(created.id);
      if (phase(view) === "terminal") break;
      await api.commit(created.id, "none", 60, true);
    }
    expect(view).not.toBeNull();
    expect(phase(view!)).toBe("terminal");
    expect(view!.status).toBe("dead");
    expect(view!.timeline.at(-1)!.terminal).toBe(true);
    // terminal views survive reloads too
    expect(await api.getSession(created.id)).toEqual(view);
  }, 120_000);
});
