/** DOM wiring for the follow-up console.
 *
 * Stateless beyond the session id (kept in the URL hash): every screen is
 * rebuilt from a fresh GET of the session view, so a page reload drops
 * nothing.  At most one mutating request is in flight at a time; all
 * action buttons are disabled while it runs.
 */

import { ApiError, SessionApi } from "./api.js";
import { beliefSvg, histogramSvg, radarSvg, timelineSvg } from "./charts.js";
import {
  decisionGrid,
  phase,
  recommendationConsistent,
  sessionSummary,
} from "./model.js";
import type { RadarReport, SessionView } from "./types.js";

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el as T;
};

let api = new SessionApi("");
let currentView: SessionView | null = null;
let selected: { treatment: string; delay: number } | null = null;
let busy = false;

function setBanner(text: string, kind: "error" | "info" | "") {
  const el = $("#banner");
  el.textContent = text;
  el.className = kind;
}

function setBusy(b: boolean) {
  busy = b;
  document
    .querySelectorAll<HTMLButtonElement>("button[data-action]")
    .forEach((btn) => (btn.disabled = b));
}

async function guarded(fn: () => Promise<void>) {
  if (busy) return;
  setBusy(true);
  setBanner("", "");
  try {
    await fn();
  } catch (err) {
    if (err instanceof ApiError && err.status === 0) {
      setBanner(`service unreachable; check the URL and retry. ${err.message}`, "error");
    } else {
      setBanner(String(err instanceof Error ? err.message : err), "error");
    }
  } finally {
    setBusy(false);
  }
}

function render(view: SessionView) {
  currentView = view;
  window.location.hash = view.id;
  $("#setup").style.display = "none";
  $("#live").style.display = "block";

  $("#summary").innerHTML = sessionSummary(view)
    .map((l) => `<span class="kv"><b>${l.label}</b> ${l.value}</span>`)
    .join(" ");
  $("#timeline").innerHTML = timelineSvg(view);
  $("#belief-bars").innerHTML = beliefSvg(view);
  $("#belief-hist").innerHTML = histogramSvg(view);

  const ph = phase(view);
  $("#observe-panel").style.display = ph === "observe" ? "block" : "none";
  $("#decide-panel").style.display = ph === "decide" ? "block" : "none";
  $("#terminal-panel").style.display = ph === "terminal" ? "block" : "none";
  $<HTMLElement>("#manual-obs").style.display = view.simulated ? "none" : "inline";
  $<HTMLElement>("#draw-obs").style.display = view.simulated ? "inline" : "none";
  if (ph === "observe") {
    $("#next-time").textContent = String(view.scheduled_time);
  }

  if (ph === "decide" && view.recommendation) {
    const rec = view.recommendation;
    if (!selected) selected = { treatment: rec.label.split("/")[0]!, delay: rec.delay };
    const cells = decisionGrid(rec)
      .map((c) => {
        const sel =
          selected && c.treatment === selected.treatment && c.delay === selected.delay;
        return (
          `<button data-action="pick" data-treatment="${c.treatment}" data-delay="${c.delay}"` +
          ` class="cell${c.recommended ? " recommended" : ""}${sel ? " selected" : ""}">` +
          `<span class="lbl">${c.label}</span>` +
          `<span class="v">V ${c.value.toFixed(2)}</span>` +
          `<span class="n">N ${c.count}</span></button>`
        );
      })
      .join("");
    $("#decision-grid").innerHTML = cells;
    const isOverride =
      selected !== null && `${selected.treatment}/${selected.delay}` !== rec.label;
    $("#commit-label").innerHTML = isOverride
      ? `commit <b>${selected!.treatment}/${selected!.delay}</b> <span class="badge">override</span>`
      : `commit recommended <b>${rec.label}</b>`;
    $("#consistency").textContent = recommendationConsistent(rec)
      ? ""
      : "warning: recommendation does not match the displayed values";
    document.querySelectorAll<HTMLButtonElement>("button[data-action='pick']").forEach(
      (btn) =>
        (btn.onclick = () => {
          selected = {
            treatment: btn.dataset.treatment!,
            delay: Number(btn.dataset.delay),
          };
          render(view);
        }),
    );
  }

  if (ph === "terminal") {
    const died = view.status === "dead";
    $("#terminal-panel").innerHTML =
      `<h3>follow-up ended: ${died ? "patient died" : "horizon reached"}</h3>` +
      `<p>${view.timeline.length} visits, ${view.overrides} overrides.</p>`;
  }

  $("#event-log").innerHTML = view.decisions
    .map(
      (d) =>
        `<li>visit ${d.visit}: ${d.label}` +
        (d.override ? ` <span class="badge">override</span>` : "") +
        `</li>`,
    )
    .join("");
}

async function refresh(id: string) {
  render(await api.getSession(id));
}

function wire() {
  $("#start-form").onsubmit = (ev) => {
    ev.preventDefault();
    void guarded(async () => {
      const base = $<HTMLInputElement>("#service-url").value.replace(/\/$/, "");
      api = new SessionApi(base);
      const seed = Number($<HTMLInputElement>("#seed").value);
      const nSearch = Number($<HTMLInputElement>("#n-search").value);
      const k = Number($<HTMLInputElement>("#k").value);
      if (!Number.isFinite(seed) || nSearch < 1 || k < 1) {
        setBanner("seed, search budget and K must be positive numbers", "error");
        return;
      }
      const created = await api.createSession({
        simulated: $<HTMLInputElement>("#simulated").checked,
        seed,
        filter: $<HTMLSelectElement>("#filter").value as "particle" | "conditional",
        n_search: nSearch,
        k,
      });
      selected = null;
      await refresh(created.id);
    });
  };

  $("#draw-obs").onclick = () =>
    guarded(async () => {
      if (!currentView) return;
      selected = null;
      render(await api.drawObservation(currentView.id));
    });

  $("#post-obs").onclick = () =>
    guarded(async () => {
      if (!currentView) return;
      const y = Number($<HTMLInputElement>("#obs-y").value);
      if (!Number.isFinite(y)) {
        setBanner("the marker reading must be a number", "error");
        return;
      }
      selected = null;
      render(await api.postObservation(currentView.id, y, currentView.scheduled_time));
    });

  $("#commit").onclick = () =>
    guarded(async () => {
      if (!currentView || !currentView.recommendation || !selected) return;
      const rec = currentView.recommendation;
      const override = `${selected.treatment}/${selected.delay}` !== rec.label;
      await api.commit(currentView.id, selected.treatment, selected.delay, override);
      selected = null;
      await refresh(currentView.id);
    });

  $("#radar-file").onchange = (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    void file.text().then((text) => {
      const report = JSON.parse(text) as RadarReport;
      $("#radar-chart").innerHTML = radarSvg(report);
    });
  };

  const hash = window.location.hash.slice(1);
  if (hash) {
    api = new SessionApi($<HTMLInputElement>("#service-url").value.replace(/\/$/, ""));
    void guarded(() => refresh(hash));
  }
}

wire();
