"""HTTP session service for human-in-the-loop follow-up.

Implements the per-visit workflow: create a session (belief starts at the
known entry state), post a marker observation to receive the planner's
recommended decision with full diagnostics, then commit the (possibly
overridden) decision to schedule the next visit.  Sessions either wrap a
seeded simulated patient (whose hidden state never leaves the server) or
an external patient whose readings are typed in.

Every session appends its events to a JSON-lines log under the data
directory; a session can be reconstructed from that log alone, and with
the stored seed the filter weights and recommendations replay exactly.
"""

from __future__ import annotations

import json
import math
import os
import threading
import time
import uuid
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .dynamics import DiseaseModel
from .filters import ParticleFilter, cf_update, pf_init, pf_update
from .harness import _conditional_template
from .params import Config, load_config
from .patient import Decision, Observation, parse_decision
from .pomcp import Planner

WAITING_OBSERVATION = "awaiting_observation"
WAITING_DECISION = "awaiting_decision"
TERMINAL_DEATH = "dead"
TERMINAL_HORIZON = "horizon_reached"


def _stream(seed: int, channel: int, visit: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, channel, visit)))


class Session:
    """One follow-up in progress.  All mutating calls hold ``self.lock``."""

    def __init__(self, sid: str, config: Config, simulated: bool, seed: int,
                 data_dir: Optional[str], log_events: bool = True):
        self.id = sid
        self.config = config
        self.simulated = simulated
        self.seed = seed
        self.lock = threading.Lock()
        self.model = DiseaseModel(config.model, config.costs)
        self.planner = Planner(self.model, config.planner)
        if config.filter.kind == "particle":
            self.belief = pf_init(self.model.initial_state(), config.planner.k_root)
        else:
            self.belief = _conditional_template(self.model, config.filter)
        self.visit = 0
        self.status = WAITING_OBSERVATION
        self.events: list[dict] = []
        self.hidden = self.model.initial_state() if simulated else None
        self.pending_obs: Optional[Observation] = Observation(
            config.model.zeta0, 0.0, False)
        self.last_decision: Optional[Decision] = None
        self.last_observation: Optional[Observation] = None
        self.scheduled_time = 0.0
        self.recommendation: Optional[dict] = None
        self.overrides = 0
        self._log_path = (os.path.join(data_dir, f"{sid}.jsonl")
                          if data_dir else None)
        self._log_enabled = log_events
        if log_events:
            self._append({
                "event": "created", "id": sid, "simulated": simulated,
                "seed": seed, "config": config.to_dict(),
                "created_at": time.time()})

    # -- persistence --------------------------------------------------------

    def _append(self, event: dict) -> None:
        self.events.append(event)
        if self._log_path and self._log_enabled:
            with open(self._log_path, "a") as fh:
                fh.write(json.dumps(event) + "\n")

    # -- workflow -----------------------------------------------------------

    def post_observation(self, y: Optional[float], t: Optional[float],
                         draw: bool, terminal: bool = False) -> dict:
        if self.status in (TERMINAL_DEATH, TERMINAL_HORIZON):
            raise HTTPException(409, f"session is terminal ({self.status})")
        if self.status != WAITING_OBSERVATION:
            raise HTTPException(409, "a decision is pending; commit it first")
        if self.simulated or draw:
            if not self.simulated:
                raise HTTPException(422, "draw is only valid for simulated patients")
            obs = self.pending_obs
            if obs is None:
                raise HTTPException(409, "no pending observation to draw")
        else:
            if terminal:
                # practitioner reports the patient's death at time t
                obs = Observation(math.nan,
                                  self.scheduled_time if t is None else float(t),
                                  True)
                return self._ingest(obs)
            if y is None or t is None:
                raise HTTPException(422, "external sessions must supply y and t")
            if abs(t - self.scheduled_time) > 1e-9:
                raise HTTPException(
                    409, f"out-of-order observation: expected t={self.scheduled_time}")
            obs = Observation(float(y), float(t), False)
        return self._ingest(obs)

    def _ingest(self, obs: Observation) -> dict:
        self._append({"event": "observation",
                      "y": None if obs.terminal else obs.reading,
                      "t": obs.time, "terminal": obs.terminal})
        self.pending_obs = None
        if self.visit > 0:
            # prune the search tree to the branch the real world took,
            # then fold the observation into the belief
            self.planner.commit(self.last_decision, obs)
            self._update_filter(self.last_decision, obs)
        self.last_observation = obs
        if obs.terminal:
            self.status = TERMINAL_DEATH
            self._append({"event": "terminal", "reason": "death", "t": obs.time})
            return self.view()
        rng = _stream(self.seed, 1, self.visit)
        decision, diag = self.planner.plan(self.belief, rng)
        self.recommendation = {
            "treatment": decision.treatment, "delay": decision.delay,
            "label": decision.label, "values": diag["values"],
            "counts": diag["counts"], "alpha_prime": diag["alpha_prime"],
            "wall_ms": diag["wall_ms"],
        }
        self._append({"event": "recommendation", "visit": self.visit,
                      **self.recommendation})
        self.status = WAITING_DECISION
        return self.view()

    def _update_filter(self, decision: Decision, obs: Observation) -> None:
        if isinstance(self.belief, ParticleFilter):
            rng = _stream(self.seed, 2, self.visit)
            fp = self.config.filter
            self.belief, diag = pf_update(
                self.belief, self.model, decision, obs,
                self.config.planner.precision, rng,
                fp.direct_budget_factor, fp.backstep_budget_factor,
                fp.bestk_factor)
            self._append({"event": "filter", "visit": self.visit,
                          **diag.to_dict()})
        else:
            self.belief, diag = cf_update(self.belief, decision, obs)
            self._append({"event": "filter", "visit": self.visit, **diag})

    def commit_decision(self, decision: Decision, overridden: bool) -> dict:
        if self.status in (TERMINAL_DEATH, TERMINAL_HORIZON):
            raise HTTPException(409, f"session is terminal ({self.status})")
        if self.status != WAITING_DECISION:
            raise HTTPException(409, "no recommendation pending; post an observation")
        obs = self.last_observation
        self._append({"event": "decision", "visit": self.visit,
                      "treatment": decision.treatment, "delay": decision.delay,
                      "label": decision.label, "override": overridden})
        if overridden:
            self.overrides += 1
        self.last_decision = decision
        next_time = obs.time + decision.delay
        self.visit += 1
        if self.simulated:
            rng = _stream(self.seed, 0, self.visit - 1)
            out = self.model.generate(self.hidden, decision, rng)
            self.hidden = out.state
            self.pending_obs = out.observation
        if next_time >= self.model.params.horizon and not (
                self.simulated and self.pending_obs.terminal):
            self.status = TERMINAL_HORIZON
            self._append({"event": "terminal", "reason": "horizon",
                          "t": next_time})
        else:
            self.status = WAITING_OBSERVATION
            self.scheduled_time = next_time
        return {"id": self.id, "status": self.status,
                "next_visit_time": next_time, "visit": self.visit,
                "override": overridden}

    # -- read side ----------------------------------------------------------

    def view(self) -> dict:
        marginal = self.belief.mode_marginal()
        markers = self.belief.marker_values()
        if hasattr(self.belief, "weights"):
            live = self.belief.grid.modes != 3
            weights = self.belief.weights[live]
            markers = markers[live]
        else:
            live = np.asarray(self.belief.modes) != 3
            weights = None
            markers = markers[live]
        hist, edges = np.histogram(
            markers, bins=24,
            range=(self.model.params.zeta0, self.model.params.death_level),
            weights=weights)
        total = hist.sum()
        timeline = [
            {"t": e["t"], "y": e["y"], "terminal": e["terminal"]}
            for e in self.events if e["event"] == "observation"]
        decisions = [
            {"visit": e["visit"], "label": e["label"], "override": e["override"]}
            for e in self.events if e["event"] == "decision"]
        return {
            "id": self.id,
            "status": self.status,
            "visit": self.visit,
            "simulated": self.simulated,
            "scheduled_time": self.scheduled_time,
            "horizon": self.model.params.horizon,
            "belief": {
                "modes": [float(x) for x in marginal],
                "marker_histogram": {
                    "edges": [float(x) for x in edges],
                    "mass": [float(x) / total if total > 0 else 0.0
                             for x in hist],
                },
            },
            "recommendation": self.recommendation,
            "timeline": timeline,
            "decisions": decisions,
            "overrides": self.overrides,
            "event_count": len(self.events),
        }

    def summary(self) -> dict:
        return {"id": self.id, "status": self.status, "visit": self.visit,
                "simulated": self.simulated,
                "scheduled_time": self.scheduled_time}


def replay_session(events: list[dict], data_dir: Optional[str] = None) -> Session:
    """Rebuild a session purely from its event log (no new log writes)."""
    created = events[0]
    assert created["event"] == "created"
    sess = Session(created["id"], load_config(created["config"]),
                   created["simulated"], created["seed"], None,
                   log_events=False)
    for e in events[1:]:
        if e["event"] == "observation":
            obs = Observation(math.nan if e["terminal"] else e["y"],
                              e["t"], e["terminal"])
            if sess.simulated:
                sess.pending_obs = obs
                sess.post_observation(None, None, draw=True)
            else:
                sess.post_observation(e["y"], e["t"], draw=False,
                                      terminal=e["terminal"])
        elif e["event"] == "decision":
            sess.commit_decision(Decision(e["treatment"], e["delay"]),
                                 e["override"])
    return sess


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

class CreateSessionBody(BaseModel):
    simulated: bool = True
    seed: int = 0
    config: Optional[dict] = None
    filter: Optional[str] = Field(default=None, pattern="^(particle|conditional)$")
    n_search: Optional[int] = Field(default=None, ge=1)
    k: Optional[int] = Field(default=None, ge=1)


class ObservationBody(BaseModel):
    y: Optional[float] = None
    t: Optional[float] = None
    draw: bool = False
    terminal: bool = False


class DecisionBody(BaseModel):
    treatment: str
    delay: int
    override: bool = False


def create_app(data_dir: Optional[str] = "sessions",
               config_path: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="followup session service")
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    base_config = load_config(config_path)
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    if data_dir:
        os.makedirs(data_dir, exist_ok=True)

    def get_session(sid: str) -> Session:
        with registry_lock:
            sess = sessions.get(sid)
        if sess is None and data_dir:
            path = os.path.join(data_dir, f"{sid}.jsonl")
            if os.path.exists(path):
                with open(path) as fh:
                    events = [json.loads(line) for line in fh]
                sess = replay_session(events)
                sess._log_path = path
                sess._log_enabled = True
                with registry_lock:
                    sessions[sid] = sess
        if sess is None:
            raise HTTPException(404, f"unknown session {sid}")
        return sess

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        cfg = base_config
        if body.config is not None:
            try:
                cfg = load_config(body.config)
            except (ValueError, TypeError) as exc:
                raise HTTPException(422, f"invalid config: {exc}")
        overrides = {}
        if body.filter:
            overrides["filter"] = {"kind": body.filter}
        planner_over = {}
        if body.n_search:
            planner_over["n_search"] = body.n_search
        if body.k:
            planner_over["k_root"] = body.k
        if planner_over:
            overrides["planner"] = planner_over
        if overrides:
            try:
                cfg = cfg.with_overrides(**overrides)
            except ValueError as exc:
                raise HTTPException(422, f"invalid config: {exc}")
        sid = uuid.uuid4().hex[:12]
        sess = Session(sid, cfg, body.simulated, body.seed, data_dir)
        with registry_lock:
            sessions[sid] = sess
        return {"id": sid, "status": sess.status,
                "observation": {"y": cfg.model.zeta0, "t": 0.0},
                "simulated": body.simulated}

    @app.post("/sessions/{sid}/observations")
    def post_observation(sid: str, body: ObservationBody):
        sess = get_session(sid)
        with sess.lock:
            return sess.post_observation(body.y, body.t, body.draw,
                                         body.terminal)

    @app.post("/sessions/{sid}/decisions")
    def post_decision(sid: str, body: DecisionBody):
        sess = get_session(sid)
        try:
            decision = parse_decision(body.treatment, body.delay)
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        with sess.lock:
            rec = sess.recommendation
            overridden = body.override or (
                rec is not None and (rec["treatment"] != decision.treatment
                                     or rec["delay"] != decision.delay))
            return sess.commit_decision(decision, overridden)

    @app.get("/sessions")
    def list_sessions():
        with registry_lock:
            listed = list(sessions.values())
        return {"sessions": [s.summary() for s in listed]}

    @app.get("/sessions/{sid}")
    def get_one(sid: str):
        sess = get_session(sid)
        with sess.lock:
            return sess.view()

    return app
