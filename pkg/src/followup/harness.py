"""Batch Monte-Carlo evaluation of follow-up strategies.

Runs closed-loop episodes (true dynamics hidden from the policy), collects
per-visit traces and aggregates the study metrics: mean trajectory cost
with a normal-approximation confidence half-width, death rate,
progression-free survival, time under treatment, visit counts and
runtimes.  Also provides the 0-1 normalization used for the radar
comparison and CSV/JSON report writers.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

import numpy as np

from .dynamics import DiseaseModel, step_cost
from .filters import (ConditionalFilter, ParticleFilter, cf_build, cf_update,
                      pf_init, pf_update, CfGrid)
from .params import Config, DELAYS, FilterParams
from .patient import DECISIONS, Decision, Observation
from .pomcp import Planner

__all__ = [
    "StrategySpec", "VisitRecord", "TrajectoryRecord", "EvalSummary",
    "Baselines", "NormalizedMetrics", "run_trajectory", "evaluate",
    "normalize", "emit_report", "verify_record",
]

POLICIES = ("pomcp", "mode", "random")


@dataclass(frozen=True)
class StrategySpec:
    """A named policy plus everything needed to run it."""

    policy: str = "pomcp"           # pomcp | mode | random
    label: str = ""
    config: Config = field(default_factory=Config)

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        if self.policy != "pomcp":
            return self.policy
        p = self.config.planner
        f = self.config.filter
        return (f"pomcp-{f.kind}-n{p.n_search}-K{p.k_root}"
                f"-a{p.alpha_prime}-D{p.precision}-{p.rollout}")


@dataclass
class VisitRecord:
    time: float
    reading: float
    decision: str           # e.g. "a/30"
    true_mode: int
    true_marker: float
    true_sincejump: float
    step_cost: float


@dataclass
class TrajectoryRecord:
    seed: int
    visits: list[VisitRecord]
    terminal_status: str    # "horizon" | "death"
    final_clock: float
    final_marker: float
    total_cost: float
    n_visits: int
    pfs_days: float
    treatment_days: float
    runtime_s: float
    mitigation_stages: list[int] = field(default_factory=list)


@dataclass
class EvalSummary:
    label: str
    policy: str
    filter_kind: str
    rollout: str
    n_search: int
    k: int
    alpha_prime: str
    precision: float
    n: int
    value: float
    half_width: float
    death_rate: float
    mean_pfs: float
    mean_treatment_days: float
    mean_visits: float
    duration_s: float
    duration_sd: float


@dataclass(frozen=True)
class Baselines:
    """External anchors for the metric normalization."""

    random_death_rate: float
    c_random: float
    v0: float = 0.0


@dataclass(frozen=True)
class NormalizedMetrics:
    death: float
    pfs: float
    treatment: float
    visits: float
    cost: float

    def to_dict(self) -> dict:
        return asdict(self)


_CF_MEMO: dict = {}


def _conditional_template(model: DiseaseModel, fp: FilterParams) -> ConditionalFilter:
    key = (model.params.digest(), fp.grid_remission, fp.grid_disease1,
           fp.grid_disease2, fp.tensor_mc, fp.tensor_seed)
    flt = _CF_MEMO.get(key)
    if flt is None:
        grid = CfGrid(model, fp.grid_remission, fp.grid_disease1, fp.grid_disease2)
        flt = cf_build(model, grid, fp.tensor_mc, fp.tensor_seed,
                       cache_dir=fp.cache_dir)
        _CF_MEMO[key] = flt
    return flt


def _trajectory_streams(seed: int):
    ss = np.random.SeedSequence(entropy=seed)
    env, plan, filt = [np.random.default_rng(s) for s in ss.spawn(3)]
    return env, plan, filt


def run_trajectory(spec: StrategySpec, seed: int,
                   model: Optional[DiseaseModel] = None) -> TrajectoryRecord:
    """One closed-loop episode; the policy sees only observations."""
    cfg = spec.config
    model = model or DiseaseModel(cfg.model, cfg.costs)
    rng_env, rng_plan, rng_filt = _trajectory_streams(seed)
    horizon = model.params.horizon

    belief = None
    planner = None
    if spec.policy == "pomcp":
        if cfg.filter.kind == "particle":
            belief = pf_init(model.initial_state(), cfg.planner.k_root)
        else:
            belief = _conditional_template(model, cfg.filter)
        planner = Planner(model, cfg.planner)

    t_start = time.perf_counter()
    state = model.initial_state()
    obs = Observation(model.params.zeta0, 0.0, False)
    visits: list[VisitRecord] = []
    stages: list[int] = []
    total_cost = 0.0
    treatment_days = 0.0
    first_relapse = math.nan
    status = "horizon"

    while state.clock < horizon:
        if spec.policy == "pomcp":
            decision, _ = planner.plan(belief, rng_plan)
        elif spec.policy == "mode":
            decision = Decision(state.mode, 15)
        else:
            decision = DECISIONS[int(rng_plan.integers(0, 9))]

        out = model.generate(state, decision, rng_env)
        visits.append(VisitRecord(state.clock, obs.reading, decision.label,
                                  state.mode, state.marker, state.sincejump,
                                  out.cost))
        total_cost += out.cost
        if math.isnan(first_relapse) and not math.isnan(out.first_relapse_clock):
            first_relapse = out.first_relapse_clock
        if decision.treatment != 0:
            elapsed = min(out.state.clock, horizon) - state.clock
            treatment_days += elapsed

        state = out.state
        obs = out.observation
        if obs.terminal:
            status = "death"
            break
        if state.clock >= horizon:
            break
        if spec.policy == "pomcp":
            planner.commit(decision, obs)
            if isinstance(belief, ParticleFilter):
                belief, diag = pf_update(
                    belief, model, decision, obs, cfg.planner.precision,
                    rng_filt, cfg.filter.direct_budget_factor,
                    cfg.filter.backstep_budget_factor, cfg.filter.bestk_factor)
                stages.append(diag.stage)
            else:
                belief, _ = cf_update(belief, decision, obs)

    runtime = time.perf_counter() - t_start
    if math.isnan(first_relapse) or first_relapse > horizon:
        pfs = horizon
    else:
        pfs = first_relapse
    return TrajectoryRecord(
        seed=seed, visits=visits, terminal_status=status,
        final_clock=state.clock, final_marker=state.marker,
        total_cost=total_cost, n_visits=len(visits), pfs_days=pfs,
        treatment_days=treatment_days, runtime_s=runtime,
        mitigation_stages=stages)


def verify_record(rec: TrajectoryRecord, model: DiseaseModel,
                  tol: float = 1e-9) -> list[str]:
    """Self-check invariants; returns a list of violations (empty = ok)."""
    problems = []
    markers = [v.true_marker for v in rec.visits] + [rec.final_marker]
    recomputed = 0.0
    for i, v in enumerate(rec.visits):
        label, delay = v.decision.split("/")
        from .patient import parse_decision
        d = parse_decision(label, int(delay))
        recomputed += step_cost(markers[i], d, markers[i + 1], model.costs,
                                model.params.zeta0, model.params.death_level)
    if abs(recomputed - rec.total_cost) > tol:
        problems.append(f"cost accounting mismatch: {recomputed} vs {rec.total_cost}")
    times = [v.time for v in rec.visits]
    for a, b in zip(times, times[1:]):
        if round(b - a) not in DELAYS or abs((b - a) - round(b - a)) > 1e-9:
            problems.append(f"inter-visit gap {b - a} not in {DELAYS}")
            break
    if any(t >= model.params.horizon for t in times):
        problems.append("visit scheduled at or past the horizon")
    if rec.pfs_days > model.params.horizon:
        problems.append("PFS exceeds the horizon")
    if rec.terminal_status == "horizon":
        if not 40 <= rec.n_visits <= 160:
            problems.append(f"visit count {rec.n_visits} outside [40, 160]")
    return problems


def _eval_worker(args) -> TrajectoryRecord:
    spec, seed = args
    return run_trajectory(spec, seed)


def evaluate(spec: StrategySpec, n: int, base_seed: int = 0,
             workers: int = 1,
             return_records: bool = False):
    """Aggregate ``n`` independent trajectories (seeds base_seed..+n-1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seeds = [base_seed + i for i in range(n)]
    if workers > 1:
        import multiprocessing as mp
        # warm caches (conditional-filter tensor, JIT) before forking
        if spec.policy == "pomcp" and spec.config.filter.kind == "conditional":
            _conditional_template(DiseaseModel(spec.config.model,
                                               spec.config.costs),
                                  spec.config.filter)
        ctx = mp.get_context("fork")
        with ctx.Pool(workers) as pool:
            records = pool.map(_eval_worker, [(spec, s) for s in seeds])
    else:
        records = [run_trajectory(spec, s) for s in seeds]
    summary = summarize(spec, records)
    if return_records:
        return summary, records
    return summary


def summarize(spec: StrategySpec, records: Sequence[TrajectoryRecord]) -> EvalSummary:
    n = len(records)
    costs = np.array([r.total_cost for r in records])
    durations = np.array([r.runtime_s for r in records])
    sd = float(costs.std(ddof=1)) if n > 1 else 0.0
    p = spec.config.planner
    return EvalSummary(
        label=spec.label, policy=spec.policy,
        filter_kind=spec.config.filter.kind if spec.policy == "pomcp" else "-",
        rollout=p.rollout if spec.policy == "pomcp" else "-",
        n_search=p.n_search, k=p.k_root, alpha_prime=str(p.alpha_prime),
        precision=p.precision, n=n,
        value=float(costs.mean()),
        half_width=1.96 * sd / math.sqrt(n) if n > 1 else 0.0,
        death_rate=float(np.mean([r.terminal_status == "death" for r in records])),
        mean_pfs=float(np.mean([r.pfs_days for r in records])),
        mean_treatment_days=float(np.mean([r.treatment_days for r in records])),
        mean_visits=float(np.mean([r.n_visits for r in records])),
        duration_s=float(durations.mean()),
        duration_sd=float(durations.std(ddof=1)) if n > 1 else 0.0,
    )


def normalize(summary: EvalSummary, baselines: Baselines,
              horizon: float = 2400.0) -> NormalizedMetrics:
    """Map the study metrics onto [0, 1]-ish axes (0 = ideal).

    Death rate is relative to the random strategy's; PFS becomes
    1 - PFS/H; treatment time is divided by H; visit counts map the
    achievable range [40, 160] onto [0, 1]; cost is anchored between the
    supplied optimal value v0 and the random strategy's mean cost.
    """
    if baselines.c_random == baselines.v0:
        raise ZeroDivisionError("c_random must differ from v0")
    death = (summary.death_rate / baselines.random_death_rate
             if baselines.random_death_rate > 0 else summary.death_rate)
    return NormalizedMetrics(
        death=death,
        pfs=1.0 - summary.mean_pfs / horizon,
        treatment=summary.mean_treatment_days / horizon,
        visits=(summary.mean_visits - 40.0) / 120.0,
        cost=(summary.value - baselines.v0) / (baselines.c_random - baselines.v0),
    )


def emit_report(summaries: Sequence[EvalSummary], out_dir: str,
                baselines: Optional[Baselines] = None,
                horizon: float = 2400.0) -> dict:
    """Write the sweep CSV and, when baselines are available (given or
    derivable from an included random-strategy run), the radar-metrics
    JSON.  Returns the paths written."""
    if not summaries:
        raise ValueError("no summaries to report")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "summary.csv")
    fields = list(asdict(summaries[0]).keys())
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for s in summaries:
            writer.writerow({k: repr(v) if isinstance(v, float) else v
                             for k, v in asdict(s).items()})
    paths = {"csv": csv_path}

    if baselines is None:
        rand = next((s for s in summaries if s.policy == "random"), None)
        if rand is not None:
            baselines = Baselines(random_death_rate=rand.death_rate,
                                  c_random=rand.value)
    if baselines is not None:
        radar = {
            "axes": ["death", "pfs", "treatment", "visits", "cost"],
            "baselines": asdict(baselines),
            "strategies": {
                s.label: normalize(s, baselines, horizon).to_dict()
                for s in summaries},
        }
        radar_path = os.path.join(out_dir, "radar.json")
        with open(radar_path, "w") as fh:
            json.dump(radar, fh, indent=2)
            fh.write("\n")
        paths["radar"] = radar_path
    return paths


def read_summaries(csv_path: str) -> list[EvalSummary]:
    """Inverse of the CSV writer (used by the round-trip self-check)."""
    out = []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            kwargs = {}
            for f, typ in EvalSummary.__dataclass_fields__.items():
                raw = row[f]
                t = typ.type
                if t == "float":
                    kwargs[f] = float(raw)
                elif t == "int":
                    kwargs[f] = int(raw)
                else:
                    kwargs[f] = raw
            out.append(EvalSummary(**kwargs))
    return out
