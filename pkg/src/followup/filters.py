"""Belief representations over hidden patient states.

Two filters are provided.  The particle filter keeps K equally-weighted
simulated states and updates them by rejection sampling against the new
observation, with a three-stage fallback (two-step resimulation from the
previous belief, duplication of the accepted survivors, best-K nearest
transitions) so an update can never come back empty.  The conditional
filter keeps a fixed grid of support states whose weights are updated
deterministically through a precomputed Monte-Carlo transition tensor and
the Gaussian observation likelihood.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels as K
from .dynamics import DiseaseModel
from .patient import Decision, Mode, Observation, PatientState

__all__ = [
    "ParticleFilter", "ConditionalFilter", "CfGrid", "pf_init", "pf_update",
    "cf_build", "cf_update", "sample_states",
]


def _as_state_list(modes, markers, sincejumps, clocks) -> list[PatientState]:
    return [PatientState(int(m), float(z), float(u), float(c))
            for m, z, u, c in zip(modes, markers, sincejumps, clocks)]


@dataclass
class UpdateDiagnostics:
    """Which mitigation stages fired during a particle update."""

    direct_accepted: int = 0
    direct_attempts: int = 0
    backstep_accepted: int = 0
    backstep_attempts: int = 0
    revigorated: int = 0
    bestk_used: bool = False
    degenerate: bool = False

    @property
    def stage(self) -> int:
        """Deepest mitigation stage reached (0 = plain rejection)."""
        if self.bestk_used:
            return 3
        if self.revigorated:
            return 2
        if self.backstep_attempts:
            return 1
        return 0

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "direct_accepted": self.direct_accepted,
            "direct_attempts": self.direct_attempts,
            "backstep_accepted": self.backstep_accepted,
            "backstep_attempts": self.backstep_attempts,
            "revigorated": self.revigorated,
            "bestk_used": self.bestk_used,
            "degenerate": self.degenerate,
        }


class ParticleFilter:
    """Uniform-weight belief: K hidden-state particles stored as flat arrays.

    Also remembers the previous particle set together with the decision and
    observation that produced this one, which the two-step resimulation
    fallback needs.
    """

    kind = "particle"

    def __init__(self, modes, markers, sincejumps, clocks, prev=None):
        self.modes = np.asarray(modes, dtype=np.int64)
        self.markers = np.asarray(markers, dtype=np.float64)
        self.sincejumps = np.asarray(sincejumps, dtype=np.float64)
        self.clocks = np.asarray(clocks, dtype=np.float64)
        self.prev = prev  # (filter, decision, observation) or None

    def __len__(self) -> int:
        return self.modes.shape[0]

    @property
    def k(self) -> int:
        return len(self)

    @property
    def is_dead(self) -> bool:
        return bool(np.all(self.modes == Mode.DEATH))

    def states(self) -> list[PatientState]:
        return _as_state_list(self.modes, self.markers, self.sincejumps,
                              self.clocks)

    def mode_marginal(self) -> np.ndarray:
        return np.bincount(self.modes, minlength=4) / len(self)

    def marker_values(self) -> np.ndarray:
        return self.markers

    def sample_arrays(self, k: int, rng: np.random.Generator):
        idx = rng.integers(0, len(self), size=k)
        return (self.modes[idx], self.markers[idx], self.sincejumps[idx],
                self.clocks[idx])


class CfGrid:
    """Fixed conditional-filter support.

    Remission states vary the time since the last condition change on a
    uniform grid at the nominal marker level; the two disease blocks vary
    the marker on log-uniform grids (nominal level included, death level
    excluded); one absorbing death atom closes the space.
    """

    def __init__(self, model: DiseaseModel, n_remission: int = 81,
                 n_disease1: int = 31, n_disease2: int = 71,
                 u_max: Optional[float] = None,
                 zeta_max: Optional[float] = None):
        p = model.params
        self.n0, self.n1, self.n2 = n_remission, n_disease1, n_disease2
        u_max = p.horizon if u_max is None else u_max
        zeta_max = p.death_level if zeta_max is None else zeta_max
        self.u_step = u_max / (n_remission - 1)
        self.log_step1 = math.log(zeta_max / p.zeta0) / n_disease1
        self.log_step2 = math.log(zeta_max / p.zeta0) / n_disease2
        us = np.linspace(0.0, u_max, n_remission)
        z1 = p.zeta0 * np.exp(self.log_step1 * np.arange(n_disease1))
        z2 = p.zeta0 * np.exp(self.log_step2 * np.arange(n_disease2))
        n = n_remission + n_disease1 + n_disease2 + 1
        self.size = n
        self.modes = np.concatenate([
            np.zeros(n_remission, dtype=np.int64),
            np.ones(n_disease1, dtype=np.int64),
            np.full(n_disease2, 2, dtype=np.int64),
            np.array([3], dtype=np.int64),
        ])
        self.markers = np.concatenate([
            np.full(n_remission, p.zeta0), z1, z2, [p.death_level]])
        self.sincejumps = np.concatenate([us, np.zeros(n_disease1 + n_disease2 + 1)])
        self.death_index = n - 1
        self.zeta0 = p.zeta0

    def project(self, mode: int, marker: float, sincejump: float) -> int:
        return int(K.project_to_grid(mode, marker, sincejump, self.zeta0,
                                     self.log_step1, self.log_step2,
                                     self.n0, self.n1, self.n2, self.u_step))

    def spec_dict(self) -> dict:
        return {"n_remission": self.n0, "n_disease1": self.n1,
                "n_disease2": self.n2, "u_step": self.u_step,
                "log_step1": self.log_step1, "log_step2": self.log_step2}


class ConditionalFilter:
    """Fixed-support belief: weights over a ``CfGrid`` plus the per-decision
    transition tensor.  Updates are deterministic; the filter is treated as
    immutable and every update returns a fresh instance.

    ``clock`` is the absolute visit time the weights refer to; grid states
    themselves are clock-free, so samples are stamped with it.
    """

    kind = "conditional"

    def __init__(self, grid: CfGrid, tensor: np.ndarray, weights: np.ndarray,
                 sigma: float, clock: float = 0.0):
        self.grid = grid
        self.tensor = tensor          # (9, n, n) row-stochastic per decision
        self.weights = weights
        self.sigma = sigma
        self.clock = clock

    @property
    def is_dead(self) -> bool:
        return bool(self.weights[self.grid.death_index] >= 1.0 - 1e-12)

    def mode_marginal(self) -> np.ndarray:
        out = np.zeros(4)
        np.add.at(out, self.grid.modes, self.weights)
        return out

    def marker_values(self) -> np.ndarray:
        return self.grid.markers

    def with_weights(self, weights: np.ndarray,
                     clock: Optional[float] = None) -> "ConditionalFilter":
        return ConditionalFilter(self.grid, self.tensor, weights, self.sigma,
                                 self.clock if clock is None else clock)

    def sample_arrays(self, k: int, rng: np.random.Generator):
        idx = rng.choice(self.grid.size, size=k, p=self.weights)
        g = self.grid
        return (g.modes[idx], g.markers[idx], g.sincejumps[idx],
                np.full(k, self.clock))

    def states(self) -> list[PatientState]:
        g = self.grid
        return _as_state_list(g.modes, g.markers, g.sincejumps,
                              np.full(g.size, self.clock))


BeliefFilter = Union[ParticleFilter, ConditionalFilter]


# ---------------------------------------------------------------------------
# particle filter
# ---------------------------------------------------------------------------

def pf_init(s0: PatientState, k: int) -> ParticleFilter:
    """Dirac belief: K copies of the known entry state."""
    if k <= 0:
        raise ValueError("particle count must be >= 1")
    return ParticleFilter(
        np.full(k, s0.mode, dtype=np.int64), np.full(k, s0.marker),
        np.full(k, s0.sincejump), np.full(k, s0.clock))


def pf_update(flt: ParticleFilter, model: DiseaseModel, decision: Decision,
              obs: Observation, precision: float, rng: np.random.Generator,
              direct_budget_factor: int = 200, backstep_budget_factor: int = 50,
              bestk_factor: int = 1000) -> tuple[ParticleFilter, UpdateDiagnostics]:
    """Advance the particle belief through (decision, observation).

    Stage 0 rejection-samples transitions until K arrivals fall within
    ``precision`` of the observed reading.  On shortfall: stage 1 resamples
    two-step paths from the previous belief; stage 2 duplicates whatever
    was accepted; stage 3 (nothing accepted at all) keeps the K closest
    arrivals among ``bestk_factor * K`` sampled transitions.
    """
    k = len(flt)
    diag = UpdateDiagnostics()
    pm = model.packed
    y = obs.reading if not obs.terminal else math.nan
    term = 1 if obs.terminal else 0
    li, r = decision.treatment, float(decision.delay)

    out = [np.empty(k, dtype=np.int64), np.empty(k), np.empty(k), np.empty(k)]
    cnt, att = K.pf_propose(flt.modes, flt.markers, flt.sincejumps, flt.clocks,
                            li, r, y, term, precision, k,
                            direct_budget_factor * k,
                            out[0], out[1], out[2], out[3], pm, rng)
    diag.direct_accepted, diag.direct_attempts = int(cnt), int(att)

    if cnt < k and flt.prev is not None:
        prev_flt, prev_dec, prev_obs = flt.prev
        rest = [np.empty(k - cnt, dtype=np.int64), np.empty(k - cnt),
                np.empty(k - cnt), np.empty(k - cnt)]
        py = prev_obs.reading if not prev_obs.terminal else math.nan
        pterm = 1 if prev_obs.terminal else 0
        bcnt, batt = K.pf_backstep(
            prev_flt.modes, prev_flt.markers, prev_flt.sincejumps,
            prev_flt.clocks, prev_dec.treatment, float(prev_dec.delay),
            py, pterm, li, r, y, term, precision, k - cnt,
            backstep_budget_factor * k,
            rest[0], rest[1], rest[2], rest[3], pm, rng)
        diag.backstep_accepted, diag.backstep_attempts = int(bcnt), int(batt)
        for a, b in zip(out, rest):
            a[cnt:cnt + bcnt] = b[:bcnt]
        cnt += bcnt

    if cnt == 0:
        diag.bestk_used = True
        n_samp = bestk_factor * k
        pool = [np.empty(n_samp, dtype=np.int64), np.empty(n_samp),
                np.empty(n_samp), np.empty(n_samp)]
        dist = np.empty(n_samp)
        K.pf_bestk(flt.modes, flt.markers, flt.sincejumps, flt.clocks, li, r,
                   y, term, n_samp, pool[0], pool[1], pool[2], pool[3], dist,
                   pm, rng)
        keep = np.argpartition(dist, k - 1)[:k]
        if not np.isfinite(dist[keep]).all():
            diag.degenerate = True
        out = [a[keep] for a in pool]
        cnt = k
    elif cnt < k:
        dup = rng.integers(0, cnt, size=k - cnt)
        diag.revigorated = k - cnt
        for a in out:
            a[cnt:] = a[:cnt][dup]
        cnt = k

    # keep exactly one level of history for the backstep stage (shared
    # arrays, chain cut so old generations can be collected)
    shallow = ParticleFilter(flt.modes, flt.markers, flt.sincejumps,
                             flt.clocks, prev=None)
    new = ParticleFilter(out[0][:k], out[1][:k], out[2][:k], out[3][:k],
                         prev=(shallow, decision, obs))
    return new, diag


# ---------------------------------------------------------------------------
# conditional filter
# ---------------------------------------------------------------------------

def _tensor_cache_key(model: DiseaseModel, grid: CfGrid, nmc: int, seed: int) -> str:
    import hashlib
    blob = json.dumps({
        "model": model.params.digest(), "grid": grid.spec_dict(),
        "nmc": nmc, "seed": seed}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_transition_tensor(model: DiseaseModel, grid: CfGrid, nmc: int,
                            seed: int) -> np.ndarray:
    """Estimate P(grid j at next visit | grid i, decision) for all nine
    decisions by nmc segment simulations per (state, decision)."""
    from .params import DELAYS
    rng = np.random.default_rng(seed)
    tensor = np.empty((9, grid.size, grid.size))
    for d in range(9):
        li, r = d // 3, float(DELAYS[d % 3])
        counts = K.cf_transition_counts(
            grid.modes, grid.markers, grid.sincejumps, li, r, nmc,
            grid.zeta0, grid.log_step1, grid.log_step2,
            grid.n0, grid.n1, grid.n2, grid.u_step, model.packed, rng)
        rows = counts.sum(axis=1)
        if np.any(rows == 0):
            raise RuntimeError("transition tensor has an all-zero row")
        tensor[d] = counts / rows[:, None]
    return tensor


def cf_build(model: DiseaseModel, grid: Optional[CfGrid] = None,
             nmc: int = 10_000, seed: int = 20240901,
             cache_dir: Optional[str] = None) -> ConditionalFilter:
    """Construct the conditional filter (support + tensor) with the belief
    at the Dirac mass on the entry state.

    The tensor is cached on disk keyed by a hash of the model parameters,
    grid spec, Monte-Carlo budget and seed.
    """
    grid = grid or CfGrid(model)
    tensor = None
    path = None
    if cache_dir is not None:
        key = _tensor_cache_key(model, grid, nmc, seed)
        path = os.path.join(cache_dir, f"cf_tensor_{key}.npz")
        if os.path.exists(path):
            with np.load(path, allow_pickle=False) as data:
                tensor = data["tensor"].copy()
    if tensor is None:
        tensor = build_transition_tensor(model, grid, nmc, seed)
        if path is not None:
            os.makedirs(cache_dir, exist_ok=True)
            meta = json.dumps({
                "model_digest": model.params.digest(),
                "grid": grid.spec_dict(), "nmc": nmc, "seed": seed})
            np.savez_compressed(path, tensor=tensor,
                                meta=np.frombuffer(meta.encode(), dtype=np.uint8))
    weights = np.zeros(grid.size)
    weights[grid.project(0, model.params.zeta0, 0.0)] = 1.0
    return ConditionalFilter(grid, tensor, weights, model.params.sigma)


def cf_update(flt: ConditionalFilter, decision: Decision,
              obs: Observation) -> tuple[ConditionalFilter, dict]:
    """Deterministic weight update: transition prediction followed by a
    Gaussian likelihood reweighting, renormalized.

    If prediction and likelihood annihilate each other (all-zero posterior)
    the update falls back to likelihood-only reweighting over the full
    support and reports it.
    """
    from .patient import decision_index
    d = decision_index(decision)
    predicted = flt.weights @ flt.tensor[d]
    grid = flt.grid
    like = np.zeros(grid.size)
    if obs.terminal:
        like[grid.death_index] = 1.0
    else:
        live = grid.modes != Mode.DEATH
        if flt.sigma > 0:
            z = (obs.reading - grid.markers[live]) / flt.sigma
            like[live] = np.exp(-0.5 * (z * z - np.min(z * z)))
        else:
            like[live] = np.isclose(grid.markers[live], obs.reading,
                                    rtol=0.0, atol=1e-12)
    post = predicted * like
    total = post.sum()
    diag = {"degenerate": False}
    if total <= 0.0 or not np.isfinite(total):
        diag["degenerate"] = True
        post = like.copy()
        total = post.sum()
        if total <= 0.0:  # nothing matches at all: keep the prediction
            post = predicted.copy()
            total = post.sum()
    return flt.with_weights(post / total, clock=obs.time), diag


def sample_states(flt: BeliefFilter, k: int,
                  rng: np.random.Generator) -> list[PatientState]:
    """K i.i.d. hidden-state draws from a belief filter."""
    if k == 0:
        return []
    return _as_state_list(*flt.sample_arrays(k, rng))
