"""Exact dynamics of the controlled disease process.

The hidden state follows deterministic exponential marker flows between
random jumps; jumps happen when a risk clock rings or when the marker
reaches the nominal or death boundary, and they change the patient's
condition while leaving the marker level continuous.  ``DiseaseModel``
bundles the parameters and exposes the generator function used by the
planner: one call simulates an inter-visit segment, emits a noisy marker
observation and returns the step cost.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import _kernels as K
from .params import CostParams, ModelParams, PackedModel
from .patient import (Decision, Mode, Observation, PatientState,
                      StepOutcome, initial_state)

__all__ = ["DiseaseModel", "step_cost", "DeadPatientError"]


class DeadPatientError(ValueError):
    """Raised when an operation requires a living patient."""


def step_cost(zeta: float, decision: Decision, zeta_next: float,
              costs: CostParams, zeta0: float = 1.0,
              death_level: float = 40.0) -> float:
    """Cost of one follow-up step.

    Visit cost, plus a marker burden proportional to the time to the next
    visit and the end-of-step distance from the nominal level, plus an
    overtreatment penalty when treating a patient sitting at the nominal
    level, plus the death cost if the step ends at the death level.
    """
    c = costs.visit_cost
    c += costs.marker_weight * abs(zeta_next - zeta0) * decision.delay
    if decision.treatment != 0 and zeta == zeta0:
        c += costs.overtreat_weight * decision.delay
    if zeta_next == death_level:
        c += costs.death_cost
    return c


class DiseaseModel:
    """Parameterized dynamics plus cost structure.

    All stochastic methods take an explicit ``numpy.random.Generator``;
    with a fixed seed every trajectory is bit-reproducible.  Instances are
    immutable and safe to share across threads as long as each caller owns
    its generator.
    """

    def __init__(self, params: Optional[ModelParams] = None,
                 costs: Optional[CostParams] = None):
        self.params = params or ModelParams()
        self.costs = costs or CostParams()
        self.packed: PackedModel = self.params.packed(self.costs)

    # -- deterministic pieces ------------------------------------------------

    def initial_state(self) -> PatientState:
        return initial_state(self.params.zeta0)

    def flow(self, state: PatientState, treatment: int, dt: float) -> PatientState:
        """Deterministic evolution over ``dt`` days with no jump."""
        if dt < 0:
            raise ValueError("dt must be nonnegative")
        v = self.packed.vmat[int(state.mode), int(treatment)]
        z = state.marker * math.exp(v * dt)
        z = min(max(z, self.params.zeta0), self.params.death_level)
        return PatientState(state.mode, z, state.sincejump + dt, state.clock + dt)

    def risk_intensity(self, state: PatientState, treatment: int) -> float:
        return float(K.risk_rate(int(state.mode), state.marker,
                                 state.sincejump, int(treatment), self.packed))

    def hitting_time(self, state: PatientState, treatment: int) -> float:
        """Time for the flow to reach the nominal or death level (inf if
        the slope is zero)."""
        if state.mode == Mode.DEATH:
            raise DeadPatientError("hitting_time of a dead patient")
        return float(K.hitting_time(int(state.mode), state.marker,
                                    int(treatment), self.packed))

    # -- stochastic pieces ---------------------------------------------------

    def sample_jump_time(self, state: PatientState, treatment: int,
                         rng: np.random.Generator) -> float:
        """Draw the delay until the next risk-clock ring (may be inf)."""
        if state.mode == Mode.DEATH:
            raise DeadPatientError("sample_jump_time of a dead patient")
        return float(K.sample_jump(int(state.mode), state.marker,
                                   state.sincejump, int(treatment),
                                   self.packed, rng))

    def jump_kernel(self, state: PatientState, treatment: int,
                    rng: np.random.Generator) -> PatientState:
        """Post-jump state for a patient at a jump epoch.

        The marker is continuous across jumps and the condition-change
        clock resets.  Raises if the state admits no jump under the given
        treatment (no active risk and not at a flow boundary).
        """
        m, z, u = state.mode, state.marker, state.sincejump
        p = self.params
        if m == Mode.DEATH:
            raise DeadPatientError("jump_kernel of a dead patient")
        m2: Optional[Mode] = None
        if m == Mode.REMISSION:
            if self.risk_intensity(state, treatment) <= 0.0:
                raise ValueError(
                    f"no admissible jump from remission at sincejump {u} "
                    f"under treatment {treatment}")
            m2 = Mode(int(K.post_jump_mode(0, float(z), float(u),
                                           int(treatment), False,
                                           self.packed, rng)))
        else:
            # guard rows: recovery only at the nominal level and only when
            # the treatment matches or none is given; death only at the
            # death level under the non-curing treatments; escape only
            # strictly inside the band under the matching treatment
            curing = 1 if m == Mode.DISEASE_1 else 2
            if z == p.zeta0 and treatment in (0, curing):
                m2 = Mode.REMISSION
            elif z == p.death_level and treatment != curing:
                m2 = Mode.DEATH
            elif z > p.zeta0 and treatment == curing:
                m2 = Mode.DISEASE_2 if m == Mode.DISEASE_1 else Mode.DISEASE_1
        if m2 is None:
            raise ValueError(
                f"no admissible jump from mode {int(m)} at marker {z} "
                f"under treatment {treatment}")
        marker = p.death_level if m2 == Mode.DEATH else z
        return PatientState(int(m2), marker, 0.0, state.clock)

    def simulate_segment(self, state: PatientState, decision: Decision,
                         rng: np.random.Generator) -> PatientState:
        """Hidden state at the next visit (or at death, clock frozen)."""
        if state.mode == Mode.DEATH:
            return state
        m, z, u, c, *_ = K.segment(int(state.mode), state.marker,
                                   state.sincejump, state.clock,
                                   int(decision.treatment),
                                   float(decision.delay), self.packed, rng)
        return PatientState(int(m), z, u, c)

    def observe(self, state: PatientState, rng: np.random.Generator) -> Observation:
        """Noisy marker reading (not clamped to the marker band)."""
        if state.mode == Mode.DEATH:
            raise DeadPatientError("observe of a dead patient")
        sigma = self.params.sigma
        reading = state.marker + (sigma * rng.standard_normal() if sigma > 0 else 0.0)
        return Observation(reading, state.clock, False)

    def step_cost(self, zeta: float, decision: Decision, zeta_next: float) -> float:
        return step_cost(zeta, decision, zeta_next, self.costs,
                         self.params.zeta0, self.params.death_level)

    def generate(self, state: PatientState, decision: Decision,
                 rng: np.random.Generator) -> StepOutcome:
        """One planner step: (next state, observation, cost).

        Death inside the segment yields the terminal sentinel observation
        and the step cost includes the death cost.
        """
        if state.mode == Mode.DEATH:
            raise DeadPatientError("generate called on a dead patient")
        m, z, u, c, reading, terminal, cost, frel = K.generate(
            int(state.mode), state.marker, state.sincejump, state.clock,
            int(decision.treatment), float(decision.delay),
            self.packed, rng)
        nxt = PatientState(int(m), z, u, c)
        obs = Observation(reading, c, bool(terminal))
        return StepOutcome(nxt, obs, cost, frel)

    def rollout_cost(self, state: PatientState, policy: str,
                     rng: np.random.Generator) -> float:
        """Total cost of a rollout policy from ``state`` to horizon/death."""
        pol = K.ROLLOUT_MODE if policy == "mode" else K.ROLLOUT_UNIFORM
        return float(K.rollout(int(state.mode), state.marker,
                               state.sincejump, state.clock, pol,
                               self.packed, rng))
