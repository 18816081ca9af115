"""Core value types: patient state, decisions, observations, step outcomes."""

from __future__ import annotations

import math
from enum import IntEnum
from typing import NamedTuple

from .params import DELAYS, TREATMENT_LABELS


class Mode(IntEnum):
    REMISSION = 0
    DISEASE_1 = 1
    DISEASE_2 = 2
    DEATH = 3


class Treatment(IntEnum):
    NONE = 0
    A = 1
    B = 2

    @property
    def label(self) -> str:
        return TREATMENT_LABELS[self]


class PatientState(NamedTuple):
    """Hidden state: condition, marker level, time since last condition
    change, and absolute time since study entry (days)."""

    mode: int
    marker: float
    sincejump: float
    clock: float

    @property
    def is_dead(self) -> bool:
        return self.mode == Mode.DEATH


class Decision(NamedTuple):
    """A treatment allocation together with the delay to the next visit."""

    treatment: int
    delay: int

    @property
    def label(self) -> str:
        return f"{TREATMENT_LABELS[self.treatment]}/{self.delay}"


#: The full decision space, in lexicographic order (none < a < b, then
#: 15 < 30 < 60).  Index arithmetic: index = 3 * treatment + delay rank.
DECISIONS: tuple[Decision, ...] = tuple(
    Decision(t, d) for t in (0, 1, 2) for d in DELAYS
)


def decision_index(decision: Decision) -> int:
    return 3 * decision.treatment + DELAYS.index(decision.delay)


def parse_decision(treatment: str, delay: int) -> Decision:
    try:
        t = TREATMENT_LABELS.index(treatment)
    except ValueError:
        raise ValueError(f"unknown treatment {treatment!r}") from None
    if delay not in DELAYS:
        raise ValueError(f"delay must be one of {DELAYS}, got {delay}")
    return Decision(t, int(delay))


class Observation(NamedTuple):
    """Noisy marker reading at a visit.  ``terminal`` marks the death
    sentinel, in which case ``reading`` is NaN and ``time`` is the death
    time."""

    reading: float
    time: float
    terminal: bool = False


class StepOutcome(NamedTuple):
    """Result of one generator step: next hidden state, the observation
    it emitted, the step cost, and (simulator ground truth, NaN if none)
    the absolute time of the first relapse that occurred inside the step."""

    state: PatientState
    observation: Observation
    cost: float
    first_relapse_clock: float = math.nan


def initial_state(zeta0: float = 1.0) -> PatientState:
    """Study entry: remission at the nominal marker level."""
    return PatientState(Mode.REMISSION, zeta0, 0.0, 0.0)
