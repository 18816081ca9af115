"""Monte-Carlo planning toolkit for optimizing long-term disease follow-up.

A hidden piecewise-deterministic disease process (remission / two disease
conditions / death, with an exponentially evolving blood marker) is
controlled through noisy marker readings at practitioner-chosen visit
dates.  The package provides the exact simulator, particle and
fixed-support conditional belief filters, an adapted Monte-Carlo tree
search planner, a batch evaluation harness and an interactive session
service.
"""

from .params import (Config, CostParams, FilterParams, ModelParams,
                     PlannerParams, load_config, save_config)
from .patient import (DECISIONS, Decision, Mode, Observation, PatientState,
                      StepOutcome, Treatment, initial_state, parse_decision)
from .dynamics import DeadPatientError, DiseaseModel, step_cost
from .filters import (ConditionalFilter, ParticleFilter, cf_build, cf_update,
                      pf_init, pf_update, sample_states)
from .pomcp import Planner, adaptive_alpha, bin_observation
from .harness import (Baselines, EvalSummary, StrategySpec, TrajectoryRecord,
                      emit_report, evaluate, normalize, run_trajectory)

__version__ = "0.1.0"
