"""One planning call, dissected.

Runs the tree search from three different beliefs (confident remission,
confident relapse, genuinely uncertain) and prints the full value/count
table over the nine decisions.  The recommended decision is the argmin of
the estimated cost-to-go; exploration is controlled by the
exploitation/exploration weight, here also shown with its adaptive
entropy-based variants.
"""

import numpy as np

from followup.dynamics import DiseaseModel
from followup.filters import pf_init, ParticleFilter
from followup.params import PlannerParams
from followup.patient import DECISIONS, PatientState, initial_state
from followup.pomcp import Planner, adaptive_alpha


def table(diag):
    cells = []
    for d, v, n in zip(DECISIONS, diag["values"], diag["counts"]):
        cells.append(f"    {d.label:>7s}  V={v:8.2f}  N={n:6.0f}")
    return "\n".join(cells)


def plan_from(label, belief, model):
    planner = Planner(model, PlannerParams(n_search=800, k_root=200,
                                           alpha_prime=0.5, precision=0.1))
    decision, diag = planner.plan(belief, np.random.default_rng(0))
    marginal = belief.mode_marginal()
    print(f"\n--- {label} (mode marginal {np.round(marginal, 2)})")
    print(table(diag))
    print(f"  -> recommendation {decision.label}  "
          f"(search {diag['n_search']} sims, {diag['wall_ms']:.0f} ms, "
          f"alpha'={diag['alpha_prime']:.2f})")
    for rule in ("entropy", "rev-entropy", "rev-entropy-2"):
        print(f"     adaptive alpha' [{rule}] would be "
              f"{adaptive_alpha(marginal, rule):.3f}")


def mixed_belief(k):
    """Half remission at the nominal level, half fresh disease-1 at 2.2."""
    half = k // 2
    modes = np.array([0] * half + [1] * (k - half))
    markers = np.array([1.0] * half + [2.2] * (k - half))
    return ParticleFilter(modes, markers, np.full(k, 200.0), np.full(k, 300.0))


def main():
    model = DiseaseModel()
    k = 200
    plan_from("confident remission", pf_init(initial_state(), k), model)
    relapse = pf_init(PatientState(1, 3.0, 30.0, 300.0), k)
    plan_from("confident disease-1 relapse at marker 3.0", relapse, model)
    plan_from("uncertain: remission vs early relapse", mixed_belief(k), model)


if __name__ == "__main__":
    main()
