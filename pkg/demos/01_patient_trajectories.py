"""Simulate hidden patient trajectories and inspect what a policy sees.

The disease process alternates deterministic marker flows with random
condition jumps: relapses push the marker into exponential growth, the
matching treatment pulls it back toward the nominal level, and the level
boundaries trigger recovery or death.  This script rolls a few patients
forward under the condition-matched oracle policy and under uniformly
random decisions, then prints the per-visit traces side by side.
"""

import numpy as np

from followup.harness import StrategySpec, run_trajectory

SEEDS = [3, 11, 27]


def show(rec, label):
    print(f"--- {label}: status={rec.terminal_status}, "
          f"cost={rec.total_cost:.1f}, visits={rec.n_visits}, "
          f"PFS={rec.pfs_days:.0f} d, treatment={rec.treatment_days:.0f} d")
    picks = [0, 1] + list(range(2, len(rec.visits), max(1, len(rec.visits) // 6)))
    print("      t_n   reading  decision  true mode  true marker")
    for i in sorted(set(picks)):
        v = rec.visits[i]
        print(f"   {v.time:6.0f}  {v.reading:8.3f}  {v.decision:>8s}  "
              f"{v.true_mode:9d}  {v.true_marker:11.4f}")


def main():
    for seed in SEEDS:
        print(f"\n================ patient seed {seed} ================")
        show(run_trajectory(StrategySpec(policy="mode"), seed),
             "condition-matched oracle (15-day visits)")
        show(run_trajectory(StrategySpec(policy="random"), seed),
             "uniform random decisions")


if __name__ == "__main__":
    main()
