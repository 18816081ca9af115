"""Small-scale strategy comparison with the report pipeline.

Evaluates four strategies on paired seeds (planner with each filter, the
condition-matched oracle, uniform random), prints the study metrics and
writes the CSV summary plus the radar-normalized JSON under out/demo/.

Desk-sized by default (n=20); pass an integer argument to change it.
"""

import sys

from followup.harness import StrategySpec, emit_report, evaluate
from followup.params import Config


def pomcp(kind):
    cfg = Config().with_overrides(
        planner={"n_search": 200, "k_root": 200, "precision": 0.1,
                 "alpha_prime": 0.5},
        filter={"kind": kind, "cache_dir": ".followup_cache"})
    return StrategySpec(policy="pomcp", config=cfg,
                        label=f"planner-{kind}")


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    strategies = [
        pomcp("particle"),
        pomcp("conditional"),
        StrategySpec(policy="mode"),
        StrategySpec(policy="random"),
    ]
    summaries = []
    for spec in strategies:
        s = evaluate(spec, n=n, base_seed=0, workers=2)
        summaries.append(s)
        print(f"{s.label:24s} cost {s.value:7.2f} ± {s.half_width:5.2f}   "
              f"deaths {s.death_rate:5.3f}  visits {s.mean_visits:6.1f}  "
              f"PFS {s.mean_pfs:6.0f} d  treatment {s.mean_treatment_days:5.0f} d")
    paths = emit_report(summaries, "out/demo")
    print(f"\nwrote {paths['csv']} and {paths['radar']}")
    print("the radar JSON normalizes each axis to [0, 1] with 0 ideal; "
          "point the console's report view at it to see the chart")


if __name__ == "__main__":
    main()
