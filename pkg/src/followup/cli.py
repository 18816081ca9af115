"""Command-line entry point: simulate, evaluate, build-cache, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .params import load_config


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=0)


def _strategy_from_args(args) -> "StrategySpec":
    from .harness import StrategySpec
    cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "filter", None):
        overrides["filter"] = {"kind": args.filter}
    if getattr(args, "n_search", None):
        overrides.setdefault("planner", {})["n_search"] = args.n_search
    if getattr(args, "k", None):
        overrides.setdefault("planner", {})["k_root"] = args.k
    cfg = cfg.with_overrides(**overrides)
    return StrategySpec(policy=args.policy, config=cfg)


def cmd_simulate(args) -> int:
    from .dynamics import DiseaseModel
    from .harness import run_trajectory, verify_record
    spec = _strategy_from_args(args)
    model = DiseaseModel(spec.config.model, spec.config.costs)
    rec = run_trajectory(spec, args.seed, model)
    print(f"# strategy={spec.label} seed={rec.seed}")
    print("visit  t_n      reading   decision  mode  marker    step_cost")
    for i, v in enumerate(rec.visits):
        print(f"{i:5d}  {v.time:7.1f}  {v.reading:8.3f}  {v.decision:>8s}  "
              f"{v.true_mode:4d}  {v.true_marker:8.4f}  {v.step_cost:9.4f}")
    print(f"# status={rec.terminal_status} total_cost={rec.total_cost:.4f} "
          f"visits={rec.n_visits} pfs={rec.pfs_days:.1f} "
          f"treatment_days={rec.treatment_days:.1f} "
          f"runtime={rec.runtime_s:.2f}s")
    problems = verify_record(rec, model)
    for p in problems:
        print(f"INVARIANT VIOLATION: {p}", file=sys.stderr)
    return 1 if problems else 0


def cmd_evaluate(args) -> int:
    from .dynamics import DiseaseModel
    from .harness import (Baselines, emit_report, evaluate, read_summaries,
                          verify_record)
    spec = _strategy_from_args(args)
    model = DiseaseModel(spec.config.model, spec.config.costs)
    summary, records = evaluate(spec, args.n, base_seed=args.seed,
                                workers=args.workers, return_records=True)
    failures = 0
    for rec in records:
        problems = verify_record(rec, model)
        for p in problems:
            failures += 1
            print(f"INVARIANT VIOLATION (seed {rec.seed}): {p}", file=sys.stderr)
    summaries = [summary]
    csv_path = os.path.join(args.out_dir, "summary.csv")
    if os.path.exists(csv_path):
        summaries = [s for s in read_summaries(csv_path)
                     if s.label != summary.label] + summaries
    baselines = None
    if args.v0 is not None:
        rand = next((s for s in summaries if s.policy == "random"), None)
        if rand is not None:
            baselines = Baselines(random_death_rate=rand.death_rate,
                                  c_random=rand.value, v0=args.v0)
    paths = emit_report(summaries, args.out_dir, baselines,
                        horizon=spec.config.model.horizon)
    # reproducibility manifest: these inputs determine every emitted number
    manifest_path = os.path.join(args.out_dir, f"manifest_{spec.label}.json")
    with open(manifest_path, "w") as fh:
        json.dump({"label": spec.label, "policy": spec.policy,
                   "config": spec.config.to_dict(),
                   "model_digest": spec.config.model.digest(),
                   "seeds": [args.seed + i for i in range(args.n)]}, fh,
                  indent=2)
    paths["manifest"] = manifest_path
    print(json.dumps({"summary": summary.__dict__, "paths": paths}, indent=2))
    return 1 if failures else 0


def cmd_build_cache(args) -> int:
    from .dynamics import DiseaseModel
    from .filters import CfGrid, cf_build
    cfg = load_config(args.config)
    model = DiseaseModel(cfg.model, cfg.costs)
    fp = cfg.filter
    grid = CfGrid(model, fp.grid_remission, fp.grid_disease1, fp.grid_disease2)
    cache_dir = args.out_dir or fp.cache_dir or ".followup_cache"
    flt = cf_build(model, grid, fp.tensor_mc, fp.tensor_seed, cache_dir=cache_dir)
    print(f"conditional-filter tensor cached under {cache_dir} "
          f"(support {flt.grid.size}, mc {fp.tensor_mc})")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    app = create_app(data_dir=args.data_dir, config_path=args.config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="followup",
        description="Monte-Carlo planning for long-term disease follow-up")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory, print the trace")
    _add_common(p)
    p.add_argument("--policy", default="pomcp", choices=("pomcp", "mode", "random"))
    p.add_argument("--filter", default=None, choices=("particle", "conditional"))
    p.add_argument("--n-search", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="Monte-Carlo evaluation, CSV/JSON report")
    _add_common(p)
    p.add_argument("--policy", default="pomcp", choices=("pomcp", "mode", "random"))
    p.add_argument("--filter", default=None, choices=("particle", "conditional"))
    p.add_argument("--n-search", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--v0", type=float, default=None,
                   help="external optimal-value anchor for cost normalization")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("build-cache", help="precompute the conditional-filter tensor")
    _add_common(p)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_build_cache)

    p = sub.add_parser("serve", help="HTTP session service")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", default="sessions")
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
