"""Command-line interface: calibrate, train, simulate, compare, validate, serve."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import POLICY_NAMES, Policy, PopulationParams, RunConfig
from .engine import run
from .experiments import (
    BLOCKING_MODEL_FILE,
    CORPUS_FILE,
    EVAL_FILE,
    ORACLE_FILE,
    RATING_MODEL_FILE,
    ExperimentSpec,
    data_dir,
    load_artifacts,
    run_experiment,
    write_experiment_outputs,
)
from .oracle import (
    CalibrationError,
    OracleParams,
    calibrate,
    generate_corpus,
    save_corpus_csv,
)
from .predictors import train_outcome_models
from .validation import run_validation


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data-dir", default=None, help="artifact store root (or $MATCHLAB_DATA_DIR)")
    p.add_argument("--seed", type=int, default=None, help="base random seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchlab",
        description="Two-sided peer-support matching market simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate the outcome model to reference marginals")
    _add_common(p)
    p.add_argument("--pairs", type=int, default=200_000, help="calibration sample size")
    p.add_argument("--out", default=None, help="output path (default <data-dir>/oracle.json)")

    p = sub.add_parser("train", help="generate a labeled corpus and train both predictors")
    _add_common(p)
    p.add_argument("--corpus-size", type=int, default=23587)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--oracle", default=None, help="oracle params path")

    p = sub.add_parser("simulate", help="run one simulation")
    _add_common(p)
    p.add_argument("--config", default=None, help="RunConfig JSON file")
    p.add_argument("--policy", choices=POLICY_NAMES, default="replication")
    p.add_argument("--horizon", type=int, default=10080)
    p.add_argument("--records", choices=["summary", "full"], default="summary")
    p.add_argument("--out", default=None, help="result JSON path")

    p = sub.add_parser("compare", help="run a policy x seed grid and write comparison tables")
    _add_common(p)
    p.add_argument("--policies", default="all", help="'all' or comma-separated policy names")
    p.add_argument("--seeds", type=int, default=5, help="number of paired seeds")
    p.add_argument("--horizon", type=int, default=10080)
    p.add_argument("--out-dir", default=None, help="output directory (default <data-dir>/comparison)")

    p = sub.add_parser("validate", help="run the replication-fidelity validation suite")
    _add_common(p)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--horizon", type=int, default=10080)
    p.add_argument("--sampler-draws", type=int, default=1_000_000)
    p.add_argument("--out", default=None, help="report path (default <data-dir>/validation.json)")

    p = sub.add_parser("serve", help="start the HTTP experiment service")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-concurrent", type=int, default=None, help="worker threads (default cores-1)")
    p.add_argument("--capacity", type=int, default=16, help="max queued+running experiments")
    p.add_argument("--ui", default=None, help="directory of static UI files to serve at /")

    return parser


def cmd_calibrate(args) -> int:
    base = data_dir(args.data_dir)
    base.mkdir(parents=True, exist_ok=True)
    out = Path(args.out) if args.out else base / ORACLE_FILE
    seed = args.seed or 0
    try:
        params, achieved = calibrate(
            OracleParams(), PopulationParams(), seed=seed, n_pairs=args.pairs
        )
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return 1
    params.save(out)
    print(f"wrote {out}")
    print(
        "achieved rating marginal: "
        + ", ".join(f"{100 * x:.2f}%" for x in achieved["rating_marginal"])
    )
    print(f"achieved block rate: {100 * achieved['block_rate']:.2f}%")
    return 0


def cmd_train(args) -> int:
    base = data_dir(args.data_dir)
    base.mkdir(parents=True, exist_ok=True)
    oracle_path = Path(args.oracle) if args.oracle else base / ORACLE_FILE
    if not oracle_path.exists():
        print(f"oracle params not found at {oracle_path}; run `matchlab calibrate`", file=sys.stderr)
        return 1
    oracle = OracleParams.load(oracle_path)
    pop = PopulationParams()
    seed = args.seed or 0
    corpus = generate_corpus(args.corpus_size, oracle, pop, seed=seed + 1)
    save_corpus_csv(corpus, base / CORPUS_FILE)
    scaling = {
        "birth_year_range": list(pop.birth_year_range),
        "signup_day_range": list(pop.signup_day_range),
    }
    rating_model, rating_eval, blocking_model, blocking_eval = train_outcome_models(
        corpus,
        scaling,
        n_trees=args.trees,
        max_depth=args.depth,
        min_leaf=args.min_leaf,
        smote_k=args.smote_k,
        training_seed=seed,
    )
    rating_model.save(base / RATING_MODEL_FILE)
    blocking_model.save(base / BLOCKING_MODEL_FILE)
    evals = {"rating": rating_eval.to_dict(), "blocking": blocking_eval.to_dict()}
    (base / EVAL_FILE).write_text(json.dumps(evals, indent=2, sort_keys=True), encoding="utf-8")
    print(f"wrote {base / CORPUS_FILE}, {base / RATING_MODEL_FILE}, {base / BLOCKING_MODEL_FILE}")
    print(f"rating model: accuracy {rating_eval.accuracy:.4f}, macro F1 {rating_eval.macro_f1:.4f}")
    print(f"blocking model: accuracy {blocking_eval.accuracy:.4f}, macro F1 {blocking_eval.macro_f1:.4f}")
    return 0


def cmd_simulate(args) -> int:
    base = data_dir(args.data_dir)
    if args.config:
        cfg = RunConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
        if args.seed is not None:
            cfg.seed = args.seed
    else:
        cfg = RunConfig(
            seed=args.seed or 0,
            policy=Policy(args.policy),
            horizon_min=args.horizon,
            records=args.records,
        )
    oracle, rating_model, blocking_model = load_artifacts(base)
    result = run(cfg, oracle, rating_model, blocking_model)
    out = Path(args.out or cfg.output_path or (base / f"run_{cfg.policy.value}_{cfg.seed}.json"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.to_json(), encoding="utf-8")
    o = result.outcome
    print(f"wrote {out}")
    rate = "-" if o.matching_rate is None else f"{100 * o.matching_rate:.2f}%"
    wait = "-" if o.avg_wait_matched_min is None else f"{o.avg_wait_matched_min:.2f} min"
    print(f"policy={cfg.policy.value} seed={cfg.seed} matching_rate={rate} avg_wait_matched={wait}")
    return 0


def cmd_compare(args) -> int:
    base = data_dir(args.data_dir)
    policies = list(POLICY_NAMES) if args.policies == "all" else [
        p.strip() for p in args.policies.split(",") if p.strip()
    ]
    base_seed = args.seed or 0
    spec = ExperimentSpec(
        policies=policies,
        seeds=[base_seed + 101 + i for i in range(args.seeds)],
        horizon_min=args.horizon,
    )
    oracle, rating_model, blocking_model = load_artifacts(base)
    results = run_experiment(spec, oracle, rating_model, blocking_model)
    out_dir = Path(args.out_dir) if args.out_dir else base / "comparison"
    payloads = write_experiment_outputs(out_dir, spec, results)
    print(f"wrote {out_dir / 'comparison.json'}, {out_dir / 'subgroups.json'}")
    print((out_dir / "comparison.txt").read_text(encoding="utf-8"))
    return 0


def cmd_validate(args) -> int:
    base = data_dir(args.data_dir)
    oracle, rating_model, blocking_model = load_artifacts(base)
    base_seed = args.seed or 0
    seeds = tuple(base_seed + 101 + i for i in range(args.seeds))
    report = run_validation(
        oracle,
        rating_model,
        blocking_model,
        seeds=seeds,
        horizon_min=args.horizon,
        sampler_draws=args.sampler_draws,
    )
    out = Path(args.out) if args.out else base / "validation.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: observed {check['observed']} vs {check['expected']} (tol {check['tolerance']})")
    print(f"wrote {out}")
    return 0 if report["all_passed"] else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        data_dir_override=args.data_dir,
        max_concurrent=args.max_concurrent,
        capacity=args.capacity,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "calibrate": cmd_calibrate,
        "train": cmd_train,
        "simulate": cmd_simulate,
        "compare": cmd_compare,
        "validate": cmd_validate,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
