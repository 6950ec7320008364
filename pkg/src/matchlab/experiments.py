"""Batch experiment harness: paired policy grids, aggregation, and rank annotations."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import POLICY_NAMES, Policy, PopulationParams, RunConfig
from .engine import RunResult, run
from .metrics import METRIC_HIGHER_IS_BETTER, METRIC_KEYS, SUBGROUP_KEYS, mean_ci95
from .oracle import OracleParams
from .predictors import ForestModel

DEFAULT_DATA_DIR = "matchlab-data"
ENV_DATA_DIR = "MATCHLAB_DATA_DIR"

ORACLE_FILE = "oracle.json"
RATING_MODEL_FILE = "rating_model.json"
BLOCKING_MODEL_FILE = "blocking_model.json"
CORPUS_FILE = "corpus.csv"
EVAL_FILE = "eval_reports.json"


def data_dir(override: str | None = None) -> Path:
    return Path(override or os.environ.get(ENV_DATA_DIR) or DEFAULT_DATA_DIR)


def load_artifacts(base: Path) -> tuple[OracleParams, ForestModel, ForestModel]:
    """Load the calibrated oracle and both predictor models, failing with named paths."""
    oracle_path = base / ORACLE_FILE
    rating_path = base / RATING_MODEL_FILE
    blocking_path = base / BLOCKING_MODEL_FILE
    missing = [str(p) for p in (oracle_path, rating_path, blocking_path) if not p.exists()]
    if missing:
        raise FileNotFoundError(
            "missing model artifacts: "
            + ", ".join(missing)
            + " (run `matchlab calibrate` and `matchlab train` first)"
        )
    return (
        OracleParams.load(oracle_path),
        ForestModel.load(rating_path),
        ForestModel.load(blocking_path),
    )


@dataclass
class ExperimentSpec:
    """A policy x seed grid sharing population parameters and model versions."""

    policies: list[str] = field(default_factory=lambda: list(POLICY_NAMES))
    seeds: list[int] = field(default_factory=lambda: [101, 102, 103, 104, 105])
    horizon_min: int = 10080
    warmup_min: int = 60
    recommendation_accept_prob: float = 0.9
    population: dict = field(default_factory=dict)
    records: str = "summary"

    def __post_init__(self) -> None:
        if not self.policies:
            raise ValueError("policies must be non-empty")
        unknown = [p for p in self.policies if p not in POLICY_NAMES]
        if unknown:
            raise ValueError(f"unknown policies: {unknown}; valid: {list(POLICY_NAMES)}")
        if len(set(self.policies)) != len(self.policies):
            raise ValueError("duplicate policies in grid")
        if isinstance(self.seeds, int):
            self.seeds = list(range(101, 101 + self.seeds))
        if not self.seeds:
            raise ValueError("seeds must be non-empty")

    def run_configs(self) -> list[RunConfig]:
        pop = PopulationParams.from_dict(self.population) if self.population else PopulationParams()
        configs = []
        for policy in self.policies:
            for seed in self.seeds:
                configs.append(
                    RunConfig(
                        seed=seed,
                        horizon_min=self.horizon_min,
                        warmup_min=self.warmup_min,
                        policy=Policy(policy),
                        recommendation_accept_prob=self.recommendation_accept_prob,
                        population=pop,
                        records=self.records,
                    )
                )
        return configs

    def to_dict(self) -> dict:
        return {
            "policies": list(self.policies),
            "seeds": list(self.seeds),
            "horizon_min": self.horizon_min,
            "warmup_min": self.warmup_min,
            "recommendation_accept_prob": self.recommendation_accept_prob,
            "population": dict(self.population),
            "records": self.records,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(**d)


def _fmt(metric: str, value: float | None) -> str:
    if value is None:
        return "-"
    if metric in ("pct_high_rating", "pct_low_rating", "pct_blocked_pairs", "matching_rate"):
        return f"{100 * value:.2f}%"
    if metric in ("avg_wait_matched_min", "avg_wait_unmatched_min"):
        return f"{value:.2f} min"
    return f"{value:.2f}"


def comparison_payload(
    spec: ExperimentSpec, results: dict[str, list[RunResult]]
) -> dict:
    """Aggregate per-policy metric means with best/worst rank annotations."""
    rows = []
    for policy in spec.policies:
        metrics = {}
        for key in METRIC_KEYS:
            values = [getattr(r.outcome, key) for r in results[policy]]
            agg = mean_ci95(values)
            agg["per_seed"] = [v for v in values]
            agg["display"] = _fmt(key, agg["mean"])
            metrics[key] = agg
        rows.append({"policy": policy, "metrics": metrics})
    # rank annotations: 1 = best; ties resolve to the earlier policy in the grid
    for key in METRIC_KEYS:
        higher_better = METRIC_HIGHER_IS_BETTER[key]
        scored = [
            (i, row["metrics"][key]["mean"])
            for i, row in enumerate(rows)
            if row["metrics"][key]["mean"] is not None
        ]
        scored.sort(key=lambda t: (-t[1] if higher_better else t[1], t[0]))
        for rank, (i, _) in enumerate(scored, start=1):
            cell = rows[i]["metrics"][key]
            cell["rank"] = rank
            cell["best"] = rank == 1
            cell["worst"] = rank == len(scored) and len(scored) > 1
    return {
        "spec": spec.to_dict(),
        "metrics": list(METRIC_KEYS),
        "rows": rows,
    }


def subgroup_payload(spec: ExperimentSpec, results: dict[str, list[RunResult]]) -> dict:
    """Per-policy subgroup metric means (teen / non-teen / minority / non-minority)."""
    out: dict = {"spec": spec.to_dict(), "groups": list(SUBGROUP_KEYS), "policies": {}}
    for policy in spec.policies:
        groups = {}
        for g in SUBGROUP_KEYS:
            metrics = {}
            for key in METRIC_KEYS:
                values = [getattr(r.subgroups.groups[g], key) for r in results[policy]]
                agg = mean_ci95(values)
                agg["display"] = _fmt(key, agg["mean"])
                metrics[key] = agg
            n_matched = int(np.sum([r.subgroups.groups[g].n_matched for r in results[policy]]))
            groups[g] = {"metrics": metrics, "n_matched_total": n_matched}
        out["policies"][policy] = groups
    return out


def comparison_text_table(payload: dict) -> str:
    """Aligned plain-text comparison table for visual diffing."""
    headers = ["policy"] + [k for k in payload["metrics"]]
    cells = [headers]
    for row in payload["rows"]:
        line = [row["policy"]]
        for key in payload["metrics"]:
            cell = row["metrics"][key]
            mark = "*" if cell.get("best") else ("!" if cell.get("worst") else "")
            line.append(cell["display"] + mark)
        cells.append(line)
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    lines.append("")
    lines.append("* best in column, ! worst in column")
    return "\n".join(lines) + "\n"


def run_experiment(
    spec: ExperimentSpec,
    oracle: OracleParams,
    rating_model: ForestModel,
    blocking_model: ForestModel,
    progress_cb=None,
    cancel_check=None,
) -> dict[str, list[RunResult]] | None:
    """Execute the grid; returns None if cancelled mid-way."""
    results: dict[str, list[RunResult]] = {p: [] for p in spec.policies}
    configs = spec.run_configs()
    total = len(configs)
    done = 0
    for cfg in configs:
        if cancel_check is not None and cancel_check():
            return None
        res = run(cfg, oracle, rating_model, blocking_model)
        results[cfg.policy.value].append(res)
        done += 1
        if progress_cb is not None:
            progress_cb(done, total)
    return results


def write_experiment_outputs(
    out_dir: Path, spec: ExperimentSpec, results: dict[str, list[RunResult]]
) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    comparison = comparison_payload(spec, results)
    subgroups = subgroup_payload(spec, results)
    (out_dir / "comparison.json").write_text(
        json.dumps(comparison, indent=2, sort_keys=True), encoding="utf-8"
    )
    (out_dir / "subgroups.json").write_text(
        json.dumps(subgroups, indent=2, sort_keys=True), encoding="utf-8"
    )
    (out_dir / "comparison.txt").write_text(
        comparison_text_table(comparison), encoding="utf-8"
    )
    return {"comparison": comparison, "subgroups": subgroups}
