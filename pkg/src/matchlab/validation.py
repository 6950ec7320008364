"""Replication-fidelity validation: compares simulated label marginals and
queue statistics against the platform's published reference values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Policy, PopulationParams, RunConfig, seeded_rng
from .engine import run
from .metrics import pearson
from .oracle import DEFAULT_BLOCK_TARGET, DEFAULT_RATING_TARGETS, OracleParams
from .population import sample_chat_length, sample_decision_time, sample_patience
from .predictors import ForestModel

REFERENCE = {
    "rating_marginal": list(DEFAULT_RATING_TARGETS),
    "block_rate": DEFAULT_BLOCK_TARGET,
    "avg_wait_matched_min": 3.2,
    "matching_rate": 0.7835,
    "patience_mean": 4.15,
    "patience_sd": 3.26,
    "chat_len_mean": 17.67,
    "chat_len_sd": 15.44,
    "decision_mean": 0.8,
}

TOLERANCE = {
    "rating_marginal": 0.02,
    "block_rate": 0.015,
    "avg_wait_matched_min": 0.3,
    "matching_rate": 0.03,
    "patience_mean": 0.05,
    "patience_sd": 0.05,
    "chat_len_mean": 0.2,
    "chat_len_sd": 0.3,
    "decision_mean": 0.01,
}


@dataclass
class ValidationCheck:
    name: str
    passed: bool
    observed: object
    expected: object
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "observed": self.observed,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def sampler_checks(pop: PopulationParams, n_draws: int = 1_000_000, seed: int = 7) -> list[ValidationCheck]:
    rng = seeded_rng(seed, "validation.samplers")
    pat = sample_patience(pop, rng, size=n_draws)
    chat = sample_chat_length(pop, rng, size=n_draws)
    dec = sample_decision_time(pop, rng, size=n_draws)
    checks = []
    for name, observed in (
        ("patience_mean", float(pat.mean())),
        ("patience_sd", float(pat.std())),
        ("chat_len_mean", float(chat.mean())),
        ("chat_len_sd", float(chat.std())),
        ("decision_mean", float(dec.mean())),
    ):
        ref, tol = REFERENCE[name], TOLERANCE[name]
        checks.append(
            ValidationCheck(name, abs(observed - ref) <= tol, observed, ref, tol)
        )
    return checks


def replication_checks(
    oracle: OracleParams,
    rating_model: ForestModel,
    blocking_model: ForestModel,
    pop: PopulationParams | None = None,
    seeds: tuple[int, ...] = (101, 102, 103, 104, 105),
    horizon_min: int = 10080,
) -> list[ValidationCheck]:
    pop = pop or PopulationParams()
    marginals, blocks, waits, rates = [], [], [], []
    for seed in seeds:
        cfg = RunConfig(
            seed=seed, policy=Policy.REPLICATION, horizon_min=horizon_min, population=pop
        )
        res = run(cfg, oracle, rating_model, blocking_model)
        marginals.append(res.oracle_rating_marginal)
        blocks.append(res.oracle_block_rate)
        waits.append(res.outcome.avg_wait_matched_min)
        rates.append(res.outcome.matching_rate)
    marginal = np.mean(np.asarray(marginals), axis=0)
    ref_marg = np.asarray(REFERENCE["rating_marginal"])
    dev = float(np.max(np.abs(marginal - ref_marg)))
    corr = pearson(marginal, ref_marg)
    checks = [
        ValidationCheck(
            "rating_marginal",
            dev <= TOLERANCE["rating_marginal"],
            [float(x) for x in marginal],
            REFERENCE["rating_marginal"],
            TOLERANCE["rating_marginal"],
            detail=f"max deviation {dev:.4f}; pearson vs reference {corr:.4f}",
        )
    ]
    for name, values in (
        ("block_rate", blocks),
        ("avg_wait_matched_min", waits),
        ("matching_rate", rates),
    ):
        observed = float(np.mean(values))
        ref, tol = REFERENCE[name], TOLERANCE[name]
        checks.append(
            ValidationCheck(
                name,
                abs(observed - ref) <= tol,
                observed,
                ref,
                tol,
                detail=f"per-seed {['%.4f' % v for v in values]}",
            )
        )
    return checks


def run_validation(
    oracle: OracleParams,
    rating_model: ForestModel,
    blocking_model: ForestModel,
    pop: PopulationParams | None = None,
    seeds: tuple[int, ...] = (101, 102, 103, 104, 105),
    horizon_min: int = 10080,
    sampler_draws: int = 1_000_000,
) -> dict:
    """Full validation sweep; returns a serializable report with per-check pass/fail."""
    pop = pop or PopulationParams()
    checks = sampler_checks(pop, n_draws=sampler_draws)
    checks += replication_checks(
        oracle, rating_model, blocking_model, pop, seeds=seeds, horizon_min=horizon_min
    )
    return {
        "checks": [c.to_dict() for c in checks],
        "all_passed": all(c.passed for c in checks),
    }
