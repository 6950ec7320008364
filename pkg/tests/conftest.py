from __future__ import annotations

import time

import pytest

from matchlab.core import Policy, PopulationParams, RunConfig
from matchlab.engine import run
from matchlab.oracle import OracleParams, calibrate, generate_corpus
from matchlab.predictors import train_outcome_models

from acceptance_report import LINES as ACCEPTANCE_LINES

ACCEPTANCE_SEEDS = (101, 102, 103, 104, 105)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pop():
    return PopulationParams()


@pytest.fixture(scope="session")
def oracle_params(pop):
    params, _ = calibrate(OracleParams(), pop, seed=0)
    return params


def _scaling(pop):
    return {
        "birth_year_range": list(pop.birth_year_range),
        "signup_day_range": list(pop.signup_day_range),
    }


@pytest.fixture(scope="session")
def small_corpus(oracle_params, pop):
    return generate_corpus(4000, oracle_params, pop, seed=42)


@pytest.fixture(scope="session")
def small_models(small_corpus, pop):
    """Compact predictors for engine-level tests; full-size ones live in acceptance."""
    rating_model, rating_eval, blocking_model, blocking_eval = train_outcome_models(
        small_corpus, _scaling(pop), n_trees=30, max_depth=10, training_seed=9
    )
    return rating_model, blocking_model, rating_eval, blocking_eval


@pytest.fixture(scope="session")
def full_corpus(oracle_params, pop):
    return generate_corpus(23587, oracle_params, pop, seed=1)


@pytest.fixture(scope="session")
def full_models(full_corpus, pop):
    """Default-size predictors trained on the default corpus, with wall time."""
    t0 = time.perf_counter()
    rating_model, rating_eval, blocking_model, blocking_eval = train_outcome_models(
        full_corpus, _scaling(pop), training_seed=0
    )
    elapsed = time.perf_counter() - t0
    return {
        "rating_model": rating_model,
        "blocking_model": blocking_model,
        "rating_eval": rating_eval,
        "blocking_eval": blocking_eval,
        "train_seconds": elapsed,
    }


def _run_weeks(policy, oracle_params, models):
    results = []
    for seed in ACCEPTANCE_SEEDS:
        cfg = RunConfig(seed=seed, policy=policy)
        t0 = time.perf_counter()
        res = run(cfg, oracle_params, models["rating_model"], models["blocking_model"])
        results.append((res, time.perf_counter() - t0))
    return results


@pytest.fixture(scope="session")
def replication_weeks(oracle_params, full_models):
    """Five calibrated replication weeks (default config, paired seeds)."""
    return _run_weeks(Policy.REPLICATION, oracle_params, full_models)


@pytest.fixture(scope="session")
def policy_weeks(oracle_params, full_models, replication_weeks):
    """Full-week runs for every policy over the same paired seeds."""
    weeks = {Policy.REPLICATION: replication_weeks}
    for policy in (
        Policy.FCFS,
        Policy.SIMILARITY,
        Policy.RATING,
        Policy.BLOCKING,
        Policy.RATING_BLOCKING,
        Policy.FILTER,
    ):
        weeks[policy] = _run_weeks(policy, oracle_params, full_models)
    return weeks
