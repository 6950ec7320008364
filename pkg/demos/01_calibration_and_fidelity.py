"""Calibrate the synthetic outcome model and check replication fidelity.

The outcome model assigns every (seeker, counselor) pair a latent
compatibility score and emits stochastic rating/block labels. Calibration
bisects the rating cutpoints and block base probability until label marginals
over random pairs match the published reference distribution. A simulated
replication week should then reproduce those marginals on its matched pairs.
"""
import numpy as np

from matchlab import OracleParams, Policy, PopulationParams, RunConfig, calibrate, run
from matchlab.oracle import DEFAULT_BLOCK_TARGET, DEFAULT_RATING_TARGETS, generate_corpus
from matchlab.predictors import train_outcome_models

pop = PopulationParams()

print("calibrating cutpoints and block base probability ...")
oracle, achieved = calibrate(OracleParams(), pop, seed=0)
print("  target marginal :", [f"{100 * t:.2f}%" for t in DEFAULT_RATING_TARGETS])
print("  achieved        :", [f"{100 * a:.2f}%" for a in achieved["rating_marginal"]])
print(f"  block rate      : {100 * achieved['block_rate']:.2f}% (target {100 * DEFAULT_BLOCK_TARGET}%)")

print("\ntraining predictors on a fresh labeled corpus (about a minute) ...")
corpus = generate_corpus(23587, oracle, pop, seed=1)
scaling = {
    "birth_year_range": list(pop.birth_year_range),
    "signup_day_range": list(pop.signup_day_range),
}
rating_model, rating_eval, blocking_model, blocking_eval = train_outcome_models(
    corpus, scaling, training_seed=0
)
print(f"  rating forest accuracy   : {rating_eval.accuracy:.3f}")
print(f"  blocking forest accuracy : {blocking_eval.accuracy:.3f}")

print("\nsimulating one replication week (default parameters) ...")
result = run(RunConfig(seed=42, policy=Policy.REPLICATION), oracle, rating_model, blocking_model)
marginal = np.array(result.oracle_rating_marginal)
print("  matched-pair label marginal:", [f"{100 * m:.2f}%" for m in marginal])
print(f"  matched-pair block rate    : {100 * result.oracle_block_rate:.2f}%")
o = result.outcome
print(f"  matching rate              : {100 * o.matching_rate:.2f}%")
print(f"  mean matched wait          : {o.avg_wait_matched_min:.2f} min")
print(f"  mean unmatched wait        : {o.avg_wait_unmatched_min:.2f} min")
