"""Compare all seven matching policies on paired seeds.

Uses a short horizon so the demo finishes in a couple of minutes; the CLI
`matchlab compare` runs the full-week version and writes the same tables to
disk.
"""
from matchlab import OracleParams, PopulationParams, calibrate
from matchlab.experiments import (
    ExperimentSpec,
    comparison_payload,
    comparison_text_table,
    run_experiment,
    subgroup_payload,
)
from matchlab.oracle import generate_corpus
from matchlab.predictors import train_outcome_models

pop = PopulationParams()
oracle, _ = calibrate(OracleParams(), pop, seed=0)
corpus = generate_corpus(8000, oracle, pop, seed=1)
scaling = {
    "birth_year_range": list(pop.birth_year_range),
    "signup_day_range": list(pop.signup_day_range),
}
rating_model, _, blocking_model, _ = train_outcome_models(
    corpus, scaling, n_trees=50, training_seed=0
)

spec = ExperimentSpec(seeds=[11, 12], horizon_min=1440)  # two paired one-day runs
print(f"running {len(spec.policies)} policies x {len(spec.seeds)} seeds ...")
results = run_experiment(spec, oracle, rating_model, blocking_model)

comparison = comparison_payload(spec, results)
print(comparison_text_table(comparison))

subgroups = subgroup_payload(spec, results)
print("gender-minority seekers under the filter policy:")
cell = subgroups["policies"]["filter"]["minority"]["metrics"]
for key in ("pct_high_rating", "pct_blocked_pairs", "matching_rate"):
    print(f"  {key}: {cell[key]['display']}")
print("overall under the filter policy:")
row = next(r for r in comparison["rows"] if r["policy"] == "filter")
for key in ("pct_high_rating", "pct_blocked_pairs", "matching_rate"):
    print(f"  {key}: {row['metrics'][key]['display']}")
