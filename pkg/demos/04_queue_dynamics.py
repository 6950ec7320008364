"""Inspect the per-minute queue dynamics behind the aggregate metrics.

Runs a short replication window with full records and reconstructs the
waiting-pool trajectory, wait-time distribution, and abandonment pattern.
"""
import numpy as np

from matchlab import OracleParams, Policy, PopulationParams, RunConfig, calibrate
from matchlab.engine import World
from matchlab.oracle import generate_corpus
from matchlab.predictors import train_outcome_models

pop = PopulationParams()
oracle, _ = calibrate(OracleParams(), pop, seed=0, n_pairs=50_000)
corpus = generate_corpus(4000, oracle, pop, seed=2)
scaling = {
    "birth_year_range": list(pop.birth_year_range),
    "signup_day_range": list(pop.signup_day_range),
}
rating_model, _, blocking_model, _ = train_outcome_models(
    corpus, scaling, n_trees=30, max_depth=10, training_seed=3
)

cfg = RunConfig(seed=9, policy=Policy.REPLICATION, horizon_min=720, warmup_min=60)
world = World(cfg, oracle, rating_model, blocking_model)
pool_sizes = []
for minute in range(cfg.warmup_min + cfg.horizon_min):
    world.step(minute)
    pool_sizes.append(len(world.waiting))

warm = cfg.warmup_min
matches = [r for r in world.match_records if r.match_minute >= warm]
abandons = [r for r in world.abandon_records if r.abandon_minute >= warm]
waits = np.array([r.wait_min for r in matches])
patience = np.array([r.wait_min for r in abandons])

print(f"minutes simulated: {cfg.horizon_min} (after {warm} warm-up)")
print(f"waiting-pool size: mean {np.mean(pool_sizes[warm:]):.1f}, "
      f"p10 {np.percentile(pool_sizes[warm:], 10):.0f}, p90 {np.percentile(pool_sizes[warm:], 90):.0f}")
print(f"matches: {len(matches)}, abandonments: {len(abandons)} "
      f"-> matching rate {len(matches) / (len(matches) + len(abandons)):.3f}")
print(f"matched wait: mean {waits.mean():.2f} min, sd {waits.std():.2f}")
print("matched-wait histogram (minutes -> share):")
for w in range(1, int(waits.max()) + 1):
    share = (waits == w).mean()
    if share > 0.005:
        print(f"  {w:2d}: {'#' * int(60 * share)} {100 * share:.1f}%")
print(f"abandoners' patience: mean {patience.mean():.2f} min "
      f"(population mean {pop.patience_mean_min})")
