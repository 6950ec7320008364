"""Walk through one deferred-acceptance round by hand.

Shows preference-list construction under the rating policy, the 90/10
recommendation-noise rule, the proposal dynamics, and the stability of the
outcome.
"""
import numpy as np

from matchlab import (
    Agent,
    Gender,
    Policy,
    Role,
    RoundState,
    ScoreTable,
    apply_recommendation_noise,
    build_preferences,
    deferred_acceptance,
    seeded_rng,
)
from matchlab.matching import find_blocking_pairs


def agent(aid, role, gender, birth_year, arrival):
    return Agent(
        id=aid, role=role, gender=gender, birth_year=birth_year, signup_day=400,
        experience_level=2, arrival_minute=arrival,
        patience_min=6 if role is Role.SEEKER else None,
    )


seekers = [
    agent(1, Role.SEEKER, Gender.CIS_FEMALE, 1988, arrival=2),
    agent(2, Role.SEEKER, Gender.NON_BINARY, 2004, arrival=5),
    agent(3, Role.SEEKER, Gender.CIS_MALE, 1975, arrival=7),
]
counselors = [
    agent(10, Role.COUNSELOR, Gender.CIS_FEMALE, 1990, arrival=0),
    agent(11, Role.COUNSELOR, Gender.NON_BINARY, 2003, arrival=3),
]
agents = {a.id: a for a in seekers + counselors}

# predicted ratings for each (seeker, counselor) pair, seekers as rows
rating_matrix = np.array([
    [5, 3],
    [3, 5],
    [4, 2],
])
table = ScoreTable(
    [1, 2, 3], [10, 11],
    rating_matrix, np.zeros((3, 2), dtype=int), np.zeros((3, 2)),
)

state = RoundState(seekers=[1, 2, 3], counselors=[10, 11], minute=10)
prefs = build_preferences(Policy.RATING, state, agents, table, minute=10)
print("counselor preference lists (by predicted rating, waits break ties):")
for v, lst in prefs.counselor_prefs.items():
    print(f"  counselor {v}: {lst}")
print("seeker preference lists:")
for s, lst in prefs.seeker_prefs.items():
    print(f"  seeker {s}: {lst}")

noised = apply_recommendation_noise(prefs, 0.9, seeded_rng(7, "demo.noise"))
print("\nafter the 90/10 recommendation rule:")
for v, lst in noised.counselor_prefs.items():
    print(f"  counselor {v}: {lst}")

matching = deferred_acceptance(noised)
print("\ndeferred-acceptance outcome:")
for s, v in sorted(matching.pairs):
    print(f"  seeker {s} <-> counselor {v} (predicted rating {table.rating(s, v)})")
print(f"  unmatched seekers: {matching.unmatched_seekers}")
print(f"  blocking pairs in outcome: {find_blocking_pairs(noised, matching)}")
