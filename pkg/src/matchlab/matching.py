"""Preference construction and the applicant-proposing deferred-acceptance engine.

Five algorithmic policies build two-sided preference lists from waiting time,
cosine similarity, or predicted outcomes; deferred acceptance then produces
the unique stable matching for the (noised) profile. The replication and
filter policies bypass preference lists entirely and are claim-based (see
engine.py for their per-minute mechanics).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Agent, Policy, combined_score

_PREF_SCORED = (
    Policy.SIMILARITY,
    Policy.RATING,
    Policy.BLOCKING,
    Policy.RATING_BLOCKING,
)


@dataclass
class RoundState:
    """Agents eligible for matching in one simulation minute."""

    seekers: list[int]
    counselors: list[int]
    minute: int

    def __post_init__(self) -> None:
        overlap = set(self.seekers) & set(self.counselors)
        if overlap:
            raise ValueError(f"ids on both sides of the market: {sorted(overlap)}")


@dataclass
class PreferenceProfile:
    """Ordered candidate lists for both sides, consumed by deferred acceptance."""

    seeker_prefs: dict[int, list[int]]
    counselor_prefs: dict[int, list[int]]


@dataclass
class Matching:
    pairs: set[tuple[int, int]]
    unmatched_seekers: list[int]
    unmatched_counselors: list[int]


def cosine_of_vectors(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def cosine_similarity(a: Agent, b: Agent, encoder) -> float:
    """Cosine of the two agents' demographic encodings (1.0 for identical)."""
    return cosine_of_vectors(encoder(a), encoder(b))


class ScoreTable:
    """Per-pair predicted outcomes and similarities, stored as aligned matrices."""

    def __init__(
        self,
        seeker_ids: list[int],
        counselor_ids: list[int],
        rating_m: np.ndarray,
        block_m: np.ndarray,
        sim_m: np.ndarray,
    ):
        self.seeker_ids = list(seeker_ids)
        self.counselor_ids = list(counselor_ids)
        self.rating_m = np.asarray(rating_m)
        self.block_m = np.asarray(block_m)
        self.sim_m = np.asarray(sim_m)
        self._si = {s: i for i, s in enumerate(self.seeker_ids)}
        self._vi = {v: j for j, v in enumerate(self.counselor_ids)}

    @classmethod
    def from_dict(cls, scores: dict[tuple[int, int], tuple[int, int, float]]) -> "ScoreTable":
        seekers = sorted({s for s, _ in scores})
        counselors = sorted({v for _, v in scores})
        r = np.zeros((len(seekers), len(counselors)), dtype=int)
        b = np.zeros_like(r)
        sim = np.zeros(r.shape, dtype=float)
        si = {s: i for i, s in enumerate(seekers)}
        vi = {v: j for j, v in enumerate(counselors)}
        for (s, v), (rv, bv, sv) in scores.items():
            r[si[s], vi[v]] = rv
            b[si[s], vi[v]] = bv
            sim[si[s], vi[v]] = sv
        return cls(seekers, counselors, r, b, sim)

    def rating(self, s: int, v: int) -> int:
        return int(self.rating_m[self._si[s], self._vi[v]])

    def block(self, s: int, v: int) -> int:
        return int(self.block_m[self._si[s], self._vi[v]])

    def similarity(self, s: int, v: int) -> float:
        return float(self.sim_m[self._si[s], self._vi[v]])

    def combined(self, s: int, v: int) -> float:
        return combined_score(self.rating(s, v), self.block(s, v))

    def submatrices(self, seekers: list[int], counselors: list[int]):
        ri = np.array([self._si[s] for s in seekers])
        ci = np.array([self._vi[v] for v in counselors])
        return (
            self.rating_m[np.ix_(ri, ci)],
            self.block_m[np.ix_(ri, ci)],
            self.sim_m[np.ix_(ri, ci)],
        )


def build_preferences(
    policy: Policy,
    round_state: RoundState,
    agents: dict[int, Agent],
    scores: ScoreTable | None,
    minute: int,
    cap: int = 50,
) -> PreferenceProfile:
    """Both sides' ranked candidate lists under the given algorithmic policy.

    The ranking key is symmetric: counselors rank seekers and seekers rank
    counselors by the same quantity. Ties break toward the longer-waiting,
    then lower-id candidate. Lists are truncated to the top `cap` entries.
    """
    needs_scores = policy in (
        Policy.RATING,
        Policy.BLOCKING,
        Policy.RATING_BLOCKING,
        Policy.SIMILARITY,
    )
    if needs_scores and scores is None:
        raise ValueError(f"policy {policy.value} requires a score table")
    if policy not in (Policy.FCFS, *_PREF_SCORED):
        raise ValueError(f"policy {policy.value} has no preference-list construction")

    S, V = round_state.seekers, round_state.counselors
    ids_s = np.asarray(S)
    ids_v = np.asarray(V)
    waits_s = np.array([minute - agents[s].arrival_minute for s in S])
    waits_v = np.array([minute - agents[v].arrival_minute for v in V])

    if needs_scores:
        rating_m, block_m, sim_m = scores.submatrices(S, V)
        if policy is Policy.SIMILARITY:
            primary = -sim_m
        elif policy is Policy.RATING:
            primary = -rating_m.astype(float)
        elif policy is Policy.BLOCKING:
            primary = block_m.astype(float)
        else:  # RATING_BLOCKING
            combined = np.where(block_m == 1, -1.0, rating_m.astype(float))
            primary = -combined
    else:
        primary = None

    seeker_prefs: dict[int, list[int]] = {}
    for i, s in enumerate(S):
        if primary is None:
            order = np.lexsort((ids_v, -waits_v))
        else:
            order = np.lexsort((ids_v, -waits_v, primary[i, :]))
        seeker_prefs[s] = ids_v[order][:cap].tolist()
    counselor_prefs: dict[int, list[int]] = {}
    for j, v in enumerate(V):
        if primary is None:
            order = np.lexsort((ids_s, -waits_s))
        else:
            order = np.lexsort((ids_s, -waits_s, primary[:, j]))
        counselor_prefs[v] = ids_s[order][:cap].tolist()
    return PreferenceProfile(seeker_prefs, counselor_prefs)


def apply_recommendation_noise(
    prefs: PreferenceProfile, p_accept: float, rng: np.random.Generator
) -> PreferenceProfile:
    """Counselors follow the top recommendation only with probability p_accept.

    With probability 1 - p_accept a counselor swaps its list head with a
    uniformly random other entry; seeker lists are untouched.
    """
    if not 0.0 <= p_accept <= 1.0:
        raise ValueError("p_accept must be in [0, 1]")
    noised = {}
    for v in sorted(prefs.counselor_prefs):
        lst = list(prefs.counselor_prefs[v])
        if len(lst) >= 2 and rng.random() >= p_accept:
            j = int(rng.integers(1, len(lst)))
            lst[0], lst[j] = lst[j], lst[0]
        noised[v] = lst
    return PreferenceProfile(
        {s: list(lst) for s, lst in prefs.seeker_prefs.items()}, noised
    )


def _validate_profile(prefs: PreferenceProfile) -> None:
    seekers = set(prefs.seeker_prefs)
    counselors = set(prefs.counselor_prefs)
    for s, lst in prefs.seeker_prefs.items():
        if len(set(lst)) != len(lst):
            raise ValueError(f"duplicate entries in seeker {s}'s preference list")
        unknown = set(lst) - counselors
        if unknown:
            raise ValueError(f"seeker {s} lists unknown counselors {sorted(unknown)}")
    for v, lst in prefs.counselor_prefs.items():
        if len(set(lst)) != len(lst):
            raise ValueError(f"duplicate entries in counselor {v}'s preference list")
        unknown = set(lst) - seekers
        if unknown:
            raise ValueError(f"counselor {v} lists unknown seekers {sorted(unknown)}")


def deferred_acceptance(prefs: PreferenceProfile) -> Matching:
    """Applicant-proposing deferred acceptance with capacity-1 counselors.

    Seekers propose down their lists; a counselor holds the proposer it ranks
    highest (rejecting seekers absent from its list) and displaces a held
    seeker it ranks lower. Terminates when no seeker can propose further; the
    result is the applicant-optimal stable matching for the given profile.
    """
    _validate_profile(prefs)
    rank = {
        v: {s: i for i, s in enumerate(lst)} for v, lst in prefs.counselor_prefs.items()
    }
    held: dict[int, int] = {}  # counselor -> seeker
    next_ix = {s: 0 for s in prefs.seeker_prefs}
    free = sorted(prefs.seeker_prefs, reverse=True)  # stack; order cannot affect output
    while free:
        s = free.pop()
        lst = prefs.seeker_prefs[s]
        while next_ix[s] < len(lst):
            v = lst[next_ix[s]]
            next_ix[s] += 1
            r = rank[v].get(s)
            if r is None:
                continue  # v never accepts someone it does not list
            cur = held.get(v)
            if cur is None:
                held[v] = s
                break
            if r < rank[v][cur]:
                held[v] = s
                free.append(cur)
                break
        # else: s exhausted her list and stays unmatched
    pairs = {(s, v) for v, s in held.items()}
    matched_s = {s for s, _ in pairs}
    matched_v = {v for _, v in pairs}
    return Matching(
        pairs=pairs,
        unmatched_seekers=sorted(set(prefs.seeker_prefs) - matched_s),
        unmatched_counselors=sorted(set(prefs.counselor_prefs) - matched_v),
    )


def find_blocking_pairs(prefs: PreferenceProfile, matching: Matching) -> list[tuple[int, int]]:
    """All pairs that would jointly deviate from the matching (stability check)."""
    match_of_s = {s: v for s, v in matching.pairs}
    match_of_v = {v: s for s, v in matching.pairs}
    s_rank = {s: {v: i for i, v in enumerate(lst)} for s, lst in prefs.seeker_prefs.items()}
    v_rank = {v: {s: i for i, s in enumerate(lst)} for v, lst in prefs.counselor_prefs.items()}
    blocking = []
    for s, lst in prefs.seeker_prefs.items():
        for v in lst:
            if match_of_s.get(s) == v:
                continue
            if s not in v_rank[v]:
                continue
            s_cur = match_of_s.get(s)
            v_cur = match_of_v.get(v)
            s_prefers = s_cur is None or s_rank[s][v] < s_rank[s].get(s_cur, len(lst))
            v_prefers = v_cur is None or v_rank[v][s] < v_rank[v].get(v_cur, len(v_rank[v]) + 1)
            if s_prefers and v_prefers:
                blocking.append((s, v))
    return blocking


TEEN_POOL = "teen"
MINORITY_POOL = "minority"
GENERAL_POOL = "general"


def pool_of(agent: Agent) -> str:
    """Filter-policy pool: teens take precedence over gender minorities."""
    if agent.is_teen:
        return TEEN_POOL
    if agent.is_minority:
        return MINORITY_POOL
    return GENERAL_POOL


def filter_pool_match(
    round_state: RoundState, agents: dict[int, Agent], rng: np.random.Generator
) -> Matching:
    """Counselors pick uniformly at random among waiting seekers of their own pool."""
    by_pool: dict[str, list[int]] = {}
    for s in round_state.seekers:
        by_pool.setdefault(pool_of(agents[s]), []).append(s)
    pairs = set()
    unmatched_v = []
    order = list(round_state.counselors)
    rng.shuffle(order)
    for v in order:
        pool = by_pool.get(pool_of(agents[v]), [])
        if not pool:
            unmatched_v.append(v)
            continue
        j = int(rng.integers(len(pool)))
        pairs.add((pool.pop(j), v))
    matched_s = {s for s, _ in pairs}
    return Matching(
        pairs=pairs,
        unmatched_seekers=sorted(set(round_state.seekers) - matched_s),
        unmatched_counselors=sorted(unmatched_v),
    )
