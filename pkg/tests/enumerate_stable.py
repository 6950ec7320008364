"""Brute-force stable-matching enumeration used as an independent oracle for DA tests."""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

BIG = 10**9


@lru_cache(maxsize=64)
def _perm_array(m: int, n: int) -> np.ndarray:
    """All injective assignments of n slots into range(m), cached."""
    return np.array(list(itertools.permutations(range(m), n)), dtype=np.int64).reshape(-1, n)


def _rank_matrices(seeker_prefs, counselor_prefs, S, V):
    n, m = len(S), len(V)
    vi = {v: j for j, v in enumerate(V)}
    si = {s: i for i, s in enumerate(S)}
    rs = np.full((n, m), BIG, dtype=np.int64)
    for i, s in enumerate(S):
        for r, v in enumerate(seeker_prefs[s]):
            rs[i, vi[v]] = r
    rv = np.full((m, n), BIG, dtype=np.int64)
    for j, v in enumerate(V):
        for r, s in enumerate(counselor_prefs[v]):
            rv[j, si[s]] = r
    return rs, rv


def all_stable_matchings_complete(seeker_prefs, counselor_prefs):
    """All stable matchings for complete preference lists, by exhaustive enumeration.

    Returns (stable_pair_sets, seeker_rank_vectors) where each rank vector gives
    every seeker's rank of her partner (BIG when unmatched).
    """
    S = sorted(seeker_prefs)
    V = sorted(counselor_prefs)
    n, m = len(S), len(V)
    rs, rv = _rank_matrices(seeker_prefs, counselor_prefs, S, V)
    if n <= m:
        perms = _perm_array(m, n)
    else:
        # enumerate assignments of seekers to counselors via the smaller side
        perms_v = _perm_array(n, m)
        perms = np.full((len(perms_v), n), -1, dtype=np.int64)
        rows = np.repeat(np.arange(len(perms_v)), m)
        perms[rows, perms_v.ravel()] = np.tile(np.arange(m), len(perms_v))
    B = len(perms)
    matched = perms >= 0  # (B, n)
    safe = np.where(matched, perms, 0)
    s_rank_match = np.where(matched, rs[np.arange(n)[None, :], safe], BIG)  # (B, n)
    pv = np.full((B, m), -1, dtype=np.int64)
    rows = np.repeat(np.arange(B), n)
    cols = safe.ravel()
    keep = matched.ravel()
    pv[rows[keep], cols[keep]] = np.tile(np.arange(n), B)[keep]
    v_matched = pv >= 0
    pv_safe = np.where(v_matched, pv, 0)
    v_rank_match = np.where(v_matched, rv[np.arange(m)[None, :], pv_safe], BIG)  # (B, m)
    prefers_s = rs[None, :, :] < s_rank_match[:, :, None]  # (B, n, m)
    prefers_v = rv.T[None, :, :] < v_rank_match[:, None, :]  # (B, n, m)
    blocked = (prefers_s & prefers_v).any(axis=(1, 2))
    stable_idx = np.nonzero(~blocked)[0]
    pair_sets = []
    for b in stable_idx:
        pairs = {
            (S[i], V[perms[b, i]]) for i in range(n) if perms[b, i] >= 0
        }
        pair_sets.append(pairs)
    return pair_sets, s_rank_match[stable_idx]


def applicant_optimal_complete(seeker_prefs, counselor_prefs):
    """The unique seeker-optimal stable matching found by enumeration."""
    pair_sets, ranks = all_stable_matchings_complete(seeker_prefs, counselor_prefs)
    assert pair_sets, "complete-list instances always admit a stable matching"
    best = ranks.min(axis=0)
    hits = np.nonzero((ranks == best).all(axis=1))[0]
    assert len(hits) == 1, "seeker-optimal stable matching must be unique"
    return pair_sets[int(hits[0])]


def all_matchings_partial(seeker_prefs, counselor_prefs):
    """Every matching where matched pairs list each other (incomplete lists allowed)."""
    S = sorted(seeker_prefs)
    listed_by_v = {v: set(lst) for v, lst in counselor_prefs.items()}
    options = {
        s: [v for v in seeker_prefs[s] if s in listed_by_v.get(v, set())] for s in S
    }
    out = []

    def rec(i, used, acc):
        if i == len(S):
            out.append(set(acc))
            return
        s = S[i]
        rec(i + 1, used, acc)  # s stays unmatched
        for v in options[s]:
            if v not in used:
                rec(i + 1, used | {v}, acc + [(s, v)])

    rec(0, frozenset(), [])
    return out


def stable_matchings_partial(seeker_prefs, counselor_prefs):
    """All stable matchings under incomplete lists, with seeker rank vectors."""
    S = sorted(seeker_prefs)
    s_rank = {s: {v: r for r, v in enumerate(lst)} for s, lst in seeker_prefs.items()}
    v_rank = {v: {s: r for r, s in enumerate(lst)} for v, lst in counselor_prefs.items()}
    results = []
    for pairs in all_matchings_partial(seeker_prefs, counselor_prefs):
        m_s = {s: v for s, v in pairs}
        m_v = {v: s for s, v in pairs}
        blocked = False
        for s, lst in seeker_prefs.items():
            for v in lst:
                if s not in v_rank.get(v, {}):
                    continue
                if m_s.get(s) == v:
                    continue
                s_better = s_rank[s][v] < s_rank[s].get(m_s.get(s), BIG)
                v_better = v_rank[v][s] < v_rank[v].get(m_v.get(v), BIG)
                if s_better and v_better:
                    blocked = True
                    break
            if blocked:
                break
        if not blocked:
            ranks = np.array(
                [s_rank[s].get(m_s.get(s), BIG) for s in S], dtype=np.int64
            )
            results.append((pairs, ranks))
    return results


def applicant_optimal_partial(seeker_prefs, counselor_prefs):
    results = stable_matchings_partial(seeker_prefs, counselor_prefs)
    assert results
    ranks = np.stack([r for _, r in results])
    best = ranks.min(axis=0)
    hits = [i for i in range(len(results)) if (ranks[i] == best).all()]
    assert len(hits) == 1
    return results[hits[0]][0]
