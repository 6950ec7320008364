"""Per-minute simulation loop: arrivals, abandonment, matching, chat sessions.

Within each minute the order is fixed: sessions end, chats whose start minute
arrived begin, new agents arrive, impatient seekers leave, then the active
policy matches. A match made during minute t starts its chat at the next
minute boundary (replication-policy counselors additionally spend their
exponential decision delay between claiming a seeker and the chat starting),
and a seeker's recorded wait runs from arrival to chat start, so a seeker
claimed in its arrival minute has waited one minute, not zero. Abandonment
mirrors that convention and fires at the sweep where the pending wait would
exceed patience.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    Agent,
    AgentState,
    Policy,
    PopulationParams,
    Role,
    RunConfig,
    seeded_rng,
)
from .matching import (
    RoundState,
    ScoreTable,
    apply_recommendation_noise,
    build_preferences,
    deferred_acceptance,
    pool_of,
)
from .metrics import OutcomeReport, SubgroupReport, compute_outcomes, subgroup_breakdown
from .oracle import OracleParams, emit_labels_batch, pair_features
from .population import (
    AgentFactory,
    OnlineTargetProcess,
    encode_agent,
    generate_arrivals,
    sample_chat_length,
)
from .predictors import ForestModel


class MissingModelError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChatSession:
    seeker_id: int
    counselor_id: int
    start_minute: int
    length_min: int

    @property
    def end_minute(self) -> int:
        return self.start_minute + self.length_min


@dataclass(frozen=True)
class MatchRecord:
    seeker_id: int
    counselor_id: int
    match_minute: int
    wait_min: int
    chat_len_min: int
    rating_pred: int
    block_pred: int
    rating_true: int
    block_true: int
    seeker_teen: bool
    seeker_minority: bool

    def to_dict(self) -> dict:
        return {
            "seeker_id": self.seeker_id,
            "counselor_id": self.counselor_id,
            "match_minute": self.match_minute,
            "wait_min": self.wait_min,
            "chat_len_min": self.chat_len_min,
            "rating_pred": self.rating_pred,
            "block_pred": self.block_pred,
            "rating_true": self.rating_true,
            "block_true": self.block_true,
            "seeker_teen": self.seeker_teen,
            "seeker_minority": self.seeker_minority,
        }


@dataclass(frozen=True)
class AbandonRecord:
    seeker_id: int
    abandon_minute: int
    wait_min: int
    seeker_teen: bool
    seeker_minority: bool

    def to_dict(self) -> dict:
        return {
            "seeker_id": self.seeker_id,
            "abandon_minute": self.abandon_minute,
            "wait_min": self.wait_min,
            "seeker_teen": self.seeker_teen,
            "seeker_minority": self.seeker_minority,
        }


@dataclass
class _Claim:
    seeker_id: int
    counselor_id: int
    start_minute: int
    chat_len: int
    rating_pred: int
    block_pred: int
    rating_true: int
    block_true: int


_DA_POLICIES = (
    Policy.FCFS,
    Policy.SIMILARITY,
    Policy.RATING,
    Policy.BLOCKING,
    Policy.RATING_BLOCKING,
)
_SCORED_POLICIES = (Policy.RATING, Policy.BLOCKING, Policy.RATING_BLOCKING)


class World:
    """Mutable simulation state plus the per-minute step function."""

    def __init__(
        self,
        config: RunConfig,
        oracle: OracleParams,
        rating_model: ForestModel,
        blocking_model: ForestModel,
        target_process_factory: Callable[[PopulationParams, Role, float, np.random.Generator], OnlineTargetProcess]
        | None = None,
    ):
        self.config = config
        self.pop = config.population
        self.oracle = oracle
        self.rating_model = rating_model
        self.blocking_model = blocking_model
        seed = config.seed
        self.rng_seeker = seeded_rng(seed, "arrivals.seeker")
        self.rng_counselor = seeded_rng(seed, "arrivals.counselor")
        self.rng_decision = seeded_rng(seed, "decisions")
        self.rng_chat = seeded_rng(seed, "chat_lengths")
        self.rng_pick = seeded_rng(seed, "match.pick")
        self.rng_noise = seeded_rng(seed, "match.noise")
        self.rng_labels = seeded_rng(seed, "oracle.labels")
        make = target_process_factory or (
            lambda pop, role, smooth, rng: OnlineTargetProcess(pop, role, smooth, rng)
        )
        self.seeker_targets = make(
            self.pop, Role.SEEKER, config.seeker_target_smoothing, self.rng_seeker
        )
        self.counselor_targets = make(
            self.pop, Role.COUNSELOR, config.counselor_target_smoothing, self.rng_counselor
        )
        self.factory = AgentFactory(self.pop)
        self.agents: dict[int, Agent] = {}
        self.state: dict[int, AgentState] = {}
        self.enc: dict[int, np.ndarray] = {}
        self.waiting: list[int] = []
        self.available_counselors: list[int] = []  # DA policies
        self.retry_counselors: list[int] = []  # claim policies: found no seeker yet
        self.start_bucket: dict[int, list[_Claim]] = {}
        self.end_bucket: dict[int, list[tuple[int, int]]] = {}
        self.chatting_seekers = 0
        self.chatting_counselors = 0
        self.n_seekers_generated = 0
        self.n_counselors_generated = 0
        self.match_records: list[MatchRecord] = []
        self.abandon_records: list[AbandonRecord] = []
        self.sessions: list[ChatSession] = []
        self.online_seeker_trace: list[int] = []
        self.online_counselor_trace: list[int] = []
        self.score_cache: dict[int, dict[int, list]] = {}
        self._new_counselors: list[int] = []
        self.trace_fh = None

    # -- bookkeeping helpers ------------------------------------------------

    def _held_counts(self) -> tuple[int, int]:
        n = sum(len(v) for v in self.start_bucket.values())
        return n, n  # one seeker and one counselor per pending claim

    def _register(self, agents: list[Agent]) -> None:
        for a in agents:
            self.agents[a.id] = a
            self.state[a.id] = AgentState.WAITING
            self.enc[a.id] = encode_agent(a, self.pop)

    def _true_labels(self, pairs: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
        seekers = [self.agents[s] for s, _ in pairs]
        counselors = [self.agents[v] for _, v in pairs]
        feats = pair_features(self.oracle, seekers, counselors)
        return emit_labels_batch(self.oracle, feats, self.rng_labels)

    def _make_claims(
        self, pairs: list[tuple[int, int]], start_minutes: list[int], minute: int
    ) -> None:
        if not pairs:
            return
        if self.trace_fh is not None:
            self.trace_fh.write(
                json.dumps(
                    {
                        "minute": minute,
                        "policy": self.config.policy.value,
                        "matches": [
                            {"seeker": s, "counselor": v, "chat_start": st}
                            for (s, v), st in zip(pairs, start_minutes)
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        self._ensure_scores(pairs, want_rating=True, want_block=True)
        preds_r, preds_b = [], []
        for s, v in pairs:
            r, b, _ = self.score_cache[s][v]
            preds_r.append(r)
            preds_b.append(b)
        true_r, true_b = self._true_labels(pairs)
        lens = sample_chat_length(self.pop, self.rng_chat, size=len(pairs))
        for i, (s, v) in enumerate(pairs):
            claim = _Claim(
                seeker_id=s,
                counselor_id=v,
                start_minute=start_minutes[i],
                chat_len=int(lens[i]),
                rating_pred=int(preds_r[i]),
                block_pred=int(preds_b[i]),
                rating_true=int(true_r[i]),
                block_true=int(true_b[i]),
            )
            self.start_bucket.setdefault(claim.start_minute, []).append(claim)
            self.score_cache.pop(s, None)

    def _ensure_scores(
        self,
        pairs: list[tuple[int, int]],
        want_rating: bool = False,
        want_block: bool = False,
        want_similarity: bool = False,
    ) -> None:
        """Predict and cache the requested score components for unseen pairs.

        Components are filled lazily so a policy only pays for the model it
        actually ranks by; matched pairs later get both predictions.
        """
        fresh = []
        for s, v in pairs:
            row = self.score_cache.setdefault(s, {})
            if v not in row:
                row[v] = [None, None, None]
                fresh.append((s, v))
        if want_similarity:
            todo = [(s, v) for s, v in pairs if self.score_cache[s][v][2] is None]
            if todo:
                Es = np.stack([self.enc[s] for s, _ in todo])
                Ev = np.stack([self.enc[v] for _, v in todo])
                sims = np.einsum("ij,ij->i", Es, Ev) / (
                    np.linalg.norm(Es, axis=1) * np.linalg.norm(Ev, axis=1)
                )
                for i, (s, v) in enumerate(todo):
                    self.score_cache[s][v][2] = float(sims[i])
        for want, slot, model in (
            (want_rating, 0, self.rating_model),
            (want_block, 1, self.blocking_model),
        ):
            if not want:
                continue
            todo = [(s, v) for s, v in pairs if self.score_cache[s][v][slot] is None]
            if not todo:
                continue
            X = np.stack(
                [np.concatenate([self.enc[s], self.enc[v]]) for s, v in todo]
            )
            pred = model.predict(X)
            for i, (s, v) in enumerate(todo):
                self.score_cache[s][v][slot] = int(pred[i])

    # -- the five step phases -----------------------------------------------

    def _end_and_start_sessions(self, minute: int) -> None:
        for s, v in self.end_bucket.pop(minute, []):
            self.chatting_seekers -= 1
            self.chatting_counselors -= 1
            self.state[s] = AgentState.DEPARTED
            self.state[v] = AgentState.DEPARTED
        for claim in self.start_bucket.pop(minute, []):
            a = self.agents[claim.seeker_id]
            self.match_records.append(
                MatchRecord(
                    seeker_id=claim.seeker_id,
                    counselor_id=claim.counselor_id,
                    match_minute=minute,
                    wait_min=minute - a.arrival_minute,
                    chat_len_min=claim.chat_len,
                    rating_pred=claim.rating_pred,
                    block_pred=claim.block_pred,
                    rating_true=claim.rating_true,
                    block_true=claim.block_true,
                    seeker_teen=a.is_teen,
                    seeker_minority=a.is_minority,
                )
            )
            self.sessions.append(
                ChatSession(claim.seeker_id, claim.counselor_id, minute, claim.chat_len)
            )
            self.state[claim.seeker_id] = AgentState.CHATTING
            self.state[claim.counselor_id] = AgentState.CHATTING
            self.chatting_seekers += 1
            self.chatting_counselors += 1
            self.end_bucket.setdefault(minute + claim.chat_len, []).append(
                (claim.seeker_id, claim.counselor_id)
            )

    def _arrivals(self, minute: int) -> None:
        held_s, held_v = self._held_counts()
        online_s = len(self.waiting) + held_s + self.chatting_seekers
        pending_v = len(self.available_counselors) + len(self.retry_counselors)
        online_v = pending_v + held_v + self.chatting_counselors
        tgt_s = self.seeker_targets.next_target(minute)
        tgt_v = self.counselor_targets.next_target(minute)
        new_s = generate_arrivals(self.factory, tgt_s, online_s, Role.SEEKER, minute, self.rng_seeker)
        new_v = generate_arrivals(
            self.factory, tgt_v, online_v, Role.COUNSELOR, minute, self.rng_counselor
        )
        self._register(new_s)
        self._register(new_v)
        self.n_seekers_generated += len(new_s)
        self.n_counselors_generated += len(new_v)
        self.waiting.extend(a.id for a in new_s)
        if self.config.policy in _DA_POLICIES:
            self.available_counselors.extend(a.id for a in new_v)
            self._new_counselors = []
        else:
            self._new_counselors = [a.id for a in new_v]
        self.online_seeker_trace.append(online_s + len(new_s))
        self.online_counselor_trace.append(online_v + len(new_v))

    def _abandonment(self, minute: int) -> None:
        keep = []
        for sid in self.waiting:
            a = self.agents[sid]
            if minute - a.arrival_minute >= a.patience_min:
                self.abandon_records.append(
                    AbandonRecord(
                        seeker_id=sid,
                        abandon_minute=minute,
                        wait_min=a.patience_min,
                        seeker_teen=a.is_teen,
                        seeker_minority=a.is_minority,
                    )
                )
                self.state[sid] = AgentState.DEPARTED
                self.score_cache.pop(sid, None)
            else:
                keep.append(sid)
        self.waiting = keep
        # a claimed seeker whose patience runs out before the chat starts still
        # leaves; the counselor goes back to picking immediately
        for start in sorted(self.start_bucket):
            bucket = self.start_bucket[start]
            kept = []
            for claim in bucket:
                a = self.agents[claim.seeker_id]
                if minute - a.arrival_minute >= a.patience_min:
                    self.abandon_records.append(
                        AbandonRecord(
                            seeker_id=claim.seeker_id,
                            abandon_minute=minute,
                            wait_min=a.patience_min,
                            seeker_teen=a.is_teen,
                            seeker_minority=a.is_minority,
                        )
                    )
                    self.state[claim.seeker_id] = AgentState.DEPARTED
                    self.retry_counselors.append(claim.counselor_id)
                else:
                    kept.append(claim)
            self.start_bucket[start] = kept

    def _match_claim_policy(self, minute: int) -> None:
        """Replication and filter mechanics: claim a seeker, chat after the decision delay."""
        pools = self.config.policy is Policy.FILTER
        claimants: list[tuple[int, int]] = []  # (counselor_id, residual_minutes)
        for v in self.retry_counselors:
            claimants.append((v, 0))
        self.retry_counselors = []
        if self._new_counselors:
            decs = self.rng_decision.exponential(
                1.0 / self.pop.decision_rate_per_min, size=len(self._new_counselors)
            )
            for v, d in zip(self._new_counselors, decs):
                claimants.append((v, int(math.floor(d))))
        self.rng_pick.shuffle(claimants)
        if pools:
            waiting_by_pool: dict[str, list[int]] = {}
            for sid in self.waiting:
                waiting_by_pool.setdefault(pool_of(self.agents[sid]), []).append(sid)
        alpha = self.config.pick_wait_bias
        pairs: list[tuple[int, int]] = []
        starts: list[int] = []
        taken: set[int] = set()
        for v, resid in claimants:
            pool = (
                waiting_by_pool.get(pool_of(self.agents[v]), [])
                if pools
                else self.waiting
            )
            if not pool:
                self.retry_counselors.append(v)
                continue
            if alpha == 0:
                j = int(self.rng_pick.integers(len(pool)))
            else:
                waits = np.array(
                    [minute - self.agents[s].arrival_minute for s in pool], dtype=float
                )
                w = (waits + 1.0) ** alpha
                j = int(self.rng_pick.choice(len(pool), p=w / w.sum()))
            sid = pool.pop(j)
            taken.add(sid)
            pairs.append((sid, v))
            starts.append(minute + resid + 1)
        if taken:
            self.waiting = [s for s in self.waiting if s not in taken]
        self._make_claims(pairs, starts, minute)

    def _match_da_policy(self, minute: int) -> None:
        if not self.waiting or not self.available_counselors:
            return
        round_state = RoundState(
            seekers=list(self.waiting),
            counselors=list(self.available_counselors),
            minute=minute,
        )
        scores = None
        policy = self.config.policy
        if policy in _SCORED_POLICIES or policy is Policy.SIMILARITY:
            pairs = [
                (s, v) for s in round_state.seekers for v in round_state.counselors
            ]
            self._ensure_scores(
                pairs,
                want_rating=policy in (Policy.RATING, Policy.RATING_BLOCKING),
                want_block=policy in (Policy.BLOCKING, Policy.RATING_BLOCKING),
                want_similarity=policy is Policy.SIMILARITY,
            )
            ns, nv = len(round_state.seekers), len(round_state.counselors)
            rating_m = np.zeros((ns, nv), dtype=int)
            block_m = np.zeros((ns, nv), dtype=int)
            sim_m = np.zeros((ns, nv), dtype=float)
            for i, s in enumerate(round_state.seekers):
                row = self.score_cache[s]
                for j, v in enumerate(round_state.counselors):
                    r, b, sim = row[v]
                    rating_m[i, j] = r if r is not None else 0
                    block_m[i, j] = b if b is not None else 0
                    sim_m[i, j] = sim if sim is not None else 0.0
            scores = ScoreTable(
                round_state.seekers, round_state.counselors, rating_m, block_m, sim_m
            )
        prefs = build_preferences(
            self.config.policy,
            round_state,
            self.agents,
            scores,
            minute,
            cap=self.config.pref_list_cap,
        )
        prefs = apply_recommendation_noise(
            prefs, self.config.recommendation_accept_prob, self.rng_noise
        )
        matching = deferred_acceptance(prefs)
        pairs = sorted(matching.pairs)
        if not pairs:
            return
        matched_s = {s for s, _ in pairs}
        matched_v = {v for _, v in pairs}
        self.waiting = [s for s in self.waiting if s not in matched_s]
        self.available_counselors = [
            v for v in self.available_counselors if v not in matched_v
        ]
        self._make_claims(pairs, [minute + 1] * len(pairs), minute)

    def step(self, minute: int) -> None:
        """Advance the world by one minute in the fixed phase order."""
        self._end_and_start_sessions(minute)
        self._arrivals(minute)
        self._abandonment(minute)
        if self.config.policy in _DA_POLICIES:
            self._match_da_policy(minute)
        else:
            self._match_claim_policy(minute)

    # -- end-of-run accounting ----------------------------------------------

    def still_present_seekers(self) -> int:
        """Seekers not yet matched or abandoned (waiting or claimed-not-started)."""
        held_s, _ = self._held_counts()
        return len(self.waiting) + held_s


def step(world: World, minute: int) -> None:
    world.step(minute)


@dataclass
class RunResult:
    config: RunConfig
    match_records: list[MatchRecord]
    abandon_records: list[AbandonRecord]
    outcome: OutcomeReport
    subgroups: SubgroupReport
    oracle_rating_marginal: list[float] | None
    oracle_block_rate: float | None
    wait_sd_matched: float | None
    n_seekers_generated: int
    n_counselors_generated: int
    n_matched_total: int
    n_abandoned_total: int
    n_still_present: int
    online_seeker_mean: float | None
    online_counselor_mean: float | None

    def to_dict(self, records: str | None = None) -> dict:
        records = records or self.config.records
        d = {
            "config": self.config.to_dict(),
            "summary": {
                "outcome": self.outcome.to_dict(),
                "subgroups": self.subgroups.to_dict(),
                "oracle_rating_marginal": self.oracle_rating_marginal,
                "oracle_block_rate": self.oracle_block_rate,
                "wait_sd_matched": self.wait_sd_matched,
                "online_seeker_mean": self.online_seeker_mean,
                "online_counselor_mean": self.online_counselor_mean,
                "conservation": {
                    "seekers_generated": self.n_seekers_generated,
                    "counselors_generated": self.n_counselors_generated,
                    "matched_total": self.n_matched_total,
                    "abandoned_total": self.n_abandoned_total,
                    "still_present": self.n_still_present,
                },
            },
        }
        if records == "full":
            d["match_records"] = [r.to_dict() for r in self.match_records]
            d["abandon_records"] = [r.to_dict() for r in self.abandon_records]
        return d

    def to_json(self, records: str | None = None) -> str:
        return json.dumps(self.to_dict(records), indent=2, sort_keys=True)


def run(
    config: RunConfig,
    oracle: OracleParams | None = None,
    rating_model: ForestModel | None = None,
    blocking_model: ForestModel | None = None,
) -> RunResult:
    """Execute warmup + horizon minutes and aggregate post-warmup metrics."""
    if oracle is None:
        if not config.oracle_path:
            raise MissingModelError("no oracle parameters: pass an object or set oracle_path")
        oracle = OracleParams.load(config.oracle_path)
    if rating_model is None:
        if not config.rating_model_path:
            raise MissingModelError(
                "no rating model: pass an object or set rating_model_path"
            )
        rating_model = ForestModel.load(config.rating_model_path)
    if blocking_model is None:
        if not config.blocking_model_path:
            raise MissingModelError(
                "no blocking model: pass an object or set blocking_model_path"
            )
        blocking_model = ForestModel.load(config.blocking_model_path)

    world = World(config, oracle, rating_model, blocking_model)
    total = config.warmup_min + config.horizon_min
    trace_fh = None
    if config.match_trace_path:
        trace_fh = open(config.match_trace_path, "w", encoding="utf-8")
        world.trace_fh = trace_fh
    try:
        for minute in range(total):
            world.step(minute)
    finally:
        if trace_fh is not None:
            trace_fh.close()

    warm = config.warmup_min
    matches = [r for r in world.match_records if r.match_minute >= warm]
    abandons = [r for r in world.abandon_records if r.abandon_minute >= warm]
    outcome = compute_outcomes(matches, abandons)
    subgroups = subgroup_breakdown(matches, abandons)
    if matches:
        true_r = np.array([r.rating_true for r in matches])
        marginal = [float((true_r == k).mean()) for k in range(1, 6)]
        block_rate = float(np.mean([r.block_true for r in matches]))
        wait_sd = float(np.std([r.wait_min for r in matches]))
    else:
        marginal, block_rate, wait_sd = None, None, None
    post_s = world.online_seeker_trace[warm:]
    post_v = world.online_counselor_trace[warm:]
    return RunResult(
        config=config,
        match_records=matches,
        abandon_records=abandons,
        outcome=outcome,
        subgroups=subgroups,
        oracle_rating_marginal=marginal,
        oracle_block_rate=block_rate,
        wait_sd_matched=wait_sd,
        n_seekers_generated=world.n_seekers_generated,
        n_counselors_generated=world.n_counselors_generated,
        n_matched_total=len(world.match_records),
        n_abandoned_total=len(world.abandon_records),
        n_still_present=world.still_present_seekers(),
        online_seeker_mean=float(np.mean(post_s)) if post_s else None,
        online_counselor_mean=float(np.mean(post_v)) if post_v else None,
    )
