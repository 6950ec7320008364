"""Shared domain types, deterministic RNG streams, and run configuration."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any

import numpy as np

TEEN_BIRTH_YEAR = 2002  # born strictly after this year counts as a teenager

POLICY_NAMES = (
    "replication",
    "fcfs",
    "similarity",
    "rating",
    "blocking",
    "rating_blocking",
    "filter",
)


class Gender(Enum):
    CIS_FEMALE = "cis_female"
    CIS_MALE = "cis_male"
    TRANS_FEMALE = "trans_female"
    TRANS_MALE = "trans_male"
    NON_BINARY = "non_binary"
    OTHER = "other"


# fixed category order used by one-hot encodings
GENDER_ORDER = (
    Gender.CIS_FEMALE,
    Gender.CIS_MALE,
    Gender.TRANS_FEMALE,
    Gender.TRANS_MALE,
    Gender.NON_BINARY,
    Gender.OTHER,
)
GENDER_INDEX = {g: i for i, g in enumerate(GENDER_ORDER)}


def is_minority(gender: Gender) -> bool:
    """Gender-minority flag: anything other than cisgender female or male."""
    return gender not in (Gender.CIS_FEMALE, Gender.CIS_MALE)


class Role(Enum):
    SEEKER = "seeker"
    COUNSELOR = "counselor"


class AgentState(Enum):
    WAITING = "waiting"
    CHATTING = "chatting"
    DEPARTED = "departed"


class Policy(Enum):
    REPLICATION = "replication"
    FCFS = "fcfs"
    SIMILARITY = "similarity"
    RATING = "rating"
    BLOCKING = "blocking"
    RATING_BLOCKING = "rating_blocking"
    FILTER = "filter"


@dataclass(frozen=True)
class Agent:
    """A seeker or counselor with the demographic fields used for matching.

    ``patience_min`` is present exactly when the agent is a seeker.  Lifecycle
    state is tracked by the engine, not on this value object.
    """

    id: int
    role: Role
    gender: Gender
    birth_year: int
    signup_day: int
    experience_level: int
    arrival_minute: int
    patience_min: int | None = None

    def __post_init__(self) -> None:
        if self.role is Role.SEEKER:
            if self.patience_min is None or self.patience_min < 1:
                raise ValueError("seekers require patience_min >= 1")
        elif self.patience_min is not None:
            raise ValueError("counselors carry no patience_min")
        if not 0 <= self.experience_level <= 4:
            raise ValueError("experience_level must be in [0, 4]")

    @property
    def is_teen(self) -> bool:
        return self.birth_year > TEEN_BIRTH_YEAR

    @property
    def is_minority(self) -> bool:
        return is_minority(self.gender)


@dataclass(frozen=True)
class PairScore:
    """Predicted outcomes for one (seeker, counselor) pair."""

    seeker_id: int
    counselor_id: int
    rating_pred: int
    block_pred: int
    similarity: float = 0.0

    @property
    def combined(self) -> float:
        return combined_score(self.rating_pred, self.block_pred)


def combined_score(rating_pred: int, block_pred: int) -> float:
    """Blend a rating prediction with a block prediction into one score.

    A predicted block trumps any rating and maps to -1; otherwise the score
    is the predicted rating itself.
    """
    if rating_pred not in (1, 2, 3, 4, 5):
        raise ValueError(f"rating_pred must be in [1, 5], got {rating_pred!r}")
    if block_pred not in (0, 1):
        raise ValueError(f"block_pred must be 0 or 1, got {block_pred!r}")
    return -1.0 if block_pred == 1 else float(rating_pred)


def seeded_rng(seed: int, stream: str) -> np.random.Generator:
    """Deterministic generator for a named sub-stream of a run seed.

    Identical (seed, stream) pairs yield identical sequences on every
    platform; distinct stream labels decorrelate so that, e.g., changing the
    matching policy cannot perturb the arrival sequence draws.
    """
    digest = hashlib.sha256(stream.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    entropy = [seed & 0xFFFFFFFF, seed >> 32, *words]
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass
class PopulationParams:
    """Calibrated population and behaviour parameters.

    The online-count, patience, chat-length and decision-rate values are the
    platform calibration anchors; the demographic weights are configurable
    stand-ins (the platform's exact demographic mix is not public).
    """

    seeker_online_mean: float = 113.26
    seeker_online_sd: float = 22.56
    counselor_online_mean: float = 102.49
    counselor_online_sd: float = 25.07
    patience_mean_min: float = 4.15
    patience_sd_min: float = 3.26
    chat_len_mean_min: float = 17.67
    chat_len_sd_min: float = 15.44
    decision_rate_per_min: float = 1.25
    gender_weights: dict[str, dict[str, float]] = field(
        default_factory=lambda: {
            "seeker": {
                "cis_female": 0.52,
                "cis_male": 0.30,
                "trans_female": 0.04,
                "trans_male": 0.04,
                "non_binary": 0.08,
                "other": 0.02,
            },
            "counselor": {
                "cis_female": 0.55,
                "cis_male": 0.27,
                "trans_female": 0.04,
                "trans_male": 0.04,
                "non_binary": 0.08,
                "other": 0.02,
            },
        }
    )
    birth_year_range: tuple[int, int] = (1950, 2008)
    teen_fraction: float = 0.20
    signup_day_range: tuple[int, int] = (0, 3650)
    experience_weights: dict[str, list[float]] = field(
        default_factory=lambda: {
            "seeker": [0.35, 0.25, 0.20, 0.12, 0.08],
            "counselor": [0.10, 0.15, 0.25, 0.25, 0.25],
        }
    )

    def __post_init__(self) -> None:
        for name in (
            "seeker_online_mean",
            "counselor_online_mean",
            "patience_mean_min",
            "chat_len_mean_min",
            "decision_rate_per_min",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in (
            "seeker_online_sd",
            "counselor_online_sd",
            "patience_sd_min",
            "chat_len_sd_min",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for role, weights in self.gender_weights.items():
            total = sum(weights.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"gender_weights[{role!r}] must sum to 1, got {total}")
        if not 0.0 <= self.teen_fraction <= 1.0:
            raise ValueError("teen_fraction must be in [0, 1]")
        self.birth_year_range = tuple(self.birth_year_range)  # type: ignore[assignment]
        self.signup_day_range = tuple(self.signup_day_range)  # type: ignore[assignment]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["birth_year_range"] = list(self.birth_year_range)
        d["signup_day_range"] = list(self.signup_day_range)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PopulationParams":
        d = dict(d)
        if "birth_year_range" in d:
            d["birth_year_range"] = tuple(d["birth_year_range"])
        if "signup_day_range" in d:
            d["signup_day_range"] = tuple(d["signup_day_range"])
        return cls(**d)


@dataclass
class RunConfig:
    """Everything needed to reproduce one simulation run bit-for-bit."""

    seed: int = 0
    horizon_min: int = 10080
    warmup_min: int = 60
    policy: Policy = Policy.REPLICATION
    recommendation_accept_prob: float = 0.9
    population: PopulationParams = field(default_factory=PopulationParams)
    oracle_path: str | None = None
    rating_model_path: str | None = None
    blocking_model_path: str | None = None
    pref_list_cap: int = 50
    pick_wait_bias: float = 0.0
    seeker_target_smoothing: float = 0.2
    counselor_target_smoothing: float = 0.0
    records: str = "summary"
    output_path: str | None = None
    match_trace_path: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.policy, str):
            self.policy = Policy(self.policy)
        if isinstance(self.population, dict):
            self.population = PopulationParams.from_dict(self.population)
        if not 0.0 <= self.recommendation_accept_prob <= 1.0:
            raise ValueError("recommendation_accept_prob must be in [0, 1]")
        if self.horizon_min < 0:
            raise ValueError("horizon_min must be >= 0")
        if self.warmup_min < 0:
            raise ValueError("warmup_min must be >= 0")
        if self.records not in ("summary", "full"):
            raise ValueError("records must be 'summary' or 'full'")
        if not 0.0 <= self.seeker_target_smoothing < 1.0:
            raise ValueError("seeker_target_smoothing must be in [0, 1)")
        if not 0.0 <= self.counselor_target_smoothing < 1.0:
            raise ValueError("counselor_target_smoothing must be in [0, 1)")
        if self.pick_wait_bias < 0:
            raise ValueError("pick_wait_bias must be >= 0")
        if self.pref_list_cap < 1:
            raise ValueError("pref_list_cap must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "horizon_min": self.horizon_min,
            "warmup_min": self.warmup_min,
            "policy": self.policy.value,
            "recommendation_accept_prob": self.recommendation_accept_prob,
            "population": self.population.to_dict(),
            "oracle_path": self.oracle_path,
            "rating_model_path": self.rating_model_path,
            "blocking_model_path": self.blocking_model_path,
            "pref_list_cap": self.pref_list_cap,
            "pick_wait_bias": self.pick_wait_bias,
            "seeker_target_smoothing": self.seeker_target_smoothing,
            "counselor_target_smoothing": self.counselor_target_smoothing,
            "records": self.records,
            "output_path": self.output_path,
            "match_trace_path": self.match_trace_path,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))
