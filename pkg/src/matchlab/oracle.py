"""Synthetic ground-truth outcome model.

Assigns every (seeker, counselor) pair a latent compatibility score built from
demographic alignment, then emits stochastic rating (1-5) and block (0/1)
labels. Cutpoints and the block base probability are calibrated by bisection
so that population-level label marginals match the platform's published
distributions. The model doubles as the label source for predictor training
and as the scorer of simulated chats.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np
from scipy.special import expit, logit

from .core import GENDER_ORDER, Agent, PopulationParams, Role, seeded_rng
from .population import AgentFactory, encode_pair, encoding_dim

RATING_CLASSES = 5

# published label marginals used as calibration anchors
DEFAULT_RATING_TARGETS = (0.1518, 0.0351, 0.0456, 0.1063, 0.6612)
DEFAULT_BLOCK_TARGET = 0.053


class CalibrationError(RuntimeError):
    pass


@dataclass
class OracleParams:
    """Latent-compatibility weights plus calibrated label thresholds.

    All pairwise bonuses are symmetric in the two agents; the counselor tenure
    term is the single side-specific one. Block risk is logistic with explicit
    log-odds reductions for minority-matched and teen-matched pairs on top of
    the shared latent slope.
    """

    gender_match_bonus: float = 0.8
    minority_match_bonus: float = 3.0
    minority_presence_bonus: float = 1.0
    teen_match_bonus: float = 1.8
    age_gap_penalty_per_decade: float = 0.55
    experience_gap_penalty: float = 0.8
    counselor_tenure_bonus: float = 0.6
    noise_sd: float = 0.10
    rating_cutpoints: list[float] = field(
        default_factory=lambda: [-1.9, -1.75, -1.55, -1.2]
    )
    block_base_prob: float = 0.05
    block_risk_weights: dict = field(
        default_factory=lambda: {
            "latent": 2.2,
            "minority_match": 4.0,
            "teen_match": 2.5,
            # block risk saturates for the worst pairings
            "latent_floor_z": -1.2,
        }
    )
    latent_loc: float = -0.77
    latent_scale: float = 1.08
    signup_day_range: tuple[int, int] = (0, 3650)

    def __post_init__(self) -> None:
        cuts = list(self.rating_cutpoints)
        if len(cuts) != RATING_CLASSES - 1 or any(
            a >= b for a, b in zip(cuts, cuts[1:])
        ):
            raise ValueError("rating_cutpoints must be 4 strictly increasing values")
        if not 0.0 < self.block_base_prob < 1.0:
            raise ValueError("block_base_prob must be in (0, 1)")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        self.signup_day_range = tuple(self.signup_day_range)  # type: ignore[assignment]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["signup_day_range"] = list(self.signup_day_range)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "OracleParams":
        d = dict(d)
        if "signup_day_range" in d:
            d["signup_day_range"] = tuple(d["signup_day_range"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "OracleParams":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "OracleParams":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass
class PairFeatures:
    """Per-pair quantities the label models consume."""

    latent: np.ndarray
    both_minority: np.ndarray
    both_teen: np.ndarray

    def __len__(self) -> int:
        return len(self.latent)


def _agent_arrays(agents: Sequence[Agent]):
    gender = np.array([a.gender.value for a in agents])
    minority = np.array([a.is_minority for a in agents], dtype=bool)
    teen = np.array([a.is_teen for a in agents], dtype=bool)
    birth = np.array([a.birth_year for a in agents], dtype=float)
    signup = np.array([a.signup_day for a in agents], dtype=float)
    exp = np.array([a.experience_level for a in agents], dtype=float)
    return gender, minority, teen, birth, signup, exp


def pair_features(
    params: OracleParams, seekers: Sequence[Agent], counselors: Sequence[Agent]
) -> PairFeatures:
    """Latent compatibility plus the matched-pair flags, for aligned sequences."""
    sg, sm, st, sb, _, se = _agent_arrays(seekers)
    vg, vm, vt, vb, vs, ve = _agent_arrays(counselors)
    same = (sg == vg).astype(float)
    both_min = sm & vm
    any_min = sm | vm
    both_teen = st & vt
    gap = np.abs(sb - vb) / 10.0
    eg = np.abs(se - ve) / 4.0
    lo, hi = params.signup_day_range
    tenure = (hi - vs) / max(1, hi - lo)
    latent = (
        params.gender_match_bonus * same
        + params.minority_match_bonus * both_min.astype(float)
        + params.minority_presence_bonus * any_min.astype(float)
        + params.teen_match_bonus * both_teen.astype(float)
        - params.age_gap_penalty_per_decade * gap
        - params.experience_gap_penalty * eg
        + params.counselor_tenure_bonus * tenure
    )
    return PairFeatures(latent, both_min, both_teen)


def latent_scores(params: OracleParams, seekers: Sequence[Agent], counselors: Sequence[Agent]) -> np.ndarray:
    """Vectorized latent compatibility for aligned seeker/counselor sequences."""
    return pair_features(params, seekers, counselors).latent


def latent_score(seeker: Agent, counselor: Agent, params: OracleParams) -> float:
    """Deterministic compatibility score; higher means a better expected chat."""
    return float(latent_scores(params, [seeker], [counselor])[0])


def _ratings_from_noisy(params: OracleParams, noisy: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.asarray(params.rating_cutpoints), noisy) + 1


def block_probabilities(params: OracleParams, feats: PairFeatures) -> np.ndarray:
    """Logistic block risk: lower for high-latent, minority-matched, teen-matched pairs."""
    w = params.block_risk_weights
    z = (feats.latent - params.latent_loc) / params.latent_scale
    floor = w.get("latent_floor_z")
    if floor is not None:
        z = np.maximum(z, floor)
    logits = (
        logit(params.block_base_prob)
        - w.get("latent", 0.0) * z
        - w.get("minority_match", 0.0) * feats.both_minority.astype(float)
        - w.get("teen_match", 0.0) * feats.both_teen.astype(float)
    )
    return expit(logits)


def emit_labels_batch(
    params: OracleParams, feats: PairFeatures, rng: np.random.Generator | None
) -> tuple[np.ndarray, np.ndarray]:
    """Rating and block labels for a batch of pairs.

    With noise_sd == 0 the labels are a pure function of the pair and no
    randomness is consumed.
    """
    pb = block_probabilities(params, feats)
    if params.noise_sd == 0:
        ratings = _ratings_from_noisy(params, feats.latent)
        blocks = (pb >= 0.5).astype(int)
    else:
        if rng is None:
            raise ValueError("rng required when noise_sd > 0")
        noisy = feats.latent + rng.normal(0.0, params.noise_sd, size=feats.latent.shape)
        ratings = _ratings_from_noisy(params, noisy)
        blocks = (rng.random(feats.latent.shape) < pb).astype(int)
    return ratings.astype(int), blocks


def emit_labels(
    seeker: Agent, counselor: Agent, params: OracleParams, rng: np.random.Generator | None = None
) -> tuple[int, int]:
    """Stochastic (rating, block) labels for one pair."""
    feats = pair_features(params, [seeker], [counselor])
    ratings, blocks = emit_labels_batch(params, feats, rng)
    return int(ratings[0]), int(blocks[0])


@dataclass
class CalibrationTargets:
    rating_marginal: tuple[float, ...] = DEFAULT_RATING_TARGETS
    block_rate: float = DEFAULT_BLOCK_TARGET
    rating_tol: float = 0.015
    block_tol: float = 0.010


def _sample_pair_pool(
    pop: PopulationParams, n_pairs: int, rng: np.random.Generator
) -> tuple[list[Agent], list[Agent]]:
    factory = AgentFactory(pop)
    seekers = factory.generate(n_pairs, Role.SEEKER, 0, rng)
    counselors = factory.generate(n_pairs, Role.COUNSELOR, 0, rng)
    return seekers, counselors


def achieved_marginals(
    params: OracleParams, feats: PairFeatures, noise: np.ndarray
) -> tuple[np.ndarray, float]:
    noisy = feats.latent + params.noise_sd * noise
    ratings = _ratings_from_noisy(params, noisy)
    marginal = np.array([(ratings == k).mean() for k in range(1, RATING_CLASSES + 1)])
    block_rate = float(block_probabilities(params, feats).mean())
    return marginal, block_rate


def calibrate(
    params: OracleParams,
    pop: PopulationParams,
    targets: CalibrationTargets | None = None,
    seed: int = 0,
    n_pairs: int = 200_000,
    max_iter: int = 100,
) -> tuple[OracleParams, dict]:
    """Tune rating cutpoints and block base probability to the target marginals.

    Each cutpoint is adjusted by monotone bisection against a fixed sample of
    random pairs (raising a cutpoint raises the mass at or below its bucket);
    the block base probability is bisected the same way. Raises
    CalibrationError if any target is still outside tolerance after max_iter
    bisection steps.
    """
    targets = targets or CalibrationTargets()
    if abs(sum(targets.rating_marginal) - 1.0) > 1e-6:
        raise ValueError("rating_marginal targets must sum to 1")
    rng = seeded_rng(seed, "oracle.calibration")
    seekers, counselors = _sample_pair_pool(pop, n_pairs, rng)
    feats = pair_features(params, seekers, counselors)
    latents = feats.latent
    noise = rng.standard_normal(n_pairs)

    loc = float(latents.mean())
    scale = float(latents.std())
    if scale == 0:
        raise CalibrationError("latent scores are degenerate (zero variance); check weights")
    work = OracleParams.from_dict({**params.to_dict(), "latent_loc": loc, "latent_scale": scale})

    marginal, block_rate = achieved_marginals(work, feats, noise)
    cum_targets = np.cumsum(targets.rating_marginal)[: RATING_CLASSES - 1]
    cum_achieved = np.cumsum(marginal)[: RATING_CLASSES - 1]

    noisy = latents + work.noise_sd * noise
    cuts = list(work.rating_cutpoints)
    if np.any(np.abs(cum_achieved - cum_targets) > targets.rating_tol / 2):
        new_cuts = []
        lo_all, hi_all = float(noisy.min()) - 1.0, float(noisy.max()) + 1.0
        for k, target_mass in enumerate(cum_targets):
            lo, hi = lo_all, hi_all
            cut = cuts[k]
            for _ in range(max_iter):
                cut = 0.5 * (lo + hi)
                mass = float((noisy < cut).mean())
                if abs(mass - target_mass) <= targets.rating_tol / 8:
                    break
                if mass < target_mass:
                    lo = cut
                else:
                    hi = cut
            new_cuts.append(cut)
        eps = 1e-9
        for i in range(1, len(new_cuts)):
            if new_cuts[i] <= new_cuts[i - 1]:
                new_cuts[i] = new_cuts[i - 1] + eps
        cuts = new_cuts

    base = work.block_base_prob

    def block_mean(b: float) -> float:
        probe = OracleParams.from_dict({**work.to_dict(), "block_base_prob": b})
        return float(block_probabilities(probe, feats).mean())

    if abs(block_mean(base) - targets.block_rate) > targets.block_tol / 2:
        lo, hi = 1e-9, 1.0 - 1e-9
        for _ in range(max_iter):
            base = 0.5 * (lo + hi)
            mean = block_mean(base)
            if abs(mean - targets.block_rate) <= targets.block_tol / 8:
                break
            if mean < targets.block_rate:
                lo = base
            else:
                hi = base

    calibrated = OracleParams.from_dict(
        {
            **work.to_dict(),
            "rating_cutpoints": [float(c) for c in cuts],
            "block_base_prob": float(base),
        }
    )
    marginal, block_rate = achieved_marginals(calibrated, feats, noise)
    errs = np.abs(marginal - np.asarray(targets.rating_marginal))
    if np.any(errs > targets.rating_tol) or abs(block_rate - targets.block_rate) > targets.block_tol:
        raise CalibrationError(
            "calibration did not converge within tolerance: "
            f"rating marginal {marginal.round(4).tolist()} vs {targets.rating_marginal}, "
            f"block rate {block_rate:.4f} vs {targets.block_rate}"
        )
    achieved = {
        "rating_marginal": [float(x) for x in marginal],
        "block_rate": block_rate,
        "n_pairs": n_pairs,
    }
    return calibrated, achieved


@dataclass
class Corpus:
    """Labeled pair corpus with a deterministic 80/20 train/test marker."""

    features: np.ndarray  # (n, d) encoded pair features
    ratings: np.ndarray  # (n,) in 1..5
    blocks: np.ndarray  # (n,) in {0, 1}
    is_train: np.ndarray  # (n,) bool, first 80% of rows

    def __len__(self) -> int:
        return len(self.ratings)


CORPUS_COLUMNS = (
    [f"s_{g.value}" for g in GENDER_ORDER]
    + ["s_birth_year", "s_signup_day", "s_experience"]
    + [f"v_{g.value}" for g in GENDER_ORDER]
    + ["v_birth_year", "v_signup_day", "v_experience"]
    + ["rating", "block", "split"]
)


def generate_corpus(
    n_pairs: int,
    params: OracleParams,
    pop: PopulationParams,
    seed: int = 0,
    train_fraction: float = 0.8,
) -> Corpus:
    """Random labeled pairs over freshly generated agents."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = seeded_rng(seed, "oracle.corpus")
    seekers, counselors = _sample_pair_pool(pop, n_pairs, rng)
    feats = pair_features(params, seekers, counselors)
    ratings, blocks = emit_labels_batch(params, feats, rng)
    feats = np.empty((n_pairs, 2 * encoding_dim()))
    for i, (s, v) in enumerate(zip(seekers, counselors)):
        feats[i] = encode_pair(s, v, pop)
    n_train = int(round(train_fraction * n_pairs))
    is_train = np.zeros(n_pairs, dtype=bool)
    is_train[:n_train] = True
    return Corpus(feats, ratings, blocks, is_train)


def save_corpus_csv(corpus: Corpus, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CORPUS_COLUMNS)
        for i in range(len(corpus)):
            row = [f"{x:.6g}" for x in corpus.features[i]]
            row += [
                int(corpus.ratings[i]),
                int(corpus.blocks[i]),
                "train" if corpus.is_train[i] else "test",
            ]
            writer.writerow(row)


def load_corpus_csv(path) -> Corpus:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CORPUS_COLUMNS:
            raise ValueError("unexpected corpus columns")
        feats, ratings, blocks, is_train = [], [], [], []
        for row in reader:
            feats.append([float(x) for x in row[:-3]])
            ratings.append(int(row[-3]))
            blocks.append(int(row[-2]))
            is_train.append(row[-1] == "train")
    return Corpus(
        np.asarray(feats), np.asarray(ratings), np.asarray(blocks), np.asarray(is_train)
    )
