"""Synthetic population generation calibrated to the platform's published moments.

Patience and chat length are sampled from discretized distributions whose
post-discretization mean and standard deviation are matched to the configured
targets (fitting the underlying continuous parameters numerically, since
rounding and the >= 1 clamp shift raw moments).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, stats

from .core import (
    GENDER_ORDER,
    TEEN_BIRTH_YEAR,
    Agent,
    PopulationParams,
    Role,
)

_MAX_SUPPORT = 4096  # discretized pmfs are evaluated on 1..N; ample for all defaults


def _discrete_moments_gamma(shape: float, scale: float) -> tuple[float, float]:
    """Mean/sd of round(X) clamped to >= 1 for X ~ Gamma(shape, scale)."""
    hi = int(min(_MAX_SUPPORT, np.ceil(stats.gamma.ppf(1 - 1e-12, shape, scale=scale)) + 2))
    edges = np.arange(1, hi + 1) + 0.5
    cdf = stats.gamma.cdf(edges, shape, scale=scale)
    pmf = np.diff(np.concatenate([[0.0], cdf]))
    pmf[-1] += 1.0 - cdf[-1]
    n = np.arange(1, hi + 1)
    mean = float(np.sum(n * pmf))
    var = float(np.sum(n * n * pmf) - mean * mean)
    return mean, float(np.sqrt(max(var, 0.0)))


def _discrete_moments_lognorm(mu: float, sigma: float) -> tuple[float, float]:
    """Mean/sd of round(X) clamped to >= 1 for X ~ LogNormal(mu, sigma)."""
    hi = int(min(_MAX_SUPPORT, np.ceil(stats.lognorm.ppf(1 - 1e-12, sigma, scale=np.exp(mu))) + 2))
    edges = np.arange(1, hi + 1) + 0.5
    cdf = stats.lognorm.cdf(edges, sigma, scale=np.exp(mu))
    pmf = np.diff(np.concatenate([[0.0], cdf]))
    pmf[-1] += 1.0 - cdf[-1]
    n = np.arange(1, hi + 1)
    mean = float(np.sum(n * pmf))
    var = float(np.sum(n * n * pmf) - mean * mean)
    return mean, float(np.sqrt(max(var, 0.0)))


@lru_cache(maxsize=64)
def _fit_gamma(target_mean: float, target_sd: float) -> tuple[float, float]:
    """Continuous gamma (shape, scale) whose discretized moments hit the targets."""

    def residual(x):
        m, s = np.exp(x)
        shape = (m / s) ** 2
        scale = s * s / m
        dm, ds = _discrete_moments_gamma(shape, scale)
        return [dm - target_mean, ds - target_sd]

    x0 = np.log([target_mean, target_sd])
    sol = optimize.root(residual, x0, method="hybr", tol=1e-12)
    m, s = np.exp(sol.x)
    return (m / s) ** 2, s * s / m


@lru_cache(maxsize=64)
def _fit_lognorm(target_mean: float, target_sd: float) -> tuple[float, float]:
    """Continuous lognormal (mu, sigma) whose discretized moments hit the targets."""

    def residual(x):
        m, s = np.exp(x)
        sigma2 = np.log(1.0 + (s / m) ** 2)
        mu = np.log(m) - sigma2 / 2.0
        dm, ds = _discrete_moments_lognorm(mu, np.sqrt(sigma2))
        return [dm - target_mean, ds - target_sd]

    x0 = np.log([target_mean, target_sd])
    sol = optimize.root(residual, x0, method="hybr", tol=1e-12)
    m, s = np.exp(sol.x)
    sigma2 = np.log(1.0 + (s / m) ** 2)
    return np.log(m) - sigma2 / 2.0, float(np.sqrt(sigma2))


def sample_online_target(
    params: PopulationParams, role: Role, minute: int, rng: np.random.Generator, size: int | None = None
):
    """Target online head count for one simulation minute (truncated at >= 1)."""
    if role is Role.SEEKER:
        mean, sd = params.seeker_online_mean, params.seeker_online_sd
    else:
        mean, sd = params.counselor_online_mean, params.counselor_online_sd
    if sd == 0:
        vals = np.full(size or 1, round(mean))
    else:
        vals = np.rint(rng.normal(mean, sd, size=size or 1))
    vals = np.maximum(1, vals).astype(int)
    return vals if size is not None else int(vals[0])


class OnlineTargetProcess:
    """Per-minute target series with optional exponential smoothing.

    The raw draws keep the configured marginal; smoothing (0 disables it)
    damps minute-to-minute demand bursts before the shortfall top-up, which
    stabilises the queue without touching the sampler's distribution.
    """

    def __init__(self, params: PopulationParams, role: Role, smoothing: float, rng: np.random.Generator):
        self.params = params
        self.role = role
        self.smoothing = float(smoothing)
        self.rng = rng
        self._level: float | None = None

    def next_target(self, minute: int) -> int:
        draw = sample_online_target(self.params, self.role, minute, self.rng)
        if self.smoothing <= 0.0:
            return draw
        if self._level is None:
            self._level = float(draw)
        else:
            self._level = self.smoothing * self._level + (1.0 - self.smoothing) * draw
        return max(1, round(self._level))


def sample_patience(params: PopulationParams, rng: np.random.Generator, size: int | None = None):
    """Integer waiting tolerance in minutes (discretized gamma, >= 1)."""
    if params.patience_sd_min == 0:
        vals = np.full(size or 1, max(1, round(params.patience_mean_min)))
    else:
        shape, scale = _fit_gamma(params.patience_mean_min, params.patience_sd_min)
        vals = np.maximum(1, np.rint(rng.gamma(shape, scale, size=size or 1))).astype(int)
    return vals if size is not None else int(vals[0])


def sample_chat_length(params: PopulationParams, rng: np.random.Generator, size: int | None = None):
    """Integer chat duration in minutes (discretized lognormal, >= 1)."""
    if params.chat_len_sd_min == 0:
        vals = np.full(size or 1, max(1, round(params.chat_len_mean_min)))
    else:
        mu, sigma = _fit_lognorm(params.chat_len_mean_min, params.chat_len_sd_min)
        vals = np.maximum(1, np.rint(rng.lognormal(mu, sigma, size=size or 1))).astype(int)
    return vals if size is not None else int(vals[0])


def sample_decision_time(params: PopulationParams, rng: np.random.Generator, size: int | None = None):
    """Counselor decision delay in minutes, exponential with the configured rate."""
    vals = rng.exponential(1.0 / params.decision_rate_per_min, size=size or 1)
    return vals if size is not None else float(vals[0])


@dataclass
class AgentFactory:
    """Stateful generator handing out agents with unique ascending ids."""

    params: PopulationParams
    next_id: int = 0

    def generate(self, count: int, role: Role, minute: int, rng: np.random.Generator) -> list[Agent]:
        if count <= 0:
            return []
        role_key = role.value
        weights = self.params.gender_weights[role_key]
        gender_p = np.array([weights[g.value] for g in GENDER_ORDER])
        genders = rng.choice(len(GENDER_ORDER), size=count, p=gender_p)
        lo, hi = self.params.birth_year_range
        can_teen = hi > TEEN_BIRTH_YEAR
        can_adult = lo <= TEEN_BIRTH_YEAR
        if can_teen and can_adult:
            is_teen = rng.random(count) < self.params.teen_fraction
        else:
            is_teen = np.full(count, can_teen)
        teen_years = (
            rng.integers(max(TEEN_BIRTH_YEAR + 1, lo), hi + 1, size=count)
            if can_teen
            else np.zeros(count, dtype=int)
        )
        adult_years = (
            rng.integers(lo, min(TEEN_BIRTH_YEAR, hi) + 1, size=count)
            if can_adult
            else np.zeros(count, dtype=int)
        )
        birth_years = np.where(is_teen, teen_years, adult_years)
        slo, shi = self.params.signup_day_range
        signups = rng.integers(slo, shi + 1, size=count)
        exp_p = np.array(self.params.experience_weights[role_key], dtype=float)
        exp_p = exp_p / exp_p.sum()
        exps = rng.choice(5, size=count, p=exp_p)
        patiences = sample_patience(self.params, rng, size=count) if role is Role.SEEKER else None
        agents = []
        for i in range(count):
            agents.append(
                Agent(
                    id=self.next_id,
                    role=role,
                    gender=GENDER_ORDER[int(genders[i])],
                    birth_year=int(birth_years[i]),
                    signup_day=int(signups[i]),
                    experience_level=int(exps[i]),
                    arrival_minute=minute,
                    patience_min=int(patiences[i]) if patiences is not None else None,
                )
            )
            self.next_id += 1
        return agents


def generate_arrivals(
    factory: AgentFactory,
    target: int,
    current_online: int,
    role: Role,
    minute: int,
    rng: np.random.Generator,
) -> list[Agent]:
    """Top the online pool up to the target; never removes anyone."""
    if target < 0 or current_online < 0:
        raise ValueError("target and current_online must be non-negative")
    return factory.generate(max(0, target - current_online), role, minute, rng)


def encoding_dim() -> int:
    return len(GENDER_ORDER) + 3


def encode_agent_scaled(
    agent: Agent, birth_year_range: tuple[int, int], signup_day_range: tuple[int, int]
) -> np.ndarray:
    """One-hot gender plus min-max scaled birth year, signup day, experience."""
    vec = np.zeros(encoding_dim())
    vec[list(GENDER_ORDER).index(agent.gender)] = 1.0
    lo, hi = birth_year_range
    vec[6] = (agent.birth_year - lo) / max(1, hi - lo)
    slo, shi = signup_day_range
    vec[7] = (agent.signup_day - slo) / max(1, shi - slo)
    vec[8] = agent.experience_level / 4.0
    return vec


def encode_pair_scaled(
    seeker: Agent,
    counselor: Agent,
    birth_year_range: tuple[int, int],
    signup_day_range: tuple[int, int],
) -> np.ndarray:
    return np.concatenate(
        [
            encode_agent_scaled(seeker, birth_year_range, signup_day_range),
            encode_agent_scaled(counselor, birth_year_range, signup_day_range),
        ]
    )


def encode_agent(agent: Agent, params: PopulationParams) -> np.ndarray:
    return encode_agent_scaled(agent, params.birth_year_range, params.signup_day_range)


def encode_pair(seeker: Agent, counselor: Agent, params: PopulationParams) -> np.ndarray:
    return encode_pair_scaled(
        seeker, counselor, params.birth_year_range, params.signup_day_range
    )
