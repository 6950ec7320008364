// What-if experiment form: state, client-side validation, and request body assembly.
// Validation runs against the server-advertised defaults/limits so an invalid
// form is rejected before any network call.

import type { Defaults, FieldError } from "./types";

export interface PolicyForm {
  policies: string[];
  seeds: number;
  horizonMin: number;
  noiseAcceptProb: number;
  patienceMean: number | null;
  seekerOnlineMean: number | null;
  counselorOnlineMean: number | null;
  teenFraction: number | null;
  minorityShare: number | null;
}

export function defaultForm(defaults: Defaults): PolicyForm {
  return {
    policies: ["replication", "rating"],
    seeds: defaults.run.seeds,
    horizonMin: defaults.run.horizon_min,
    noiseAcceptProb: defaults.run.recommendation_accept_prob,
    patienceMean: null,
    seekerOnlineMean: null,
    counselorOnlineMean: null,
    teenFraction: null,
    minorityShare: null,
  };
}

const MINORITY_GENDERS = ["trans_female", "trans_male", "non_binary", "other"];

/** Rescale a role's gender weights so the minority categories sum to `share`. */
export function scaleGenderWeights(
  weights: Record<string, number>,
  share: number,
): Record<string, number> {
  const minoritySum = MINORITY_GENDERS.reduce((acc, g) => acc + (weights[g] ?? 0), 0);
  const cisSum = 1 - minoritySum;
  const out: Record<string, number> = {};
  for (const [g, w] of Object.entries(weights)) {
    const isMinority = MINORITY_GENDERS.includes(g);
    out[g] = isMinority ? (w / minoritySum) * share : (w / cisSum) * (1 - share);
  }
  return out;
}

export function validateForm(form: PolicyForm, defaults: Defaults): FieldError[] {
  const errors: FieldError[] = [];
  const known = new Set(defaults.run.policies);
  if (form.policies.length === 0) {
    errors.push({ field: "policies", message: "select at least one policy" });
  }
  for (const p of form.policies) {
    if (!known.has(p)) {
      errors.push({ field: "policies", message: `unknown policy ${p}` });
    }
  }
  if (new Set(form.policies).size !== form.policies.length) {
    errors.push({ field: "policies", message: "duplicate policies selected" });
  }
  if (!Number.isInteger(form.seeds) || form.seeds < 1) {
    errors.push({ field: "seeds", message: "seeds must be a positive integer" });
  } else if (form.seeds > defaults.limits.max_seeds) {
    errors.push({ field: "seeds", message: `at most ${defaults.limits.max_seeds} seeds` });
  }
  if (!Number.isInteger(form.horizonMin) || form.horizonMin < 1) {
    errors.push({ field: "horizon_min", message: "horizon must be a positive number of minutes" });
  } else if (form.horizonMin > defaults.limits.max_horizon_min) {
    errors.push({
      field: "horizon_min",
      message: `at most ${defaults.limits.max_horizon_min} minutes`,
    });
  }
  if (!(form.noiseAcceptProb >= 0 && form.noiseAcceptProb <= 1)) {
    errors.push({ field: "recommendation_accept_prob", message: "must be between 0 and 1" });
  }
  if (form.patienceMean !== null && !(form.patienceMean > 0)) {
    errors.push({ field: "population.patience_mean_min", message: "must be positive" });
  }
  if (form.seekerOnlineMean !== null && !(form.seekerOnlineMean > 0)) {
    errors.push({ field: "population.seeker_online_mean", message: "must be positive" });
  }
  if (form.counselorOnlineMean !== null && !(form.counselorOnlineMean > 0)) {
    errors.push({ field: "population.counselor_online_mean", message: "must be positive" });
  }
  if (form.teenFraction !== null && !(form.teenFraction >= 0 && form.teenFraction <= 1)) {
    errors.push({ field: "population.teen_fraction", message: "must be between 0 and 1" });
  }
  if (form.minorityShare !== null && !(form.minorityShare >= 0 && form.minorityShare <= 0.9)) {
    errors.push({ field: "population.gender_weights", message: "minority share must be between 0 and 0.9" });
  }
  return errors;
}

export function toRequestBody(form: PolicyForm, defaults: Defaults): Record<string, unknown> {
  const population: Record<string, unknown> = {};
  if (form.patienceMean !== null) population.patience_mean_min = form.patienceMean;
  if (form.seekerOnlineMean !== null) population.seeker_online_mean = form.seekerOnlineMean;
  if (form.counselorOnlineMean !== null) population.counselor_online_mean = form.counselorOnlineMean;
  if (form.teenFraction !== null) population.teen_fraction = form.teenFraction;
  if (form.minorityShare !== null) {
    population.gender_weights = {
      seeker: scaleGenderWeights(defaults.population.gender_weights.seeker, form.minorityShare),
      counselor: scaleGenderWeights(defaults.population.gender_weights.counselor, form.minorityShare),
    };
  }
  return {
    policies: form.policies,
    seeds: form.seeds,
    horizon_min: form.horizonMin,
    recommendation_accept_prob: form.noiseAcceptProb,
    population,
  };
}
