import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "./api";
import { defaultForm, toRequestBody, validateForm, type PolicyForm } from "./form";
import type { Defaults } from "./types";
import { DEFAULTS } from "./testing/defaults";

function validForm(): PolicyForm {
  return defaultForm(DEFAULTS);
}

describe("validateForm", () => {
  it("accepts the default form", () => {
    expect(validateForm(validForm(), DEFAULTS)).toEqual([]);
  });

  it("rejects an empty policy selection", () => {
    const form = { ...validForm(), policies: [] };
    expect(validateForm(form, DEFAULTS).map((e) => e.field)).toContain("policies");
  });

  it("rejects unknown policies", () => {
    const form = { ...validForm(), policies: ["replication", "astrology"] };
    expect(validateForm(form, DEFAULTS).some((e) => e.message.includes("astrology"))).toBe(true);
  });

  it("rejects a zero horizon", () => {
    const form = { ...validForm(), horizonMin: 0 };
    expect(validateForm(form, DEFAULTS).map((e) => e.field)).toContain("horizon_min");
  });

  it("rejects values beyond the advertised limits", () => {
    const form = { ...validForm(), seeds: 99, horizonMin: 10 ** 6 };
    const fields = validateForm(form, DEFAULTS).map((e) => e.field);
    expect(fields).toContain("seeds");
    expect(fields).toContain("horizon_min");
  });

  it("rejects out-of-range probabilities and overrides", () => {
    const form = { ...validForm(), noiseAcceptProb: 1.5, teenFraction: -0.2, patienceMean: 0 };
    const fields = validateForm(form, DEFAULTS).map((e) => e.field);
    expect(fields).toContain("recommendation_accept_prob");
    expect(fields).toContain("population.teen_fraction");
    expect(fields).toContain("population.patience_mean_min");
  });
});

describe("toRequestBody", () => {
  it("includes only the overridden population fields", () => {
    const form = { ...validForm(), patienceMean: 6.0 };
    const body = toRequestBody(form, DEFAULTS) as { population: Record<string, number> };
    expect(body.population).toEqual({ patience_mean_min: 6.0 });
  });

  it("rescales gender weights to the requested minority share", () => {
    const defaults: Defaults = {
      ...DEFAULTS,
      population: {
        ...DEFAULTS.population,
        gender_weights: {
          seeker: { cis_female: 0.52, cis_male: 0.3, trans_female: 0.04, trans_male: 0.04, non_binary: 0.08, other: 0.02 },
          counselor: { cis_female: 0.55, cis_male: 0.27, trans_female: 0.04, trans_male: 0.04, non_binary: 0.08, other: 0.02 },
        },
      },
    };
    const form = { ...validForm(), minorityShare: 0.36 };
    const body = toRequestBody(form, defaults) as {
      population: { gender_weights: Record<string, Record<string, number>> };
    };
    for (const role of ["seeker", "counselor"]) {
      const w = body.population.gender_weights[role];
      const total = Object.values(w).reduce((a, b) => a + b, 0);
      const minority = w.trans_female + w.trans_male + w.non_binary + w.other;
      expect(total).toBeCloseTo(1.0, 10);
      expect(minority).toBeCloseTo(0.36, 10);
    }
  });

  it("rejects out-of-range minority share", () => {
    const form = { ...validForm(), minorityShare: 0.95 };
    expect(validateForm(form, DEFAULTS).map((e) => e.field)).toContain("population.gender_weights");
  });
});

describe("invalid forms never reach the network", () => {
  it("does not call fetch when validation fails", async () => {
    const fetchSpy = vi.fn();
    const client = new ApiClient("", fetchSpy);
    const form = { ...validForm(), horizonMin: 0 };
    const errors = validateForm(form, DEFAULTS);
    // mirrors the submit handler: bail out before any request
    if (errors.length === 0) {
      await client.submitExperiment(toRequestBody(form, DEFAULTS));
    }
    expect(errors.length).toBeGreaterThan(0);
    expect(fetchSpy).not.toHaveBeenCalled();
  });
});
