// Round-trip the form through the URL query string so what-if configurations
// are shareable links.

import type { PolicyForm } from "./form";

export function formToQuery(form: PolicyForm): string {
  const params = new URLSearchParams();
  params.set("policies", form.policies.join(","));
  params.set("seeds", String(form.seeds));
  params.set("horizon", String(form.horizonMin));
  params.set("noise", String(form.noiseAcceptProb));
  if (form.patienceMean !== null) params.set("patience", String(form.patienceMean));
  if (form.seekerOnlineMean !== null) params.set("seekers", String(form.seekerOnlineMean));
  if (form.counselorOnlineMean !== null) params.set("counselors", String(form.counselorOnlineMean));
  if (form.teenFraction !== null) params.set("teens", String(form.teenFraction));
  if (form.minorityShare !== null) params.set("minority", String(form.minorityShare));
  return params.toString();
}

function num(params: URLSearchParams, key: string): number | null {
  const raw = params.get(key);
  if (raw === null || raw === "") return null;
  const value = Number(raw);
  return Number.isFinite(value) ? value : null;
}

export function queryToForm(query: string, base: PolicyForm): PolicyForm {
  const params = new URLSearchParams(query);
  const form = { ...base };
  const policies = params.get("policies");
  if (policies) {
    form.policies = policies.split(",").filter((p) => p.length > 0);
  }
  form.seeds = num(params, "seeds") ?? form.seeds;
  form.horizonMin = num(params, "horizon") ?? form.horizonMin;
  form.noiseAcceptProb = num(params, "noise") ?? form.noiseAcceptProb;
  form.patienceMean = num(params, "patience");
  form.seekerOnlineMean = num(params, "seekers");
  form.counselorOnlineMean = num(params, "counselors");
  form.teenFraction = num(params, "teens");
  form.minorityShare = num(params, "minority");
  return form;
}
