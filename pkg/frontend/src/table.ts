// View-models for the comparison table and subgroup drill-down.
// Every rendered value is taken verbatim from the served payload; the UI
// never recomputes a metric.

import type { ComparisonPayload, ResultsPayload, SubgroupPayload } from "./types";

export const METRIC_LABELS: Record<string, string> = {
  pct_high_rating: "% high rating (>= 4)",
  pct_low_rating: "% low rating (< 3)",
  avg_rating: "Average rating",
  pct_blocked_pairs: "% blocked pairs",
  avg_wait_matched_min: "Avg wait (matched)",
  avg_wait_unmatched_min: "Avg wait (unmatched)",
  matching_rate: "Matching rate",
};

export const METRIC_EXPLANATIONS: Record<string, string> = {
  pct_high_rating: "Share of simulated chats whose predicted rating is at least 4 of 5 stars.",
  pct_low_rating: "Share of simulated chats whose predicted rating is under 3 of 5 stars.",
  avg_rating: "Mean predicted rating over all matched pairs.",
  pct_blocked_pairs: "Share of matched pairs predicted to end in one user blocking the other.",
  avg_wait_matched_min: "Mean minutes seekers waited before their chat started.",
  avg_wait_unmatched_min: "Mean minutes seekers waited before giving up unmatched.",
  matching_rate: "Matched seekers over matched plus abandoned seekers.",
};

export interface Cell {
  value: string;   // verbatim display string from the payload
  badge: "best" | "worst" | null;
  rank: number | null;
}

export interface TableView {
  metricKeys: string[];
  metricLabels: string[];
  rows: { policy: string; cells: Cell[] }[];
  showBadges: boolean;
}

export function buildComparisonView(comparison: ComparisonPayload): TableView {
  const showBadges = comparison.rows.length > 1;
  const rows = comparison.rows.map((row) => ({
    policy: row.policy,
    cells: comparison.metrics.map((key) => {
      const cell = row.metrics[key];
      return {
        value: cell.display,
        badge: showBadges && cell.best ? ("best" as const) : showBadges && cell.worst ? ("worst" as const) : null,
        rank: cell.rank ?? null,
      };
    }),
  }));
  return {
    metricKeys: comparison.metrics,
    metricLabels: comparison.metrics.map((k) => METRIC_LABELS[k] ?? k),
    rows,
    showBadges,
  };
}

export function subgroupNames(subgroups: SubgroupPayload): string[] {
  return subgroups.groups;
}

export function buildSubgroupView(subgroups: SubgroupPayload, group: string): TableView {
  if (!subgroups.groups.includes(group)) {
    throw new Error(`unknown subgroup ${group}`);
  }
  const policies = Object.keys(subgroups.policies);
  const metricKeys = policies.length
    ? Object.keys(subgroups.policies[policies[0]][group].metrics)
    : [];
  const rows = policies.map((policy) => ({
    policy,
    cells: metricKeys.map((key) => ({
      value: subgroups.policies[policy][group].metrics[key].display,
      badge: null,
      rank: null,
    })),
  }));
  return {
    metricKeys,
    metricLabels: metricKeys.map((k) => METRIC_LABELS[k] ?? k),
    rows,
    showBadges: false,
  };
}

export function viewFor(results: ResultsPayload, group: string | null): TableView {
  return group === null
    ? buildComparisonView(results.comparison)
    : buildSubgroupView(results.subgroups, group);
}
