import { describe, expect, it } from "vitest";

import { buildComparisonView, buildSubgroupView, viewFor } from "./table";
import type { ComparisonPayload, ResultsPayload, SubgroupPayload } from "./types";

function cell(display: string, extras: Partial<{ best: boolean; worst: boolean; rank: number }> = {}) {
  return { mean: 1, ci95: null, n: 2, display, ...extras };
}

const METRICS = [
  "pct_high_rating",
  "pct_low_rating",
  "avg_rating",
  "pct_blocked_pairs",
  "avg_wait_matched_min",
  "avg_wait_unmatched_min",
  "matching_rate",
];

function comparisonFixture(): ComparisonPayload {
  const rows = ["replication", "rating"].map((policy, i) => ({
    policy,
    metrics: Object.fromEntries(
      METRICS.map((key, j) => [
        key,
        cell(`${policy}:${key}`, { best: i === 0, worst: i === 1, rank: i + 1 }),
      ]),
    ),
  }));
  return { spec: {}, metrics: METRICS, rows };
}

function subgroupFixture(): SubgroupPayload {
  const groups = ["teen", "non_teen", "minority", "non_minority"];
  const policies: SubgroupPayload["policies"] = {};
  for (const policy of ["replication", "rating"]) {
    policies[policy] = {};
    for (const group of groups) {
      policies[policy][group] = {
        metrics: Object.fromEntries(METRICS.map((key) => [key, cell(`${policy}/${group}/${key}`)])),
        n_matched_total: 10,
      };
    }
  }
  return { spec: {}, groups, policies };
}

describe("buildComparisonView", () => {
  it("renders every cell verbatim from the payload display strings", () => {
    const payload = comparisonFixture();
    const view = buildComparisonView(payload);
    for (const [i, row] of view.rows.entries()) {
      for (const [j, c] of row.cells.entries()) {
        expect(c.value).toBe(payload.rows[i].metrics[payload.metrics[j]].display);
      }
    }
  });

  it("maps best/worst badges from the payload", () => {
    const view = buildComparisonView(comparisonFixture());
    expect(view.rows[0].cells.every((c) => c.badge === "best")).toBe(true);
    expect(view.rows[1].cells.every((c) => c.badge === "worst")).toBe(true);
  });

  it("suppresses badges for a single-policy result", () => {
    const payload = comparisonFixture();
    payload.rows = [payload.rows[0]];
    const view = buildComparisonView(payload);
    expect(view.showBadges).toBe(false);
    expect(view.rows[0].cells.every((c) => c.badge === null)).toBe(true);
  });

  it("exactly one best badge per metric column with the tie rule", () => {
    const payload = comparisonFixture();
    const view = buildComparisonView(payload);
    for (let j = 0; j < view.metricKeys.length; j++) {
      const badges = view.rows.map((r) => r.cells[j].badge).filter((b) => b === "best");
      expect(badges).toHaveLength(1);
    }
  });
});

describe("buildSubgroupView", () => {
  it("exposes the four subgroup views with verbatim values", () => {
    const payload = subgroupFixture();
    expect(payload.groups).toEqual(["teen", "non_teen", "minority", "non_minority"]);
    for (const group of payload.groups) {
      const view = buildSubgroupView(payload, group);
      for (const row of view.rows) {
        for (const [j, c] of row.cells.entries()) {
          expect(c.value).toBe(
            payload.policies[row.policy][group].metrics[view.metricKeys[j]].display,
          );
        }
      }
    }
  });

  it("rejects unknown groups", () => {
    expect(() => buildSubgroupView(subgroupFixture(), "pets")).toThrow(/unknown subgroup/);
  });
});

describe("viewFor", () => {
  it("switches between overall and subgroup views", () => {
    const results: ResultsPayload = {
      id: "x",
      comparison: comparisonFixture(),
      subgroups: subgroupFixture(),
    };
    expect(viewFor(results, null).rows[0].cells[0].value).toBe("replication:pct_high_rating");
    expect(viewFor(results, "minority").rows[0].cells[0].value).toBe(
      "replication/minority/pct_high_rating",
    );
  });
});
