import pytest

from matchlab.core import Policy
from matchlab.engine import RunResult
from matchlab.experiments import (
    ExperimentSpec,
    comparison_payload,
    comparison_text_table,
    subgroup_payload,
)
from matchlab.metrics import OutcomeReport, SubgroupReport, compute_outcomes


def fake_result(policy, seed, **overrides):
    outcome = OutcomeReport(
        n_matched=100,
        n_abandoned=25,
        pct_high_rating=overrides.get("high", 0.8),
        pct_low_rating=0.1,
        avg_rating=overrides.get("avg", 4.2),
        pct_blocked_pairs=overrides.get("blocked", 0.05),
        avg_wait_matched_min=overrides.get("wait", 2.0),
        avg_wait_unmatched_min=3.0,
        matching_rate=overrides.get("rate", 0.8),
    )
    groups = {
        k: compute_outcomes([], []) for k in ("teen", "non_teen", "minority", "non_minority")
    }
    from matchlab.core import RunConfig

    return RunResult(
        config=RunConfig(seed=seed, policy=policy, horizon_min=10),
        match_records=[],
        abandon_records=[],
        outcome=outcome,
        subgroups=SubgroupReport(groups),
        oracle_rating_marginal=None,
        oracle_block_rate=None,
        wait_sd_matched=None,
        n_seekers_generated=125,
        n_counselors_generated=110,
        n_matched_total=100,
        n_abandoned_total=25,
        n_still_present=0,
        online_seeker_mean=113.0,
        online_counselor_mean=102.0,
    )


class TestSpec:
    def test_seed_count_expands(self):
        spec = ExperimentSpec(policies=["replication"], seeds=3)
        assert spec.seeds == [101, 102, 103]

    def test_rejects_unknown_policy(self):
        with pytest.raises(ValueError, match="unknown policies"):
            ExperimentSpec(policies=["bogus"])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            ExperimentSpec(policies=["fcfs", "fcfs"])

    def test_grid_shares_population(self):
        spec = ExperimentSpec(policies=["replication", "fcfs"], seeds=[1], population={"teen_fraction": 0.4})
        configs = spec.run_configs()
        assert all(c.population.teen_fraction == 0.4 for c in configs)
        assert len(configs) == 2


class TestComparisonPayload:
    def make(self):
        spec = ExperimentSpec(policies=["replication", "rating", "fcfs"], seeds=[1, 2], horizon_min=10)
        results = {
            "replication": [fake_result(Policy.REPLICATION, s, avg=4.0, rate=0.78) for s in (1, 2)],
            "rating": [fake_result(Policy.RATING, s, avg=4.6, rate=0.80) for s in (1, 2)],
            "fcfs": [fake_result(Policy.FCFS, s, avg=4.0, rate=0.82) for s in (1, 2)],
        }
        return spec, results

    def test_rank_annotations(self):
        spec, results = self.make()
        payload = comparison_payload(spec, results)
        by_policy = {row["policy"]: row["metrics"] for row in payload["rows"]}
        assert by_policy["rating"]["avg_rating"]["best"] is True
        assert by_policy["fcfs"]["matching_rate"]["best"] is True
        assert by_policy["replication"]["matching_rate"]["worst"] is True

    def test_tie_breaks_to_earlier_policy(self):
        spec, results = self.make()
        payload = comparison_payload(spec, results)
        by_policy = {row["policy"]: row["metrics"] for row in payload["rows"]}
        # replication and fcfs tie on avg_rating: the earlier grid entry wins rank 2
        assert by_policy["replication"]["avg_rating"]["rank"] == 2
        assert by_policy["fcfs"]["avg_rating"]["rank"] == 3
        bests = [row["metrics"]["avg_rating"].get("best") for row in payload["rows"]]
        assert bests.count(True) == 1

    def test_display_formatting(self):
        spec, results = self.make()
        payload = comparison_payload(spec, results)
        cell = payload["rows"][0]["metrics"]["matching_rate"]
        assert cell["display"].endswith("%")
        wait = payload["rows"][0]["metrics"]["avg_wait_matched_min"]
        assert wait["display"].endswith(" min")

    def test_text_table_alignment(self):
        spec, results = self.make()
        payload = comparison_payload(spec, results)
        text = comparison_text_table(payload)
        lines = [l for l in text.splitlines() if l and not l.startswith("*")]
        header_cols = lines[0].split()
        assert header_cols[0] == "policy"
        assert len(lines) == 2 + len(payload["rows"])  # header + rule + one line per policy

    def test_subgroup_payload_shape(self):
        spec, results = self.make()
        payload = subgroup_payload(spec, results)
        assert set(payload["policies"]) == {"replication", "rating", "fcfs"}
        for groups in payload["policies"].values():
            assert set(groups) == {"teen", "non_teen", "minority", "non_minority"}
