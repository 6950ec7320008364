import numpy as np
import pytest

from matchlab.core import Agent, Gender, Role, seeded_rng
from matchlab.oracle import (
    CalibrationTargets,
    OracleParams,
    achieved_marginals,
    calibrate,
    emit_labels,
    emit_labels_batch,
    generate_corpus,
    latent_score,
    pair_features,
    load_corpus_csv,
    save_corpus_csv,
)


def agent(aid, role=Role.SEEKER, gender=Gender.CIS_FEMALE, birth_year=1990, signup=100, exp=2):
    return Agent(
        id=aid,
        role=role,
        gender=gender,
        birth_year=birth_year,
        signup_day=signup,
        experience_level=exp,
        arrival_minute=0,
        patience_min=5 if role is Role.SEEKER else None,
    )


class TestLatentScore:
    def test_age_gap_penalised(self):
        params = OracleParams()
        s = agent(0)
        twin = agent(1, role=Role.COUNSELOR)
        distant = agent(2, role=Role.COUNSELOR, birth_year=1960)
        assert latent_score(s, twin, params) > latent_score(s, distant, params)

    def test_zero_weights_zero_score(self):
        params = OracleParams(
            gender_match_bonus=0,
            minority_match_bonus=0,
            age_gap_penalty_per_decade=0,
            experience_gap_penalty=0,
            counselor_tenure_bonus=0,
        )
        assert latent_score(agent(0), agent(1, role=Role.COUNSELOR), params) == 0.0

    def test_minority_pairing_beats_majority_counselor(self):
        params = OracleParams()
        s = agent(0, gender=Gender.NON_BINARY)
        matched = agent(1, role=Role.COUNSELOR, gender=Gender.NON_BINARY)
        cis = agent(2, role=Role.COUNSELOR, gender=Gender.CIS_MALE)
        assert latent_score(s, matched, params) > latent_score(s, cis, params)

    def test_asymmetry_confined_to_tenure(self):
        """Swapping which side is the counselor only moves the tenure term."""
        params = OracleParams(counselor_tenure_bonus=0.0)
        a = agent(0, gender=Gender.CIS_MALE, birth_year=1985, signup=50, exp=1)
        b = agent(1, role=Role.COUNSELOR, gender=Gender.NON_BINARY, birth_year=1999, signup=900, exp=4)
        a_as_counselor = agent(2, role=Role.COUNSELOR, gender=a.gender, birth_year=a.birth_year, signup=a.signup_day, exp=a.experience_level)
        b_as_seeker = agent(3, gender=b.gender, birth_year=b.birth_year, signup=b.signup_day, exp=b.experience_level)
        assert latent_score(a, b, params) == pytest.approx(
            latent_score(b_as_seeker, a_as_counselor, params)
        )
        with_tenure = OracleParams(counselor_tenure_bonus=0.6)
        assert latent_score(a, b, with_tenure) != pytest.approx(
            latent_score(b_as_seeker, a_as_counselor, with_tenure)
        )


class TestEmitLabels:
    def test_deterministic_when_noiseless(self):
        params = OracleParams(noise_sd=0.0)
        s, v = agent(0), agent(1, role=Role.COUNSELOR)
        first = emit_labels(s, v, params)
        for _ in range(5):
            assert emit_labels(s, v, params) == first

    def test_ratings_in_range(self, oracle_params, pop):
        rng = seeded_rng(3, "emit")
        from matchlab.population import AgentFactory

        factory = AgentFactory(pop)
        seekers = factory.generate(2000, Role.SEEKER, 0, rng)
        counselors = factory.generate(2000, Role.COUNSELOR, 0, rng)
        feats = pair_features(oracle_params, seekers, counselors)
        ratings, blocks = emit_labels_batch(oracle_params, feats, rng)
        assert ratings.min() >= 1 and ratings.max() <= 5
        assert set(np.unique(blocks)) <= {0, 1}

    def test_top_decile_blocks_less_than_bottom(self, oracle_params, pop):
        rng = seeded_rng(4, "decile")
        from matchlab.population import AgentFactory

        factory = AgentFactory(pop)
        seekers = factory.generate(50_000, Role.SEEKER, 0, rng)
        counselors = factory.generate(50_000, Role.COUNSELOR, 0, rng)
        feats = pair_features(oracle_params, seekers, counselors)
        _, blocks = emit_labels_batch(oracle_params, feats, rng)
        lat = feats.latent
        lo, hi = np.quantile(lat, [0.1, 0.9])
        assert blocks[lat <= lo].mean() > blocks[lat >= hi].mean()


class TestCalibrate:
    def test_converges_to_reference_marginals(self, oracle_params, pop):
        rng = seeded_rng(11, "check")
        from matchlab.population import AgentFactory

        factory = AgentFactory(pop)
        n = 200_000
        seekers = factory.generate(n, Role.SEEKER, 0, rng)
        counselors = factory.generate(n, Role.COUNSELOR, 0, rng)
        feats = pair_features(oracle_params, seekers, counselors)
        ratings, _ = emit_labels_batch(oracle_params, feats, rng)
        marginal = np.array([(ratings == k).mean() for k in range(1, 6)])
        targets = np.array([0.1518, 0.0351, 0.0456, 0.1063, 0.6612])
        assert np.all(np.abs(marginal - targets) <= 0.015)
        from matchlab.oracle import block_probabilities

        assert abs(block_probabilities(oracle_params, feats).mean() - 0.053) <= 0.010

    def test_idempotent_at_fixed_point(self, oracle_params, pop):
        again, _ = calibrate(oracle_params, pop, seed=0)
        assert again.rating_cutpoints == oracle_params.rating_cutpoints
        assert again.block_base_prob == oracle_params.block_base_prob

    def test_raising_first_target_raises_lowest_cutpoint(self, oracle_params, pop):
        targets = CalibrationTargets(
            rating_marginal=(0.25, 0.0351, 0.0456, 0.1063, 0.5630)
        )
        moved, _ = calibrate(oracle_params, pop, targets=targets, seed=0)
        assert moved.rating_cutpoints[0] > oracle_params.rating_cutpoints[0]

    def test_degenerate_weights_fail_with_diagnostic(self, pop):
        from matchlab.oracle import CalibrationError

        flat = OracleParams(
            gender_match_bonus=0,
            minority_match_bonus=0,
            minority_presence_bonus=0,
            teen_match_bonus=0,
            age_gap_penalty_per_decade=0,
            experience_gap_penalty=0,
            counselor_tenure_bonus=0,
            noise_sd=0.0,
        )
        with pytest.raises(CalibrationError, match="degenerate"):
            calibrate(flat, pop, seed=0, n_pairs=5000)

    def test_targets_must_sum_to_one(self, oracle_params, pop):
        with pytest.raises(ValueError, match="sum to 1"):
            calibrate(
                oracle_params,
                pop,
                targets=CalibrationTargets(rating_marginal=(0.5, 0.1, 0.1, 0.1, 0.1)),
                seed=0,
                n_pairs=5000,
            )

    def test_marginal_monotone_in_cutpoint(self, oracle_params, pop):
        rng = seeded_rng(12, "mono")
        from matchlab.population import AgentFactory

        factory = AgentFactory(pop)
        seekers = factory.generate(50_000, Role.SEEKER, 0, rng)
        counselors = factory.generate(50_000, Role.COUNSELOR, 0, rng)
        feats = pair_features(oracle_params, seekers, counselors)
        noise = seeded_rng(13, "mono-noise").standard_normal(len(feats))
        base_marg, _ = achieved_marginals(oracle_params, feats, noise)
        raised = OracleParams.from_dict(oracle_params.to_dict())
        cuts = list(raised.rating_cutpoints)
        cuts[0] += 0.05
        raised.rating_cutpoints = cuts
        up_marg, _ = achieved_marginals(raised, feats, noise)
        assert up_marg[0] >= base_marg[0]


class TestCorpus:
    def test_split_ratio(self, oracle_params, pop):
        corpus = generate_corpus(100, oracle_params, pop, seed=5)
        assert corpus.is_train.sum() == 80
        assert (~corpus.is_train).sum() == 20

    def test_deterministic(self, oracle_params, pop):
        a = generate_corpus(500, oracle_params, pop, seed=5)
        b = generate_corpus(500, oracle_params, pop, seed=5)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.ratings, b.ratings)
        assert np.array_equal(a.blocks, b.blocks)

    def test_class_five_dominates(self, full_corpus):
        counts = np.bincount(full_corpus.ratings, minlength=6)[1:]
        assert counts[4] == counts.max()
        assert counts[4] > counts[:4].sum()

    def test_rejects_empty(self, oracle_params, pop):
        with pytest.raises(ValueError):
            generate_corpus(0, oracle_params, pop)

    def test_csv_round_trip(self, oracle_params, pop, tmp_path):
        corpus = generate_corpus(200, oracle_params, pop, seed=6)
        path = tmp_path / "corpus.csv"
        save_corpus_csv(corpus, path)
        again = load_corpus_csv(path)
        assert np.allclose(again.features, corpus.features, atol=1e-5)
        assert np.array_equal(again.ratings, corpus.ratings)
        assert np.array_equal(again.blocks, corpus.blocks)
        assert np.array_equal(again.is_train, corpus.is_train)
