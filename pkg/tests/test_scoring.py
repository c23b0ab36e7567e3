import numpy as np
import pytest

from vqcsearch.circuits import CircuitGenome, GateSpec
from vqcsearch.scoring import (
    DegenerateSubsetWarning,
    ScoringConfig,
    class_weight_matrix,
    final_score,
    median_sigma,
    reference_classification,
    reference_regression,
    repcap_classification,
    repcap_regression,
    score_circuit,
    score_circuit_variants,
    similarity_matrix,
)
from vqcsearch.simulator import run_circuit, state_fidelity

from conftest import random_genomes


class TestSimilarityMatrix:
    def test_diagonal_is_one(self, device3, rng):
        genome = random_genomes(device3, 1, gate_budget=10, seed=3)[0]
        feats = rng.uniform(-1, 1, (5, 4))
        r_c = similarity_matrix(genome, feats, n_param_draws=2, seed=1)
        np.testing.assert_allclose(np.diag(r_c), 1.0, atol=1e-9)

    def test_identical_rows_have_unit_similarity(self, device3):
        genome = random_genomes(device3, 1, gate_budget=10, seed=3)[0]
        row = np.array([0.2, -0.4, 0.9, 0.0])
        feats = np.stack([row, row, -row])
        r_c = similarity_matrix(genome, feats, n_param_draws=3, seed=2)
        assert r_c[0, 1] == pytest.approx(1.0, abs=1e-9)

    def test_symmetric_in_unit_interval(self, device3, rng):
        genome = random_genomes(device3, 1, gate_budget=12, seed=8)[0]
        feats = rng.uniform(-1, 1, (6, 4))
        r_c = similarity_matrix(genome, feats, n_param_draws=2, seed=5)
        np.testing.assert_allclose(r_c, r_c.T, atol=1e-12)
        assert r_c.min() >= -1e-12 and r_c.max() <= 1.0 + 1e-9

    def test_parameter_free_genome_matches_direct_fidelities(self):
        # 1-qubit embedding circuit: entries computable from run_circuit directly
        genome = CircuitGenome(1, (GateSpec("RX", (0,), feature_index=0),))
        feats = np.array([[0.0], [0.5], [1.0]])
        r_c = similarity_matrix(genome, feats, n_param_draws=1, seed=0)
        states = [run_circuit(genome, features=f) for f in feats]
        for i in range(3):
            for j in range(3):
                expected = state_fidelity(states[i], states[j])
                assert r_c[i, j] == pytest.approx(expected, abs=1e-12)

    def test_mean_over_draws(self, device3, rng):
        genome = random_genomes(device3, 1, gate_budget=12, seed=4)[0]
        feats = rng.uniform(-1, 1, (4, 4))
        averaged = similarity_matrix(genome, feats, n_param_draws=4, seed=9)
        assert averaged.min() >= -1e-12 and averaged.max() <= 1 + 1e-9

    def test_empty_subset_rejected(self, device3):
        genome = random_genomes(device3, 1, seed=1)[0]
        with pytest.raises(ValueError, match="nonempty"):
            similarity_matrix(genome, np.zeros((0, 4)), 1, 0)


class TestReferenceClassification:
    def test_same_class_pair(self):
        np.testing.assert_array_equal(
            reference_classification(np.array([1.0, 1.0])), np.ones((2, 2))
        )

    def test_mixed_pair(self):
        np.testing.assert_array_equal(
            reference_classification(np.array([1.0, -1.0])), np.eye(2)
        )

    def test_three_sample_pattern(self):
        ref = reference_classification(np.array([1.0, -1.0, 1.0]))
        assert ref[0, 2] == ref[2, 0] == 1.0
        assert ref[0, 1] == ref[1, 2] == 0.0

    def test_bad_label_rejected(self):
        with pytest.raises(ValueError, match="labels"):
            reference_classification(np.array([1.0, 0.0]))


class TestClassWeightMatrix:
    def test_balanced_gives_ones(self):
        labels = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
        np.testing.assert_allclose(class_weight_matrix(labels), np.ones((6, 6)), atol=1e-12)

    def test_six_to_one_imbalance(self):
        # 6 positives, 1 negative: w+ = 7/12, w- = 7/2
        labels = np.array([1.0] * 6 + [-1.0])
        weights = class_weight_matrix(labels)
        assert weights[0, 0] == pytest.approx(7 / 12, abs=1e-12)
        assert weights[6, 6] == pytest.approx(3.5, abs=1e-12)
        assert weights[0, 6] == pytest.approx(np.sqrt((7 / 12) * 3.5), abs=1e-12)

    def test_relabeling_swaps_weights(self):
        labels = np.array([1.0] * 6 + [-1.0])
        flipped = class_weight_matrix(-labels)
        original = class_weight_matrix(labels)
        assert flipped[0, 0] == pytest.approx(original[6, 6] if False else original[0, 0])
        # the negative (now 6-strong) class takes the old positive weight
        assert flipped[0, 0] == pytest.approx(7 / 12, abs=1e-12)
        assert flipped[6, 6] == pytest.approx(3.5, abs=1e-12)

    def test_single_class_warns_and_returns_ones(self):
        with pytest.warns(DegenerateSubsetWarning):
            weights = class_weight_matrix(np.ones(4))
        np.testing.assert_array_equal(weights, np.ones((4, 4)))


class TestReferenceRegression:
    def test_zero_distance(self):
        ref = reference_regression(np.array([0.3, 0.3]), sigma=0.5)
        assert ref[0, 1] == pytest.approx(1.0)

    def test_analytic_point_at_sigma_sqrt2(self):
        sigma = 0.37
        targets = np.array([0.0, sigma * np.sqrt(2.0)])
        ref = reference_regression(targets, sigma)
        assert ref[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-12)

    def test_derived_example(self):
        ref = reference_regression(np.array([0.0, 0.5, 1.0]), sigma=0.5)
        assert ref[0, 1] == pytest.approx(np.exp(-0.5), abs=1e-9)
        assert ref[0, 2] == pytest.approx(np.exp(-2.0), abs=1e-9)

    def test_translation_invariance(self, rng):
        targets = rng.uniform(-1, 1, 8)
        a = reference_regression(targets, 0.4)
        b = reference_regression(targets + 0.37, 0.4)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_scale_equivariance_with_sigma(self, rng):
        targets = rng.uniform(-1, 1, 8)
        a = reference_regression(targets, 0.4)
        b = reference_regression(3.0 * targets, 3.0 * 0.4)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_sigma_positive(self):
        with pytest.raises(ValueError, match="sigma"):
            reference_regression(np.array([0.0, 1.0]), 0.0)


class TestMedianSigma:
    def test_single_pair(self):
        assert median_sigma(np.array([0.0, 1.0])) == pytest.approx(1.0)

    def test_small_enumeration(self):
        assert median_sigma(np.array([0.0, 0.0, 1.0])) == pytest.approx(1.0)

    def test_enumeration_oracle(self):
        # pairwise distances (0.2, 0.9, 0.7) -> median 0.7
        assert median_sigma(np.array([0.0, 0.2, 0.9])) == pytest.approx(0.7)

    def test_all_equal_rejected(self):
        with pytest.raises(ValueError, match="zero"):
            median_sigma(np.array([0.5, 0.5, 0.5]))


class TestRepCapClassification:
    def test_perfect_match_is_one(self):
        labels = np.array([1.0, 1.0, -1.0])
        ref = reference_classification(labels)
        weights = class_weight_matrix(labels)
        assert repcap_classification(ref * weights, ref, weights) == pytest.approx(1.0)

    def test_derived_two_sample_value(self):
        r_c = np.array([[1.0, 0.5], [0.5, 1.0]])
        ref = reference_classification(np.array([1.0, -1.0]))
        assert repcap_classification(r_c, ref) == pytest.approx(0.96875, abs=1e-12)

    def test_ones_weight_reduces_to_unweighted(self, rng):
        labels = np.where(rng.uniform(size=6) < 0.5, 1.0, -1.0)
        labels[:2] = [1.0, -1.0]
        ref = reference_classification(labels)
        r_c = rng.uniform(0, 1, (6, 6))
        r_c = (r_c + r_c.T) / 2
        np.fill_diagonal(r_c, 1.0)
        unweighted = repcap_classification(r_c, ref)
        with_ones = repcap_classification(r_c, ref, np.ones((6, 6)))
        assert unweighted == with_ones

    def test_balanced_weights_agree_exactly(self, rng):
        labels = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
        ref = reference_classification(labels)
        weights = class_weight_matrix(labels)
        r_c = rng.uniform(0, 1, (6, 6))
        r_c = (r_c + r_c.T) / 2
        np.fill_diagonal(r_c, 1.0)
        assert repcap_classification(r_c, ref, weights) == pytest.approx(
            repcap_classification(r_c, ref), abs=1e-12
        )

    def test_at_most_one(self, rng):
        for _ in range(20):
            labels = np.where(rng.uniform(size=5) < 0.6, 1.0, -1.0)
            r_c = rng.uniform(0, 1, (5, 5))
            assert repcap_classification(r_c, reference_classification(labels)) <= 1.0

    def test_worsening_entry_decreases_score(self, rng):
        labels = np.array([1.0, -1.0, 1.0, -1.0])
        ref = reference_classification(labels)
        r_c = rng.uniform(0.1, 0.9, (4, 4))
        r_c = (r_c + r_c.T) / 2
        np.fill_diagonal(r_c, 1.0)
        base = repcap_classification(r_c, ref)
        # raise a cross-class entry (reference 0) above its current value
        worse = r_c.copy()
        worse[0, 1] = worse[1, 0] = min(1.0, r_c[0, 1] + 0.05)
        assert repcap_classification(worse, ref) < base

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            repcap_classification(np.ones((2, 2)), np.ones((3, 3)))


class TestRepCapRegression:
    def test_perfect_match_both_modes(self):
        ref = reference_regression(np.array([0.1, 0.4, -0.2]), 0.5)
        assert repcap_regression(ref, ref, "plain") == pytest.approx(1.0)
        assert repcap_regression(ref, ref, "gaussian_weighted") == pytest.approx(1.0)

    def test_plain_equals_single_class_formula(self, rng):
        labels = np.array([1.0, -1.0, 1.0])
        binary_ref = reference_classification(labels)
        r_c = rng.uniform(0, 1, (3, 3))
        plain = repcap_regression(r_c, binary_ref, "plain")
        via_classification = repcap_classification(r_c, binary_ref, None, n_classes=1)
        assert plain == pytest.approx(via_classification, abs=1e-15)

    def test_derived_gaussian_weighted_value(self):
        g = np.exp(-0.5)
        r_ref = np.array([[1.0, g], [g, 1.0]])
        r_c = np.array([[1.0, 0.9], [0.9, 1.0]])
        expected = 1.0 - (2 * g * (0.9 - g) ** 2) / (2 * (2 + 2 * g))
        assert repcap_regression(r_c, r_ref, "gaussian_weighted") == pytest.approx(
            expected, abs=1e-12
        )

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            repcap_regression(np.ones((2, 2)), np.ones((2, 2)), "fancy")


class TestFinalScore:
    def test_unit_cnr(self):
        assert final_score(1.0, 0.5) == 0.5

    def test_zero_cnr(self):
        assert final_score(0.0, 0.9) == 0.0

    def test_derived_value(self):
        assert final_score(0.8, 0.9, alpha=0.25) == pytest.approx(0.8**0.25 * 0.9, abs=1e-15)

    def test_cnr_bounds(self):
        with pytest.raises(ValueError, match="cnr"):
            final_score(1.2, 0.5)


class TestScoreCircuit:
    def test_deterministic_and_consistent(self, device3, rng):
        genome = random_genomes(device3, 1, gate_budget=12, seed=5)[0]
        feats = rng.uniform(-1, 1, (8, 4))
        labels = np.array([1.0] * 6 + [-1.0] * 2)
        config = ScoringConfig(variant="eq2_weighted", subset_size=8, n_param_draws=2, n_replicas=3)
        a = score_circuit("c1", genome, device3, feats, labels, config, seed=7)
        b = score_circuit("c1", genome, device3, feats, labels, config, seed=7)
        assert a == b
        assert a.final_score == pytest.approx(a.cnr**config.alpha * a.repcap, abs=1e-12)

    def test_multi_variant_matches_single_variant(self, device3, rng):
        genome = random_genomes(device3, 1, gate_budget=12, seed=6)[0]
        feats = rng.uniform(-1, 1, (8, 4))
        labels = np.array([1.0] * 5 + [-1.0] * 3)
        configs = {}
        for variant in ("eq1", "eq2_weighted"):
            config = ScoringConfig(variant=variant, subset_size=8, n_param_draws=2, n_replicas=3)
            configs[variant] = (config, config.digest(99))
        merged = score_circuit_variants("c2", genome, device3, feats, labels, configs, seed=42)
        for variant, (config, digest) in configs.items():
            single = score_circuit(
                "c2", genome, device3, feats, labels, config, seed=42, config_digest=digest
            )
            assert merged[variant] == single

    def test_variant_validation(self):
        with pytest.raises(ValueError, match="variant"):
            ScoringConfig(variant="eq3")
