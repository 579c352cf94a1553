"""
Tests for states, priors, signaling policies and Bayes updating.
"""
import unittest

import numpy as np

from adpersuasion.exceptions import (
    DimensionMismatch,
    NegativeEntry,
    NegativeValuation,
    NonFiniteEntry,
    PolicyError,
    RowSumViolation,
    ZeroProbabilitySignal,
)
from adpersuasion.persuasion.core import (
    Posterior,
    Prior,
    SignalingPolicy,
    SignalVocabulary,
    StateSpace,
    ValuationProfile,
    bayes_update,
    expected_valuation,
    optimal_bid,
    posterior_table,
    signal_marginal,
    validate_policy,
)


def random_policy(rng, n_states, n_signals):
    raw = rng.random((n_states, n_signals))
    # knock out some entries so some signals become unreachable from some states
    raw[rng.random((n_states, n_signals)) < 0.3] = 0.0
    for row in raw:
        if row.sum() == 0:
            row[rng.integers(n_signals)] = 1.0
    return SignalingPolicy(raw / raw.sum(axis=1, keepdims=True))


class TestStateTypes(unittest.TestCase):
    """Tests for StateSpace, Prior and SignalVocabulary."""

    def test_default_state_space(self):
        states = StateSpace.default()
        self.assertEqual(states.states, ("low", "medium", "high"))
        self.assertEqual(states.multipliers.tolist(), [0.5, 1.0, 1.8])
        self.assertEqual(states.index("high"), 2)

    def test_multipliers_must_increase(self):
        with self.assertRaises(PolicyError):
            StateSpace(["a", "b"], [1.0, 1.0])
        with self.assertRaises(PolicyError):
            StateSpace(["a", "b"], [0.0, 1.0])
        with self.assertRaises(PolicyError):
            StateSpace(["a", "a"], [1.0, 2.0])

    def test_prior_validation(self):
        with self.assertRaises(PolicyError):
            Prior([0.5, 0.4])
        with self.assertRaises(PolicyError):
            Prior([1.2, -0.2])
        self.assertAlmostEqual(float(Prior([0.3, 0.5, 0.2]).probs.sum()), 1.0, places=15)

    def test_buffers_are_read_only(self):
        prior = Prior([0.5, 0.5])
        with self.assertRaises(ValueError):
            prior.probs[0] = 1.0

    def test_state_space_round_trip(self):
        states = StateSpace.default()
        again = StateSpace.from_dict(states.to_dict())
        self.assertEqual(again.states, states.states)
        np.testing.assert_array_equal(again.multipliers, states.multipliers)

    def test_vocabulary_pooling_index(self):
        self.assertEqual(SignalVocabulary.default().pooling_index, 1)
        self.assertEqual(SignalVocabulary(["lo", "hi"], [0.5, 1.8]).pooling_index, 1)


class TestPolicyValidation(unittest.TestCase):

    def test_valid_policy(self):
        validate_policy(SignalingPolicy([[0.5, 0.5], [0.25, 0.75]]))

    def test_negative_entry_reports_position(self):
        with self.assertRaises(NegativeEntry) as ctx:
            validate_policy(SignalingPolicy([[1.0, 0.0], [1.1, -0.1]]))
        self.assertEqual((ctx.exception.row, ctx.exception.col), (1, 1))

    def test_row_sum_violation(self):
        with self.assertRaises(RowSumViolation) as ctx:
            validate_policy(SignalingPolicy([[1.0, 0.0], [0.5, 0.4]]))
        self.assertEqual(ctx.exception.row, 1)

    def test_row_sum_tolerance(self):
        validate_policy(SignalingPolicy([[0.5 + 5e-10, 0.5]]))
        with self.assertRaises(RowSumViolation):
            validate_policy(SignalingPolicy([[0.5 + 1e-8, 0.5]]))

    def test_non_finite_entries_are_rejected(self):
        with self.assertRaises(NonFiniteEntry) as ctx:
            validate_policy(SignalingPolicy([[np.nan, 1.0], [0.0, 1.0]]))
        self.assertEqual((ctx.exception.row, ctx.exception.col), (0, 0))
        with self.assertRaises(NonFiniteEntry) as ctx:
            validate_policy(SignalingPolicy([[1.0, 0.0], [np.inf, -np.inf]]))
        self.assertEqual((ctx.exception.row, ctx.exception.col), (1, 0))
        with self.assertRaises(PolicyError):
            signal_marginal(SignalingPolicy([[np.nan, 1.0], [0.0, 1.0]]), Prior([0.5, 0.5]))

    def test_non_finite_model_inputs(self):
        with self.assertRaises(PolicyError):
            Prior([np.nan, 0.5, 0.5])
        with self.assertRaises(PolicyError):
            StateSpace(["a", "b"], [1.0, np.inf])
        with self.assertRaises(PolicyError):
            SignalVocabulary(["a", "b"], [np.nan, 1.0])
        with self.assertRaises(NegativeValuation):
            ValuationProfile([1.0, np.nan])
        with self.assertRaises(NegativeValuation):
            optimal_bid(float("nan"))

    def test_shape_checked_against_states(self):
        with self.assertRaises(DimensionMismatch):
            validate_policy(SignalingPolicy([[1.0, 0.0]]), StateSpace.default())

    def test_policy_equality(self):
        a = SignalingPolicy([[1.0, 0.0], [0.0, 1.0]])
        b = SignalingPolicy(np.eye(2))
        self.assertEqual(a, b)
        self.assertEqual(hash(a), hash(b))


class TestBayesUpdate(unittest.TestCase):
    """Tests for signal marginals and posterior beliefs."""

    def setUp(self):
        self.prior = Prior([0.5, 0.5])
        self.policy = SignalingPolicy([[0.5, 0.5], [0.25, 0.75]])

    def test_hand_computed_posterior(self):
        posterior = bayes_update(self.policy, self.prior, 0)
        self.assertAlmostEqual(posterior.probs[0], 2.0 / 3.0, delta=1e-12)
        self.assertAlmostEqual(posterior.probs[1], 1.0 / 3.0, delta=1e-12)

    def test_hand_computed_marginal(self):
        marginal = signal_marginal(self.policy, self.prior)
        self.assertAlmostEqual(marginal[0], 0.375, delta=1e-12)
        self.assertAlmostEqual(marginal[1], 0.625, delta=1e-12)

    def test_full_disclosure_reveals_state(self):
        policy = SignalingPolicy(np.eye(3))
        prior = Prior([0.3, 0.5, 0.2])
        for s in range(3):
            np.testing.assert_array_equal(bayes_update(policy, prior, s).probs, np.eye(3)[s])

    def test_no_disclosure_keeps_prior(self):
        policy = SignalingPolicy([[0, 1, 0], [0, 1, 0], [0, 1, 0]])
        prior = Prior([0.3, 0.5, 0.2])
        np.testing.assert_allclose(bayes_update(policy, prior, 1).probs, prior.probs, atol=1e-12)

    def test_unreachable_signal(self):
        policy = SignalingPolicy([[1.0, 0.0], [1.0, 0.0]])
        with self.assertRaises(ZeroProbabilitySignal) as ctx:
            bayes_update(policy, self.prior, 1)
        self.assertEqual(ctx.exception.signal, 1)

    def test_signal_out_of_range(self):
        with self.assertRaises(DimensionMismatch):
            bayes_update(self.policy, self.prior, 2)

    def test_bayes_plausibility_on_random_policies(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n_states = int(rng.integers(2, 5))
            n_signals = int(rng.integers(2, 5))
            prior = Prior(rng.dirichlet(np.ones(n_states)))
            policy = random_policy(rng, n_states, n_signals)
            marginal = signal_marginal(policy, prior)
            self.assertAlmostEqual(float(marginal.sum()), 1.0, delta=1e-12)
            rebuilt = np.zeros(n_states)
            for s, posterior in posterior_table(policy, prior).items():
                self.assertTrue(np.all(posterior.probs >= 0))
                self.assertAlmostEqual(float(posterior.probs.sum()), 1.0, delta=1e-12)
                rebuilt += marginal[s] * posterior.probs
            np.testing.assert_allclose(rebuilt, prior.probs, atol=1e-9)


class TestValuation(unittest.TestCase):

    def test_expected_valuation(self):
        self.assertAlmostEqual(expected_valuation(Posterior([2 / 3, 1 / 3]), [3.0, 6.0]), 4.0, places=12)

    def test_constant_valuation(self):
        self.assertEqual(expected_valuation(Posterior([0.25, 0.25, 0.5]), ValuationProfile([2.0, 2.0, 2.0])), 2.0)

    def test_length_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            expected_valuation(Posterior([0.5, 0.5]), [1.0, 2.0, 3.0])

    def test_negative_valuations_rejected(self):
        with self.assertRaises(NegativeValuation):
            ValuationProfile([1.0, -1.0])
        with self.assertRaises(NegativeValuation):
            optimal_bid(-0.5)

    def test_optimal_bid_is_truthful(self):
        self.assertEqual(optimal_bid(4.25), 4.25)
        self.assertEqual(optimal_bid(0.0), 0.0)


if __name__ == '__main__':
    unittest.main()
