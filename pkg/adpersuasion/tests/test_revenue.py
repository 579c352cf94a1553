"""
Tests for rational, behavioral and model-based revenue evaluation.
"""
import dataclasses
import json
import unittest

import numpy as np

from adpersuasion.config import MarketConfig
from adpersuasion.data_processing.transformer import build_features
from adpersuasion.exceptions import EmptyInput
from adpersuasion.evaluation.revenue import (
    BehavioralEvaluator,
    CounterfactualEvaluator,
    RationalEvaluator,
    compare_policies,
    estimate_revenue_mc,
    estimate_revenue_rational,
    evaluation_instances,
    increase_percent,
    simulate_bids_under_policy,
)
from adpersuasion.market.synth import generate_advertisers, simulate_dataset, valuation_profile
from adpersuasion.models.bid_predictor import BidPredictor
from adpersuasion.models.gbm import Hyperparams
from adpersuasion.persuasion.core import (
    Prior,
    SignalingPolicy,
    SignalVocabulary,
    StateSpace,
    ValuationProfile,
)
from adpersuasion.persuasion.signal_design import full_disclosure, no_disclosure, uniform_policy

MARKET = MarketConfig(n_advertisers=150, n_auctions=300, participants_per_auction=5, seed=31)
REVEAL = SignalingPolicy([[1.0, 0.0], [0.0, 1.0]])
POOL = SignalingPolicy([[1.0, 0.0], [1.0, 0.0]])


class TestRationalRevenue(unittest.TestCase):
    """Rational bidders: exact revenue."""

    def setUp(self):
        self.states = StateSpace(["low", "high"], [1.0, 2.0])
        self.prior = Prior([0.5, 0.5])
        self.bidders = [ValuationProfile([1.0, 10.0]), ValuationProfile([4.0, 4.0])]

    def test_full_disclosure(self):
        # low: bids 1 and 4 clear at 1; high: bids 10 and 4 clear at 4
        self.assertAlmostEqual(estimate_revenue_rational(REVEAL, self.bidders, self.states, self.prior), 2.5)

    def test_pooling_beats_disclosure(self):
        # both bid their prior mean: 5.5 and 4
        self.assertAlmostEqual(estimate_revenue_rational(POOL, self.bidders, self.states, self.prior), 4.0)

    def test_empty_population(self):
        with self.assertRaises(EmptyInput):
            estimate_revenue_rational(REVEAL, [], self.states, self.prior)


class TestRationalEvaluator(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.states = StateSpace.default()
        cls.vocabulary = SignalVocabulary.default()
        cls.prior = Prior(MARKET.prior)
        cls.population = generate_advertisers(MARKET)
        cls.instances = evaluation_instances(MARKET, 200, seed=4)
        cls.evaluator = RationalEvaluator(cls.instances, cls.population, cls.states, cls.prior)

    def _values(self, inst):
        return np.array([valuation_profile(self.population[p], self.states) for p in inst.participants])

    def test_full_disclosure_pays_second_valuation(self):
        expected = sum(np.sort(self._values(inst)[:, inst.true_state])[-2] for inst in self.instances)
        revenue = self.evaluator(full_disclosure(self.states, self.vocabulary))
        self.assertAlmostEqual(revenue, expected, places=8)

    def test_no_disclosure_pays_second_prior_mean(self):
        expected = sum(np.sort(self._values(inst) @ self.prior.probs)[-2] for inst in self.instances)
        revenue = self.evaluator(no_disclosure(self.states, self.vocabulary))
        self.assertAlmostEqual(revenue, expected, places=8)

    def test_empty_instances(self):
        with self.assertRaises(EmptyInput):
            RationalEvaluator([], self.population, self.states, self.prior)


class TestBehavioralEvaluator(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.states = StateSpace.default()
        cls.vocabulary = SignalVocabulary.default()
        cls.population = generate_advertisers(MARKET)
        cls.seed = 77
        cls.instances = evaluation_instances(MARKET, 250, cls.seed)
        cls.evaluator = BehavioralEvaluator(cls.instances, cls.population, cls.vocabulary, cls.states,
                                            MARKET, cls.seed)

    def test_sampled_revenue_replays_the_simulator(self):
        policy = uniform_policy(self.states, self.vocabulary)
        records = simulate_dataset(dataclasses.replace(MARKET, seed=self.seed), policy, self.population,
                                   self.vocabulary, instances=self.instances)
        total = float(np.sum([r.payment for r in records]))
        self.assertAlmostEqual(self.evaluator.sampled(policy), total, places=8)
        np.testing.assert_array_equal(self.evaluator.sampled_signals(policy), [r.signal for r in records])

    def test_expected_revenue_of_deterministic_policy(self):
        full = full_disclosure(self.states, self.vocabulary)
        self.assertAlmostEqual(self.evaluator.expected(full), self.evaluator.sampled(full), places=8)

    def test_expected_is_linear_in_policy(self):
        full = full_disclosure(self.states, self.vocabulary)
        none = no_disclosure(self.states, self.vocabulary)
        mix = SignalingPolicy(0.3 * full.matrix + 0.7 * none.matrix)
        self.assertAlmostEqual(self.evaluator(mix),
                               0.3 * self.evaluator(full) + 0.7 * self.evaluator(none), places=8)

    def test_exaggeration_raises_behavioral_revenue(self):
        high = SignalingPolicy(np.tile([0.0, 0.0, 1.0], (3, 1)))
        self.assertGreater(self.evaluator(high), self.evaluator(full_disclosure(self.states, self.vocabulary)))


class TestCounterfactualEvaluator(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.states = StateSpace.default()
        cls.vocabulary = SignalVocabulary.default()
        cls.population = generate_advertisers(MARKET)
        records = simulate_dataset(MARKET, uniform_policy(cls.states, cls.vocabulary), cls.population,
                                   cls.vocabulary)
        features, targets = build_features(records)
        cls.predictor = BidPredictor.train(features, targets, Hyperparams(0.2, 3, 25, 5))
        cls.seed = 8
        cls.instances = evaluation_instances(MARKET, 120, cls.seed)
        cls.evaluator = CounterfactualEvaluator(cls.predictor, cls.instances, cls.population, cls.seed,
                                                len(cls.states))

    def test_sampled_matches_monte_carlo(self):
        for policy in (uniform_policy(self.states, self.vocabulary),
                       full_disclosure(self.states, self.vocabulary)):
            bid_sets = simulate_bids_under_policy(self.predictor, self.instances, policy, self.population,
                                                  self.seed)
            self.assertAlmostEqual(estimate_revenue_mc(bid_sets), self.evaluator.sampled(policy), places=8)

    def test_payoffs_are_second_predictions(self):
        payoffs = self.evaluator.payoffs
        self.assertEqual(payoffs.shape, (120, 3))
        self.assertTrue(np.all((payoffs >= 0.1) & (payoffs <= 20.0)))

    def test_compare_policies(self):
        policies = {"full": full_disclosure(self.states, self.vocabulary),
                    "none": no_disclosure(self.states, self.vocabulary)}
        report = compare_policies(policies, self.evaluator, self.seed, metadata={"digest": "abc"})
        self.assertEqual(report.mode, "ml-counterfactual")
        self.assertEqual(report.n_auctions, 120)
        self.assertEqual(set(report.sampled_totals), {"full", "none"})
        self.assertAlmostEqual(report.increase("full", "none"),
                               increase_percent(report.totals["full"], report.totals["none"]))
        data = json.loads(report.to_json())
        self.assertEqual(data["metadata"], {"digest": "abc"})
        frame = report.to_frame()
        self.assertIn("increase_vs_none_pct", frame.columns)
        with self.assertRaises(KeyError):
            report.increase("full", "exploration")
        with self.assertRaises(ValueError):
            compare_policies({"full": policies["full"]}, self.evaluator, self.seed)


class TestIncreasePercent(unittest.TestCase):

    def test_reference_figures(self):
        self.assertAlmostEqual(increase_percent(10274.72, 9190.47), 11.80, delta=0.01)

    def test_zero_baseline(self):
        self.assertIsNone(increase_percent(5.0, 0.0))
        self.assertEqual(increase_percent(0.0, 4.0), -100.0)


if __name__ == '__main__':
    unittest.main()
