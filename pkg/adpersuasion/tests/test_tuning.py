"""
Tests for regression metrics, the grid search and grouped cross-validation.
"""
import dataclasses
import math
import unittest
from unittest import mock

import numpy as np
from sklearn.metrics import mean_absolute_error, mean_squared_error, r2_score

from adpersuasion.config import MarketConfig, PredictorConfig
from adpersuasion.data_processing.splitter import split_dataset
from adpersuasion.data_processing.transformer import build_features
from adpersuasion.exceptions import EmptyInput, LengthMismatch, TooFewGroups
from adpersuasion.market.synth import generate_advertisers, simulate_dataset
from adpersuasion.models.gbm import Hyperparams
from adpersuasion.models.tuning import (
    hyperparameter_grid,
    k_fold_cv,
    leaderboard_frame,
    regression_metrics,
    tune_hyperparameters,
)
from adpersuasion.persuasion.core import SignalVocabulary, StateSpace
from adpersuasion.persuasion.signal_design import uniform_policy


class TestRegressionMetrics(unittest.TestCase):

    def test_matches_sklearn(self):
        rng = np.random.default_rng(2)
        actual = rng.normal(5, 2, 300)
        predicted = actual + rng.normal(0, 0.5, 300)
        m = regression_metrics(predicted, actual)
        self.assertAlmostEqual(m.mse, mean_squared_error(actual, predicted), places=12)
        self.assertAlmostEqual(m.mae, mean_absolute_error(actual, predicted), places=12)
        self.assertAlmostEqual(m.r_squared, r2_score(actual, predicted), places=12)
        self.assertAlmostEqual(m.rmse ** 2, m.mse, places=12)
        self.assertEqual(m.n, 300)

    def test_delegates_to_sklearn(self):
        with mock.patch("adpersuasion.models.tuning.mean_squared_error", wraps=mean_squared_error) as mse, \
                mock.patch("adpersuasion.models.tuning.r2_score", wraps=r2_score) as r2:
            regression_metrics([2.0, 2.0, 5.0], [1.0, 3.0, 5.0])
        self.assertEqual(mse.call_count, 1)
        self.assertEqual(r2.call_count, 1)

    def test_hand_computed_values(self):
        m = regression_metrics([2.0, 2.0, 5.0], [1.0, 3.0, 5.0])
        self.assertAlmostEqual(m.mse, 2.0 / 3.0)
        self.assertAlmostEqual(m.mae, 2.0 / 3.0)
        self.assertAlmostEqual(m.r_squared, 0.75)
        self.assertEqual(m.rmse, math.sqrt(2.0 / 3.0))

    def test_constant_actuals(self):
        m = regression_metrics([1.0, 2.0], [3.0, 3.0])
        self.assertIsNone(m.r_squared)
        self.assertFalse(m.to_dict()['r_squared_defined'])

    def test_errors(self):
        with self.assertRaises(LengthMismatch):
            regression_metrics([1.0], [1.0, 2.0])
        with self.assertRaises(EmptyInput):
            regression_metrics([], [])


class TestGridSearch(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        config = MarketConfig(n_advertisers=100, n_auctions=150, participants_per_auction=4, seed=21)
        vocabulary = SignalVocabulary.default()
        records = simulate_dataset(config, uniform_policy(StateSpace.default(), vocabulary),
                                   generate_advertisers(config), vocabulary)
        features, targets = build_features(records)
        cls.split = split_dataset(features, targets, (0.7, 0.15, 0.15), np.random.default_rng(0))
        cls.grid = [Hyperparams(0.1, 2, 10, 5), Hyperparams(0.2, 3, 10, 5), Hyperparams(0.2, 2, 5, 5)]

    def test_grid_axes(self):
        self.assertEqual(len(hyperparameter_grid(PredictorConfig())), 27)
        reduced = hyperparameter_grid(dataclasses.replace(PredictorConfig(), reduced_grid=True))
        self.assertEqual(len(reduced), 8)
        self.assertEqual({hp.learning_rate for hp in reduced}, {0.1, 0.2})
        self.assertTrue(all(hp.min_samples_leaf == 20 for hp in reduced))

    def test_leaderboard_is_sorted(self):
        best, leaderboard = tune_hyperparameters(self.split.train, self.split.val, self.grid)
        self.assertEqual(len(leaderboard), 3)
        rmses = [e.val_rmse for e in leaderboard]
        self.assertEqual(rmses, sorted(rmses))
        self.assertEqual(best, leaderboard[0].hyperparams)
        frame = leaderboard_frame(leaderboard)
        self.assertEqual(list(frame.columns),
                         ["learning_rate", "max_depth", "n_trees", "min_samples_leaf", "val_rmse"])

    def test_threads_do_not_change_results(self):
        _, serial = tune_hyperparameters(self.split.train, self.split.val, self.grid)
        _, pooled = tune_hyperparameters(self.split.train, self.split.val, self.grid, threads=3)
        self.assertEqual(serial, pooled)

    def test_empty_grid(self):
        with self.assertRaises(EmptyInput):
            tune_hyperparameters(self.split.train, self.split.val, [])

    def test_k_fold_cv(self):
        result = k_fold_cv(self.split.train, 3, self.grid[0], bounds=(0.1, 20.0))
        self.assertEqual(len(result.fold_rmse), 3)
        self.assertTrue(all(r > 0 for r in result.fold_rmse))
        self.assertAlmostEqual(result.to_dict()['mean'], float(np.mean(result.fold_rmse)))

    def test_k_fold_too_many_folds(self):
        with self.assertRaises(TooFewGroups):
            k_fold_cv(self.split.val, 1000, self.grid[0])


if __name__ == '__main__':
    unittest.main()
