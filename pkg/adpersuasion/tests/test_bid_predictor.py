"""
Tests for the bid predictor wrapper and its model file.
"""
import json
import unittest

import numpy as np

from adpersuasion.config import MarketConfig
from adpersuasion.data_processing.transformer import FeatureLayout, FeatureMatrix, build_features
from adpersuasion.exceptions import DimensionMismatch, FeatureMismatch
from adpersuasion.market.synth import generate_advertisers, simulate_dataset
from adpersuasion.models.bid_predictor import BidPredictor
from adpersuasion.models.gbm import Hyperparams
from adpersuasion.persuasion.core import SignalVocabulary, StateSpace
from adpersuasion.persuasion.signal_design import uniform_policy

CONFIG = MarketConfig(n_advertisers=120, n_auctions=300, participants_per_auction=4, seed=17)
HP = Hyperparams(learning_rate=0.2, max_depth=3, n_trees=20, min_samples_leaf=5)


class TestBidPredictor(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        vocabulary = SignalVocabulary.default()
        records = simulate_dataset(CONFIG, uniform_policy(StateSpace.default(), vocabulary),
                                   generate_advertisers(CONFIG), vocabulary)
        cls.features, cls.targets = build_features(records)
        cls.predictor = BidPredictor.train(cls.features, cls.targets, HP)

    def test_status_after_training(self):
        status = self.predictor.get_status()
        self.assertEqual(status['status'], "ready")
        self.assertEqual(self.predictor.feature_columns, tuple(FeatureLayout().columns))

    def test_predictions_respect_bounds(self):
        out = self.predictor.predict(self.features)
        self.assertEqual(out.shape, self.targets.shape)
        self.assertTrue(np.all((out >= 0.1) & (out <= 20.0)))

    def test_predictions_track_signal(self):
        rows = self.features.values[:1].repeat(3, axis=0).copy()
        rows[:, :3] = np.eye(3)
        out = self.predictor.predict(rows)
        self.assertLess(out[0], out[2])

    def test_predict_rows_matches_matrix(self):
        v = self.features.values
        direct = self.predictor.predict(self.features)[:10]
        signal = v[:10, :3].argmax(axis=1)
        industry = v[:10, 4:9].argmax(axis=1)
        encoded = self.predictor.predict_rows(signal, v[:10, 3], industry, v[:10, 9], v[:10, 10], v[:10, 11])
        np.testing.assert_array_equal(encoded, direct)

    def test_json_round_trip_is_bit_exact(self):
        text = self.predictor.to_json()
        again = BidPredictor.from_json(text)
        np.testing.assert_array_equal(again.predict(self.features), self.predictor.predict(self.features))
        self.assertEqual(again.to_json(), text)
        self.assertEqual(again.manifest()['hyperparams'], HP.to_dict())

    def test_unknown_format(self):
        data = json.loads(self.predictor.to_json())
        data['format'] = "something-else"
        with self.assertRaises(FeatureMismatch):
            BidPredictor.from_dict(data)

    def test_column_mismatch(self):
        renamed = FeatureMatrix(self.features.values, tuple(reversed(self.features.columns)),
                                self.features.auction_ids)
        with self.assertRaises(FeatureMismatch):
            self.predictor.predict(renamed)
        with self.assertRaises(FeatureMismatch):
            self.predictor.check_layout(FeatureLayout(4, 5))
        self.predictor.check_layout(FeatureLayout())

    def test_layout_mismatch_on_train(self):
        with self.assertRaises(FeatureMismatch):
            BidPredictor.train(self.features, self.targets, HP, layout=FeatureLayout(2, 5))

    def test_raw_array_width(self):
        with self.assertRaises(DimensionMismatch):
            self.predictor.predict(self.features.values[:, :5])

    def test_recorded_metrics(self):
        predictor = BidPredictor.from_json(self.predictor.to_json())
        predictor.record_metrics(1.5, 1.1, 0.4)
        self.assertEqual(predictor.metrics['rmse'], 1.5)
        self.assertEqual(predictor.metrics['r_squared'], 0.4)


if __name__ == '__main__':
    unittest.main()
