"""
Learned bidding function: a gradient-boosted ensemble behind the BaseModel
interface, with the feature manifest and bid clamp it was trained under.
"""
import json
import logging
import time
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from adpersuasion.data_processing.transformer import DataTransformer, FeatureLayout, FeatureMatrix
from adpersuasion.exceptions import FeatureMismatch
from adpersuasion.models.base_model import BaseModel
from adpersuasion.models.gbm import GbmModel, Hyperparams, predict, train_gbm

logger = logging.getLogger(__name__)

MODEL_FORMAT = "gbm-bid-predictor/1"


class BidPredictor(BaseModel):
    """
    Predicts an advertiser's bid from the received signal and its features.

    Predictions are clamped to the market's bid bounds.
    """

    def __init__(self, model: GbmModel, layout: FeatureLayout = FeatureLayout(),
                 bounds: Tuple[float, float] = (0.1, 20.0)):
        if tuple(model.columns) != tuple(layout.columns):
            raise FeatureMismatch(f"model columns {list(model.columns)} do not match layout {layout.columns}")
        super().__init__(name="bid-predictor",
                         description="Gradient-boosted regression trees over signal and advertiser features",
                         feature_columns=model.columns)
        self.model = model
        self.layout = layout
        self.bounds = (float(bounds[0]), float(bounds[1]))
        self.transformer = DataTransformer(layout)
        self._update_status("ready")

    @classmethod
    def train(cls, features: FeatureMatrix, targets: np.ndarray, hp: Hyperparams,
              layout: FeatureLayout = FeatureLayout(),
              bounds: Tuple[float, float] = (0.1, 20.0)) -> "BidPredictor":
        if tuple(features.columns) != tuple(layout.columns):
            raise FeatureMismatch(f"feature columns {list(features.columns)} do not match layout {layout.columns}")
        model = train_gbm(features.values, targets, hp, columns=features.columns)
        return cls(model, layout, bounds)

    def predict(self, features: Union[FeatureMatrix, np.ndarray]) -> np.ndarray:
        """
        Clamped bid predictions.

        Raises:
            FeatureMismatch: FeatureMatrix columns differ from the manifest
            DimensionMismatch: Raw array with the wrong column count
        """
        if isinstance(features, FeatureMatrix):
            if tuple(features.columns) != self.feature_columns:
                raise FeatureMismatch(f"got columns {list(features.columns)}, "
                                      f"model expects {list(self.feature_columns)}")
            values = features.values
        else:
            values = features
        start = time.perf_counter()
        out = predict(self.model, values, self.bounds)
        self._log_prediction((time.perf_counter() - start) * 1000.0)
        return out

    def predict_rows(self, signal: np.ndarray, budget: np.ndarray, industry: np.ndarray,
                     aggressiveness: np.ndarray, time_bucket: np.ndarray, category: np.ndarray) -> np.ndarray:
        """Encode raw columns with this model's layout, then predict."""
        values = self.transformer.encode(signal, budget, industry, aggressiveness, time_bucket, category)
        return self.predict(values)

    def manifest(self) -> Dict[str, Any]:
        return {"columns": list(self.feature_columns),
                "n_signals": self.layout.n_signals,
                "n_sectors": self.layout.n_sectors,
                "bounds": list(self.bounds),
                "hyperparams": self.model.hyperparams.to_dict()}

    def to_dict(self) -> Dict[str, Any]:
        return {"format": MODEL_FORMAT, "manifest": self.manifest(), "model": self.model.to_dict()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "BidPredictor":
        if data.get("format") != MODEL_FORMAT:
            raise FeatureMismatch(f"unsupported model format {data.get('format')!r}")
        manifest = data["manifest"]
        model = GbmModel.from_dict(data["model"])
        if list(model.columns) != list(manifest["columns"]):
            raise FeatureMismatch("model columns disagree with the manifest")
        layout = FeatureLayout(int(manifest["n_signals"]), int(manifest["n_sectors"]))
        return cls(model, layout, tuple(manifest["bounds"]))

    def to_json(self) -> str:
        """Compact JSON; floats use shortest round-trip repr, so reloading is bit-exact."""
        return json.dumps(self.to_dict(), separators=(",", ":"), allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BidPredictor":
        return cls.from_dict(json.loads(text))

    def check_layout(self, layout: Optional[FeatureLayout]) -> None:
        """
        Raises:
            FeatureMismatch: ``layout`` would encode different columns
        """
        if layout is not None and tuple(layout.columns) != self.feature_columns:
            raise FeatureMismatch(f"instances encode {layout.columns}, model expects {list(self.feature_columns)}")
