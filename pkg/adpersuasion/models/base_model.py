"""
Base model class for bid predictors
"""
import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class BaseModel(ABC):
    """
    Abstract base class for bid predictors.
    Tracks status, headline metrics and prediction latency.
    """

    def __init__(self, name: str, description: str, feature_columns: Sequence[str]):
        """
        Initialize the model

        Args:
            name: Human-readable name for this model
            description: Description of the model
            feature_columns: Ordered feature columns the model consumes
        """
        self.name = name
        self.description = description
        self.feature_columns = tuple(feature_columns)
        self.status = "initialized"
        self.error = None
        self.last_prediction_time = 0.0
        self.prediction_count = 0

        # Model performance metrics
        self.metrics: Dict[str, Any] = {
            'rmse': None,
            'mae': None,
            'r_squared': None,
            'prediction_latency_ms': 0.0
        }

    @abstractmethod
    def predict(self, features: Any) -> np.ndarray:
        """
        Predict bids for encoded feature rows

        Args:
            features: Feature rows in ``feature_columns`` order

        Returns:
            Predicted bid per row
        """
        pass

    def get_status(self) -> Dict[str, Any]:
        """
        Get the status of this model

        Returns:
            Status information dictionary
        """
        return {
            'status': self.status,
            'metrics': self.metrics,
            'last_prediction': self.last_prediction_time,
            'prediction_count': self.prediction_count,
            'error': str(self.error) if self.error else None
        }

    def record_metrics(self, rmse: float, mae: float, r_squared: Optional[float]) -> None:
        """Store held-out accuracy reported by an evaluation run."""
        self._update_metrics({'rmse': rmse, 'mae': mae, 'r_squared': r_squared})

    def _update_status(self, status: str, error: Optional[Exception] = None) -> None:
        self.status = status
        self.error = error
        logger.info(f"Model {self.name} status: {status}")
        if error:
            logger.error(f"Model {self.name} error: {error}")

    def _update_metrics(self, metrics_update: Dict[str, Any]) -> None:
        self.metrics.update(metrics_update)

    def _log_prediction(self, latency_ms: float) -> None:
        """
        Log a prediction event

        Args:
            latency_ms: Prediction latency in milliseconds
        """
        self.last_prediction_time = time.time()
        self.prediction_count += 1

        # exponential moving average
        alpha = 0.1
        old_latency = self.metrics.get('prediction_latency_ms', latency_ms)
        self.metrics['prediction_latency_ms'] = old_latency * (1 - alpha) + latency_ms * alpha
