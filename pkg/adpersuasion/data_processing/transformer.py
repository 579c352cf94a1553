"""
Feature construction for the bid predictor.
Rows are advertiser-auction pairs; the column order is fixed by FeatureLayout
and recorded in every trained model's manifest.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.preprocessing import OneHotEncoder

from adpersuasion.data_processing.validator import DataValidator, raise_on_errors
from adpersuasion.exceptions import SchemaViolation
from adpersuasion.market.records import AuctionRecord, records_to_frame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeatureLayout:
    """Category counts that determine the one-hot blocks of the feature matrix."""
    n_signals: int = 3
    n_sectors: int = 5

    @property
    def columns(self) -> List[str]:
        return ([f"signal_{s}" for s in range(self.n_signals)]
                + ["budget"]
                + [f"industry_{k}" for k in range(self.n_sectors)]
                + ["aggressiveness", "time_bucket", "category"])

    @property
    def signal_columns(self) -> slice:
        return slice(0, self.n_signals)


@dataclass(frozen=True)
class FeatureMatrix:
    """Encoded features with the auction id of every row (for grouped splits)."""
    values: np.ndarray
    columns: Tuple[str, ...]
    auction_ids: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]

    def take(self, rows: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.values[rows], self.columns, self.auction_ids[rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, columns=list(self.columns))


class DataTransformer:
    def __init__(self, layout: FeatureLayout = FeatureLayout()):
        """
        Initialize the transformer.

        Args:
            layout (FeatureLayout): Signal and sector counts of the market
        """
        self.layout = layout
        self.signal_encoder = OneHotEncoder(categories=[list(range(layout.n_signals))],
                                            sparse_output=False, dtype=np.float64)
        self.industry_encoder = OneHotEncoder(categories=[list(range(layout.n_sectors))],
                                              sparse_output=False, dtype=np.float64)
        # categories are fixed up front, so fitting learns nothing from the data
        self.signal_encoder.fit(np.zeros((1, 1), dtype=np.int64))
        self.industry_encoder.fit(np.zeros((1, 1), dtype=np.int64))

    def encode(self, signal: np.ndarray, budget: np.ndarray, industry: np.ndarray,
               aggressiveness: np.ndarray, time_bucket: np.ndarray, category: np.ndarray) -> np.ndarray:
        """
        Encode raw per-row columns into the feature matrix layout.

        Raises:
            SchemaViolation: A signal or industry index outside the layout
        """
        signal = np.asarray(signal, dtype=np.int64).reshape(-1, 1)
        industry = np.asarray(industry, dtype=np.int64).reshape(-1, 1)
        try:
            signal_block = self.signal_encoder.transform(signal)
            industry_block = self.industry_encoder.transform(industry)
        except ValueError as e:
            raise SchemaViolation(None, f"category outside the feature layout: {e}") from e
        return np.column_stack([
            signal_block,
            np.asarray(budget, dtype=np.float64),
            industry_block,
            np.asarray(aggressiveness, dtype=np.float64),
            np.asarray(time_bucket, dtype=np.float64),
            np.asarray(category, dtype=np.float64),
        ])

    def transform_frame(self, df: pd.DataFrame) -> Tuple[FeatureMatrix, np.ndarray]:
        """
        Encode a validated dataset frame.

        Returns:
            (FeatureMatrix, bid targets)
        """
        raise_on_errors(DataValidator(bid_floor=-np.inf, bid_cap=np.inf,
                                      n_signals=self.layout.n_signals,
                                      n_sectors=self.layout.n_sectors).validate_dataset(df))
        values = self.encode(df['signal'].to_numpy(), df['budget'].to_numpy(), df['industry'].to_numpy(),
                             df['aggressiveness'].to_numpy(), df['time_bucket'].to_numpy(),
                             df['category'].to_numpy())
        values.setflags(write=False)
        features = FeatureMatrix(values, tuple(self.layout.columns),
                                 df['auction_id'].to_numpy(dtype=np.int64))
        targets = df['bid'].to_numpy(dtype=np.float64).copy()
        logger.info(f"Built feature matrix {values.shape[0]} x {values.shape[1]}")
        return features, targets


def build_features(records: Union[Sequence[AuctionRecord], pd.DataFrame],
                   layout: FeatureLayout = FeatureLayout()) -> Tuple[FeatureMatrix, np.ndarray]:
    """
    Encode auction records (or their dataset frame) as predictor inputs.

    Args:
        records: Settled auction records, or the flattened dataset frame
        layout: Signal and sector counts fixing the one-hot blocks

    Returns:
        (FeatureMatrix, target vector of recorded bids)

    Raises:
        SchemaViolation: Empty input, missing fields or out-of-layout categories
    """
    df = records if isinstance(records, pd.DataFrame) else records_to_frame(records)
    if len(df) == 0:
        raise SchemaViolation(None, "no records to encode")
    return DataTransformer(layout).transform_frame(df)
