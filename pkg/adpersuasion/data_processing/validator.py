"""
Data validator for auction datasets and advertiser populations.
Checks are reported as ValidationResult lists; callers decide whether a
result is fatal (see raise_on_errors).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from adpersuasion.exceptions import SchemaViolation
from adpersuasion.market.records import DATASET_COLUMNS, POPULATION_COLUMNS

logger = logging.getLogger(__name__)


class ValidationSeverity(Enum):
    """Enum for validation severity levels."""
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


@dataclass
class ValidationResult:
    """Class for storing validation results."""
    severity: ValidationSeverity
    message: str
    details: Optional[Dict[str, Any]] = None


class DataValidator:
    def __init__(self, bid_floor: float = 0.1, bid_cap: float = 20.0,
                 n_signals: Optional[int] = None, n_sectors: Optional[int] = None):
        """
        Initialize the data validator.

        Args:
            bid_floor (float): Lowest admissible bid
            bid_cap (float): Highest admissible bid
            n_signals (Optional[int]): Vocabulary size; signal indices are range-checked when set
            n_sectors (Optional[int]): Sector count; industry indices are range-checked when set
        """
        self.bid_floor = bid_floor
        self.bid_cap = bid_cap
        self.n_signals = n_signals
        self.n_sectors = n_sectors

    @staticmethod
    def _first_row(mask: pd.Series) -> int:
        return int(mask.to_numpy().nonzero()[0][0])

    def validate_dataset(self, df: pd.DataFrame) -> List[ValidationResult]:
        """
        Validate an auction dataset frame (one row per advertiser-auction pair).

        Args:
            df (pd.DataFrame): Dataset to validate

        Returns:
            List[ValidationResult]: Empty when the dataset is clean
        """
        results = []

        missing_columns = [col for col in DATASET_COLUMNS if col not in df.columns]
        if missing_columns:
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message=f"Missing required columns: {missing_columns}",
                details={'missing_columns': missing_columns}
            ))
            return results

        if df.empty:
            results.append(ValidationResult(ValidationSeverity.ERROR, "Dataset has no rows"))
            return results

        null_mask = df[DATASET_COLUMNS].isnull().any(axis=1)
        if null_mask.any():
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message="Missing values found",
                details={'row': self._first_row(null_mask),
                         'missing_counts': df.isnull().sum()[lambda s: s > 0].to_dict()}
            ))
            return results

        bad_bids = (df['bid'] < self.bid_floor) | (df['bid'] > self.bid_cap)
        if bad_bids.any():
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message=f"Bids outside [{self.bid_floor}, {self.bid_cap}]",
                details={'row': self._first_row(bad_bids), 'count': int(bad_bids.sum())}
            ))

        bad_budget = df['budget'] <= 0
        if bad_budget.any():
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message="Non-positive budgets found",
                details={'row': self._first_row(bad_budget), 'count': int(bad_budget.sum())}
            ))

        bad_aggr = (df['aggressiveness'] < 0) | (df['aggressiveness'] > 1)
        if bad_aggr.any():
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message="Aggressiveness outside [0, 1]",
                details={'row': self._first_row(bad_aggr), 'count': int(bad_aggr.sum())}
            ))

        for col, limit in (('signal', self.n_signals), ('industry', self.n_sectors)):
            if limit is None:
                continue
            bad = (df[col] < 0) | (df[col] >= limit)
            if bad.any():
                results.append(ValidationResult(
                    severity=ValidationSeverity.ERROR,
                    message=f"{col} index outside [0, {limit})",
                    details={'row': self._first_row(bad), 'count': int(bad.sum())}
                ))

        winners = df.groupby('auction_id', sort=False)['won'].sum()
        if (winners != 1).any():
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message="Auctions without exactly one winner",
                details={'auction_ids': winners[winners != 1].index.tolist()[:10]}
            ))

        sizes = df.groupby('auction_id', sort=False).size()
        if (sizes < 2).any():
            results.append(ValidationResult(
                severity=ValidationSeverity.WARNING,
                message="Auctions with a single participant",
                details={'count': int((sizes < 2).sum())}
            ))

        duplicates = df.duplicated(subset=['auction_id', 'advertiser_id'])
        if duplicates.any():
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message="Advertiser appears twice in one auction",
                details={'row': self._first_row(duplicates)}
            ))

        if not results:
            logger.debug(f"Dataset of {len(df)} rows passed validation")
        return results

    def validate_population(self, df: pd.DataFrame) -> List[ValidationResult]:
        """Validate an advertiser population frame."""
        results = []
        missing_columns = [col for col in POPULATION_COLUMNS if col not in df.columns]
        if missing_columns:
            results.append(ValidationResult(
                severity=ValidationSeverity.ERROR,
                message=f"Missing required columns: {missing_columns}",
                details={'missing_columns': missing_columns}
            ))
            return results
        if df['advertiser_id'].duplicated().any():
            results.append(ValidationResult(ValidationSeverity.ERROR, "Duplicate advertiser ids"))
        if (df['advertiser_id'].to_numpy() != np.arange(len(df))).any():
            results.append(ValidationResult(ValidationSeverity.ERROR,
                                            "Advertiser ids must be 0..n-1 in order"))
        if (df['budget'] <= 0).any():
            results.append(ValidationResult(ValidationSeverity.ERROR, "Non-positive budgets found"))
        if (df['base_value'] <= 0).any():
            results.append(ValidationResult(ValidationSeverity.ERROR, "Non-positive base values found"))
        return results


def raise_on_errors(results: List[ValidationResult]) -> None:
    """
    Promote the first ERROR result to an exception; warnings are logged.

    Raises:
        SchemaViolation: Any result has ERROR severity
    """
    for result in results:
        if result.severity is ValidationSeverity.WARNING:
            logger.warning(f"{result.message}: {result.details}")
    for result in results:
        if result.severity is ValidationSeverity.ERROR:
            row = (result.details or {}).get('row')
            raise SchemaViolation(row, result.message)
