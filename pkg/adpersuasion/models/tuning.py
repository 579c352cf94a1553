"""
Regression metrics, hyperparameter grid search and grouped k-fold
cross-validation for the bid predictor.
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import mean_absolute_error, mean_squared_error, r2_score

from adpersuasion.config import PredictorConfig
from adpersuasion.data_processing.splitter import DataPart, iter_folds
from adpersuasion.exceptions import EmptyInput, LengthMismatch
from adpersuasion.models.gbm import Hyperparams, predict, train_gbm

logger = logging.getLogger(__name__)

Bounds = Optional[Tuple[float, float]]


@dataclass(frozen=True)
class RegressionMetrics:
    mse: float
    rmse: float
    mae: float
    r_squared: Optional[float]
    n: int

    @property
    def r_squared_defined(self) -> bool:
        """False when the actuals are constant and R^2 has no denominator."""
        return self.r_squared is not None

    def to_dict(self) -> Dict[str, Any]:
        return {"mse": self.mse, "rmse": self.rmse, "mae": self.mae,
                "r_squared": self.r_squared, "r_squared_defined": self.r_squared_defined, "n": self.n}


def regression_metrics(predicted: Sequence[float], actual: Sequence[float]) -> RegressionMetrics:
    """
    MSE, RMSE, MAE and R^2 (against the mean of ``actual``).

    Raises:
        LengthMismatch: Different lengths
        EmptyInput: No samples
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise LengthMismatch(f"{predicted.size} predictions for {actual.size} actuals")
    if actual.size == 0:
        raise EmptyInput("metrics need at least one sample")
    mse = float(mean_squared_error(actual, predicted))
    # constant actuals leave R^2 without a denominator
    if np.all(actual == actual[0]):
        logger.warning("R^2 undefined: actual values are constant")
        r2 = None
    else:
        r2 = float(r2_score(actual, predicted))
    return RegressionMetrics(mse=mse, rmse=math.sqrt(mse), mae=float(mean_absolute_error(actual, predicted)),
                             r_squared=r2, n=int(actual.size))


def hyperparameter_grid(config: PredictorConfig) -> List[Hyperparams]:
    """Cartesian product of the configured learning rates, depths and tree counts."""
    rates, depths, trees = config.grid_axes()
    return [Hyperparams(float(lr), int(depth), int(n), config.min_samples_leaf)
            for lr, depth, n in itertools.product(rates, depths, trees)]


@dataclass(frozen=True)
class LeaderboardEntry:
    hyperparams: Hyperparams
    val_rmse: float


def _rank_key(entry: LeaderboardEntry):
    hp = entry.hyperparams
    return (entry.val_rmse, hp.n_trees, hp.max_depth, hp.learning_rate)


def _score(train: DataPart, val: DataPart, hp: Hyperparams, bounds: Bounds) -> LeaderboardEntry:
    model = train_gbm(train.features.values, train.targets, hp, columns=train.features.columns)
    rmse = regression_metrics(predict(model, val.features.values, bounds), val.targets).rmse
    logger.debug(f"{hp}: validation RMSE {rmse:.6f}")
    return LeaderboardEntry(hp, rmse)


def tune_hyperparameters(train: DataPart, val: DataPart, grid: Sequence[Hyperparams],
                         bounds: Bounds = None, threads: int = 1) -> Tuple[Hyperparams, List[LeaderboardEntry]]:
    """
    Grid search scored by validation RMSE.

    Args:
        train: Training part
        val: Validation part
        grid: Candidate hyperparameters
        bounds: Clamp applied to validation predictions
        threads: Candidates trained concurrently

    Returns:
        The best hyperparameters and the leaderboard sorted ascending by
        validation RMSE; ties go to fewer trees, then shallower trees
    """
    if not grid:
        raise EmptyInput("hyperparameter grid is empty")
    logger.info(f"Grid search over {len(grid)} configurations")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(lambda hp: _score(train, val, hp, bounds), grid))
    else:
        entries = [_score(train, val, hp, bounds) for hp in grid]
    leaderboard = sorted(entries, key=_rank_key)
    best = leaderboard[0]
    logger.info(f"Best {best.hyperparams} with validation RMSE {best.val_rmse:.4f}")
    return best.hyperparams, leaderboard


def leaderboard_frame(leaderboard: Sequence[LeaderboardEntry]) -> pd.DataFrame:
    return pd.DataFrame([{**e.hyperparams.to_dict(), "val_rmse": e.val_rmse} for e in leaderboard],
                        columns=["learning_rate", "max_depth", "n_trees", "min_samples_leaf", "val_rmse"])


@dataclass(frozen=True)
class CrossValidationResult:
    fold_rmse: Tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_rmse))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_rmse))

    def to_dict(self) -> Dict[str, Any]:
        return {"fold_rmse": list(self.fold_rmse), "mean": self.mean, "std": self.std}


def k_fold_cv(data: DataPart, k: int, hp: Hyperparams, bounds: Bounds = None) -> CrossValidationResult:
    """
    Grouped k-fold cross-validation of one hyperparameter setting.

    Raises:
        TooFewGroups: Fewer auctions than folds
    """
    scores = []
    for fold, (train, held) in enumerate(iter_folds(data, k)):
        model = train_gbm(train.features.values, train.targets, hp, columns=train.features.columns)
        rmse = regression_metrics(predict(model, held.features.values, bounds), held.targets).rmse
        logger.info(f"Fold {fold + 1}/{k}: RMSE {rmse:.4f}")
        scores.append(rmse)
    return CrossValidationResult(tuple(scores))
