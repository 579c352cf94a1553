"""
Residual diagnostics of the bid predictor on held-out data.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from scipy import stats

from adpersuasion.data_processing.splitter import DataPart
from adpersuasion.exceptions import EmptyInput
from adpersuasion.models.base_model import BaseModel

logger = logging.getLogger(__name__)

N_DECILES = 10
N_BINS = 20
# normaltest's kurtosis component needs at least this many samples
_MIN_NORMALTEST = 20


@dataclass(frozen=True)
class DecileStat:
    decile: int
    count: int
    predicted_min: float
    predicted_max: float
    mean_predicted: float
    mean_residual: float


@dataclass(frozen=True)
class ResidualSummary:
    n: int
    mean: float
    std: float
    share_beyond_3sd: float
    deciles: List[DecileStat]
    bin_edges: List[float]
    bin_counts: List[int]
    skewness: Optional[float]
    excess_kurtosis: Optional[float]
    normality_statistic: Optional[float]
    normality_pvalue: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["deciles"] = [asdict(d) for d in self.deciles]
        return data

    def deciles_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(d) for d in self.deciles])

    def histogram_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"bin_left": self.bin_edges[:-1], "bin_right": self.bin_edges[1:],
                             "count": self.bin_counts})


def summarize_residuals(predicted: np.ndarray, actual: np.ndarray) -> ResidualSummary:
    """
    Summary statistics of ``actual - predicted``.

    Deciles follow the order statistics of the predicted bids, so a flat
    decile profile means the errors do not depend on the bid level.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.size == 0:
        raise EmptyInput("no residuals to summarize")
    residual = actual - predicted
    mean = float(residual.mean())
    std = float(residual.std())

    order = np.argsort(predicted, kind="stable")
    deciles = []
    for k, idx in enumerate(np.array_split(order, N_DECILES)):
        if idx.size == 0:
            continue
        deciles.append(DecileStat(decile=k, count=int(idx.size),
                                  predicted_min=float(predicted[idx].min()),
                                  predicted_max=float(predicted[idx].max()),
                                  mean_predicted=float(predicted[idx].mean()),
                                  mean_residual=float(residual[idx].mean())))

    counts, edges = np.histogram(residual, bins=N_BINS)
    beyond = float(np.mean(np.abs(residual) > 3 * std)) if std > 0 else 0.0

    skew = kurt = stat = pvalue = None
    if std > 0:
        skew = float(stats.skew(residual))
        kurt = float(stats.kurtosis(residual))
        if residual.size >= _MIN_NORMALTEST:
            result = stats.normaltest(residual)
            stat, pvalue = float(result.statistic), float(result.pvalue)
    logger.info(f"Residuals: mean {mean:.4f}, std {std:.4f}, beyond 3 sd {beyond:.4%}")
    return ResidualSummary(n=int(residual.size), mean=mean, std=std, share_beyond_3sd=beyond,
                           deciles=deciles, bin_edges=edges.tolist(), bin_counts=counts.tolist(),
                           skewness=skew, excess_kurtosis=kurt,
                           normality_statistic=stat, normality_pvalue=pvalue)


def residual_analysis(model: BaseModel, test: DataPart) -> ResidualSummary:
    """Residual summary of ``model`` on a held-out part."""
    if len(test) == 0:
        raise EmptyInput("test split is empty")
    return summarize_residuals(model.predict(test.features), test.targets)
