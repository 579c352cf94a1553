"""
Train/validation/test splitting and k-fold partitioning grouped by auction,
so the rows of one auction never straddle two partitions.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.model_selection import GroupKFold

from adpersuasion.data_processing.transformer import FeatureMatrix
from adpersuasion.exceptions import BadRatios, TooFewGroups

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DataPart:
    features: FeatureMatrix
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class DatasetSplit:
    train: DataPart
    val: DataPart
    test: DataPart


def _check_ratios(ratios: Sequence[float]) -> Tuple[float, float, float]:
    if len(ratios) != 3:
        raise BadRatios(f"expected three ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise BadRatios(f"ratios must be non-negative: {list(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios sum to {sum(ratios)!r}, expected 1")
    return float(ratios[0]), float(ratios[1]), float(ratios[2])


def split_groups(auction_ids: np.ndarray, ratios: Sequence[float],
                 rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Shuffle auction groups and cut them by ratio.

    Args:
        auction_ids: Auction id of every row
        ratios: (train, val, test) shares of auctions, summing to 1
        rng: Generator for the group shuffle

    Returns:
        Ascending row indices of the train, validation and test parts

    Raises:
        BadRatios: Ratios malformed
    """
    train_r, val_r, _ = _check_ratios(ratios)
    groups = np.unique(np.asarray(auction_ids))
    shuffled = groups[rng.permutation(len(groups))]
    n_train = int(round(train_r * len(groups)))
    n_val = min(int(round(val_r * len(groups))), len(groups) - n_train)
    parts = (shuffled[:n_train], shuffled[n_train:n_train + n_val], shuffled[n_train + n_val:])
    indices = tuple(np.flatnonzero(np.isin(auction_ids, part)) for part in parts)
    logger.info(f"Split {len(groups)} auctions into {len(parts[0])}/{len(parts[1])}/{len(parts[2])}")
    return indices


def split_dataset(features: FeatureMatrix, targets: np.ndarray,
                  ratios: Sequence[float] = (0.70, 0.15, 0.15),
                  rng: Optional[np.random.Generator] = None) -> DatasetSplit:
    """Grouped train/validation/test split of an encoded dataset."""
    rng = rng if rng is not None else np.random.default_rng(0)
    train_idx, val_idx, test_idx = split_groups(features.auction_ids, ratios, rng)
    return DatasetSplit(*(DataPart(features.take(idx), targets[idx]) for idx in (train_idx, val_idx, test_idx)))


def group_k_fold(auction_ids: np.ndarray, k: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Partition rows into k folds of whole auctions.

    Returns:
        (train rows, held-out rows) for each fold

    Raises:
        TooFewGroups: Fewer auctions than folds
    """
    if k < 2:
        raise TooFewGroups(f"k-fold needs k >= 2, got {k}")
    n_groups = len(np.unique(auction_ids))
    if n_groups < k:
        raise TooFewGroups(f"{n_groups} auctions cannot fill {k} folds")
    splitter = GroupKFold(n_splits=k)
    placeholder = np.zeros((len(auction_ids), 1))
    return [(train, held) for train, held in splitter.split(placeholder, groups=auction_ids)]


def iter_folds(part: DataPart, k: int) -> Iterator[Tuple[DataPart, DataPart]]:
    for train, held in group_k_fold(part.features.auction_ids, k):
        yield (DataPart(part.features.take(train), part.targets[train]),
               DataPart(part.features.take(held), part.targets[held]))


def concat_parts(*parts: DataPart) -> DataPart:
    """Stack parts row-wise (e.g. train + validation for the final fit)."""
    columns = parts[0].features.columns
    features = FeatureMatrix(np.vstack([p.features.values for p in parts]), columns,
                             np.concatenate([p.features.auction_ids for p in parts]))
    return DataPart(features, np.concatenate([p.targets for p in parts]))
