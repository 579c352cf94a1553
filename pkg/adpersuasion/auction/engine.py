"""
Sealed-bid second-price auction and the order-statistic estimators used to
reason about platform revenue.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from adpersuasion.exceptions import DegenerateAuction, EmptyBidSet, EmptyInput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BidSet:
    """Sealed bids of one auction as (advertiser id, bid) pairs."""
    entries: Tuple[Tuple[int, float], ...]

    def __init__(self, entries: Iterable[Tuple[int, float]]):
        pairs = tuple((int(adv), float(bid)) for adv, bid in entries)
        ids = [adv for adv, _ in pairs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate advertiser ids in bid set: {ids}")
        if not all(bid >= 0 and math.isfinite(bid) for _, bid in pairs):
            raise ValueError("bids must be finite and non-negative")
        object.__setattr__(self, "entries", pairs)

    @classmethod
    def from_mapping(cls, bids: Dict[int, float]) -> "BidSet":
        return cls(bids.items())

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def advertiser_ids(self) -> List[int]:
        return [adv for adv, _ in self.entries]

    @property
    def bids(self) -> np.ndarray:
        return np.array([bid for _, bid in self.entries], dtype=np.float64)


@dataclass(frozen=True)
class AuctionOutcome:
    """Winner, price and per-participant win indicators of one auction."""
    winner: int
    payment: float
    win_flags: Tuple[bool, ...]
    second_highest: float


def run_auction(bids: BidSet) -> AuctionOutcome:
    """
    Settle a single-slot second-price auction.

    The highest bid wins; ties go to the lowest advertiser id. The winner pays
    the highest of the remaining bids, or 0 when bidding alone (no reserve).

    Raises:
        EmptyBidSet: No bids were submitted
    """
    if len(bids) == 0:
        raise EmptyBidSet("cannot run an auction without bids")
    ids = np.array(bids.advertiser_ids, dtype=np.int64)
    amounts = bids.bids
    # lexsort: last key is primary -> highest bid first, then lowest id
    order = np.lexsort((ids, -amounts))
    winner_pos = int(order[0])
    second = float(amounts[order[1]]) if len(bids) > 1 else 0.0
    flags = tuple(i == winner_pos for i in range(len(bids)))
    return AuctionOutcome(winner=int(ids[winner_pos]), payment=second,
                          win_flags=flags, second_highest=second)


def expected_second_highest(bid_samples: Sequence[BidSet]) -> float:
    """
    Monte Carlo estimate of the expected second-highest bid.

    Raises:
        EmptyInput: No samples
        DegenerateAuction: A sample has fewer than two bids
    """
    if len(bid_samples) == 0:
        raise EmptyInput("no bid samples")
    payments = []
    for index, sample in enumerate(bid_samples):
        if len(sample) < 2:
            raise DegenerateAuction(index)
        payments.append(run_auction(sample).payment)
    return float(np.mean(payments))


class EmpiricalCDF:
    """Right-continuous empirical distribution function of observed bids."""

    def __init__(self, bids: Sequence[float]):
        values = np.sort(np.asarray(bids, dtype=np.float64))
        if values.size == 0:
            raise EmptyInput("cannot build a CDF from no bids")
        self.values = values
        self.n = values.size

    def __call__(self, b):
        """Fraction of samples at or below ``b`` (scalar or array)."""
        result = np.searchsorted(self.values, b, side="right") / self.n
        return float(result) if np.ndim(result) == 0 else result

    def table(self) -> List[Tuple[float, float]]:
        """(bid, F(bid)) at each distinct observed bid, ascending."""
        distinct = np.unique(self.values)
        return list(zip(distinct.tolist(), self(distinct).tolist()))


def empirical_bid_cdf(bids: Sequence[float]) -> EmpiricalCDF:
    """Build the empirical CDF of a bid sample."""
    return EmpiricalCDF(bids)


def realized_utility(value: float, bid: float, opponents: BidSet, bidder_id: int) -> float:
    """Quasilinear utility of ``bidder_id`` bidding ``bid`` against fixed opponents."""
    outcome = run_auction(BidSet(list(opponents.entries) + [(bidder_id, bid)]))
    return value - outcome.payment if outcome.winner == bidder_id else 0.0
