"""
Advertiser, auction-instance and auction-record types with their tabular
codecs.

Dataset CSV has one row per advertiser-auction pair, columns in DATASET_COLUMNS
order. Floats are written with shortest round-trip formatting and read back
with ``float_precision="round_trip"``, so a write/read cycle is bit-exact.
"""
import json
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from adpersuasion.auction.engine import AuctionOutcome, BidSet, run_auction
from adpersuasion.exceptions import SchemaViolation

logger = logging.getLogger(__name__)

POPULATION_COLUMNS = ["advertiser_id", "budget", "industry", "aggressiveness", "base_value"]
DATASET_COLUMNS = ["auction_id", "advertiser_id", "signal", "state", "budget", "industry",
                   "aggressiveness", "time_bucket", "category", "bid", "won", "payment"]

_INT_COLUMNS = ("auction_id", "advertiser_id", "signal", "state", "industry", "time_bucket", "category")


@dataclass(frozen=True)
class AdvertiserProfile:
    id: int
    budget: float
    industry: int
    aggressiveness: float
    base_value: float

    @property
    def aggressiveness_factor(self) -> float:
        """Multiplicative bid scaling in [0.8, 1.2]."""
        return 0.8 + 0.4 * self.aggressiveness


@dataclass(frozen=True)
class AuctionInstance:
    """One auction before any signal is sent: who bids, the true state, the context."""
    auction_id: int
    participants: Tuple[int, ...]
    true_state: int
    time_bucket: int
    category: int

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["participants"] = list(self.participants)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AuctionInstance":
        return cls(auction_id=int(data["auction_id"]),
                   participants=tuple(int(p) for p in data["participants"]),
                   true_state=int(data["true_state"]),
                   time_bucket=int(data["time_bucket"]),
                   category=int(data["category"]))


@dataclass(frozen=True)
class ParticipantBid:
    """Features and bid of one advertiser in one auction."""
    advertiser_id: int
    budget: float
    industry: int
    aggressiveness: float
    bid: float


@dataclass(frozen=True)
class AuctionRecord:
    """A settled auction: the unit of the dataset and of the ledger."""
    auction_id: int
    signal: int
    true_state: int
    time_bucket: int
    category: int
    participants: Tuple[ParticipantBid, ...]
    winner: int
    payment: float

    @property
    def bid_set(self) -> BidSet:
        return BidSet((p.advertiser_id, p.bid) for p in self.participants)

    def outcome(self) -> AuctionOutcome:
        return run_auction(self.bid_set)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "auction_id": self.auction_id,
            "signal": self.signal,
            "true_state": self.true_state,
            "time_bucket": self.time_bucket,
            "category": self.category,
            "participants": [asdict(p) for p in self.participants],
            "winner": self.winner,
            "payment": self.payment,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AuctionRecord":
        try:
            return cls(auction_id=int(data["auction_id"]),
                       signal=int(data["signal"]),
                       true_state=int(data["true_state"]),
                       time_bucket=int(data["time_bucket"]),
                       category=int(data["category"]),
                       participants=tuple(ParticipantBid(int(p["advertiser_id"]), float(p["budget"]),
                                                         int(p["industry"]), float(p["aggressiveness"]),
                                                         float(p["bid"]))
                                          for p in data["participants"]),
                       winner=int(data["winner"]),
                       payment=float(data["payment"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaViolation(data.get("auction_id") if isinstance(data, dict) else None, str(e)) from e


def settle(auction_id: int, signal: int, true_state: int, time_bucket: int, category: int,
           participants: Sequence[ParticipantBid]) -> AuctionRecord:
    """Run the auction over the participants' bids and wrap the result as a record."""
    outcome = run_auction(BidSet((p.advertiser_id, p.bid) for p in participants))
    return AuctionRecord(auction_id=auction_id, signal=signal, true_state=true_state,
                         time_bucket=time_bucket, category=category,
                         participants=tuple(participants), winner=outcome.winner,
                         payment=outcome.payment)


def population_to_frame(population: Sequence[AdvertiserProfile]) -> pd.DataFrame:
    return pd.DataFrame([asdict(p) for p in population]).rename(columns={"id": "advertiser_id"})[POPULATION_COLUMNS]


def population_from_frame(df: pd.DataFrame) -> List[AdvertiserProfile]:
    missing = [c for c in POPULATION_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaViolation(None, f"population is missing columns {missing}")
    return [AdvertiserProfile(id=int(r.advertiser_id), budget=float(r.budget), industry=int(r.industry),
                              aggressiveness=float(r.aggressiveness), base_value=float(r.base_value))
            for r in df.itertuples(index=False)]


def records_to_frame(records: Iterable[AuctionRecord]) -> pd.DataFrame:
    """Flatten records into the dataset frame, one row per advertiser-auction pair."""
    rows = []
    for rec in records:
        for p in rec.participants:
            rows.append((rec.auction_id, p.advertiser_id, rec.signal, rec.true_state, p.budget,
                         p.industry, p.aggressiveness, rec.time_bucket, rec.category, p.bid,
                         int(p.advertiser_id == rec.winner), rec.payment))
    df = pd.DataFrame.from_records(rows, columns=DATASET_COLUMNS)
    for col in _INT_COLUMNS + ("won",):
        df[col] = df[col].astype(np.int64)
    for col in ("budget", "aggressiveness", "bid", "payment"):
        df[col] = df[col].astype(np.float64)
    return df


def records_from_frame(df: pd.DataFrame) -> List[AuctionRecord]:
    """
    Rebuild records from a dataset frame, keeping the row order of each auction.

    Raises:
        SchemaViolation: Missing columns or inconsistent per-auction fields
    """
    missing = [c for c in DATASET_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaViolation(None, f"dataset is missing columns {missing}")
    records = []
    for auction_id, group in df.groupby("auction_id", sort=False):
        head = group.iloc[0]
        for col in ("signal", "state", "time_bucket", "category", "payment"):
            if group[col].nunique() != 1:
                raise SchemaViolation(int(auction_id), f"column '{col}' varies within the auction")
        winners = group.loc[group["won"] == 1, "advertiser_id"]
        if len(winners) != 1:
            raise SchemaViolation(int(auction_id), "auction must have exactly one winner")
        participants = tuple(ParticipantBid(int(r.advertiser_id), float(r.budget), int(r.industry),
                                            float(r.aggressiveness), float(r.bid))
                             for r in group.itertuples(index=False))
        records.append(AuctionRecord(auction_id=int(auction_id), signal=int(head["signal"]),
                                     true_state=int(head["state"]), time_bucket=int(head["time_bucket"]),
                                     category=int(head["category"]), participants=participants,
                                     winner=int(winners.iloc[0]), payment=float(head["payment"])))
    return records


def records_to_jsonl(records: Iterable[AuctionRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), separators=(",", ":")) + "\n" for r in records)


def records_from_jsonl(text: str) -> List[AuctionRecord]:
    return [AuctionRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def instances_to_jsonl(instances: Iterable[AuctionInstance]) -> str:
    return "".join(json.dumps(i.to_dict(), separators=(",", ":")) + "\n" for i in instances)


def instances_from_jsonl(text: str) -> List[AuctionInstance]:
    return [AuctionInstance.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
