"""
Append-only, hash-chained log of auction bids and outcomes.

Each entry commits to its predecessor:

    entry_hash = SHA-256(sequence as 8-byte big-endian || previous hash (32 bytes) || record bytes)

Record bytes are compact JSON with a fixed field order and shortest
round-trip float formatting. The true engagement state is private to the
platform and is not recorded; the signal, bids and outcome are.

Removing entries from the end keeps the remaining chain valid. Detecting
that needs the head hash anchored somewhere else (the run manifest stores it).
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from adpersuasion.auction.engine import BidSet, run_auction
from adpersuasion.exceptions import OutcomeMismatch, SerializationFailure, UnreadableRecord
from adpersuasion.market.records import AuctionRecord

logger = logging.getLogger(__name__)

GENESIS_HASH = hashlib.sha256(b"persuade-auction-genesis").hexdigest()


def canonical_record(record: AuctionRecord) -> Dict[str, Any]:
    """Public view of a record, fields in their fixed order."""
    return {
        "auction_id": record.auction_id,
        "signal": record.signal,
        "time_bucket": record.time_bucket,
        "category": record.category,
        "participants": [
            {"advertiser_id": p.advertiser_id, "budget": p.budget, "industry": p.industry,
             "aggressiveness": p.aggressiveness, "bid": p.bid, "won": int(p.advertiser_id == record.winner)}
            for p in record.participants
        ],
        "winner": record.winner,
        "payment": record.payment,
    }


def canonical_record_bytes(record: AuctionRecord) -> bytes:
    """
    Raises:
        SerializationFailure: Non-finite numbers or unserializable fields
    """
    try:
        text = json.dumps(canonical_record(record), separators=(",", ":"), ensure_ascii=True, allow_nan=False)
    except (TypeError, ValueError) as e:
        raise SerializationFailure(f"auction {record.auction_id}: {e}") from e
    return text.encode("ascii")


def entry_hash(sequence: int, previous_hash: str, record_bytes: bytes) -> str:
    return hashlib.sha256(sequence.to_bytes(8, "big") + bytes.fromhex(previous_hash) + record_bytes).hexdigest()


@dataclass(frozen=True)
class LedgerEntry:
    sequence: int
    previous_hash: str
    record_bytes: bytes
    entry_hash: str

    def record(self) -> Dict[str, Any]:
        return json.loads(self.record_bytes.decode("ascii"))

    def to_json(self) -> str:
        return json.dumps({"sequence": self.sequence, "previous_hash": self.previous_hash,
                           "record": self.record_bytes.decode("ascii"), "entry_hash": self.entry_hash},
                          separators=(",", ":"))


@dataclass
class Ledger:
    entries: List[LedgerEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def head_hash(self) -> str:
        return self.entries[-1].entry_hash if self.entries else GENESIS_HASH


@dataclass(frozen=True)
class ChainVerification:
    ok: bool
    first_bad_index: Optional[int] = None
    reason: str = ""


def append_record(ledger: Ledger, record: AuctionRecord) -> Ledger:
    """
    Append ``record``; the ledger is modified in place and returned.

    Raises:
        SerializationFailure: The record cannot be serialized canonically
    """
    data = canonical_record_bytes(record)
    sequence = len(ledger.entries)
    previous = ledger.head_hash
    ledger.entries.append(LedgerEntry(sequence, previous, data, entry_hash(sequence, previous, data)))
    return ledger


def build_ledger(records: Iterable[AuctionRecord]) -> Ledger:
    ledger = Ledger()
    for record in records:
        append_record(ledger, record)
    logger.info(f"Built ledger of {len(ledger)} entries, head {ledger.head_hash[:12]}")
    return ledger


def verify_chain(ledger: Ledger) -> ChainVerification:
    """
    Recompute every link. Failures are reported, never raised.

    Returns:
        ok, or the index of the first entry whose sequence, link or hash is wrong
    """
    previous = GENESIS_HASH
    for index, entry in enumerate(ledger.entries):
        if entry.sequence != index:
            return ChainVerification(False, index, f"sequence {entry.sequence} at position {index}")
        if entry.previous_hash != previous:
            return ChainVerification(False, index, "previous hash does not link")
        try:
            expected = entry_hash(entry.sequence, entry.previous_hash, entry.record_bytes)
        except ValueError:
            return ChainVerification(False, index, "malformed previous hash")
        if entry.entry_hash != expected:
            return ChainVerification(False, index, "entry hash mismatch")
        previous = entry.entry_hash
    return ChainVerification(True)


def replay(ledger: Ledger) -> List[Dict[str, Any]]:
    """
    Re-run every recorded auction and compare with the stored outcome.

    Returns:
        Recomputed outcomes ({auction_id, winner, payment}) in ledger order

    Raises:
        OutcomeMismatch: A stored winner, payment or win flag does not replay
        UnreadableRecord: A record does not decode into an auction
    """
    outcomes = []
    for index, entry in enumerate(ledger.entries):
        try:
            record = entry.record()
            auction_id = int(record["auction_id"])
            participants = record["participants"]
            bids = BidSet((p["advertiser_id"], p["bid"]) for p in participants)
            flags = tuple(bool(p["won"]) for p in participants)
            winner, payment = record["winner"], record["payment"]
        except (ValueError, KeyError, TypeError, AttributeError, UnicodeDecodeError) as e:
            logger.error(f"Ledger entry {index} is unreadable: {e}")
            raise UnreadableRecord(index, str(e)) from e
        outcome = run_auction(bids)
        if (outcome.winner != winner or outcome.payment != payment
                or outcome.win_flags != flags):
            raise OutcomeMismatch(auction_id)
        outcomes.append({"auction_id": auction_id, "winner": outcome.winner, "payment": outcome.payment})
    return outcomes


def ledger_to_jsonl(ledger: Ledger) -> str:
    return "".join(entry.to_json() + "\n" for entry in ledger.entries)


def _corrupt_entry(raw: bytes) -> LedgerEntry:
    # unparseable lines keep their position so verification can name them
    return LedgerEntry(sequence=-1, previous_hash="", record_bytes=raw, entry_hash="")


def ledger_from_jsonl(data: bytes) -> Ledger:
    """Parse a JSONL ledger; lines that do not parse become entries that fail verification."""
    entries = []
    for raw in data.split(b"\n"):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw.decode("ascii"))
            entries.append(LedgerEntry(sequence=int(obj["sequence"]), previous_hash=str(obj["previous_hash"]),
                                       record_bytes=obj["record"].encode("ascii"),
                                       entry_hash=str(obj["entry_hash"])))
        except (ValueError, KeyError, TypeError, AttributeError, UnicodeError):
            entries.append(_corrupt_entry(raw))
    return Ledger(entries)
