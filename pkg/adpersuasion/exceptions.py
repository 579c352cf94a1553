"""
Exception hierarchy for the signaling, auction, learning and ledger layers.
"""
from typing import Any, Optional


class AdPersuasionError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(AdPersuasionError, ValueError):
    """Invalid experiment configuration, tagged with the dotted field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class MissingInputError(AdPersuasionError, FileNotFoundError):
    """A pipeline stage needs an artifact that has not been produced yet."""

    def __init__(self, path: Any):
        self.path = str(path)
        super().__init__(f"missing input: {self.path}")


# --- signaling policies -----------------------------------------------------

class PolicyError(AdPersuasionError, ValueError):
    """Signaling policy is not a valid row-stochastic matrix."""


class NegativeEntry(PolicyError):
    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"negative probability at ({row}, {col})")


class NonFiniteEntry(PolicyError):
    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"non-finite probability at ({row}, {col})")


class RowSumViolation(PolicyError):
    def __init__(self, row: int, total: float):
        self.row = row
        self.total = total
        super().__init__(f"row {row} sums to {total!r}, expected 1")


class DimensionMismatch(PolicyError):
    pass


class VocabularyTooSmall(PolicyError):
    pass


class WrongStateCount(PolicyError):
    pass


class StateSpaceTooLarge(PolicyError):
    pass


class ZeroProbabilitySignal(AdPersuasionError, ValueError):
    """The signal has zero marginal probability, so Bayes' rule is undefined."""

    def __init__(self, signal: int):
        self.signal = signal
        super().__init__(f"signal {signal} cannot occur under this policy and prior")


class NegativeValuation(AdPersuasionError, ValueError):
    pass


# --- auctions ---------------------------------------------------------------

class AuctionError(AdPersuasionError, ValueError):
    pass


class EmptyBidSet(AuctionError):
    pass


class DegenerateAuction(AuctionError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"auction {index} has fewer than two bids")


# --- data and learning ------------------------------------------------------

class EmptyInput(AdPersuasionError, ValueError):
    """An estimator or learner was handed no samples."""


class SchemaViolation(AdPersuasionError, ValueError):
    def __init__(self, row: Optional[int], message: str = "record is not schema-complete"):
        self.row = row
        super().__init__(f"row {row}: {message}")


class BadRatios(AdPersuasionError, ValueError):
    pass


class TooFewGroups(AdPersuasionError, ValueError):
    pass


class LengthMismatch(AdPersuasionError, ValueError):
    pass


class FeatureMismatch(AdPersuasionError, ValueError):
    pass


class EmptyCandidateSet(AdPersuasionError, ValueError):
    pass


# --- ledger -----------------------------------------------------------------

class LedgerError(AdPersuasionError):
    pass


class SerializationFailure(LedgerError, ValueError):
    pass


class OutcomeMismatch(LedgerError):
    def __init__(self, auction_id: int):
        self.auction_id = auction_id
        super().__init__(f"stored outcome of auction {auction_id} does not replay")


class UnreadableRecord(LedgerError, ValueError):
    """A ledger record that does not decode into an auction; ``index`` is its ledger position."""

    def __init__(self, index: int, reason: str):
        self.index = index
        super().__init__(f"ledger entry {index} does not hold a readable auction record: {reason}")
