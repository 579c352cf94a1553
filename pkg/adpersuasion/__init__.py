import logging

from dotenv import load_dotenv

# Load environment overrides (ADPERSUASION_*) from a .env file
load_dotenv()

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"

from adpersuasion.auction.engine import AuctionOutcome, BidSet, run_auction  # noqa: E402
from adpersuasion.config import ExperimentConfig, load_config  # noqa: E402
from adpersuasion.exceptions import AdPersuasionError  # noqa: E402
from adpersuasion.persuasion.core import (  # noqa: E402
    Posterior,
    Prior,
    SignalingPolicy,
    SignalVocabulary,
    StateSpace,
    bayes_update,
    signal_marginal,
    validate_policy,
)

__all__ = [
    "AdPersuasionError",
    "AuctionOutcome",
    "BidSet",
    "ExperimentConfig",
    "Posterior",
    "Prior",
    "SignalVocabulary",
    "SignalingPolicy",
    "StateSpace",
    "bayes_update",
    "load_config",
    "run_auction",
    "signal_marginal",
    "validate_policy",
]
