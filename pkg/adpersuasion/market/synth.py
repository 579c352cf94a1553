"""
Synthetic advertiser market: population, auction instances and behavioral bids.

Every auction draws from its own substreams (keyed by auction id), so auctions
can be generated in any order, or in parallel, with identical results.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from adpersuasion.config import MarketConfig
from adpersuasion.exceptions import DimensionMismatch
from adpersuasion.market.records import (
    AdvertiserProfile,
    AuctionInstance,
    AuctionRecord,
    ParticipantBid,
    settle,
)
from adpersuasion.persuasion.core import (
    SignalingPolicy,
    SignalVocabulary,
    StateSpace,
    validate_policy,
)
from adpersuasion.rng import substream

logger = logging.getLogger(__name__)


def generate_advertisers(config: MarketConfig, rng: Optional[np.random.Generator] = None) -> List[AdvertiserProfile]:
    """
    Draw the advertiser population.

    Budgets are Normal(mean, std) truncated below at ``budget_min`` (rejected
    draws are redrawn), industries uniform over sectors, aggressiveness
    Uniform[0, 1]; an advertiser's base value is its sector's anchor.

    Args:
        config: Market configuration
        rng: Generator to draw from; defaults to the "population" substream of config.seed

    Returns:
        Profiles with ids 0..n-1
    """
    rng = rng if rng is not None else substream(config.seed, "population")
    n = config.n_advertisers
    budgets = rng.normal(config.budget_mean, config.budget_std, n)
    low = budgets < config.budget_min
    while low.any():
        budgets[low] = rng.normal(config.budget_mean, config.budget_std, int(low.sum()))
        low = budgets < config.budget_min
    industries = rng.integers(0, config.n_sectors, n)
    aggressiveness = rng.uniform(0.0, 1.0, n)
    anchors = np.asarray(config.sector_anchors, dtype=np.float64)

    population = [AdvertiserProfile(id=i, budget=float(budgets[i]), industry=int(industries[i]),
                                    aggressiveness=float(aggressiveness[i]),
                                    base_value=float(anchors[industries[i]]))
                  for i in range(n)]
    logger.info(f"Generated {n} advertisers (mean budget {budgets.mean():.2f})")
    return population


def valuation(profile: AdvertiserProfile, state: int, states: StateSpace) -> float:
    """Value of an impression in ``state`` to this advertiser."""
    return profile.base_value * float(states.multipliers[state]) * profile.aggressiveness_factor


def valuation_profile(profile: AdvertiserProfile, states: StateSpace) -> np.ndarray:
    return profile.base_value * states.multipliers * profile.aggressiveness_factor


def context_shift(time_bucket: int, config: MarketConfig) -> float:
    """Additive bid effect of the time of day; zero unless ``context_effect`` is set."""
    if config.context_effect == 0.0 or config.n_time_buckets < 2:
        return 0.0
    return config.context_effect * (time_bucket / (config.n_time_buckets - 1) - 0.5)


def true_bid(signal: int, profile: AdvertiserProfile, context: Tuple[int, int], noise: float,
             vocabulary: SignalVocabulary, config: MarketConfig) -> float:
    """
    Behavioral bid: the advertiser takes the signal's face value at its word.

    Args:
        signal: Signal index received
        profile: Bidding advertiser
        context: (time bucket, ad category)
        noise: Draw from Normal(0, noise_scale), supplied by the caller
        vocabulary: Signal vocabulary providing face values
        config: Market configuration (clamp bounds, context effect)

    Returns:
        Bid clamped to [bid_floor, bid_cap]
    """
    raw = (profile.base_value * float(vocabulary.face_values[signal]) * profile.aggressiveness_factor
           + context_shift(context[0], config) + noise)
    return float(min(max(raw, config.bid_floor), config.bid_cap))


def draw_signal(row: np.ndarray, u: float) -> int:
    """Inverse-CDF draw of a signal from one policy row using a shared uniform."""
    cdf = np.cumsum(row)
    return int(min(np.searchsorted(cdf, u * cdf[-1], side="right"), len(row) - 1))


def generate_instance(config: MarketConfig, auction_id: int) -> AuctionInstance:
    rng = substream(config.seed, "instances", auction_id)
    state = int(rng.choice(len(config.prior), p=np.asarray(config.prior, dtype=np.float64)))
    participants = rng.choice(config.n_advertisers, config.participants_per_auction, replace=False)
    time_bucket = int(rng.integers(0, config.n_time_buckets))
    category = int(rng.integers(0, config.n_categories))
    return AuctionInstance(auction_id=auction_id, participants=tuple(int(p) for p in participants),
                           true_state=state, time_bucket=time_bucket, category=category)


def generate_instances(config: MarketConfig, n_auctions: Optional[int] = None) -> List[AuctionInstance]:
    """Draw true states, participant sets and contexts for every auction."""
    count = config.n_auctions if n_auctions is None else n_auctions
    instances = [generate_instance(config, j) for j in range(count)]
    logger.info(f"Generated {count} auction instances")
    return instances


def signal_uniforms(seed: int, auction_ids: Sequence[int]) -> np.ndarray:
    """Common random numbers for signal draws: one uniform per auction."""
    return np.array([substream(seed, "signals", j).random() for j in auction_ids], dtype=np.float64)


def simulate_auction(instance: AuctionInstance, policy: SignalingPolicy, population: Sequence[AdvertiserProfile],
                     vocabulary: SignalVocabulary, config: MarketConfig) -> AuctionRecord:
    """Send a signal for one instance, collect behavioral bids and settle."""
    j = instance.auction_id
    u = substream(config.seed, "signals", j).random()
    signal = draw_signal(policy.matrix[instance.true_state], u)
    noise = substream(config.seed, "noise", j).normal(0.0, config.noise_scale, len(instance.participants)) \
        if config.noise_scale > 0 else np.zeros(len(instance.participants))
    context = (instance.time_bucket, instance.category)
    bids = []
    for k, adv_id in enumerate(instance.participants):
        profile = population[adv_id]
        bids.append(ParticipantBid(advertiser_id=profile.id, budget=profile.budget, industry=profile.industry,
                                   aggressiveness=profile.aggressiveness,
                                   bid=true_bid(signal, profile, context, float(noise[k]), vocabulary, config)))
    return settle(j, signal, instance.true_state, instance.time_bucket, instance.category, bids)


def simulate_dataset(config: MarketConfig, policy: SignalingPolicy, population: Sequence[AdvertiserProfile],
                     vocabulary: Optional[SignalVocabulary] = None,
                     instances: Optional[Sequence[AuctionInstance]] = None) -> List[AuctionRecord]:
    """
    Simulate the historical auction log under a signaling policy.

    Args:
        config: Market configuration (its seed keys every substream)
        policy: Signaling policy generating the signals
        population: Advertiser profiles indexed by id
        vocabulary: Signal vocabulary; defaults to the standard three signals
        instances: Pre-drawn auction instances; drawn from config when omitted

    Returns:
        One settled AuctionRecord per auction, in auction-id order

    Raises:
        PolicyError: The policy is not valid over the vocabulary and prior
    """
    vocabulary = vocabulary or SignalVocabulary.default()
    validate_policy(policy)
    if policy.n_states != len(config.prior) or policy.n_signals != len(vocabulary):
        raise DimensionMismatch(f"policy shape {policy.matrix.shape} does not match "
                                f"{len(config.prior)} states x {len(vocabulary)} signals")
    instances = instances if instances is not None else generate_instances(config)
    records = [simulate_auction(inst, policy, population, vocabulary, config) for inst in instances]
    logger.info(f"Simulated {len(records)} auctions")
    return records
