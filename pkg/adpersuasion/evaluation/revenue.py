"""
Platform revenue under a signaling policy.

Three evaluation modes share one contract (policy -> total revenue):

* rational: bidders update beliefs by Bayes' rule and bid their expected
  valuation; revenue is computed exactly, without sampling.
* behavioral: bidders follow the simulated face-value bidding function.
* ml-counterfactual: bids come from the trained predictor.

The behavioral and ML evaluators precompute, for every evaluation auction and
every signal, the payment that auction would raise if that signal were sent.
A policy's expected revenue is then sum_j sum_s policy(s | state_j) * P_j(s).
Its sampled revenue draws one signal per auction from a shared uniform
(common random numbers), so every policy is compared on the same draws.
"""
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from adpersuasion.auction.engine import BidSet, run_auction
from adpersuasion.config import MarketConfig
from adpersuasion.data_processing.transformer import FeatureLayout
from adpersuasion.exceptions import DegenerateAuction, EmptyInput
from adpersuasion.market.records import AdvertiserProfile, AuctionInstance
from adpersuasion.market.synth import (
    draw_signal,
    generate_instances,
    signal_uniforms,
    true_bid,
    valuation_profile,
)
from adpersuasion.models.bid_predictor import BidPredictor
from adpersuasion.persuasion.core import (
    Prior,
    SignalingPolicy,
    SignalVocabulary,
    StateSpace,
    ValuationProfile,
    bayes_update,
    expected_valuation,
    optimal_bid,
    posterior_table,
    signal_marginal,
    validate_policy,
)
from adpersuasion.rng import substream

logger = logging.getLogger(__name__)

MODES = ("rational", "behavioral", "ml-counterfactual")

Bidder = Union[ValuationProfile, AdvertiserProfile]


def _valuations(population: Sequence[Bidder], states: StateSpace) -> List[ValuationProfile]:
    return [p if isinstance(p, ValuationProfile) else ValuationProfile(valuation_profile(p, states))
            for p in population]


def estimate_revenue_rational(policy: SignalingPolicy, population: Sequence[Bidder],
                              states: StateSpace, prior: Prior) -> float:
    """
    Exact expected payment of one auction among ``population`` with rational bidders.

    For each signal with positive probability every bidder bids its posterior
    expected valuation; the second price is weighted by the signal's marginal.

    Raises:
        EmptyInput: Empty population
    """
    if not population:
        raise EmptyInput("no bidders")
    validate_policy(policy, states)
    valuations = _valuations(population, states)
    marginal = signal_marginal(policy, prior)
    revenue = 0.0
    for s in policy.reachable_signals(prior):
        posterior = bayes_update(policy, prior, int(s))
        bids = BidSet((i, optimal_bid(expected_valuation(posterior, v))) for i, v in enumerate(valuations))
        revenue += float(marginal[s]) * run_auction(bids).payment
    return revenue


def _second_highest(bids: np.ndarray, axis: int) -> np.ndarray:
    """Second-highest value along ``axis``; 0 when there is a single bidder."""
    if bids.shape[axis] < 2:
        return np.zeros(np.delete(bids.shape, axis))
    return np.take(np.sort(bids, axis=axis), -2, axis=axis)


class RationalEvaluator:
    """
    Exact rational-bidder revenue summed over fixed auction instances,
    each conditioned on its true state.
    """
    mode = "rational"

    def __init__(self, instances: Sequence[AuctionInstance], population: Sequence[AdvertiserProfile],
                 states: StateSpace, prior: Prior):
        if not instances:
            raise EmptyInput("no evaluation instances")
        self.states = states
        self.prior = prior
        self.true_states = np.array([inst.true_state for inst in instances], dtype=np.int64)
        # (auction, participant, state) valuations
        self.values = np.array([[valuation_profile(population[p], states) for p in inst.participants]
                                for inst in instances], dtype=np.float64)

    @property
    def n_auctions(self) -> int:
        return len(self.true_states)

    def __call__(self, policy: SignalingPolicy) -> float:
        table = posterior_table(policy, self.prior)
        posteriors = np.zeros((policy.n_signals, len(self.states)))
        for s, post in table.items():
            posteriors[s] = post.probs
        bids = self.values @ posteriors.T
        payments = _second_highest(bids, axis=1)
        weights = policy.matrix[self.true_states]
        return float(np.sum(weights * payments))


class PayoffEvaluator:
    """Revenue from a precomputed (auction x signal) payment matrix."""
    mode = "behavioral"

    def __init__(self, payoffs: np.ndarray, true_states: np.ndarray, uniforms: np.ndarray, n_states: int):
        self.payoffs = payoffs
        self.true_states = true_states
        self.uniforms = uniforms
        self.n_states = n_states
        state_payoffs = np.zeros((n_states, payoffs.shape[1]))
        np.add.at(state_payoffs, true_states, payoffs)
        self.state_payoffs = state_payoffs

    @property
    def n_auctions(self) -> int:
        return self.payoffs.shape[0]

    def expected(self, policy: SignalingPolicy) -> float:
        """Expected total revenue, averaging over each auction's signal distribution."""
        return float(np.sum(self.state_payoffs * policy.matrix))

    def sampled_signals(self, policy: SignalingPolicy) -> np.ndarray:
        return np.array([draw_signal(policy.matrix[state], u)
                         for state, u in zip(self.true_states, self.uniforms)], dtype=np.int64)

    def sampled(self, policy: SignalingPolicy) -> float:
        """Total revenue with one common-random-number signal draw per auction."""
        signals = self.sampled_signals(policy)
        return float(np.sum(self.payoffs[np.arange(self.n_auctions), signals]))

    def __call__(self, policy: SignalingPolicy) -> float:
        return self.expected(policy)


def _participant_columns(instances: Sequence[AuctionInstance], population: Sequence[AdvertiserProfile]):
    ids = np.array([p for inst in instances for p in inst.participants], dtype=np.int64)
    sizes = np.array([len(inst.participants) for inst in instances], dtype=np.int64)
    budget = np.array([population[i].budget for i in ids])
    industry = np.array([population[i].industry for i in ids], dtype=np.int64)
    aggr = np.array([population[i].aggressiveness for i in ids])
    time_bucket = np.repeat([inst.time_bucket for inst in instances], sizes)
    category = np.repeat([inst.category for inst in instances], sizes)
    return ids, sizes, budget, industry, aggr, time_bucket, category


def _check_uniform_sizes(instances: Sequence[AuctionInstance]) -> int:
    sizes = {len(inst.participants) for inst in instances}
    if len(sizes) != 1:
        raise ValueError(f"evaluation instances must share a participant count, got {sorted(sizes)}")
    n = sizes.pop()
    for j, inst in enumerate(instances):
        if len(inst.participants) < 2:
            raise DegenerateAuction(j)
    return n


class CounterfactualEvaluator(PayoffEvaluator):
    """Payments predicted by the trained bid model for every (auction, signal)."""
    mode = "ml-counterfactual"

    def __init__(self, predictor: BidPredictor, instances: Sequence[AuctionInstance],
                 population: Sequence[AdvertiserProfile], seed: int, n_states: int):
        if not instances:
            raise EmptyInput("no evaluation instances")
        n = _check_uniform_sizes(instances)
        _, sizes, budget, industry, aggr, tb, cat = _participant_columns(instances, population)
        payoffs = np.zeros((len(instances), predictor.layout.n_signals))
        for s in range(predictor.layout.n_signals):
            bids = predictor.predict_rows(np.full(len(budget), s), budget, industry, aggr, tb, cat)
            payoffs[:, s] = _second_highest(bids.reshape(len(instances), n), axis=1)
        super().__init__(payoffs, np.array([inst.true_state for inst in instances], dtype=np.int64),
                         signal_uniforms(seed, [inst.auction_id for inst in instances]),
                         n_states)
        self.predictor = predictor


class BehavioralEvaluator(PayoffEvaluator):
    """Payments under the simulated face-value bidding function, noise shared across signals."""
    mode = "behavioral"

    def __init__(self, instances: Sequence[AuctionInstance], population: Sequence[AdvertiserProfile],
                 vocabulary: SignalVocabulary, states: StateSpace, market: MarketConfig, seed: int):
        if not instances:
            raise EmptyInput("no evaluation instances")
        _check_uniform_sizes(instances)
        payoffs = np.zeros((len(instances), len(vocabulary)))
        for j, inst in enumerate(instances):
            noise = (substream(seed, "noise", inst.auction_id).normal(0.0, market.noise_scale, len(inst.participants))
                     if market.noise_scale > 0 else np.zeros(len(inst.participants)))
            context = (inst.time_bucket, inst.category)
            for s in range(len(vocabulary)):
                bids = np.array([true_bid(s, population[p], context, float(noise[k]), vocabulary, market)
                                 for k, p in enumerate(inst.participants)])
                payoffs[j, s] = _second_highest(bids, axis=0)
        super().__init__(payoffs, np.array([inst.true_state for inst in instances], dtype=np.int64),
                         signal_uniforms(seed, [inst.auction_id for inst in instances]), len(states))


def evaluation_instances(market: MarketConfig, n_auctions: int, seed: int) -> List[AuctionInstance]:
    """Fresh auction instances for policy evaluation, drawn under ``seed``."""
    return generate_instances(dataclasses.replace(market, seed=seed), n_auctions)


def simulate_bids_under_policy(predictor: BidPredictor, instances: Sequence[AuctionInstance],
                               policy: SignalingPolicy, population: Sequence[AdvertiserProfile],
                               seed: int, layout: Optional[FeatureLayout] = None) -> List[BidSet]:
    """
    Predicted bids of every auction after drawing its signal from the policy.

    Signals use the shared per-auction uniforms of ``seed``.

    Raises:
        FeatureMismatch: ``layout`` disagrees with the predictor's manifest
    """
    predictor.check_layout(layout)
    validate_policy(policy)
    uniforms = signal_uniforms(seed, [inst.auction_id for inst in instances])
    signals = np.array([draw_signal(policy.matrix[inst.true_state], u) for inst, u in zip(instances, uniforms)],
                       dtype=np.int64)
    ids, sizes, budget, industry, aggr, tb, cat = _participant_columns(instances, population)
    bids = predictor.predict_rows(np.repeat(signals, sizes), budget, industry, aggr, tb, cat)
    bid_sets = []
    offset = 0
    for size in sizes:
        bid_sets.append(BidSet(zip(ids[offset:offset + size].tolist(), bids[offset:offset + size].tolist())))
        offset += size
    return bid_sets


def estimate_revenue_mc(bid_sets: Sequence[BidSet]) -> float:
    """
    Total second-price revenue over sampled auctions.

    Raises:
        DegenerateAuction: An auction with fewer than two bids
    """
    payments = np.zeros(len(bid_sets))
    for j, bids in enumerate(bid_sets):
        if len(bids) < 2:
            raise DegenerateAuction(j)
        payments[j] = run_auction(bids).payment
    return float(np.sum(payments))


def increase_percent(revenue: float, baseline: float) -> Optional[float]:
    """(revenue - baseline) / baseline * 100; None when the baseline is zero."""
    if baseline == 0:
        return None
    return (revenue - baseline) / baseline * 100.0


@dataclass(frozen=True)
class RevenueIncrease:
    policy: str
    baseline: str
    percent: Optional[float]


@dataclass
class RevenueReport:
    mode: str
    n_auctions: int
    seed: int
    totals: Dict[str, float]
    sampled_totals: Dict[str, float] = field(default_factory=dict)
    increases: List[RevenueIncrease] = field(default_factory=list)
    policies: Dict[str, List[List[float]]] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def mean_payment(self, name: str) -> float:
        return self.totals[name] / self.n_auctions if self.n_auctions else 0.0

    def increase(self, policy: str, baseline: str) -> Optional[float]:
        for inc in self.increases:
            if inc.policy == policy and inc.baseline == baseline:
                return inc.percent
        raise KeyError(f"no increase recorded for {policy} over {baseline}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "n_auctions": self.n_auctions,
            "seed": self.seed,
            "totals": dict(self.totals),
            "mean_payment": {name: self.mean_payment(name) for name in self.totals},
            "sampled_totals": dict(self.sampled_totals),
            "increases": [dataclasses.asdict(inc) for inc in self.increases],
            "policies": dict(self.policies),
            "metadata": dict(self.metadata),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_frame(self) -> pd.DataFrame:
        """One row per policy, plus its increase over every other policy."""
        rows = []
        for name, total in self.totals.items():
            row = {"policy": name, "total_revenue": total, "mean_payment": self.mean_payment(name),
                   "sampled_revenue": self.sampled_totals.get(name)}
            for inc in self.increases:
                if inc.policy == name:
                    row[f"increase_vs_{inc.baseline}_pct"] = inc.percent
            rows.append(row)
        return pd.DataFrame(rows)


def compare_policies(policies: Mapping[str, SignalingPolicy], evaluator,
                     seed: int, pairs: Optional[Sequence[Tuple[str, str]]] = None,
                     metadata: Optional[Dict[str, Any]] = None) -> RevenueReport:
    """
    Evaluate named policies on the evaluator's shared instances.

    Args:
        policies: Name -> policy, at least two
        evaluator: Policy -> revenue; PayoffEvaluator instances also report sampled totals
        seed: Evaluation seed recorded in the report
        pairs: (policy, baseline) increases to report; every ordered pair by default
        metadata: Extra provenance (config digest, training policy, ...)

    Returns:
        RevenueReport with totals and percentage increases
    """
    if len(policies) < 2:
        raise ValueError("compare_policies needs at least two policies")
    names = list(policies)
    totals = {name: float(evaluator(policies[name])) for name in names}
    sampled = {}
    if isinstance(evaluator, PayoffEvaluator):
        sampled = {name: evaluator.sampled(policies[name]) for name in names}
    pairs = pairs if pairs is not None else [(a, b) for a in names for b in names if a != b]
    increases = [RevenueIncrease(a, b, increase_percent(totals[a], totals[b])) for a, b in pairs]
    n_auctions = getattr(evaluator, "n_auctions", None)
    if n_auctions is None:
        n_auctions = len(getattr(evaluator, "true_states", ()))
    for name, total in totals.items():
        logger.info(f"Policy {name}: revenue {total:.4f}")
    return RevenueReport(mode=getattr(evaluator, "mode", "rational"), n_auctions=int(n_auctions), seed=seed,
                         totals=totals, sampled_totals=sampled, increases=increases,
                         policies={name: p.matrix.tolist() for name, p in policies.items()},
                         metadata=dict(metadata or {}))
