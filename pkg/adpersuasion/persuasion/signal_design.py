"""
Canonical signaling policies and the search for a revenue-maximizing policy.

The search is exhaustive over a finite candidate set: the canonical full and
no-disclosure policies plus a mode-specific family (a two-state (alpha, beta)
grid, every set partition of the state space, or a grid over the simplex of
each policy row).
"""
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from adpersuasion.config import SearchConfig
from adpersuasion.exceptions import (
    ConfigError,
    EmptyCandidateSet,
    PolicyError,
    StateSpaceTooLarge,
    VocabularyTooSmall,
    WrongStateCount,
)
from adpersuasion.persuasion.core import (
    Prior,
    SignalingPolicy,
    SignalVocabulary,
    StateSpace,
    validate_policy,
)

logger = logging.getLogger(__name__)

MAX_PARTITION_STATES = 4
MAX_GRID_CANDIDATES = 2_000_000

Evaluator = Callable[[SignalingPolicy], float]


@dataclass(frozen=True)
class PolicyCandidate:
    """A policy together with how it was constructed."""
    policy: SignalingPolicy
    tag: str
    params: Dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def description(self) -> str:
        if not self.params:
            return self.tag
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.tag}({inner})"


@dataclass(frozen=True)
class AuditEntry:
    candidate: PolicyCandidate
    revenue: float
    feasible: bool
    credibility_gap: float


@dataclass
class OptimizationResult:
    best: PolicyCandidate
    revenue: float
    audit: List[AuditEntry]

    def audit_frame(self) -> pd.DataFrame:
        """Audit trail as a table: description, parameters, revenue, feasibility."""
        return audit_frame(self.audit)


# --- canonical policies -----------------------------------------------------

def full_disclosure(states: StateSpace, vocabulary: SignalVocabulary) -> SignalingPolicy:
    """
    Reveal the state: state k always sends signal k.

    Raises:
        VocabularyTooSmall: Fewer signals than states
    """
    if len(vocabulary) < len(states):
        raise VocabularyTooSmall(f"{len(states)} states need at least as many signals, got {len(vocabulary)}")
    matrix = np.zeros((len(states), len(vocabulary)))
    matrix[np.arange(len(states)), np.arange(len(states))] = 1.0
    return SignalingPolicy(matrix)


def no_disclosure(states: StateSpace, vocabulary: SignalVocabulary) -> SignalingPolicy:
    """Send the pooling signal in every state."""
    matrix = np.zeros((len(states), len(vocabulary)))
    matrix[:, vocabulary.pooling_index] = 1.0
    return SignalingPolicy(matrix)


def uniform_policy(states: StateSpace, vocabulary: SignalVocabulary) -> SignalingPolicy:
    """Exploration policy: every signal equally likely, independent of the state."""
    return SignalingPolicy(np.full((len(states), len(vocabulary)), 1.0 / len(vocabulary)))


def partial_two_state(alpha: float, beta: float, states: Optional[StateSpace] = None) -> SignalingPolicy:
    """
    Randomized two-state policy: s1 is sent with probability alpha in the low
    state and beta in the high state.

    Raises:
        WrongStateCount: The state space does not have exactly two states
        PolicyError: alpha or beta outside [0, 1]
    """
    if states is not None and len(states) != 2:
        raise WrongStateCount(f"the (alpha, beta) scheme needs 2 states, got {len(states)}")
    for name, value in (("alpha", alpha), ("beta", beta)):
        if not 0.0 <= value <= 1.0:
            raise PolicyError(f"{name}={value!r} is not a probability")
    return SignalingPolicy([[alpha, 1.0 - alpha], [beta, 1.0 - beta]])


def policy_from_spec(spec: Dict[str, Any], states: StateSpace, vocabulary: SignalVocabulary) -> SignalingPolicy:
    """Build a policy from its config entry ({"kind": full|none|uniform|matrix})."""
    kind = spec.get("kind")
    if kind == "full":
        return full_disclosure(states, vocabulary)
    if kind == "none":
        return no_disclosure(states, vocabulary)
    if kind == "uniform":
        return uniform_policy(states, vocabulary)
    if kind == "matrix":
        policy = SignalingPolicy(spec["matrix"])
        validate_policy(policy, states, vocabulary)
        return policy
    raise PolicyError(f"unknown policy kind {kind!r}")


# --- credibility ------------------------------------------------------------

def expected_multipliers(policy: SignalingPolicy, prior: Prior, states: StateSpace) -> np.ndarray:
    """
    Posterior-expected engagement multiplier of every signal; NaN for
    signals that never occur.
    """
    joint = policy.matrix * prior.probs[:, None]
    mass = joint.sum(axis=0)
    weighted = joint.T @ states.multipliers
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mass > 0, weighted / np.where(mass > 0, mass, 1.0), np.nan)


def credibility_gap(policy: SignalingPolicy, prior: Prior, states: StateSpace,
                    vocabulary: SignalVocabulary) -> float:
    """Largest |posterior-expected multiplier - face value| over reachable signals."""
    expected = expected_multipliers(policy, prior, states)
    reachable = ~np.isnan(expected)
    return float(np.max(np.abs(expected[reachable] - vocabulary.face_values[reachable])))


def is_credible(policy: SignalingPolicy, prior: Prior, states: StateSpace,
                vocabulary: SignalVocabulary, tolerance: float) -> bool:
    return credibility_gap(policy, prior, states, vocabulary) <= tolerance + 1e-12


# --- candidate families -----------------------------------------------------

def set_partitions(n: int) -> Iterator[List[List[int]]]:
    """All set partitions of range(n), via restricted growth strings, in lexicographic order."""
    def grow(prefix: List[int], top: int):
        if len(prefix) == n:
            blocks: List[List[int]] = [[] for _ in range(top + 1)]
            for item, block in enumerate(prefix):
                blocks[block].append(item)
            yield blocks
            return
        for block in range(top + 2):
            yield from grow(prefix + [block], max(top, block))

    if n == 0:
        return
    yield from grow([0], 0)


def _label_blocks(blocks: List[List[int]], states: StateSpace, vocabulary: SignalVocabulary,
                  prior: Optional[Prior]) -> Optional[Tuple[int, ...]]:
    """
    Assign each block a distinct signal: blocks in ascending order of their
    expected multiplier take signals in ascending index order, choosing the
    assignment with the smallest total face-value gap.
    """
    weights = prior.probs if prior is not None else np.ones(len(states))
    means = []
    for block in blocks:
        w = weights[block]
        mult = states.multipliers[block]
        means.append(float(w @ mult / w.sum()) if w.sum() > 0 else float(mult.mean()))
    if len(blocks) > len(vocabulary):
        return None
    order = sorted(range(len(blocks)), key=lambda b: (means[b], b))
    best, best_cost = None, np.inf
    for signals in itertools.combinations(range(len(vocabulary)), len(blocks)):
        cost = sum(abs(means[b] - vocabulary.face_values[s]) for b, s in zip(order, signals))
        if cost < best_cost - 1e-12:
            best, best_cost = signals, cost
    labels = [0] * len(blocks)
    for b, s in zip(order, best):
        labels[b] = s
    return tuple(labels)


def enumerate_partition_policies(states: StateSpace, vocabulary: SignalVocabulary,
                                 prior: Optional[Prior] = None) -> List[PolicyCandidate]:
    """
    One deterministic policy per set partition of the states.

    Raises:
        StateSpaceTooLarge: More than four states
    """
    if len(states) > MAX_PARTITION_STATES:
        raise StateSpaceTooLarge(f"partition enumeration supports at most {MAX_PARTITION_STATES} states")
    candidates = []
    for blocks in set_partitions(len(states)):
        labels = _label_blocks(blocks, states, vocabulary, prior)
        if labels is None:
            logger.debug(f"Skipping partition {blocks}: more blocks than signals")
            continue
        matrix = np.zeros((len(states), len(vocabulary)))
        for block, signal in zip(blocks, labels):
            matrix[block, signal] = 1.0
        grouping = "|".join("+".join(states.states[i] for i in block) for block in blocks)
        candidates.append(PolicyCandidate(SignalingPolicy(matrix), "partition",
                                          {"grouping": grouping,
                                           "signals": "|".join(vocabulary.signals[s] for s in labels)}))
    return candidates


def two_state_grid(resolution: int, states: Optional[StateSpace] = None) -> List[PolicyCandidate]:
    """resolution x resolution grid over (alpha, beta) in [0, 1]^2."""
    axis = np.linspace(0.0, 1.0, resolution)
    return [PolicyCandidate(partial_two_state(float(a), float(b), states), "partial",
                            {"alpha": float(a), "beta": float(b)})
            for a in axis for b in axis]


def _row_compositions(steps: int, n_signals: int) -> np.ndarray:
    rows = []
    for cuts in itertools.combinations(range(steps + n_signals - 1), n_signals - 1):
        bounds = (-1,) + cuts + (steps + n_signals - 1,)
        rows.append([bounds[i + 1] - bounds[i] - 1 for i in range(n_signals)])
    return np.array(rows, dtype=np.float64) / steps


def simplex_grid(states: StateSpace, vocabulary: SignalVocabulary, resolution: int) -> List[PolicyCandidate]:
    """
    Every policy whose rows lie on the simplex grid with step 1/(resolution-1).

    Raises:
        ConfigError: The grid would exceed MAX_GRID_CANDIDATES policies
    """
    rows = _row_compositions(resolution - 1, len(vocabulary))
    total = len(rows) ** len(states)
    if total > MAX_GRID_CANDIDATES:
        raise ConfigError("search.resolution", f"simplex grid would hold {total} policies")
    candidates = []
    for combo in itertools.product(range(len(rows)), repeat=len(states)):
        candidates.append(PolicyCandidate(SignalingPolicy(rows[list(combo)]), "grid-point",
                                          {"rows": list(combo)}))
    return candidates


def build_candidates(states: StateSpace, vocabulary: SignalVocabulary, search: SearchConfig,
                     prior: Optional[Prior] = None) -> List[PolicyCandidate]:
    """Canonical policies followed by the family selected by ``search.mode``."""
    candidates = [PolicyCandidate(full_disclosure(states, vocabulary), "full"),
                  PolicyCandidate(no_disclosure(states, vocabulary), "none")]
    if search.mode == "two-state-grid":
        if len(states) != 2 or len(vocabulary) != 2:
            raise WrongStateCount("two-state grid needs exactly 2 states and 2 signals")
        candidates += two_state_grid(search.resolution, states)
    elif search.mode == "partition-enumeration":
        candidates += enumerate_partition_policies(states, vocabulary, prior)
    elif search.mode == "simplex-grid":
        candidates += simplex_grid(states, vocabulary, search.resolution)
    else:
        raise ConfigError("search.mode", f"unknown mode {search.mode!r}")
    return candidates


# --- optimization -----------------------------------------------------------

def _reachable_count(policy: SignalingPolicy, prior: Optional[Prior]) -> int:
    weights = prior.probs if prior is not None else np.ones(policy.n_states)
    return int(np.count_nonzero(weights @ policy.matrix > 0))


def optimize_policy(evaluator: Evaluator, search: SearchConfig,
                    candidates: Optional[Sequence[PolicyCandidate]] = None,
                    states: Optional[StateSpace] = None,
                    vocabulary: Optional[SignalVocabulary] = None,
                    prior: Optional[Prior] = None,
                    threads: int = 1) -> OptimizationResult:
    """
    Evaluate every candidate and return the revenue-maximal feasible one.

    Args:
        evaluator: Maps a policy to its (deterministic) revenue
        search: Search settings; ``credibility`` filters candidates whose
            signals stray from their face value by more than the tolerance
        candidates: Explicit candidate set; built from ``search`` when omitted
        states: State space (needed to build candidates or check credibility)
        vocabulary: Signal vocabulary (likewise)
        prior: Common prior (credibility and reachability)
        threads: Worker threads for candidate evaluation

    Returns:
        Best candidate, its revenue and the audit trail in candidate order.
        Ties go to fewer reachable signals, then the lexicographically
        smallest matrix.

    Raises:
        EmptyCandidateSet: No candidates, or none feasible
    """
    if candidates is None:
        if states is None or vocabulary is None:
            raise ValueError("states and vocabulary are required to build candidates")
        candidates = build_candidates(states, vocabulary, search, prior)
    candidates = list(candidates)
    if not candidates:
        raise EmptyCandidateSet("no candidate policies to evaluate")
    check_credibility = search.credibility and None not in (states, vocabulary, prior)
    if search.credibility and not check_credibility:
        logger.warning("Credibility filter requested without states/vocabulary/prior; skipping it")

    logger.info(f"Evaluating {len(candidates)} candidate policies ({search.mode})")
    policies = [c.policy for c in candidates]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            revenues = list(pool.map(evaluator, policies))
    else:
        revenues = [evaluator(p) for p in policies]

    audit = []
    for candidate, revenue in zip(candidates, revenues):
        gap = credibility_gap(candidate.policy, prior, states, vocabulary) if check_credibility else 0.0
        feasible = (not check_credibility) or gap <= search.credibility_tolerance + 1e-12
        audit.append(AuditEntry(candidate, float(revenue), feasible, gap))

    feasible_entries = [e for e in audit if e.feasible]
    if not feasible_entries:
        raise EmptyCandidateSet("no candidate satisfies the credibility constraint")
    best = min(feasible_entries,
               key=lambda e: (-e.revenue, _reachable_count(e.candidate.policy, prior),
                              e.candidate.policy.matrix.ravel().tolist()))
    logger.info(f"Best policy {best.candidate.description} with revenue {best.revenue:.4f}")
    return OptimizationResult(best=best.candidate, revenue=best.revenue, audit=audit)


def audit_frame(audit: Sequence[AuditEntry]) -> pd.DataFrame:
    rows = []
    for entry in audit:
        params = dict(entry.candidate.params)
        params["matrix"] = entry.candidate.policy.matrix.tolist()
        rows.append({"description": entry.candidate.description,
                     "tag": entry.candidate.tag,
                     "parameters": json.dumps(params, separators=(",", ":")),
                     "revenue": entry.revenue,
                     "credibility_gap": entry.credibility_gap,
                     "feasible": entry.feasible})
    return pd.DataFrame(rows, columns=["description", "tag", "parameters", "revenue",
                                       "credibility_gap", "feasible"])
