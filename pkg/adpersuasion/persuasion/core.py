"""
Probabilistic model of engagement states, priors, signaling policies and
Bayesian belief updating, plus the dominant-strategy bid of a second-price
auction.

All types are immutable after construction: their numpy buffers are marked
read-only, so instances can be shared freely between threads.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from adpersuasion.exceptions import (
    DimensionMismatch,
    NegativeEntry,
    NegativeValuation,
    NonFiniteEntry,
    PolicyError,
    RowSumViolation,
    ZeroProbabilitySignal,
)

logger = logging.getLogger(__name__)

# Computation tolerance (normalised outputs) and validation tolerance (inputs).
COMPUTE_TOL = 1e-12
VALIDATION_TOL = 1e-9

DEFAULT_STATE_LABELS = ("low", "medium", "high")
DEFAULT_MULTIPLIERS = (0.5, 1.0, 1.8)

ArrayLike = Union[Sequence[float], np.ndarray]


def _frozen(values: ArrayLike, ndim: int = 1) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_labels(labels: Tuple[str, ...], what: str) -> None:
    if not labels:
        raise PolicyError(f"{what} must not be empty")
    if len(set(labels)) != len(labels):
        raise PolicyError(f"{what} labels must be unique: {list(labels)}")


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Ordered engagement states with their valuation multipliers."""
    states: Tuple[str, ...]
    multipliers: np.ndarray

    def __init__(self, states: Sequence[str], multipliers: ArrayLike):
        labels = tuple(str(s) for s in states)
        _check_labels(labels, "state space")
        mult = _frozen(multipliers)
        if len(mult) != len(labels):
            raise DimensionMismatch(f"{len(labels)} states but {len(mult)} multipliers")
        if not np.all(np.isfinite(mult)):
            raise PolicyError(f"state multipliers must be finite: {mult.tolist()}")
        if np.any(mult <= 0):
            raise PolicyError("state multipliers must be strictly positive")
        if np.any(np.diff(mult) <= 0):
            raise PolicyError("state multipliers must increase strictly with state order")
        object.__setattr__(self, "states", labels)
        object.__setattr__(self, "multipliers", mult)

    def __len__(self) -> int:
        return len(self.states)

    @classmethod
    def default(cls) -> "StateSpace":
        return cls(DEFAULT_STATE_LABELS, DEFAULT_MULTIPLIERS)

    def index(self, label: str) -> int:
        return self.states.index(label)

    def to_dict(self) -> Dict[str, Any]:
        return {"states": list(self.states), "multipliers": self.multipliers.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StateSpace":
        return cls(data["states"], data["multipliers"])


@dataclass(frozen=True, eq=False)
class Prior:
    """Prior probability of each engagement state."""
    probs: np.ndarray

    def __init__(self, probs: ArrayLike):
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionMismatch("prior must be a non-empty vector")
        if not np.all(np.isfinite(arr)):
            raise PolicyError(f"prior has a non-finite entry: {arr.tolist()}")
        if np.any(arr < 0):
            raise PolicyError(f"prior has a negative entry: {arr.tolist()}")
        total = float(arr.sum())
        if abs(total - 1.0) > VALIDATION_TOL:
            raise PolicyError(f"prior sums to {total!r}, expected 1")
        object.__setattr__(self, "probs", _frozen(arr / total))

    def __len__(self) -> int:
        return len(self.probs)

    def check_states(self, states: StateSpace) -> None:
        if len(self) != len(states):
            raise DimensionMismatch(f"prior has {len(self)} entries for {len(states)} states")

    def to_dict(self) -> Dict[str, Any]:
        return {"probs": self.probs.tolist()}


@dataclass(frozen=True, eq=False)
class SignalVocabulary:
    """Ordered signal labels, each with the engagement multiplier it claims."""
    signals: Tuple[str, ...]
    face_values: np.ndarray

    def __init__(self, signals: Sequence[str], face_values: ArrayLike):
        labels = tuple(str(s) for s in signals)
        _check_labels(labels, "signal vocabulary")
        faces = _frozen(face_values)
        if len(faces) != len(labels):
            raise DimensionMismatch(f"{len(labels)} signals but {len(faces)} face values")
        if not np.all(np.isfinite(faces)):
            raise PolicyError(f"face values must be finite: {faces.tolist()}")
        object.__setattr__(self, "signals", labels)
        object.__setattr__(self, "face_values", faces)

    def __len__(self) -> int:
        return len(self.signals)

    @property
    def pooling_index(self) -> int:
        """Index of the signal used when every state is pooled (the middle one)."""
        return len(self.signals) // 2

    @classmethod
    def default(cls) -> "SignalVocabulary":
        return cls(DEFAULT_STATE_LABELS, DEFAULT_MULTIPLIERS)

    @classmethod
    def matching(cls, states: StateSpace) -> "SignalVocabulary":
        """One signal per state, labelled and valued like the state itself."""
        return cls(states.states, states.multipliers)

    def to_dict(self) -> Dict[str, Any]:
        return {"signals": list(self.signals), "face_values": self.face_values.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SignalVocabulary":
        return cls(data["signals"], data["face_values"])


@dataclass(frozen=True, eq=False)
class SignalingPolicy:
    """
    Matrix of conditional signal probabilities, one row per state.

    Construction only checks the shape; use validate_policy for the
    probability constraints.
    """
    matrix: np.ndarray

    def __init__(self, matrix: ArrayLike):
        object.__setattr__(self, "matrix", _frozen(matrix, ndim=2))

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_signals(self) -> int:
        return self.matrix.shape[1]

    def reachable_signals(self, prior: Optional[Prior] = None) -> np.ndarray:
        """Indices of signals with positive probability (under the prior if given)."""
        if prior is None:
            return np.flatnonzero(self.matrix.sum(axis=0) > 0)
        return np.flatnonzero(signal_marginal(self, prior) > 0)

    def to_dict(self) -> Dict[str, Any]:
        return {"matrix": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SignalingPolicy":
        return cls(data["matrix"])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalingPolicy):
            return NotImplemented
        return self.matrix.shape == other.matrix.shape and bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self) -> int:
        return hash((self.matrix.shape, self.matrix.tobytes()))


@dataclass(frozen=True, eq=False)
class Posterior:
    """Belief over states after observing a signal."""
    probs: np.ndarray

    def __init__(self, probs: ArrayLike):
        object.__setattr__(self, "probs", _frozen(probs))


@dataclass(frozen=True, eq=False)
class ValuationProfile:
    """Per-state valuation of one advertiser, in currency units."""
    values: np.ndarray

    def __init__(self, values: ArrayLike):
        arr = _frozen(values)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise NegativeValuation(f"valuations must be finite and non-negative: {arr.tolist()}")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)


def validate_policy(policy: SignalingPolicy,
                    states: Optional[StateSpace] = None,
                    vocabulary: Optional[SignalVocabulary] = None) -> None:
    """
    Check the probability constraints of a signaling policy.

    Args:
        policy: Policy to check
        states: Optional state space the rows must match
        vocabulary: Optional vocabulary the columns must match

    Raises:
        DimensionMismatch: Matrix shape disagrees with states or vocabulary
        NonFiniteEntry: First NaN or infinite entry in row-major order
        NegativeEntry: First negative entry in row-major order
        RowSumViolation: First row whose sum is off by more than 1e-9
    """
    matrix = policy.matrix
    if states is not None and matrix.shape[0] != len(states):
        raise DimensionMismatch(f"policy has {matrix.shape[0]} rows for {len(states)} states")
    if vocabulary is not None and matrix.shape[1] != len(vocabulary):
        raise DimensionMismatch(f"policy has {matrix.shape[1]} columns for {len(vocabulary)} signals")
    non_finite = np.argwhere(~np.isfinite(matrix))
    if len(non_finite):
        row, col = non_finite[0]
        raise NonFiniteEntry(int(row), int(col))
    negative = np.argwhere(matrix < 0)
    if len(negative):
        row, col = negative[0]
        raise NegativeEntry(int(row), int(col))
    sums = matrix.sum(axis=1)
    for row, total in enumerate(sums):
        if abs(total - 1.0) > VALIDATION_TOL:
            raise RowSumViolation(row, float(total))


def signal_marginal(policy: SignalingPolicy, prior: Prior) -> np.ndarray:
    """
    Marginal distribution of signals, the denominator of Bayes' rule.

    Args:
        policy: Valid signaling policy
        prior: Prior over states

    Returns:
        Probability of each signal, summing to one
    """
    validate_policy(policy)
    if policy.n_states != len(prior):
        raise DimensionMismatch(f"policy has {policy.n_states} rows, prior has {len(prior)}")
    marginal = prior.probs @ policy.matrix
    return marginal / marginal.sum()


def bayes_update(policy: SignalingPolicy, prior: Prior, signal: int) -> Posterior:
    """
    Posterior over states after observing ``signal``.

    Args:
        policy: Valid signaling policy
        prior: Common prior shared by every advertiser
        signal: Index of the observed signal

    Returns:
        Posterior belief

    Raises:
        ZeroProbabilitySignal: The signal never occurs under policy and prior
    """
    validate_policy(policy)
    if policy.n_states != len(prior):
        raise DimensionMismatch(f"policy has {policy.n_states} rows, prior has {len(prior)}")
    if not 0 <= signal < policy.n_signals:
        raise DimensionMismatch(f"signal index {signal} outside vocabulary of {policy.n_signals}")
    joint = policy.matrix[:, signal] * prior.probs
    marginal = joint.sum()
    if marginal <= 0:
        raise ZeroProbabilitySignal(signal)
    posterior = joint / marginal
    return Posterior(posterior / posterior.sum())


def expected_valuation(posterior: Posterior, valuations: Union[ValuationProfile, ArrayLike]) -> float:
    """
    Expected value of the impression under a posterior belief.

    Raises:
        DimensionMismatch: Posterior and valuations have different lengths
    """
    values = valuations.values if isinstance(valuations, ValuationProfile) else np.asarray(valuations, dtype=np.float64)
    if len(values) != len(posterior.probs):
        raise DimensionMismatch(f"posterior over {len(posterior.probs)} states, {len(values)} valuations")
    return float(posterior.probs @ values)


def optimal_bid(expected_value: float) -> float:
    """Truthful bid of a second-price auction: the expected valuation itself."""
    if not expected_value >= 0:
        raise NegativeValuation(f"expected valuation {expected_value!r} is not a non-negative number")
    return expected_value


def posterior_table(policy: SignalingPolicy, prior: Prior) -> Dict[int, Posterior]:
    """Posterior for every reachable signal, keyed by signal index."""
    return {int(s): bayes_update(policy, prior, int(s)) for s in policy.reachable_signals(prior)}
