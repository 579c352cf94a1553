"""
Experiment configuration.

Configs are plain dataclasses. The JSON document carries a ``schema_version``
and is parsed strictly: unknown keys and invalid values raise ConfigError with
the dotted path of the offending field. Environment variables (loaded from a
.env file at package import) override file values; CLI flags override both.
"""
import dataclasses
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from adpersuasion.exceptions import AdPersuasionError, ConfigError
from adpersuasion.persuasion.core import Prior, SignalingPolicy, SignalVocabulary, StateSpace, validate_policy

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

SEARCH_MODES = ("two-state-grid", "partition-enumeration", "simplex-grid")
POLICY_KINDS = ("full", "none", "uniform", "matrix")

ENV_SEED = "ADPERSUASION_SEED"
ENV_OUT_DIR = "ADPERSUASION_OUT_DIR"
ENV_THREADS = "ADPERSUASION_THREADS"
ENV_LOG_LEVEL = "ADPERSUASION_LOG_LEVEL"


@dataclass
class MarketConfig:
    """Synthetic advertiser market, defaults reproduce the case study scale."""
    n_advertisers: int = 1000
    n_auctions: int = 10000
    participants_per_auction: int = 8
    prior: Tuple[float, ...] = (0.3, 0.5, 0.2)
    budget_mean: float = 10000.0
    budget_std: float = 2000.0
    budget_min: float = 100.0
    n_sectors: int = 5
    sector_anchors: Tuple[float, ...] = (3.0, 4.0, 5.0, 6.0, 7.0)
    noise_scale: float = 1.0
    bid_floor: float = 0.1
    bid_cap: float = 20.0
    n_time_buckets: int = 24
    n_categories: int = 10
    context_effect: float = 0.0
    seed: int = 42

    def validate(self, path: str = "market") -> None:
        for name in ("n_advertisers", "n_auctions", "participants_per_auction",
                     "n_sectors", "n_time_buckets", "n_categories"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{path}.{name}", "must be a positive integer")
        if self.participants_per_auction < 2:
            raise ConfigError(f"{path}.participants_per_auction", "an auction needs at least 2 participants")
        if self.participants_per_auction > self.n_advertisers:
            raise ConfigError(f"{path}.participants_per_auction", "exceeds the advertiser population")
        try:
            Prior(self.prior)
        except AdPersuasionError as e:
            raise ConfigError(f"{path}.prior", str(e)) from e
        if len(self.sector_anchors) != self.n_sectors:
            raise ConfigError(f"{path}.sector_anchors", f"needs {self.n_sectors} entries")
        if any(a <= 0 for a in self.sector_anchors):
            raise ConfigError(f"{path}.sector_anchors", "anchors must be positive")
        if self.budget_std < 0:
            raise ConfigError(f"{path}.budget_std", "must be non-negative")
        if self.noise_scale < 0:
            raise ConfigError(f"{path}.noise_scale", "must be non-negative")
        if not self.bid_floor < self.bid_cap:
            raise ConfigError(f"{path}.bid_floor", "floor must be below cap")
        if self.bid_floor < 0:
            raise ConfigError(f"{path}.bid_floor", "must be non-negative")
        if self.seed < 0:
            raise ConfigError(f"{path}.seed", "must be non-negative")


@dataclass
class SearchConfig:
    """Signaling-policy search settings."""
    mode: str = "simplex-grid"
    resolution: int = 21
    mc_auctions: int = 2000
    credibility: bool = True
    credibility_tolerance: float = 0.25
    seed: int = 0

    def validate(self, path: str = "search") -> None:
        if self.mode not in SEARCH_MODES:
            raise ConfigError(f"{path}.mode", f"must be one of {list(SEARCH_MODES)}")
        if self.resolution < 2:
            raise ConfigError(f"{path}.resolution", "must be at least 2")
        if self.mc_auctions <= 0:
            raise ConfigError(f"{path}.mc_auctions", "must be positive")
        if self.credibility_tolerance < 0:
            raise ConfigError(f"{path}.credibility_tolerance", "must be non-negative")


@dataclass
class PredictorConfig:
    """Bid-predictor training settings: grid, split and cross-validation."""
    learning_rates: Tuple[float, ...] = (0.01, 0.1, 0.2)
    max_depths: Tuple[int, ...] = (3, 5, 7)
    n_trees: Tuple[int, ...] = (100, 200, 500)
    min_samples_leaf: int = 20
    split_ratios: Tuple[float, float, float] = (0.70, 0.15, 0.15)
    cv_folds: int = 5
    reduced_grid: bool = False

    def validate(self, path: str = "predictor") -> None:
        for name in ("learning_rates", "max_depths", "n_trees"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"{path}.{name}", "grid axis must not be empty")
            if any(v <= 0 for v in values):
                raise ConfigError(f"{path}.{name}", "grid values must be positive")
        if self.min_samples_leaf <= 0:
            raise ConfigError(f"{path}.min_samples_leaf", "must be positive")
        if len(self.split_ratios) != 3 or abs(sum(self.split_ratios) - 1.0) > 1e-9 \
                or any(r < 0 for r in self.split_ratios):
            raise ConfigError(f"{path}.split_ratios", "must be three non-negative ratios summing to 1")
        if self.cv_folds < 2:
            raise ConfigError(f"{path}.cv_folds", "must be at least 2")

    def grid_axes(self) -> Tuple[Tuple[float, ...], Tuple[int, ...], Tuple[int, ...]]:
        """Grid axes, trimmed to two values each when the reduced CI grid is on."""
        if self.reduced_grid:
            return (tuple(self.learning_rates[-2:]), tuple(self.max_depths[:2]), tuple(self.n_trees[:2]))
        return tuple(self.learning_rates), tuple(self.max_depths), tuple(self.n_trees)


def _default_policies() -> Dict[str, Dict[str, Any]]:
    return {
        "full": {"kind": "full"},
        "none": {"kind": "none"},
        "exploration": {"kind": "uniform"},
    }


@dataclass
class ExperimentConfig:
    """Everything one seeded pipeline run needs."""
    market: MarketConfig = field(default_factory=MarketConfig)
    states: Dict[str, Any] = field(default_factory=lambda: StateSpace.default().to_dict())
    vocabulary: Dict[str, Any] = field(default_factory=lambda: SignalVocabulary.default().to_dict())
    policies: Dict[str, Dict[str, Any]] = field(default_factory=_default_policies)
    simulate_policy: str = "exploration"
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    search: SearchConfig = field(default_factory=lambda: SearchConfig(resolution=6, mc_auctions=10000))
    output_dir: str = "output"
    master_seed: int = 20240601
    threads: int = 1

    def __post_init__(self):
        self.market.seed = self.master_seed

    @property
    def state_space(self) -> StateSpace:
        return StateSpace.from_dict(self.states)

    @property
    def signal_vocabulary(self) -> SignalVocabulary:
        return SignalVocabulary.from_dict(self.vocabulary)

    @property
    def prior(self) -> Prior:
        return Prior(self.market.prior)

    def validate(self) -> None:
        """
        Validate every sub-config.

        Raises:
            ConfigError: With the dotted path of the first invalid field
        """
        self.market.validate("market")
        self.predictor.validate("predictor")
        self.search.validate("search")
        try:
            states = self.state_space
        except (AdPersuasionError, KeyError, TypeError) as e:
            raise ConfigError("states", str(e)) from e
        try:
            vocabulary = self.signal_vocabulary
        except (AdPersuasionError, KeyError, TypeError) as e:
            raise ConfigError("vocabulary", str(e)) from e
        if len(self.market.prior) != len(states):
            raise ConfigError("market.prior", f"needs one probability per state ({len(states)})")
        if not self.policies:
            raise ConfigError("policies", "at least one policy must be defined")
        for name, spec in self.policies.items():
            kind = spec.get("kind")
            if kind not in POLICY_KINDS:
                raise ConfigError(f"policies.{name}.kind", f"must be one of {list(POLICY_KINDS)}")
            extra = set(spec) - ({"kind", "matrix"} if kind == "matrix" else {"kind"})
            if extra:
                raise ConfigError(f"policies.{name}.{sorted(extra)[0]}", "unknown field")
            if kind == "matrix" and "matrix" not in spec:
                raise ConfigError(f"policies.{name}.matrix", "required for kind 'matrix'")
            if kind == "matrix":
                try:
                    validate_policy(SignalingPolicy(spec["matrix"]), states, vocabulary)
                except (AdPersuasionError, TypeError, ValueError) as e:
                    raise ConfigError(f"policies.{name}.matrix", str(e)) from e
        if self.simulate_policy not in self.policies:
            raise ConfigError("simulate_policy", f"unknown policy '{self.simulate_policy}'")
        if self.master_seed < 0:
            raise ConfigError("master_seed", "must be non-negative")
        if self.threads < 1:
            raise ConfigError("threads", "must be at least 1")

    def to_dict(self) -> Dict[str, Any]:
        market = dataclasses.asdict(self.market)
        market.pop("seed")
        return {
            "schema_version": SCHEMA_VERSION,
            "market": _jsonable(market),
            "states": self.states,
            "vocabulary": self.vocabulary,
            "policies": self.policies,
            "simulate_policy": self.simulate_policy,
            "predictor": _jsonable(dataclasses.asdict(self.predictor)),
            "search": _jsonable(dataclasses.asdict(self.search)),
            "output_dir": self.output_dir,
            "master_seed": self.master_seed,
            "threads": self.threads,
        }

    def stored_dict(self) -> Dict[str, Any]:
        """to_dict without ``output_dir`` and ``threads``, which do not change results."""
        data = self.to_dict()
        data.pop("output_dir")
        data.pop("threads")
        return data

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.stored_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()


def _jsonable(data: Dict[str, Any]) -> Dict[str, Any]:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in data.items()}


def _build_section(base, data: Any, path: str, exclude: Tuple[str, ...] = ()):
    """Overlay a partial section document onto the default section ``base``."""
    if not isinstance(data, dict):
        raise ConfigError(path, "must be an object")
    known = {f.name: f for f in dataclasses.fields(base) if f.name not in exclude}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown field")
    kwargs = {}
    for key, value in data.items():
        default = getattr(base, key)
        if isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigError(f"{path}.{key}", "must be a list")
            if any(isinstance(v, float) and not math.isfinite(v) for v in value):
                raise ConfigError(f"{path}.{key}", "entries must be finite numbers")
            value = tuple(value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{path}.{key}", "must be a boolean")
        elif isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{path}.{key}", "must be a number")
            if not math.isfinite(value):
                raise ConfigError(f"{path}.{key}", "must be finite")
            if isinstance(default, int) and not isinstance(default, bool) and value != int(value):
                raise ConfigError(f"{path}.{key}", "must be an integer")
            value = float(value) if isinstance(default, float) else int(value)
        elif isinstance(default, str) and not isinstance(value, str):
            raise ConfigError(f"{path}.{key}", "must be a string")
        kwargs[key] = value
    return dataclasses.replace(base, **kwargs)


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Parse and validate an experiment config document.

    Args:
        data: Parsed JSON document

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: Unknown field, wrong type or invalid value
    """
    if not isinstance(data, dict):
        raise ConfigError("$", "config document must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    allowed = {f.name for f in dataclasses.fields(ExperimentConfig)} | {"schema_version"}
    for key in data:
        if key not in allowed:
            raise ConfigError(key, "unknown field")

    defaults = ExperimentConfig()
    kwargs: Dict[str, Any] = {}
    if "market" in data:
        kwargs["market"] = _build_section(defaults.market, data["market"], "market", exclude=("seed",))
    if "predictor" in data:
        kwargs["predictor"] = _build_section(defaults.predictor, data["predictor"], "predictor")
    if "search" in data:
        kwargs["search"] = _build_section(defaults.search, data["search"], "search")
    for key in ("states", "vocabulary", "policies"):
        if key in data:
            if not isinstance(data[key], dict):
                raise ConfigError(key, "must be an object")
            kwargs[key] = data[key]
    for key, kind in (("simulate_policy", str), ("output_dir", str), ("master_seed", int), ("threads", int)):
        if key in data:
            value = data[key]
            if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
                raise ConfigError(key, "must be an integer")
            if kind is str and not isinstance(value, str):
                raise ConfigError(key, "must be a string")
            kwargs[key] = value
    if "states" in kwargs:
        extra = set(kwargs["states"]) - {"states", "multipliers"}
        if extra:
            raise ConfigError(f"states.{sorted(extra)[0]}", "unknown field")
    if "vocabulary" in kwargs:
        extra = set(kwargs["vocabulary"]) - {"signals", "face_values"}
        if extra:
            raise ConfigError(f"vocabulary.{sorted(extra)[0]}", "unknown field")

    config = ExperimentConfig(**kwargs)
    config.validate()
    return config


def load_config(path: Optional[str] = None) -> ExperimentConfig:
    """
    Load a config file, or the defaults when no path is given.

    Raises:
        ConfigError: Unreadable or invalid document
    """
    if path is None:
        config = ExperimentConfig()
        config.validate()
        return config
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError("$", f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError("$", f"invalid JSON: {e}") from e
    logger.info(f"Loaded experiment config from {path}")
    return config_from_dict(data)


def apply_overrides(config: ExperimentConfig, seed: Optional[int] = None,
                    out_dir: Optional[str] = None, threads: Optional[int] = None) -> ExperimentConfig:
    """
    Apply environment and CLI overrides. CLI values win over the environment.

    Returns:
        A new, validated ExperimentConfig
    """
    env_seed = os.environ.get(ENV_SEED)
    env_out = os.environ.get(ENV_OUT_DIR)
    env_threads = os.environ.get(ENV_THREADS)
    try:
        if seed is None and env_seed:
            seed = int(env_seed)
        if threads is None and env_threads:
            threads = int(env_threads)
    except ValueError as e:
        raise ConfigError("environment", f"invalid integer override: {e}") from e
    if out_dir is None and env_out:
        out_dir = env_out

    changes: Dict[str, Any] = {}
    if seed is not None:
        changes["master_seed"] = seed
    if out_dir is not None:
        changes["output_dir"] = out_dir
    if threads is not None:
        changes["threads"] = threads
    if not changes:
        return config
    updated = dataclasses.replace(config, market=dataclasses.replace(config.market), **changes)
    updated.validate()
    return updated

