"""
Command-line pipeline: generate -> simulate -> train -> optimize, plus
ledger verification and manifest reporting.

Every stage reads its inputs from, and writes its artifacts to, the run's
output directory. Artifacts carry no timestamps, so reruns under the same
master seed are byte-identical.
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from adpersuasion.auction.engine import empirical_bid_cdf
from adpersuasion.config import ENV_LOG_LEVEL, ExperimentConfig, apply_overrides, load_config
from adpersuasion.data_processing.splitter import concat_parts, split_dataset
from adpersuasion.data_processing.transformer import FeatureLayout, build_features
from adpersuasion.data_processing.validator import DataValidator, raise_on_errors
from adpersuasion.evaluation.residuals import residual_analysis
from adpersuasion.evaluation.revenue import (
    MODES,
    BehavioralEvaluator,
    CounterfactualEvaluator,
    RationalEvaluator,
    compare_policies,
    evaluation_instances,
)
from adpersuasion.exceptions import (
    AdPersuasionError,
    ConfigError,
    LedgerError,
    MissingInputError,
    OutcomeMismatch,
    UnreadableRecord,
)
from adpersuasion.ledger.chain import build_ledger, ledger_from_jsonl, ledger_to_jsonl, replay, verify_chain
from adpersuasion.market.records import (
    instances_from_jsonl,
    instances_to_jsonl,
    population_from_frame,
    population_to_frame,
    records_to_frame,
)
from adpersuasion.market.synth import generate_advertisers, generate_instances, simulate_dataset
from adpersuasion.models.bid_predictor import BidPredictor
from adpersuasion.models.tuning import (
    hyperparameter_grid,
    k_fold_cv,
    leaderboard_frame,
    regression_metrics,
    tune_hyperparameters,
)
from adpersuasion.persuasion.signal_design import (
    full_disclosure,
    no_disclosure,
    optimize_policy,
    policy_from_spec,
)
from adpersuasion.rng import derive_seed, substream
from adpersuasion.storage.file_storage import FileStorage
from adpersuasion.storage.manifest import (
    MANIFEST_FILE,
    build_manifest,
    load_manifest,
    save_config_copy,
    stored_config_digest,
)

logger = logging.getLogger(__name__)

POPULATION_FILE = "population.csv"
INSTANCES_FILE = "instances.jsonl"
DATASET_FILE = "dataset.csv"
LEDGER_FILE = "ledger.jsonl"
BID_CDF_FILE = "bid_cdf.csv"
MODEL_FILE = "model.json"
METRICS_FILE = "metrics.json"
LEADERBOARD_FILE = "leaderboard.csv"
RESIDUAL_DECILES_FILE = "residual_deciles.csv"
RESIDUAL_HISTOGRAM_FILE = "residual_histogram.csv"
REPORT_JSON_FILE = "revenue_report.json"
REPORT_CSV_FILE = "revenue_report.csv"
AUDIT_FILE = "policy_audit.csv"
SURFACE_FILE = "revenue_surface.csv"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_VERIFY = 4


def _storage(config: ExperimentConfig) -> FileStorage:
    return FileStorage(config.output_dir)


def _load_population(storage: FileStorage, config: ExperimentConfig):
    df = storage.load_dataframe(POPULATION_FILE)
    raise_on_errors(DataValidator(config.market.bid_floor, config.market.bid_cap,
                                  len(config.signal_vocabulary), config.market.n_sectors).validate_population(df))
    return population_from_frame(df)


def cmd_generate(config: ExperimentConfig) -> Dict[str, Any]:
    """
    Draw the advertiser population and the auction instances.

    Writes population.csv and instances.jsonl.

    Returns:
        Summary statistics of the population
    """
    storage = _storage(config)
    population = generate_advertisers(config.market)
    instances = generate_instances(config.market)
    frame = population_to_frame(population)
    storage.save_dataframe(frame, POPULATION_FILE)
    storage.write_text(instances_to_jsonl(instances), INSTANCES_FILE)
    save_config_copy(storage, config)

    states = np.bincount([inst.true_state for inst in instances], minlength=len(config.market.prior))
    summary = {
        "n_advertisers": len(population),
        "n_auctions": len(instances),
        "budget_mean": float(frame["budget"].mean()),
        "budget_std": float(frame["budget"].std(ddof=0)),
        "aggressiveness_mean": float(frame["aggressiveness"].mean()),
        "industry_counts": np.bincount(frame["industry"], minlength=config.market.n_sectors).tolist(),
        "state_frequencies": (states / max(len(instances), 1)).tolist(),
    }
    build_manifest(storage, config, metrics={"generate": summary})
    return summary


def cmd_simulate(config: ExperimentConfig, policy_name: Optional[str] = None) -> Dict[str, Any]:
    """
    Simulate the historical dataset under a named policy and write its ledger.

    Writes dataset.csv, ledger.jsonl and the per-signal bid CDF table. The
    ledger is read back from disk, verified and replayed before returning.

    Raises:
        MissingInputError: generate has not been run
        ConfigError: Unknown policy name
        LedgerError: The written ledger does not verify
    """
    storage = _storage(config)
    name = policy_name or config.simulate_policy
    if name not in config.policies:
        raise ConfigError("simulate_policy", f"unknown policy '{name}'")
    population = _load_population(storage, config)
    instances = instances_from_jsonl(storage.read_text(INSTANCES_FILE))
    states, vocabulary = config.state_space, config.signal_vocabulary
    policy = policy_from_spec(config.policies[name], states, vocabulary)

    logger.info(f"Simulating {len(instances)} auctions under policy '{name}'")
    records = simulate_dataset(config.market, policy, population, vocabulary, instances)
    dataset = records_to_frame(records)
    storage.save_dataframe(dataset, DATASET_FILE)

    ledger = build_ledger(records)
    storage.write_text(ledger_to_jsonl(ledger), LEDGER_FILE)
    written = ledger_from_jsonl(storage.read_bytes(LEDGER_FILE))
    check = verify_chain(written)
    if not check.ok:
        logger.error(f"Written ledger fails verification at entry {check.first_bad_index}: {check.reason}")
        raise LedgerError(f"written ledger fails verification at entry {check.first_bad_index}")
    replay(written)

    cdf_rows = []
    for s, label in enumerate(vocabulary.signals):
        bids = dataset.loc[dataset["signal"] == s, "bid"].to_numpy()
        if bids.size == 0:
            continue
        cdf_rows.extend((s, label, b, f) for b, f in empirical_bid_cdf(bids).table())
    storage.save_dataframe(pd.DataFrame(cdf_rows, columns=["signal", "label", "bid", "cdf"]), BID_CDF_FILE)

    signals = np.bincount(dataset.groupby("auction_id")["signal"].first(), minlength=len(vocabulary))
    bids = dataset["bid"]
    summary = {
        "policy": name,
        "n_auctions": len(records),
        "n_bids": int(len(dataset)),
        "bid_mean": float(bids.mean()),
        "bid_std": float(bids.std(ddof=0)),
        "bid_min": float(bids.min()),
        "bid_max": float(bids.max()),
        "signal_frequencies": (signals / max(len(records), 1)).tolist(),
        "total_payment": float(np.sum([r.payment for r in records])),
    }
    save_config_copy(storage, config)
    build_manifest(storage, config, ledger_head=ledger.head_hash, metrics={"simulate": summary})
    return summary


def cmd_train(config: ExperimentConfig) -> Dict[str, Any]:
    """
    Split, grid-search, cross-validate and fit the bid predictor.

    The final model is refit on train + validation with the best
    hyperparameters and scored once on the test part.

    Raises:
        MissingInputError: simulate has not been run
    """
    storage = _storage(config)
    dataset = storage.load_dataframe(DATASET_FILE)
    market = config.market
    layout = FeatureLayout(len(config.signal_vocabulary), market.n_sectors)
    bounds = (market.bid_floor, market.bid_cap)

    features, targets = build_features(dataset, layout)
    split = split_dataset(features, targets, config.predictor.split_ratios,
                          rng=substream(config.master_seed, "split"))
    grid = hyperparameter_grid(config.predictor)
    best, leaderboard = tune_hyperparameters(split.train, split.val, grid, bounds, threads=config.threads)
    cv = k_fold_cv(split.train, config.predictor.cv_folds, best, bounds)

    final_data = concat_parts(split.train, split.val) if len(split.val) else split.train
    predictor = BidPredictor.train(final_data.features, final_data.targets, best, layout, bounds)
    test_metrics = regression_metrics(predictor.predict(split.test.features), split.test.targets)
    predictor.record_metrics(test_metrics.rmse, test_metrics.mae, test_metrics.r_squared)
    residuals = residual_analysis(predictor, split.test)

    storage.write_text(predictor.to_json(), MODEL_FILE)
    storage.save_dataframe(leaderboard_frame(leaderboard), LEADERBOARD_FILE)
    storage.save_dataframe(residuals.deciles_frame(), RESIDUAL_DECILES_FILE)
    storage.save_dataframe(residuals.histogram_frame(), RESIDUAL_HISTOGRAM_FILE)
    metrics = {
        "hyperparams": best.to_dict(),
        "split_sizes": {"train": len(split.train), "val": len(split.val), "test": len(split.test)},
        "validation_rmse": leaderboard[0].val_rmse,
        "cross_validation": cv.to_dict(),
        "test": test_metrics.to_dict(),
        "noise_scale": market.noise_scale,
        "feature_importance": predictor.model.feature_importance(),
        "training_loss_final": predictor.model.training_loss[-1] if predictor.model.training_loss else None,
        "residuals": residuals.to_dict(),
    }
    storage.save_json(metrics, METRICS_FILE)
    logger.info(f"Test RMSE {test_metrics.rmse:.4f}, R^2 {test_metrics.r_squared}")

    summary = {"hyperparams": best.to_dict(), "test": test_metrics.to_dict(), "cv_mean_rmse": cv.mean}
    save_config_copy(storage, config)
    build_manifest(storage, config, metrics={"train": summary})
    return summary


def _evaluator(config: ExperimentConfig, storage: FileStorage, mode: str, instances, population, seed: int):
    states = config.state_space
    if mode == "ml-counterfactual":
        predictor = BidPredictor.from_json(storage.read_text(MODEL_FILE))
        predictor.check_layout(FeatureLayout(len(config.signal_vocabulary), config.market.n_sectors))
        return CounterfactualEvaluator(predictor, instances, population, seed, len(states))
    if mode == "behavioral":
        return BehavioralEvaluator(instances, population, config.signal_vocabulary, states, config.market, seed)
    return RationalEvaluator(instances, population, states, config.prior)


def cmd_optimize(config: ExperimentConfig, mode: str = "ml-counterfactual") -> Dict[str, Any]:
    """
    Search for the revenue-maximizing policy and compare it with full and no disclosure.

    All three are evaluated on the same fresh auction instances and signal
    uniforms, drawn under a seed derived from the master seed and the
    search seed.

    Raises:
        MissingInputError: No trained model (ml-counterfactual) or no population
    """
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {list(MODES)}")
    storage = _storage(config)
    states, vocabulary, prior = config.state_space, config.signal_vocabulary, config.prior
    if mode == "ml-counterfactual":
        storage.require(MODEL_FILE)
    population = _load_population(storage, config)
    seed = derive_seed(config.master_seed, "search", config.search.seed)
    instances = evaluation_instances(config.market, config.search.mc_auctions, seed)
    evaluator = _evaluator(config, storage, mode, instances, population, seed)

    result = optimize_policy(evaluator, config.search, states=states, vocabulary=vocabulary,
                             prior=prior, threads=config.threads)
    policies = {"full": full_disclosure(states, vocabulary),
                "none": no_disclosure(states, vocabulary),
                "opt": result.best.policy}
    metadata = {
        "config_digest": config.digest(),
        "master_seed": config.master_seed,
        "search_mode": config.search.mode,
        "credibility": config.search.credibility,
        "credibility_tolerance": config.search.credibility_tolerance,
        "best_candidate": result.best.description,
        "n_candidates": len(result.audit),
        "training_policy": config.simulate_policy,
    }
    report = compare_policies(policies, evaluator, seed,
                              pairs=[("opt", "full"), ("opt", "none"), ("none", "full")],
                              metadata=metadata)
    storage.write_text(report.to_json(), REPORT_JSON_FILE)
    storage.save_dataframe(report.to_frame(), REPORT_CSV_FILE)
    audit = result.audit_frame()
    storage.save_dataframe(audit, AUDIT_FILE)
    if config.search.mode == "two-state-grid":
        rows = [{"alpha": e.candidate.params["alpha"], "beta": e.candidate.params["beta"],
                 "revenue": e.revenue, "feasible": e.feasible}
                for e in result.audit if e.candidate.tag == "partial"]
        storage.save_dataframe(pd.DataFrame(rows, columns=["alpha", "beta", "revenue", "feasible"]), SURFACE_FILE)

    summary = {"mode": report.mode, "totals": report.totals,
               "increases": {f"{i.policy}_vs_{i.baseline}": i.percent for i in report.increases},
               "best_candidate": result.best.description}
    save_config_copy(storage, config)
    build_manifest(storage, config, metrics={"optimize": summary})
    return summary


def cmd_verify(ledger_path: str) -> int:
    """
    Verify the hash chain of a ledger file and replay its auctions.

    When a run manifest sits next to the ledger, the head hash is also
    checked against it, which catches truncation.

    Returns:
        EXIT_OK, or EXIT_VERIFY with the first failure printed

    Raises:
        MissingInputError: The ledger file does not exist
    """
    if not os.path.isfile(ledger_path):
        raise MissingInputError(ledger_path)
    storage = FileStorage(os.path.dirname(ledger_path) or ".")
    ledger = ledger_from_jsonl(storage.read_bytes(os.path.basename(ledger_path)))
    check = verify_chain(ledger)
    if not check.ok:
        print(f"FAILED: entry {check.first_bad_index}: {check.reason}")
        return EXIT_VERIFY
    try:
        replay(ledger)
    except OutcomeMismatch as e:
        print(f"FAILED: replay of auction {e.auction_id} does not match its stored outcome")
        return EXIT_VERIFY
    except UnreadableRecord as e:
        print(f"FAILED: entry {e.index}: record is not a readable auction")
        return EXIT_VERIFY
    manifest = load_manifest(storage) if storage.exists(MANIFEST_FILE) else None
    if manifest is not None and manifest.ledger_head and manifest.ledger_head != ledger.head_hash:
        print(f"FAILED: head hash {ledger.head_hash} differs from the manifest ({manifest.ledger_head})")
        return EXIT_VERIFY
    print(f"OK: {len(ledger)} entries, head {ledger.head_hash}")
    return EXIT_OK


def cmd_report(config: ExperimentConfig) -> Dict[str, Any]:
    """Rebuild the run manifest from the output directory and return it."""
    storage = _storage(config)
    storage.require(MANIFEST_FILE)
    stored = stored_config_digest(storage)
    if stored != config.digest():
        logger.warning(f"Stored config digest {stored[:12]} differs from the active config {config.digest()[:12]}")
    return build_manifest(storage, config).to_dict()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=argparse.SUPPRESS, help='Experiment config JSON file')
    common.add_argument('--seed', type=int, default=argparse.SUPPRESS, help='Master seed override')
    common.add_argument('--out', default=argparse.SUPPRESS, help='Output directory override')
    common.add_argument('--threads', type=int, default=argparse.SUPPRESS, help='Worker threads')
    common.add_argument('--log-level', default=argparse.SUPPRESS, help='Logging level (default INFO)')

    parser = argparse.ArgumentParser(prog='adpersuasion', parents=[common],
                                     description='Bayesian persuasion for transparent ad auctions')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('generate', parents=[common], help='Draw advertisers and auction instances')
    simulate = sub.add_parser('simulate', parents=[common], help='Simulate the auction dataset and ledger')
    simulate.add_argument('--policy', default=None, help='Configured policy name (default: simulate_policy)')
    sub.add_parser('train', parents=[common], help='Train the bid predictor')
    optimize = sub.add_parser('optimize', parents=[common], help='Search and compare signaling policies')
    optimize.add_argument('--mode', choices=MODES, default='ml-counterfactual', help='Revenue evaluator')
    verify = sub.add_parser('verify', parents=[common], help='Verify and replay a ledger file')
    verify.add_argument('ledger', nargs='?', default=None, help='Ledger path (default: <out>/ledger.jsonl)')
    sub.add_parser('report', parents=[common], help='Rebuild and print the run manifest')
    return parser


def _configure_logging(level: Optional[str]) -> None:
    name = (level or os.environ.get(ENV_LOG_LEVEL) or 'INFO').upper()
    logging.basicConfig(level=getattr(logging, name, logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def _print_json(data: Dict[str, Any]) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def run(args: argparse.Namespace) -> int:
    config = load_config(getattr(args, 'config', None))
    config = apply_overrides(config, seed=getattr(args, 'seed', None), out_dir=getattr(args, 'out', None),
                             threads=getattr(args, 'threads', None))
    if args.command == 'generate':
        _print_json(cmd_generate(config))
    elif args.command == 'simulate':
        _print_json(cmd_simulate(config, args.policy))
    elif args.command == 'train':
        _print_json(cmd_train(config))
    elif args.command == 'optimize':
        _print_json(cmd_optimize(config, args.mode))
    elif args.command == 'verify':
        return cmd_verify(args.ledger or str(_storage(config).path(LEDGER_FILE)))
    elif args.command == 'report':
        _print_json(cmd_report(config))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one verb and map failures to exit codes."""
    args = build_parser().parse_args(argv)
    _configure_logging(getattr(args, 'log_level', None))
    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingInputError as e:
        logger.error(str(e))
        print(f"{e}", file=sys.stderr)
        return EXIT_MISSING
    except AdPersuasionError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
