"""
Run manifest: what a pipeline run produced and under which configuration.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from adpersuasion.config import ExperimentConfig, config_from_dict
from adpersuasion.exceptions import ConfigError
from adpersuasion.storage.file_storage import FileStorage

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
CONFIG_COPY_FILE = "config.json"


@dataclass
class RunManifest:
    config_digest: str
    master_seed: int
    artifacts: Dict[str, str] = field(default_factory=dict)
    ledger_head: Optional[str] = None
    metrics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"config_digest": self.config_digest, "master_seed": self.master_seed,
                "artifacts": dict(sorted(self.artifacts.items())),
                "ledger_head": self.ledger_head, "metrics": self.metrics}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(config_digest=data["config_digest"], master_seed=int(data["master_seed"]),
                   artifacts=dict(data.get("artifacts", {})), ledger_head=data.get("ledger_head"),
                   metrics=dict(data.get("metrics", {})))


def save_config_copy(storage: FileStorage, config: ExperimentConfig) -> None:
    storage.save_json(config.stored_dict(), CONFIG_COPY_FILE)


def load_manifest(storage: FileStorage) -> Optional[RunManifest]:
    if not storage.exists(MANIFEST_FILE):
        return None
    return RunManifest.from_dict(storage.load_json(MANIFEST_FILE))


def build_manifest(storage: FileStorage, config: ExperimentConfig,
                   ledger_head: Optional[str] = None, metrics: Optional[Dict[str, Any]] = None) -> RunManifest:
    """
    Digest every artifact in the output directory and write the manifest.

    Ledger head and metrics from an earlier manifest are kept unless new
    values are given.
    """
    previous = load_manifest(storage)
    merged_metrics = dict(previous.metrics) if previous else {}
    merged_metrics.update(metrics or {})
    if ledger_head is None and previous is not None:
        ledger_head = previous.ledger_head
    artifacts = {name: storage.digest(name) for name in storage.list_files() if name != MANIFEST_FILE}
    manifest = RunManifest(config_digest=config.digest(), master_seed=config.master_seed,
                           artifacts=artifacts, ledger_head=ledger_head, metrics=merged_metrics)
    storage.save_json(manifest.to_dict(), MANIFEST_FILE)
    logger.info(f"Manifest lists {len(artifacts)} artifacts")
    return manifest


def stored_config_digest(storage: FileStorage) -> str:
    """
    Digest recomputed from the stored config copy.

    Raises:
        ConfigError: The stored copy no longer parses
    """
    data = storage.load_json(CONFIG_COPY_FILE)
    try:
        return config_from_dict(data).digest()
    except ConfigError:
        logger.error(f"Stored config copy in {storage.base_dir} is invalid")
        raise
