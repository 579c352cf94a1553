"""
File storage for pipeline artifacts.
Every write goes to a temporary file in the target directory and is renamed
into place, so readers never observe a half-written artifact.
"""

import hashlib
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

from adpersuasion.exceptions import MissingInputError

logger = logging.getLogger(__name__)


class FileStorage:
    def __init__(self, base_dir: str = 'output'):
        """
        Initialize the file storage.

        Args:
            base_dir (str): Directory holding every artifact of a run
        """
        self.base_dir = Path(base_dir)

    def path(self, filename: str) -> Path:
        return self.base_dir / filename

    def exists(self, filename: str) -> bool:
        return self.path(filename).exists()

    def require(self, filename: str) -> Path:
        """
        Path of an input artifact that must already exist.

        Raises:
            MissingInputError: The artifact has not been produced
        """
        filepath = self.path(filename)
        if not filepath.exists():
            raise MissingInputError(filepath)
        return filepath

    def write_bytes(self, data: bytes, filename: str) -> Path:
        """Atomically write ``data`` (temp file + rename)."""
        filepath = self.path(filename)
        try:
            filepath.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=filepath.parent, prefix=f".{filepath.name}.", suffix=".tmp")
            try:
                with os.fdopen(fd, 'wb') as f:
                    f.write(data)
                os.replace(tmp, filepath)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
            logger.debug(f"Wrote {len(data)} bytes to {filepath}")
            return filepath
        except OSError as e:
            logger.error(f"Error writing {filepath}: {str(e)}")
            raise

    def write_text(self, text: str, filename: str) -> Path:
        return self.write_bytes(text.encode('utf-8'), filename)

    def read_bytes(self, filename: str) -> bytes:
        return self.require(filename).read_bytes()

    def read_text(self, filename: str) -> str:
        return self.read_bytes(filename).decode('utf-8')

    def save_dataframe(self, df: pd.DataFrame, filename: str) -> Path:
        """
        Save a DataFrame as CSV.

        Floats use the shortest repr that round-trips; see load_dataframe.

        Args:
            df (pd.DataFrame): DataFrame to save
            filename (str): Target filename
        """
        text = df.to_csv(index=False, lineterminator='\n')
        filepath = self.write_text(text, filename)
        logger.info(f"Saved {len(df)} rows to: {filepath}")
        return filepath

    def load_dataframe(self, filename: str) -> pd.DataFrame:
        """
        Load a CSV artifact with exact float parsing.

        Raises:
            MissingInputError: File does not exist
        """
        filepath = self.require(filename)
        try:
            return pd.read_csv(filepath, float_precision='round_trip')
        except (OSError, ValueError) as e:
            logger.error(f"Error loading DataFrame {filepath}: {str(e)}")
            raise

    def save_json(self, data: Dict[str, Any], filename: str) -> Path:
        """Save JSON with sorted keys and a trailing newline."""
        text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + '\n'
        filepath = self.write_text(text, filename)
        logger.info(f"Saved JSON data to: {filepath}")
        return filepath

    def load_json(self, filename: str) -> Dict[str, Any]:
        filepath = self.require(filename)
        try:
            with open(filepath, 'r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            logger.error(f"Error loading JSON data {filepath}: {str(e)}")
            raise

    def list_files(self, pattern: str = '*') -> List[str]:
        """Sorted names of the files directly under the base directory."""
        if not self.base_dir.exists():
            return []
        return sorted(f.name for f in self.base_dir.glob(pattern) if f.is_file() and not f.name.startswith('.'))

    def digest(self, filename: str) -> str:
        """SHA-256 hex digest of an artifact."""
        return hashlib.sha256(self.read_bytes(filename)).hexdigest()
