"""
Tests for artifact storage and the run manifest.
"""
import dataclasses
import os
import shutil
import tempfile
import unittest
from unittest import mock

import numpy as np
import pandas as pd

from adpersuasion.config import ExperimentConfig, config_from_dict
from adpersuasion.exceptions import MissingInputError
from adpersuasion.storage.file_storage import FileStorage
from adpersuasion.storage.manifest import (
    MANIFEST_FILE,
    build_manifest,
    load_manifest,
    save_config_copy,
    stored_config_digest,
)


class TestFileStorage(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.storage = FileStorage(os.path.join(self.tmp, "run"))

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_dataframe_round_trip_is_exact(self):
        rng = np.random.default_rng(0)
        df = pd.DataFrame({"auction_id": np.arange(50), "bid": rng.uniform(0.1, 20.0, 50),
                           "budget": rng.normal(10000, 2000, 50)})
        self.storage.save_dataframe(df, "frame.csv")
        again = self.storage.load_dataframe("frame.csv")
        pd.testing.assert_frame_equal(again, df)

    def test_missing_artifact(self):
        with self.assertRaises(MissingInputError):
            self.storage.load_json("absent.json")
        self.assertEqual(self.storage.list_files(), [])

    def test_failed_write_leaves_nothing(self):
        self.storage.write_text("first\n", "a.txt")
        with mock.patch("os.replace", side_effect=OSError("disk full")):
            with self.assertRaises(OSError):
                self.storage.write_text("second\n", "a.txt")
        self.assertEqual(self.storage.read_text("a.txt"), "first\n")
        self.assertEqual(os.listdir(self.storage.base_dir), ["a.txt"])

    def test_json_is_sorted(self):
        self.storage.save_json({"b": 1, "a": [1.5, 2]}, "x.json")
        self.assertEqual(self.storage.read_text("x.json"), '{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n')

    def test_digest(self):
        self.storage.write_bytes(b"abc", "abc.bin")
        self.assertEqual(self.storage.digest("abc.bin"),
                         "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")


class TestManifest(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.storage = FileStorage(self.tmp)
        self.config = config_from_dict({"schema_version": 1, "market": {"n_auctions": 30}, "master_seed": 4})

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_manifest_lists_artifacts(self):
        save_config_copy(self.storage, self.config)
        self.storage.write_text("hello\n", "notes.txt")
        manifest = build_manifest(self.storage, self.config, ledger_head="ab" * 32, metrics={"rmse": 1.0})
        self.assertEqual(sorted(manifest.artifacts), ["config.json", "notes.txt"])
        self.assertEqual(manifest.artifacts["notes.txt"], self.storage.digest("notes.txt"))
        self.assertEqual(manifest.config_digest, self.config.digest())
        self.assertEqual(load_manifest(self.storage).to_dict(), manifest.to_dict())
        self.assertNotIn(MANIFEST_FILE, manifest.artifacts)

    def test_later_manifest_keeps_earlier_fields(self):
        build_manifest(self.storage, self.config, ledger_head="cd" * 32, metrics={"rmse": 1.0})
        manifest = build_manifest(self.storage, self.config, metrics={"revenue": 3.0})
        self.assertEqual(manifest.ledger_head, "cd" * 32)
        self.assertEqual(manifest.metrics, {"rmse": 1.0, "revenue": 3.0})

    def test_stored_config_digest(self):
        save_config_copy(self.storage, self.config)
        self.assertEqual(stored_config_digest(self.storage), self.config.digest())
        self.assertNotEqual(stored_config_digest(self.storage), ExperimentConfig().digest())

    def test_output_dir_and_threads_leave_manifest_unchanged(self):
        other_dir = os.path.join(self.tmp, "other")
        other = dataclasses.replace(self.config, output_dir=other_dir, threads=4)
        other_storage = FileStorage(other_dir)
        for storage, config in ((self.storage, self.config), (other_storage, other)):
            save_config_copy(storage, config)
            build_manifest(storage, config, ledger_head="ef" * 32)
        self.assertNotIn("output_dir", self.storage.load_json("config.json"))
        self.assertNotIn("threads", self.storage.load_json("config.json"))
        self.assertEqual(self.storage.read_bytes("config.json"), other_storage.read_bytes("config.json"))
        self.assertEqual(self.storage.read_bytes(MANIFEST_FILE), other_storage.read_bytes(MANIFEST_FILE))

    def test_no_manifest_yet(self):
        self.assertIsNone(load_manifest(self.storage))


if __name__ == '__main__':
    unittest.main()
