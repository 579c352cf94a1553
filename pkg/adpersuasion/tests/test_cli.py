"""
Tests for the command-line verbs and their exit codes.
"""
import contextlib
import io
import json
import os
import shutil
import tempfile
import unittest

from adpersuasion.cli import (
    EXIT_CONFIG,
    EXIT_MISSING,
    EXIT_OK,
    EXIT_VERIFY,
    build_parser,
    main,
)

TINY = {
    "schema_version": 1,
    "market": {"n_advertisers": 60, "n_auctions": 80, "participants_per_auction": 4},
    "predictor": {"learning_rates": [0.2], "max_depths": [2], "n_trees": [10],
                  "min_samples_leaf": 5, "cv_folds": 3},
    "search": {"mode": "partition-enumeration", "mc_auctions": 40},
    "master_seed": 3,
}


def run_cli(*argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(list(argv))
    return code, out.getvalue()


class TestCliExitCodes(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.mkdtemp()
        self.out = os.path.join(self.tmp, "run")
        self.config = os.path.join(self.tmp, "config.json")
        with open(self.config, "w") as f:
            json.dump(TINY, f)

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def cli(self, verb, *extra):
        return run_cli(verb, "--config", self.config, "--out", self.out, *extra)

    def test_invalid_config(self):
        with open(self.config, "w") as f:
            json.dump({**TINY, "market": {"n_bidders": 4}}, f)
        code, _ = self.cli("generate")
        self.assertEqual(code, EXIT_CONFIG)

    def test_missing_config_file(self):
        code, _ = run_cli("generate", "--config", os.path.join(self.tmp, "nope.json"))
        self.assertEqual(code, EXIT_CONFIG)

    def test_unknown_policy(self):
        self.assertEqual(self.cli("generate")[0], EXIT_OK)
        self.assertEqual(self.cli("simulate", "--policy", "nonexistent")[0], EXIT_CONFIG)

    def test_missing_inputs(self):
        self.assertEqual(self.cli("simulate")[0], EXIT_MISSING)
        self.assertEqual(self.cli("train")[0], EXIT_MISSING)
        self.assertEqual(self.cli("optimize")[0], EXIT_MISSING)
        self.assertEqual(self.cli("report")[0], EXIT_MISSING)
        self.assertEqual(run_cli("verify", os.path.join(self.tmp, "absent.jsonl"))[0], EXIT_MISSING)

    def test_parser(self):
        args = build_parser().parse_args(["optimize", "--mode", "rational", "--seed", "4"])
        self.assertEqual((args.command, args.mode, args.seed), ("optimize", "rational", 4))
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                build_parser().parse_args(["optimize", "--mode", "psychic"])


class TestCliPipeline(unittest.TestCase):
    """generate -> simulate -> train -> optimize on a tiny market."""

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()
        cls.out = os.path.join(cls.tmp, "run")
        cls.config = os.path.join(cls.tmp, "config.json")
        with open(cls.config, "w") as f:
            json.dump(TINY, f)
        cls.codes = {}
        cls.stdout = {}
        for verb in ("generate", "simulate", "train", "optimize"):
            cls.codes[verb], cls.stdout[verb] = run_cli(verb, "--config", cls.config, "--out", cls.out)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def path(self, name):
        return os.path.join(self.out, name)

    def test_all_verbs_succeed(self):
        self.assertEqual(self.codes, {"generate": 0, "simulate": 0, "train": 0, "optimize": 0})

    def test_artifacts(self):
        for name in ("population.csv", "instances.jsonl", "dataset.csv", "ledger.jsonl", "bid_cdf.csv",
                     "model.json", "metrics.json", "leaderboard.csv", "revenue_report.json",
                     "revenue_report.csv", "policy_audit.csv", "manifest.json", "config.json"):
            self.assertTrue(os.path.isfile(self.path(name)), name)

    def test_summaries_are_json(self):
        simulate = json.loads(self.stdout["simulate"])
        self.assertEqual(simulate["n_auctions"], 80)
        self.assertEqual(simulate["n_bids"], 320)
        optimize = json.loads(self.stdout["optimize"])
        self.assertGreaterEqual(optimize["totals"]["opt"],
                                max(optimize["totals"]["full"], optimize["totals"]["none"]) - 1e-9)

    def test_report(self):
        code, text = run_cli("report", "--config", self.config, "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        manifest = json.loads(text)
        self.assertIn("dataset.csv", manifest["artifacts"])
        self.assertEqual(len(manifest["ledger_head"]), 64)

    def test_verify_and_tamper(self):
        code, text = run_cli("verify", self.path("ledger.jsonl"))
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(text.startswith("OK"))

        copy_dir = os.path.join(self.tmp, "tampered")
        os.makedirs(copy_dir, exist_ok=True)
        with open(self.path("ledger.jsonl"), "rb") as f:
            lines = f.read().split(b"\n")
        lines[5] = lines[5].replace(b'\\"payment\\":', b'\\"payment\\": ', 1)
        tampered = os.path.join(copy_dir, "ledger.jsonl")
        with open(tampered, "wb") as f:
            f.write(b"\n".join(lines))
        code, text = run_cli("verify", tampered)
        self.assertEqual(code, EXIT_VERIFY)
        self.assertIn("entry 5", text)

    def test_truncation_caught_by_manifest(self):
        copy_dir = os.path.join(self.tmp, "truncated")
        os.makedirs(copy_dir, exist_ok=True)
        shutil.copy(self.path("manifest.json"), copy_dir)
        with open(self.path("ledger.jsonl"), "rb") as f:
            lines = f.read().split(b"\n")
        with open(os.path.join(copy_dir, "ledger.jsonl"), "wb") as f:
            f.write(b"\n".join(lines[:-2]) + b"\n")
        code, text = run_cli("verify", os.path.join(copy_dir, "ledger.jsonl"))
        self.assertEqual(code, EXIT_VERIFY)
        self.assertIn("manifest", text)


if __name__ == '__main__':
    unittest.main()
