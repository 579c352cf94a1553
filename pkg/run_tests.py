#!/usr/bin/env python
"""
Test runner for the adpersuasion package.
"""

import unittest
import sys
import argparse
import os

ROOT = os.path.abspath(os.path.dirname(__file__))
sys.path.insert(0, ROOT)


def _run(start_dir):
    loader = unittest.TestLoader()
    suite = loader.discover(start_dir, pattern='test_*.py', top_level_dir=ROOT)

    # Run tests
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    return result.wasSuccessful()


def run_unit_tests():
    """Run unit tests."""
    return _run(os.path.join(ROOT, 'adpersuasion', 'tests'))


def run_e2e_tests():
    """Run end-to-end pipeline tests."""
    return _run(os.path.join(ROOT, 'tests'))


def main():
    """Run all tests or specific test types based on arguments."""
    parser = argparse.ArgumentParser(description='Run tests for the adpersuasion package.')
    parser.add_argument('--unit', action='store_true', help='Run unit tests only')
    parser.add_argument('--e2e', action='store_true', help='Run end-to-end pipeline tests only')

    args = parser.parse_args()

    # By default, run all tests
    if not args.unit and not args.e2e:
        args.unit = True
        args.e2e = True

    success = True

    if args.unit:
        print("\n--- Running Unit Tests ---")
        success = run_unit_tests() and success

    if args.e2e:
        print("\n--- Running End-to-End Tests ---")
        success = run_e2e_tests() and success

    return 0 if success else 1


if __name__ == '__main__':
    sys.exit(main())
