#!/usr/bin/env python3
"""
Run script for the adpersuasion experiment pipeline

    python run.py generate --seed 7 --out output
    python run.py simulate
    python run.py train
    python run.py optimize
    python run.py verify output/ledger.jsonl
"""
import os
import sys

# Add current directory to path
sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

from adpersuasion.cli import main  # noqa: E402

if __name__ == '__main__':
    sys.exit(main())
