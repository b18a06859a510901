#!/usr/bin/env python3
"""Run the acceptance suite standalone (one pass/fail line per criterion).

Equivalent to `pytest tests/test_acceptance.py -v -s`; exits nonzero if any
criterion fails.
"""

import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)

if __name__ == "__main__":
    sys.exit(pytest.main(
        [os.path.join(ROOT, "tests", "test_acceptance.py"), "-v", "-s",
         "-p", "no:cacheprovider"] + sys.argv[1:]
    ))
