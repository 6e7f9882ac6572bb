"""Run the acceptance suite and print one PASS/FAIL line per criterion."""
import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    test_file = os.path.join(HERE, os.pardir, "tests", "test_acceptance.py")
    return pytest.main([test_file, "-q", "-p", "no:cacheprovider", *sys.argv[1:]])


if __name__ == "__main__":
    sys.exit(main())
