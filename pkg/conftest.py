"""Pytest configuration file"""

import sys
from pathlib import Path

import pytest

# Add src directory to Python path
src_path = Path(__file__).parent / "src"
sys.path.insert(0, str(src_path))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="Run slow acceptance tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: large exact or Monte Carlo runs, skipped without --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
