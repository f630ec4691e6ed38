import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATASETS = os.environ.get("KG_DATASETS")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def dataset_dir(name):
    """Directory of a published benchmark split, or skip when none is configured."""
    if not DATASETS:
        pytest.skip("set KG_DATASETS to a directory holding FB15K-237/ and WN18RR/")
    path = os.path.join(DATASETS, name)
    if not os.path.isfile(os.path.join(path, "train.txt")):
        pytest.skip(f"{path}/train.txt not present")
    return path


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = mod.summary_lines() if mod is not None else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
