import os
import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

P1 = np.array([1.0, np.sqrt(2.0), np.sqrt(3.0)]) / np.sqrt(6.0)
P3 = np.array([np.sqrt(5.0), -1.0, np.sqrt(3.0)]) / 3.0

FULL = os.environ.get("EMFOURIER_FULL") == "1"


def pytest_collection_modifyitems(config, items):
    if FULL:
        return
    skip = pytest.mark.skip(reason="full-quality preset; set EMFOURIER_FULL=1 to run")
    for item in items:
        if "full" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def p1():
    return P1.copy()


@pytest.fixture
def p3():
    return P3.copy()
