import numpy as np
import pytest

from policymap import taskgen as tg


@pytest.fixture(scope="session")
def catalog():
    return tg.make_catalog(7)


@pytest.fixture(scope="session")
def suite(catalog):
    return tg.make_task_suite(catalog, 11)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
