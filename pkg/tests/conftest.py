"""Shared fixtures: the named ground-truth processes and their observed marginals"""

import numpy as np
import pytest

from config import DEFAULT_CHAIN, COLLAPSING_CHAIN, IID_CHAIN
from models.chain import FiniteProcess, observed_marginals


@pytest.fixture
def default_proc():
    return FiniteProcess.from_dict(DEFAULT_CHAIN)


@pytest.fixture
def collapsing_proc():
    return FiniteProcess.from_dict(COLLAPSING_CHAIN)


@pytest.fixture
def iid_proc():
    return FiniteProcess.from_dict(IID_CHAIN)


@pytest.fixture
def default_marginals(default_proc):
    return observed_marginals(default_proc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
