"""Shared builders for randomized exact-mode test spaces."""

import numpy as np
import pytest

from dmc.randomized import (  # noqa: F401  (re-exported for test modules)
    adapted_field,
    random_field,
    random_functional,
    random_space,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
