import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from edgereg.model import Dataset, standardize_columns


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(n=30, p=4, q=2, seed=0, standardized=True):
    r = np.random.default_rng(seed)
    y = r.standard_normal((n, p))
    pis = np.linspace(0.0, 1.0, n)
    x = np.column_stack([1.0 - pis, pis])[:, :q]
    if q > 2:
        x = np.column_stack([x, r.random((n, q - 2))])
    if standardized:
        y, means, sds = standardize_columns(y)
        return Dataset(
            y=y, x=x,
            node_names=tuple(f"n{k}" for k in range(p)),
            covariate_names=tuple(f"c{k}" for k in range(q)),
            standardized=True, y_means=means, y_sds=sds,
        )
    return Dataset(
        y=y, x=x,
        node_names=tuple(f"n{k}" for k in range(p)),
        covariate_names=tuple(f"c{k}" for k in range(q)),
    )


@pytest.fixture
def small_data():
    return make_dataset()
