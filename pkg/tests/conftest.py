import numpy as np
import pytest

from lorsmap import EqtlDataset, ModelFit


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_dataset(rng, n=6, p=4, q=3):
    return EqtlDataset(Y=rng.standard_normal((n, q)), X=rng.standard_normal((n, p)))


def random_fit(rng, n, p, q, scale=1.0):
    return ModelFit(
        B=scale * rng.standard_normal((p, q)),
        L=scale * rng.standard_normal((n, q)),
        mu=scale * rng.standard_normal(q),
    )
