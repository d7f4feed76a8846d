import pytest

from spikedcorr.datasets import ar1_block_model, constant_correlation_model, identity_model


# Fixtures for the constant-correlation model
@pytest.fixture
def equicorr():
    return constant_correlation_model(10, 0.9)


@pytest.fixture
def equicorr_small():
    return constant_correlation_model(4, 0.8)


@pytest.fixture
def equicorr_rademacher():
    return constant_correlation_model(4, 0.8, innovation="rademacher")


@pytest.fixture
def ar1():
    return ar1_block_model(10, 0.95)


@pytest.fixture
def ar1_uniform():
    return ar1_block_model(3, 0.6, total_m=5, innovation="uniform")


@pytest.fixture
def identity():
    return identity_model(3)


@pytest.fixture
def mc_kwargs():
    # Default harness arguments, small enough for unit tests
    kwargs = dict(n=200, p=50, replicates=100, random_state=42, n_jobs=1)
    return kwargs
