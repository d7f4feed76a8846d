import numpy as np
import pytest

from spikedcorr.asymptotics import variance_reduction_report
from spikedcorr.datasets import (MODEL_DICT, ar1_block_model, build_named_model, constant_correlation_model,
                                 identity_model, resolve_model, two_group_model, two_group_supercritical)
from spikedcorr.exceptions import InvalidArgument
from spikedcorr.laws import rho_dot
from spikedcorr.model import save_model


@pytest.mark.parametrize("m,r", [(2, 0.5), (10, 0.9), (20, 0.3)])
def test_constant_correlation_spectrum(m, r):
    model = constant_correlation_model(m, r)
    assert model.spike(1) == pytest.approx(1 + r * (m - 1))
    assert np.allclose(model.L[1:], 1 - r)
    assert np.allclose(model.eigenvector(1), np.ones(m) / np.sqrt(m))


@pytest.mark.parametrize("mixing", ["cholesky", "sqrt"])
def test_constant_correlation_mixing(mixing):
    model = constant_correlation_model(4, 0.8, innovation="uniform", mixing=mixing)
    assert model.dist.kind == "linear_mixing"
    assert np.allclose(model.factor @ model.factor.T, model.Sigma)


def test_constant_correlation_invalid():
    with pytest.raises(InvalidArgument):
        constant_correlation_model(1, 0.5)
    with pytest.raises(InvalidArgument):
        constant_correlation_model(4, 1.0)
    with pytest.raises(InvalidArgument):
        constant_correlation_model(4, -0.2)


def test_two_group():
    model = two_group_model(8, 0.5)
    assert model.singular
    assert np.allclose(model.L[:2], [(1 + 0.5) * 4, (1 - 0.5) * 4])
    assert np.allclose(model.L[2:], 0, atol=1e-10)
    assert model.factor.shape == (8, 2)
    assert np.allclose(model.factor @ model.factor.T, model.Sigma)
    with pytest.raises(InvalidArgument):
        two_group_model(7, 0.5)


def test_two_group_variance_reduction():
    # Delta_2 = (1 - 2r - r^2) / 2 is negative for r > sqrt(2) - 1, although p_2 has positive entries
    model = two_group_model(4, 0.5)
    second = variance_reduction_report(model, 2, 0.25)
    assert second.delta == pytest.approx(-0.125)
    assert not second.reduced
    assert second.conditions == dict(i=False, ii=False, iii=False)
    assert second.ratio is None

    first = variance_reduction_report(model, 1, 0.25)
    assert first.delta == pytest.approx(0.875)
    assert first.reduced and first.conditions["ii"]
    assert first.ratio == pytest.approx(1 - rho_dot(3.0, 0.25) * 0.875)


def test_two_group_supercritical():
    # Both spikes clear 1 + sqrt(gamma) iff (1 - r) m / 2 > 1 + sqrt(gamma)
    assert two_group_supercritical(20, 0.5, 1.0)
    assert not two_group_supercritical(8, 0.5, 1.0)


def test_ar1_block():
    model = ar1_block_model(10, 0.95, total_m=12)
    assert model.m == 12
    assert model.Gamma[0, 2] == pytest.approx(0.95 ** 2)
    assert np.allclose(model.Gamma[10:, :10], 0)
    assert model.params["block"] == 10
    with pytest.raises(InvalidArgument):
        ar1_block_model(10, 0.5, total_m=5)
    with pytest.raises(InvalidArgument):
        ar1_block_model(3, 1.0)


def test_identity():
    model = identity_model(3, innovation="laplace")
    assert np.allclose(model.L, 1.0)
    assert model.dist.excess_kurtosis == 3.0


@pytest.mark.parametrize("descriptor", [
    "const-corr:m=10,r=0.9",
    "equicorr:m=10,r=0.9",
    " const-corr : m=10, r=0.9 ",
])
def test_named(descriptor):
    model = build_named_model(descriptor)
    assert model.spike(1) == pytest.approx(9.1)


def test_named_innovation():
    model = build_named_model("const-corr:m=4,r=0.8,innovation=rademacher")
    assert model.dist.family == "rademacher"
    assert model.params["innovation"] == "rademacher"


@pytest.mark.parametrize("descriptor", [
    "unknown:m=3",
    "const-corr:m=10;r=0.9",
    "const-corr:m=10,r",
    "const-corr:m=10,r=0.9,nope=1",
    "const-corr:m=10,r=abc",
])
def test_malformed_descriptor(descriptor):
    with pytest.raises(InvalidArgument):
        build_named_model(descriptor)


def test_registry_covers_constructors():
    assert set(MODEL_DICT) == {"identity", "const-corr", "equicorr", "two-group", "ar1-block"}


def test_resolve_file(tmp_path, equicorr_small):
    path = tmp_path / "model.json"
    save_model(equicorr_small, path)
    model = resolve_model(str(path))
    assert np.allclose(model.Gamma, equicorr_small.Gamma)
    with pytest.raises(InvalidArgument):
        resolve_model(str(tmp_path / "missing.json"))
