import numpy as np
import pytest

from spikedcorr.cumulants import (Tensor4, contract, contract_matrix, empirical_cumulants, fourth_moment_tensor,
                                  gaussian_kcheck_tensor, isserlis_tensor, kappa_tensor, kcheck_split, kcheck_tensor,
                                  projection_tensor)
from spikedcorr.datasets import constant_correlation_model, identity_model
from spikedcorr.exceptions import DegenerateData, InvalidArgument
from spikedcorr.sampling import RngSpec
from spikedcorr.suites import random_gaussian_model


def test_gaussian_kappa_is_zero(equicorr):
    assert np.all(kappa_tensor(equicorr).values == 0)


def test_gaussian_kcheck_closed_form(equicorr, ar1):
    for model in (equicorr, ar1):
        assert np.allclose(kcheck_tensor(model).values, gaussian_kcheck_tensor(model.Gamma).values, atol=1e-12)


def test_univariate_values():
    # m = 1: kappa_1111 = kappa_4 and kcheck_1111 = -Var(xi^2) = -(2 + kappa_4)
    for family, k4 in (("gaussian", 0.0), ("rademacher", -2.0), ("laplace", 3.0)):
        model = identity_model(1, innovation=family)
        assert kappa_tensor(model).values[0, 0, 0, 0] == pytest.approx(k4)
        assert fourth_moment_tensor(model).values[0, 0, 0, 0] == pytest.approx(3 + k4)
        assert kcheck_tensor(model).values[0, 0, 0, 0] == pytest.approx(-(2 + k4))


def test_identity_mixing_kappa():
    model = identity_model(3, innovation="uniform")
    kappa = kappa_tensor(model).values.copy()
    for i in range(3):
        assert kappa[i, i, i, i] == pytest.approx(-1.2)
    kappa[[0, 1, 2], [0, 1, 2], [0, 1, 2], [0, 1, 2]] = 0
    assert np.allclose(kappa, 0)


@pytest.mark.parametrize("innovation", ["rademacher", "uniform", "laplace"])
def test_symmetries(innovation):
    model = constant_correlation_model(3, 0.5, innovation=innovation)
    assert fourth_moment_tensor(model).symmetry_defect() < 1e-12
    assert kappa_tensor(model).symmetry_defect() < 1e-12
    kcheck = kcheck_tensor(model)
    assert kcheck.symmetry == "pair"
    assert kcheck.symmetry_defect() < 1e-12


def test_isserlis_diagonal():
    K = np.array([[1.0, 0.3], [0.3, 1.0]])
    mu = isserlis_tensor(K)
    assert mu[0, 0, 0, 0] == pytest.approx(3.0)
    assert mu[0, 0, 1, 1] == pytest.approx(1 + 2 * 0.09)
    assert mu[0, 1, 0, 1] == pytest.approx(0.09 + 1 + 0.09)


@pytest.mark.parametrize("indices", [(1, 1, 1, 1), (2, 1, 3, 1), (1, 2, 3, 3)])
def test_contract_methods_agree(equicorr_rademacher, indices):
    A = kcheck_tensor(equicorr_rademacher)
    P = equicorr_rademacher.P
    factored = contract(P, *indices, A)
    reference = contract(P, *indices, A, method="reference")
    assert factored == pytest.approx(reference, abs=1e-12)
    explicit = np.sum(projection_tensor(P, *indices) * A.values)
    assert factored == pytest.approx(explicit, abs=1e-12)


def test_contract_matrix(equicorr_rademacher):
    A = kappa_tensor(equicorr_rademacher)
    P = equicorr_rademacher.P
    M = contract_matrix(P, 1, A)
    for k in range(1, 5):
        for l in range(1, 5):
            assert M[k - 1, l - 1] == pytest.approx(contract(P, k, 1, l, 1, A), abs=1e-12)


def test_contract_validation(equicorr_small):
    A = kappa_tensor(equicorr_small)
    with pytest.raises(InvalidArgument):
        contract(equicorr_small.P, 0, 1, 1, 1, A)
    with pytest.raises(InvalidArgument):
        contract(np.eye(3), 1, 1, 1, 1, A)
    with pytest.raises(InvalidArgument):
        contract(equicorr_small.P, 1, 1, 1, 1, A, method="fast")


def test_kcheck_split(equicorr_rademacher):
    psi_psi, psi_chi = kcheck_split(equicorr_rademacher, 1)
    total = contract(equicorr_rademacher.P, 1, 1, 1, 1, kcheck_tensor(equicorr_rademacher))
    assert psi_psi - 2 * psi_chi == pytest.approx(total, abs=1e-12)


def test_platykurtic_kappa(ar1_uniform):
    """Uniform innovations have negative excess kurtosis, so every diagonal contraction of kappa is negative."""
    kappa = kappa_tensor(ar1_uniform)
    for nu in range(1, ar1_uniform.m + 1):
        assert contract(ar1_uniform.P, nu, nu, nu, nu, kappa) < 0
    # The identity block is independent of the AR(1) block
    assert np.allclose(kappa.values[:3, :3, 3:, 3:], 0.0, atol=1e-12)
    assert kappa.values[4, 4, 4, 4] == pytest.approx(-1.2)


def test_tensor_validation():
    with pytest.raises(InvalidArgument):
        Tensor4(np.zeros((2, 2, 2)))
    with pytest.raises(InvalidArgument):
        Tensor4(np.zeros((2, 2, 2, 2)), symmetry="none")
    t = Tensor4(np.arange(16.0).reshape(2, 2, 2, 2))
    assert Tensor4.from_dict(t.to_dict()).values.tolist() == t.values.tolist()
    with pytest.raises(ValueError):
        t.values[0, 0, 0, 0] = 1.0


def test_empirical_gaussian(equicorr_small):
    gen = RngSpec(42).generator()
    z = gen.standard_normal((4, 100_000))
    samples = (equicorr_small.factor @ z).T
    est = empirical_cumulants(samples, sigma=np.ones(4), kappa2=equicorr_small.Gamma)
    assert est.mode == "oracle"
    assert est.n == 100_000
    z_kappa = np.abs(est.kappa) / np.maximum(est.kappa_se, 1e-9)
    assert z_kappa.max() < 6
    theory = kcheck_tensor(equicorr_small).values
    z_kcheck = np.abs(est.kcheck - theory) / np.maximum(est.kcheck_se, 1e-9)
    assert z_kcheck.max() < 6


def test_empirical_plug_in():
    gen = RngSpec(0).generator()
    samples = gen.standard_normal((1000, 3))
    est = empirical_cumulants(samples)
    assert est.mode == "plug-in"
    assert np.allclose(np.diag(est.kappa2), 1.0, atol=1e-12)


def test_empirical_validation():
    with pytest.raises(InvalidArgument):
        empirical_cumulants(np.ones((10, 2)))
    samples = RngSpec(0).generator().standard_normal((500, 2))
    samples[:, 1] = 3.0
    with pytest.raises(DegenerateData):
        empirical_cumulants(samples)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gaussian_contraction_identities(seed):
    model = random_gaussian_model(RngSpec(seed).generator(0), 5)
    G, P, L = model.Gamma, model.P, model.L
    direct = np.einsum("ik,jl->ijkl", G, G)
    both = direct + np.einsum("il,jk->ijkl", G, G)
    for nu in range(1, model.m + 1):
        assert contract(P, nu, nu, nu, nu, direct) == pytest.approx(L[nu - 1] ** 2, abs=1e-10 * L[0] ** 2)
        for k in range(1, model.m + 1):
            for l in range(1, model.m + 1):
                if nu in (k, l):
                    continue
                expected = L[k - 1] * L[nu - 1] if k == l else 0.0
                value = contract(P, k, nu, l, nu, both)
                assert value == pytest.approx(expected, abs=1e-10 * L[0] ** 2)
                explicit = np.sum(projection_tensor(P, k, nu, l, nu) * both)
                assert explicit == pytest.approx(value, abs=1e-10 * L[0] ** 2)
