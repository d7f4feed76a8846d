import numpy as np
import pandas as pd
import pytest
from scipy import linalg

from spikedcorr.datasets import identity_model
from spikedcorr.exceptions import DegenerateData, DomainError, InvalidArgument
from spikedcorr.laws import rho
from spikedcorr.model import FullModel
from spikedcorr.sampling import (DataMatrix, RngSpec, b_trace, export_csv, extract_spikes, generate, k_matrix,
                                 normalized_bilinear_form, sample_correlation, sample_covariance, w_matrix)


@pytest.fixture
def data(equicorr_small):
    full = FullModel(equicorr_small, 40)
    return full, generate(full, 100, RngSpec(42))


def test_streams_are_reproducible():
    rng = RngSpec(7)
    a = rng.generator(3).standard_normal(5)
    assert np.array_equal(a, RngSpec(7).generator(3).standard_normal(5))
    assert not np.array_equal(a, rng.generator(4).standard_normal(5))
    assert not np.array_equal(a, RngSpec(8).generator(3).standard_normal(5))
    with pytest.raises(InvalidArgument):
        RngSpec(-1)


def test_generate(data):
    full, X = data
    assert isinstance(X, DataMatrix)
    assert X.values.shape == (44, 100)
    assert X.n == 100 and X.p == 40 and X.m == 4
    assert X.X1.shape == (4, 100) and X.X2.shape == (40, 100)

    again = generate(full, 100, RngSpec(42))
    assert np.array_equal(X.values, again.values)
    other = generate(full, 100, RngSpec(42), replicate=1)
    assert not np.array_equal(X.values, other.values)


def test_generate_validation(equicorr_small):
    with pytest.raises(InvalidArgument):
        generate(equicorr_small, 100, RngSpec())
    with pytest.raises(InvalidArgument):
        generate(FullModel(equicorr_small, 10), 5, RngSpec())


def test_generate_noise_family(equicorr_small):
    X = generate(FullModel(equicorr_small, 3), 50, RngSpec(), noise="rademacher")
    assert np.all(np.abs(X.X2) == 1)


def test_generated_moments(equicorr_rademacher):
    X = generate(FullModel(equicorr_rademacher, 2), 200_000, RngSpec(1))
    S = sample_covariance(X)
    expected = linalg.block_diag(equicorr_rademacher.Sigma, np.eye(2))
    assert np.allclose(S, expected, atol=0.02)


def test_correlation(data):
    _, X = data
    R = sample_correlation(X)
    assert np.array_equal(R, R.T)
    assert np.all(np.diag(R) == 1.0)
    D = np.linspace(0.5, 5.0, X.values.shape[0])
    assert np.allclose(sample_correlation(D[:, None] * X.values), R, atol=1e-12)


def test_degenerate_row():
    values = np.ones((3, 10))
    values[1] = 0.0
    with pytest.raises(DegenerateData) as e_info:
        sample_correlation(values)
    assert e_info.value.row == 1


def test_extract_spikes(data):
    full, X = data
    R = sample_correlation(X)
    spectrum = extract_spikes(R, full, [1, 2])
    w = np.linalg.eigvalsh(R)[::-1]
    assert spectrum.ell_hat[1] == pytest.approx(w[0])
    assert spectrum.ell_hat[2] == pytest.approx(w[1])
    assert spectrum.proj[1] >= 0
    assert np.linalg.norm(spectrum.a_nu[1]) == pytest.approx(1.0)
    assert np.allclose(full.spiked.P @ spectrum.proj_vec[1], spectrum.a_nu[1])
    assert spectrum.which == "correlation"


def test_extract_spikes_validation(data):
    full, X = data
    R = sample_correlation(X)
    with pytest.raises(InvalidArgument):
        extract_spikes(R[:3, :3], full, [1])
    with pytest.raises(InvalidArgument):
        extract_spikes(R + np.triu(np.ones_like(R), 1), full, [1])
    with pytest.raises(InvalidArgument):
        extract_spikes(R, full, [5])
    with pytest.raises(InvalidArgument):
        extract_spikes(R, full, [1], which="precision")


def _k_reference(X, t):
    """K(t) through the n x n companion system."""
    Xb = X.values / np.sqrt(np.mean(X.values ** 2, axis=1))[:, None]
    X1b, X2b = Xb[:X.m], Xb[X.m:]
    n = X.n
    B = t * np.linalg.inv(t * np.eye(n) - X2b.T @ X2b / n)
    return X1b @ B @ X1b.T / n, np.trace(B)


@pytest.mark.parametrize("p", [40, 150])
def test_k_matrix(equicorr_small, p):
    """The p x p resolvent form and the n x n form agree, on both sides of p = n."""
    full = FullModel(equicorr_small, p)
    X = generate(full, 100, RngSpec(3))
    t = (1 + np.sqrt(p / 100)) ** 2 + 1.0
    K_ref, trace_ref = _k_reference(X, t)
    assert np.allclose(k_matrix(X, t), K_ref, atol=1e-10)
    assert b_trace(X, t) == pytest.approx(trace_ref, rel=1e-10)


def test_k_matrix_without_noise(equicorr_small):
    X = generate(FullModel(equicorr_small, 0), 100, RngSpec())
    assert np.allclose(k_matrix(X, 5.0), sample_correlation(X))
    assert b_trace(X, 5.0) == 100


def test_k_matrix_inside_spectrum(data):
    _, X = data
    with pytest.raises(DomainError):
        k_matrix(X, 0.5)
    with pytest.raises(DomainError):
        b_trace(X, 0.5)
    with pytest.raises(InvalidArgument):
        k_matrix(X.values, 5.0)


def test_w_matrix(data, identity):
    full, X = data
    t = 5.0
    W = w_matrix(X, full, t)
    expected = np.sqrt(X.n) * (k_matrix(X, t) - b_trace(X, t) / X.n * full.spiked.Gamma)
    assert np.allclose(W, expected)
    with pytest.raises(InvalidArgument):
        w_matrix(X, identity, t)


def test_bilinear_form():
    gen = RngSpec(0).generator()
    x, y = gen.standard_normal(50), gen.standard_normal(50)
    B = np.diag(gen.uniform(size=50))
    assert normalized_bilinear_form(x, y, B) == pytest.approx(normalized_bilinear_form(x, y, np.diag(B)))
    assert normalized_bilinear_form(x, x, np.eye(50)) == pytest.approx(1.0)
    assert normalized_bilinear_form(3 * x, y, B) == pytest.approx(normalized_bilinear_form(x, y, B))
    with pytest.raises(InvalidArgument):
        normalized_bilinear_form(np.zeros(50), y, B)
    with pytest.raises(InvalidArgument):
        normalized_bilinear_form(x, y, np.eye(10))


def test_export_csv(tmp_path, data):
    _, X = data
    path = tmp_path / "data.csv"
    export_csv(X, path)
    frame = pd.read_csv(path, index_col="variable")
    assert frame.shape == (44, 100)
    assert frame.index[0] == "xi_1" and frame.index[4] == "eta_1"
    assert np.allclose(frame.values, X.values)


def test_large_sample_spike(equicorr_small):
    full = FullModel(equicorr_small, 10)
    X = generate(full, 100_000, RngSpec(5))
    spectrum = extract_spikes(sample_correlation(X), full, [1])
    assert spectrum.ell_hat[1] == pytest.approx(rho(3.4, 10 / 100_000), rel=0.02)


def test_identity_covariance():
    X = generate(FullModel(identity_model(3), 0), 100_000, RngSpec(6))
    assert np.abs(sample_covariance(X) - np.eye(3)).max() < 0.05
