"""Data generation under the spiked model and sample-spectrum extraction.

A data matrix stores one observation x = [xi, eta] per column: the first m rows are the signal block, the last p rows
i.i.d. unit-variance noise. Data are never centered.
"""
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from .exceptions import DegenerateData, DomainError, InvalidArgument, NumericalFailure
from .innovation.build_innovation import build_innovation
from .model import FullModel
from .utils import check_in, check_index, check_int, check_nonneg, check_positive

# Above this dimension, eigenpairs come from an iterative partial solver
DENSE_EIGEN_MAX_DIM = 2000

# Relative eigenvalue gap below which a sample spike is flagged as near-degenerate
DEGENERACY_GAP = 1e-6


@dataclass(frozen=True)
class RngSpec:
    """Counter-based random streams.

    Replicate r draws from a Philox generator keyed by SeedSequence(master_seed, spawn_key=(r,)), so the data of a
    replicate only depend on (master_seed, r) and not on the order or thread in which replicates run.

    Parameters
    ----------
    master_seed : int, default=0
        Non-negative 64-bit seed.
    """
    master_seed: int = 0

    def __post_init__(self):
        check_int(master_seed=self.master_seed)
        check_nonneg(master_seed=self.master_seed)

    def generator(self, replicate=0):
        check_int(replicate=replicate)
        check_nonneg(replicate=replicate)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(int(replicate),))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Observations in columns.

    Attributes
    ----------
    values : ndarray of shape (m + p, n)
    m : int
        Number of signal rows.
    """
    values: np.ndarray
    m: int

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def p(self):
        return self.values.shape[0] - self.m

    @property
    def X1(self):
        return self.values[:self.m]

    @property
    def X2(self):
        return self.values[self.m:]


def generate(model, n, rng, replicate=0, noise="gaussian"):
    """Draw n observations of x = [xi, eta].

    Parameters
    ----------
    model : FullModel
        Signal model and noise dimension.
    n : int
        Sample size, at least m + 2.
    rng : RngSpec
    replicate : int, default=0
        Stream index.
    noise : str, dict or Innovation, default='gaussian'
        Family of the noise coordinates.

    Returns
    -------
    X : DataMatrix
    """
    if not isinstance(model, FullModel):
        raise InvalidArgument(f"Expected a FullModel, got {type(model).__name__}")
    check_int(n=n)
    if n < model.m + 2:
        raise InvalidArgument(f"Expected n >= m + 2 = {model.m + 2}, got n={n}")
    gen = rng.generator(replicate)

    spiked = model.spiked
    A = spiked.factor
    z = spiked.dist.innovation.sample(gen, (A.shape[1], n))
    xi = A @ z
    eta = build_innovation(noise).sample(gen, (model.p, n))
    return DataMatrix(values=np.vstack((xi, eta)), m=model.m)


def _values(X):
    return X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def sample_covariance(X):
    """S = n^-1 X X^T."""
    values = _values(X)
    return values @ values.T / values.shape[1]


def _scales(values):
    var = np.mean(values ** 2, axis=1)
    zero = np.flatnonzero(var == 0)
    if zero.size:
        raise DegenerateData(f"Row {zero[0]} of the data has zero sample variance", row=int(zero[0]))
    return np.sqrt(var)


def sample_correlation(X):
    """R = S_D^-1/2 S S_D^-1/2, symmetric with an exact unit diagonal.

    Raises
    ------
    DegenerateData : a row with zero sample variance.
    """
    values = _values(X)
    s = _scales(values)
    R = sample_covariance(values) / np.outer(s, s)
    R = (R + R.T) / 2
    np.fill_diagonal(R, 1.0)
    return R


@dataclass(frozen=True, eq=False)
class SampleSpectrum:
    """Leading sample eigenpairs matched to population spikes by rank.

    Attributes
    ----------
    which : {'correlation', 'covariance'}
    eigenvalues : ndarray
        Leading sample eigenvalues in descending order.
    ell_hat : dict
        nu -> nu-th largest sample eigenvalue.
    proj : dict
        nu -> <sample eigenvector, [p_nu, 0]>, nonnegative after sign alignment.
    a_nu : dict
        nu -> signal block of the sample eigenvector, normalized to unit length.
    proj_vec : dict
        nu -> P^T a_nu.
    p_hat : dict
        nu -> unnormalized signal block of the sample eigenvector.
    near_degenerate : list of int
        Spikes whose sample eigenvalue nearly coincides with a neighbour.
    """
    which: str
    eigenvalues: np.ndarray
    ell_hat: dict = field(default_factory=dict)
    proj: dict = field(default_factory=dict)
    a_nu: dict = field(default_factory=dict)
    proj_vec: dict = field(default_factory=dict)
    p_hat: dict = field(default_factory=dict)
    near_degenerate: list = field(default_factory=list)


def _top_eigenpairs(M, k):
    dim = M.shape[0]
    try:
        if dim <= DENSE_EIGEN_MAX_DIM or k >= dim - 1:
            w, V = linalg.eigh(M, subset_by_index=[dim - k, dim - 1])
        else:
            w, V = sparse_linalg.eigsh(M, k=k, which="LA")
    except (linalg.LinAlgError, sparse_linalg.ArpackNoConvergence) as e:
        raise NumericalFailure(f"Symmetric eigensolver failed: {e}")
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def extract_spikes(M, model, nus, which="correlation"):
    """Leading sample eigenpairs of R or S and their alignment with the population spikes.

    Spike nu is matched to the nu-th largest sample eigenvalue.

    Parameters
    ----------
    M : array-like of shape (m + p, m + p)
        Sample correlation or covariance matrix.
    model : SpikedModel or FullModel
    nus : list of int
        1-based spike indices.
    which : {'correlation', 'covariance'}, default='correlation'
        Label of M.

    Returns
    -------
    spectrum : SampleSpectrum
    """
    check_in(["correlation", "covariance"], which=which)
    spiked = getattr(model, "spiked", model)
    m = spiked.m
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < m:
        raise InvalidArgument(f"Expected a square matrix of size at least {m}, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-10 * max(1.0, float(np.abs(M).max()))):
        raise InvalidArgument("Sample matrix must be symmetric")
    nus = [int(nu) for nu in nus]
    for nu in nus:
        check_index(m, nu=nu)

    k = min(M.shape[0], max([m] + nus))
    w, V = _top_eigenpairs(M, k)
    spectrum = SampleSpectrum(which=which, eigenvalues=w)

    for nu in nus:
        idx = nu - 1
        v = V[:, idx]
        p_nu = spiked.eigenvector(nu)
        proj = float(v[:m] @ p_nu)
        if proj < 0:
            v, proj = -v, -proj
        p_hat = v[:m].copy()
        norm = np.linalg.norm(p_hat)
        if norm == 0:
            raise NumericalFailure(f"Sample eigenvector {nu} has a zero signal block")
        a = p_hat / norm

        spectrum.ell_hat[nu] = float(w[idx])
        spectrum.proj[nu] = proj
        spectrum.p_hat[nu] = p_hat
        spectrum.a_nu[nu] = a
        spectrum.proj_vec[nu] = spiked.P.T @ a

        neighbours = [w[j] for j in (idx - 1, idx + 1) if 0 <= j < w.size]
        if any(abs(w[idx] - x) < DEGENERACY_GAP * abs(w[0]) for x in neighbours):
            spectrum.near_degenerate.append(nu)
    return spectrum


########################################################################################################################
# K(t) AND BILINEAR FORMS
def _standardized_blocks(X):
    if not isinstance(X, DataMatrix):
        raise InvalidArgument(f"Expected a DataMatrix, got {type(X).__name__}")
    Xb = X.values / _scales(X.values)[:, None]
    return Xb[:X.m], Xb[X.m:]


def _noise_spectrum(X2b, n):
    """Eigenvalues of R22 = X2b X2b^T / n when p < n, else of the companion C_n = X2b^T X2b / n."""
    p = X2b.shape[0]
    if p < n:
        return linalg.eigvalsh(X2b @ X2b.T / n)
    return linalg.eigvalsh(X2b.T @ X2b / n)


def _check_above_noise(mu, t):
    top = float(mu[-1]) if mu.size else 0.0
    if not t > top:
        raise DomainError(f"t={t} must exceed the largest noise eigenvalue {top:.6g}")


def k_matrix(X, t):
    """Quadratic form K(t) = n^-1 X1_bar B_n(t) X1_bar^T with B_n(t) = t (t I_n - n^-1 X2_bar^T X2_bar)^-1.

    Computed as R11 + R12 (t I_p - R22)^-1 R21 when p < n and through the n x n system otherwise. With no noise block
    K(t) = R11.

    Parameters
    ----------
    X : DataMatrix
    t : float
        Above the largest eigenvalue of R22.

    Returns
    -------
    K : ndarray of shape (m, m)

    Raises
    ------
    DomainError : t inside the noise spectrum.
    """
    X1b, X2b = _standardized_blocks(X)
    n, p = X.n, X.p
    R11 = X1b @ X1b.T / n
    if p == 0:
        return R11
    _check_above_noise(_noise_spectrum(X2b, n), t)

    if p < n:
        R12 = X1b @ X2b.T / n
        R22 = X2b @ X2b.T / n
        K = R11 + R12 @ linalg.solve(t * np.eye(p) - R22, R12.T, assume_a="pos")
    else:
        C = X2b.T @ X2b / n
        K = t * X1b @ linalg.solve(t * np.eye(n) - C, X1b.T, assume_a="pos") / n
    return (K + K.T) / 2


def b_trace(X, t):
    """tr B_n(t) = sum_i t / (t - mu_i) over the n eigenvalues of the companion matrix."""
    _, X2b = _standardized_blocks(X)
    n, p = X.n, X.p
    if p == 0:
        return float(n)
    mu = _noise_spectrum(X2b, n)
    _check_above_noise(mu, t)
    return float(np.sum(t / (t - mu)) + max(n - p, 0))


def w_matrix(X, model, t):
    """W_n(t) = sqrt(n) [K(t) - n^-1 tr B_n(t) Gamma]."""
    spiked = getattr(model, "spiked", model)
    if spiked.m != X.m:
        raise InvalidArgument(f"Model has m={spiked.m} but the data have {X.m} signal rows")
    n = X.n
    return np.sqrt(n) * (k_matrix(X, t) - b_trace(X, t) / n * spiked.Gamma)


def normalized_bilinear_form(x, y, B):
    """n^-1 x_bar^T B y_bar with x_bar = sqrt(n) x / ||x||.

    B is an (n, n) matrix, or an (n,) array holding the diagonal of a diagonal B.

    Raises
    ------
    InvalidArgument : zero vector or mismatched shapes.
    """
    x, y, B = np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(B, dtype=float)
    n = x.shape[0]
    if x.shape != (n,) or y.shape != (n,) or B.shape not in ((n, n), (n,)):
        raise InvalidArgument(f"Expected n-vectors and an n x n matrix, got {x.shape}, {y.shape}, {B.shape}")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise InvalidArgument("Bilinear forms are undefined for zero vectors")
    xb, yb = np.sqrt(n) * x / nx, np.sqrt(n) * y / ny
    if B.ndim == 1:
        return float(xb @ (B * yb) / n)
    return float(xb @ B @ yb / n)


def export_csv(X, path):
    """Write a data matrix to CSV, one row per variable (xi_1..xi_m, eta_1..eta_p)."""
    check_positive(n=X.n)
    index = [f"xi_{i + 1}" for i in range(X.m)] + [f"eta_{j + 1}" for j in range(X.p)]
    frame = pd.DataFrame(X.values, index=index, columns=[f"obs_{k + 1}" for k in range(X.n)])
    frame.to_csv(path, index_label="variable")
    return frame
