"""Order-4 tensors of the standardized signal block.

With xi_bar_i = xi_i / sigma_i and kappa_ij = E[xi_bar_i xi_bar_j] (= Gamma_ij), this module computes

    mu_iji'j'     = E[xi_bar_i xi_bar_j xi_bar_i' xi_bar_j']                        (fourth moments)
    kappa_iji'j'  = mu_iji'j' - kappa_ij kappa_i'j' - kappa_ij' kappa_ji' - kappa_ii' kappa_jj'   (cumulants)
    kcheck_iji'j' = Cov(psi_ij, psi_i'j') - Cov(psi_ij, chi_i'j') - Cov(chi_ij, psi_i'j')

where chi_ij = xi_bar_i xi_bar_j and psi_ij = kappa_ij (xi_bar_i^2 + xi_bar_j^2) / 2. kcheck is the correction that
normalizing by sample variances adds to the covariance-matrix fluctuations.

Contractions [P^{mu mu' nu nu'}, A] = sum p_mu,i p_mu',j p_nu,i' p_nu',j' A_iji'j' project these tensors on population
eigenvectors.
"""
import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateData, InvalidArgument, UnsupportedOperation
from .model import DIST_KINDS
from .utils import check_in, check_index, check_int, check_square

SYMMETRY_TAGS = ("full", "pair")

# Index permutations generating each symmetry group
_PAIR_PERMUTATIONS = ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1))


@dataclass(frozen=True, eq=False)
class Tensor4:
    """Dense order-4 tensor over m indices.

    Parameters
    ----------
    values : ndarray of shape (m, m, m, m)
        Entries indexed (i, j, i', j').
    symmetry : {'full', 'pair'}, default='full'
        'full' for tensors invariant under every index permutation (moments, cumulants). 'pair' for tensors invariant
        under i <-> j, i' <-> j' and (ij) <-> (i'j') (kcheck).
    """
    values: np.ndarray
    symmetry: str = "full"

    def __post_init__(self):
        check_in(SYMMETRY_TAGS, symmetry=self.symmetry)
        values = np.array(self.values, dtype=float)
        if values.ndim != 4 or len(set(values.shape)) != 1:
            raise InvalidArgument(f"Expected an (m, m, m, m) array, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self):
        return self.values.shape[0]

    def symmetry_defect(self):
        """Largest entrywise change under the permutations of the declared symmetry group."""
        perms = itertools.permutations(range(4)) if self.symmetry == "full" else _PAIR_PERMUTATIONS
        return max(float(np.abs(self.values - self.values.transpose(p)).max()) for p in perms)

    def to_dict(self):
        return dict(shape=list(self.values.shape), symmetry=self.symmetry, values=self.values.ravel().tolist())

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["values"], dtype=float).reshape(d["shape"]), symmetry=d.get("symmetry", "full"))


def _values(A):
    return A.values if isinstance(A, Tensor4) else np.asarray(A, dtype=float)


def _check_dist(model):
    if model.dist.kind not in DIST_KINDS:
        raise UnsupportedOperation(f"Fourth moments are not available for distribution kind '{model.dist.kind}'")


def isserlis_tensor(kappa2):
    """Gaussian fourth moments kappa_ij kappa_i'j' + kappa_ii' kappa_jj' + kappa_ij' kappa_ji'."""
    K = np.asarray(kappa2, dtype=float)
    return (np.einsum("ij,kl->ijkl", K, K)
            + np.einsum("ik,jl->ijkl", K, K)
            + np.einsum("il,jk->ijkl", K, K))


def _cumulant_values(model):
    _check_dist(model)
    m = model.m
    k4 = model.dist.excess_kurtosis
    if model.is_gaussian or k4 == 0:
        return np.zeros((m, m, m, m))
    A = model.scaled_factor
    return k4 * np.einsum("ik,jk,lk,nk->ijln", A, A, A, A)


def fourth_moment_tensor(model):
    """Fourth moments mu of the standardized signal block.

    Isserlis' formula for Gaussian models. Linear mixing models xi = A z add
    kappa_4 * sum_k a_ik a_jk a_i'k a_j'k, where a is A with row i divided by sigma_i.

    Parameters
    ----------
    model : SpikedModel

    Returns
    -------
    mu : Tensor4

    Raises
    ------
    UnsupportedOperation : unsupported distribution kind.
    """
    return Tensor4(isserlis_tensor(model.Gamma) + _cumulant_values(model), symmetry="full")


def kappa_tensor(model):
    """Scaled fourth-order cumulants kappa. Exactly zero for Gaussian models."""
    return Tensor4(_cumulant_values(model), symmetry="full")


def _kcheck_parts(kappa2, mu):
    """Cov(psi, psi), Cov(psi, chi) and Cov(chi, psi) as (m, m, m, m) arrays."""
    K = kappa2
    KK = np.einsum("ij,kl->ijkl", K, K)

    # mu_{i i i' i'}
    d2 = np.einsum("iikk->ik", mu)
    s = d2[:, None, :, None] + d2[:, None, None, :] + d2[None, :, :, None] + d2[None, :, None, :]
    cov_psi_psi = 0.25 * KK * s - KK

    # mu_{i i i' j'}
    t = np.einsum("iikl->ikl", mu)
    cov_psi_chi = 0.5 * K[:, :, None, None] * (t[:, None, :, :] + t[None, :, :, :]) - KK

    # mu_{i j i' i'}
    u = np.einsum("ijkk->ijk", mu)
    cov_chi_psi = 0.5 * K[None, None, :, :] * (u[:, :, :, None] + u[:, :, None, :]) - KK

    return cov_psi_psi, cov_psi_chi, cov_chi_psi


def kcheck_tensor(model):
    """Normalization correction kcheck, computed from the fourth moments.

    Parameters
    ----------
    model : SpikedModel

    Returns
    -------
    kcheck : Tensor4
        Symmetric under i <-> j, i' <-> j' and (ij) <-> (i'j').
    """
    mu = fourth_moment_tensor(model).values
    pp, pc, cp = _kcheck_parts(np.asarray(model.Gamma), mu)
    return Tensor4(pp - pc - cp, symmetry="pair")


def gaussian_kcheck_tensor(kappa2):
    """Closed form of kcheck for Gaussian data.

    1/2 k_ij k_i'j' (k_ii'^2 + k_jj'^2 + k_ij'^2 + k_i'j^2) - k_i'j' (k_ii' k_ji' + k_ij' k_jj')
    - k_ij (k_ii' k_ij' + k_i'j k_jj')
    """
    K = np.asarray(kappa2, dtype=float)
    KK = np.einsum("ij,kl->ijkl", K, K)
    Q = K ** 2
    squares = Q[:, None, :, None] + Q[None, :, None, :] + Q[:, None, None, :] + Q[None, :, :, None]

    f = np.einsum("ik,jk->ijk", K, K)
    second = K[None, None, :, :] * (f[:, :, :, None] + f[:, :, None, :])
    h = np.einsum("ik,il->ikl", K, K)
    third = K[:, :, None, None] * (h[:, None, :, :] + h[None, :, :, :])
    return Tensor4(0.5 * KK * squares - second - third, symmetry="pair")


def projection_tensor(P, mu, mu2, nu, nu2):
    """Rank-one tensor p_mu (x) p_mu' (x) p_nu (x) p_nu' (1-based column indices)."""
    (P,) = check_square(P=P)
    check_index(P.shape[0], mu=mu, mu2=mu2, nu=nu, nu2=nu2)
    return np.einsum("i,j,k,l->ijkl", P[:, mu - 1], P[:, mu2 - 1], P[:, nu - 1], P[:, nu2 - 1])


def contract(P, mu, mu2, nu, nu2, A, method="factored"):
    """Contraction [P^{mu mu' nu nu'}, A].

    Parameters
    ----------
    P : ndarray of shape (m, m)
        Orthogonal matrix, eigenvectors in columns.
    mu, mu2, nu, nu2 : int
        1-based column indices.
    A : Tensor4 or ndarray of shape (m, m, m, m)
    method : {'factored', 'reference'}, default='factored'
        'factored' contracts index pairs through an m^2 x m^2 reshape. 'reference' sums all m^4 terms.

    Returns
    -------
    value : float
    """
    (P,) = check_square(P=P)
    check_in(["factored", "reference"], method=method)
    m = P.shape[0]
    values = _values(A)
    if values.shape != (m,) * 4:
        raise InvalidArgument(f"Expected a tensor of shape {(m,) * 4}, got {values.shape}")
    check_index(m, mu=mu, mu2=mu2, nu=nu, nu2=nu2)
    a, b, c, d = (P[:, k - 1] for k in (mu, mu2, nu, nu2))

    if method == "reference":
        return float(np.einsum("i,j,k,l,ijkl->", a, b, c, d, values, optimize=False))

    left = np.outer(a, b).ravel()
    right = np.outer(c, d).ravel()
    return float(left @ values.reshape(m * m, m * m) @ right)


def contract_matrix(P, nu, A):
    """All contractions [P^{k nu l nu}, A] for k, l = 1..m as an (m, m) matrix."""
    (P,) = check_square(P=P)
    check_index(P.shape[0], nu=nu)
    p = P[:, nu - 1]
    B = np.einsum("ijkl,j,l->ik", _values(A), p, p)
    return P.T @ B @ P


def kcheck_split(model, nu):
    """Contractions of the two parts of kcheck on spike nu.

    Returns
    -------
    psi_psi : float
        [P^nu, Cov(psi, psi)].
    psi_chi : float
        [P^nu, Cov(psi, chi)]. By the pair symmetry [P^nu, kcheck] = psi_psi - 2 psi_chi.
    """
    check_index(model.m, nu=nu)
    mu = fourth_moment_tensor(model).values
    pp, pc, _ = _kcheck_parts(np.asarray(model.Gamma), mu)
    return contract(model.P, nu, nu, nu, nu, pp), contract(model.P, nu, nu, nu, nu, pc)


@dataclass(frozen=True, eq=False)
class EmpiricalCumulants:
    """Plug-in estimates of the order-2 and order-4 tensors with batch standard errors.

    Attributes
    ----------
    kappa2, kappa2_se : ndarray of shape (m, m)
    mu, mu_se, kappa, kappa_se, kcheck, kcheck_se : ndarray of shape (m, m, m, m)
    mode : {'oracle', 'plug-in'}
        'oracle' when psi and the Isserlis part used the population kappa_ij, 'plug-in' when they used the sample one.
    n : int
        Number of samples.
    n_batches : int
        Number of non-overlapping batches behind the standard errors.
    """
    kappa2: np.ndarray
    kappa2_se: np.ndarray
    mu: np.ndarray
    mu_se: np.ndarray
    kappa: np.ndarray
    kappa_se: np.ndarray
    kcheck: np.ndarray
    kcheck_se: np.ndarray
    mode: str
    n: int
    n_batches: int


def _batch_estimates(Z, kappa2):
    n, m = Z.shape
    k2 = Z.T @ Z / n
    K = k2 if kappa2 is None else kappa2

    chi = (Z[:, :, None] * Z[:, None, :]).reshape(n, m * m)
    mu = (chi.T @ chi / n).reshape(m, m, m, m)
    kappa = mu - isserlis_tensor(K)

    sq = Z ** 2
    psi = (K[None, :, :] * (sq[:, :, None] + sq[:, None, :]) / 2).reshape(n, m * m)
    psi_c = psi - psi.mean(axis=0)
    chi_c = chi - chi.mean(axis=0)
    cov_psi_psi = psi_c.T @ psi_c / n
    cov_psi_chi = psi_c.T @ chi_c / n
    kcheck = (cov_psi_psi - cov_psi_chi - cov_psi_chi.T).reshape(m, m, m, m)
    return k2, mu, kappa, kcheck


def empirical_cumulants(samples, sigma=None, kappa2=None, n_batches=20):
    """Monte Carlo estimates of kappa2, mu, kappa and kcheck from draws of xi.

    Parameters
    ----------
    samples : array-like of shape (n, m)
        Draws of xi, one per row. The data are not centered.
    sigma : array-like of shape (m,), default=None
        Population standard deviations. When None, each column is scaled by its sample root mean square.
    kappa2 : array-like of shape (m, m), default=None
        Population correlation used in psi and in the Isserlis part of kappa (oracle mode). When None the sample
        correlation is used (plug-in mode).
    n_batches : int, default=20
        Number of non-overlapping batches for the standard errors.

    Returns
    -------
    estimates : EmpiricalCumulants

    Raises
    ------
    InvalidArgument : fewer than 100 samples or a constant column.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2:
        raise InvalidArgument(f"Expected samples of shape (n, m), got {X.shape}")
    check_int(n_batches=n_batches)
    n, m = X.shape
    if n < max(100, 2 * n_batches):
        raise InvalidArgument(f"Expected at least {max(100, 2 * n_batches)} samples, got {n}")
    constant = np.flatnonzero(np.ptp(X, axis=0) == 0)
    if constant.size:
        raise DegenerateData(f"Column {constant[0]} of the samples is constant", row=int(constant[0]))

    if sigma is None:
        scale = np.sqrt(np.mean(X ** 2, axis=0))
    else:
        scale = np.asarray(sigma, dtype=float)
    if kappa2 is not None:
        kappa2 = np.asarray(kappa2, dtype=float)
    Xb = X / scale

    estimates = [_batch_estimates(Xb[idx], kappa2) for idx in np.array_split(np.arange(n), n_batches)]
    means, ses = list(), list()
    for k in range(4):
        stacked = np.stack([e[k] for e in estimates])
        means.append(stacked.mean(axis=0))
        ses.append(stacked.std(axis=0, ddof=1) / np.sqrt(n_batches))

    return EmpiricalCumulants(kappa2=means[0], kappa2_se=ses[0], mu=means[1], mu_se=ses[1], kappa=means[2],
                              kappa_se=ses[2], kcheck=means[3], kcheck_se=ses[3],
                              mode="plug-in" if kappa2 is None else "oracle", n=n, n_batches=n_batches)
