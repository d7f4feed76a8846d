"""Asymptotic eigenstructure of spiked sample correlation matrices.

Predictions for the sample spike eigenvalues and eigenvectors of R = S_D^-1/2 S S_D^-1/2 as n, p -> infinity with
p/n -> gamma:

- supercritical spikes (ell > 1 + sqrt(gamma)): almost sure limits, CLT variances of the eigenvalues and CLT
  covariances of the eigenvector projections, with the Gaussian, non-Gaussian (kappa) and normalization (kcheck) terms
  reported separately;
- subcritical spikes: limits at the bulk edge;
- the bilinear-form CLT behind both, and the closed forms of the constant-correlation example.

Spike indices are 1-based.
"""
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg

from .cumulants import _kcheck_parts, contract, contract_matrix, fourth_moment_tensor, kappa_tensor, kcheck_tensor
from .exceptions import DomainError, InvalidArgument, NearCriticalWarning, NumericalFailure, UnsupportedOperation
from .laws import SpikeClass, classify_spike, critical_spike, mp_edges, rho, rho_dot
from .utils import check_between, check_index, check_int, check_positive, check_square

# Spikes closer than this to the phase transition are refused
CRITICAL_GUARD = 1e-6
# Spikes closer than this trigger a NearCriticalWarning
NEAR_CRITICAL_MARGIN = 0.05


def _check_spike(model, nu, gamma):
    """Validate that spike nu is simple and supercritical at gamma. Returns ell_nu."""
    check_index(model.m, nu=nu)
    check_positive(gamma=gamma)
    ell = model.spike(nu)
    crit = critical_spike(gamma)

    if not model.is_simple(nu):
        raise DomainError(f"Spike {nu} (ell={ell:.6g}) is not a simple eigenvalue of Gamma")
    if ell < crit + CRITICAL_GUARD:
        kind = "critical" if abs(ell - crit) < CRITICAL_GUARD else "subcritical"
        raise DomainError(f"Spike {nu} (ell={ell:.6g}) is {kind} at gamma={gamma:.6g}: the limit theorems require "
                          f"ell > 1 + sqrt(gamma) = {crit:.6g}")
    if ell < crit + NEAR_CRITICAL_MARGIN:
        warnings.warn(f"Spike {nu} (ell={ell:.6g}) is within {NEAR_CRITICAL_MARGIN} of the phase transition "
                      f"{crit:.6g} at gamma={gamma:.6g}. Asymptotic variances are unreliable.", NearCriticalWarning)
    return ell


def _to_serializable(d):
    out = dict()
    for k, v in d.items():
        if isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif isinstance(v, dict):
            out[k] = _to_serializable(v)
        elif isinstance(v, np.generic):
            out[k] = v.item()
        else:
            out[k] = v
    return out


########################################################################################################################
# EIGENVALUES
@dataclass(frozen=True)
class EigenvaluePrediction:
    """Limit and CLT variance of a supercritical sample spike eigenvalue.

    sqrt(n) (ell_hat_nu - rho_n) converges to N(0, var_total), where rho_n = rho(ell_nu, gamma_n).

    Attributes
    ----------
    nu : int
    ell : float
        Population spike.
    gamma, gamma_n : float
        Limiting and finite-sample aspect ratios.
    rho, rho_n : float
        rho(ell, gamma) and the finite-sample centering rho(ell, gamma_n).
    rho_dot, rho_dot_n : float
        Derivatives of rho at gamma and gamma_n.
    var_terms : dict
        'gaussian_cov' = 2 rho_dot ell^2, 'nongaussian' = rho_dot^2 [P^nu, kappa],
        'correlation' = rho_dot^2 [P^nu, kcheck].
    var_total : float
        Sum of var_terms.
    var_total_n : float
        var_total with rho_dot replaced by rho_dot_n.
    var_covariance, var_covariance_n : float
        Variance of the sample covariance eigenvalue when the signal variances are 1 (no correlation term).
    """
    nu: int
    ell: float
    gamma: float
    gamma_n: float
    rho: float
    rho_n: float
    rho_dot: float
    rho_dot_n: float
    var_terms: dict
    var_total: float
    var_total_n: float
    var_covariance: float
    var_covariance_n: float

    def to_dict(self):
        return _to_serializable(asdict(self))


def _variance_terms(ell, rd, proj_kappa, proj_kcheck):
    return dict(gaussian_cov=2 * rd * ell ** 2, nongaussian=rd ** 2 * proj_kappa, correlation=rd ** 2 * proj_kcheck)


def eigenvalue_prediction(model, nu, gamma, gamma_n=None):
    """Theorem-level prediction for the nu-th sample eigenvalue of R.

    var_total = 2 rho_dot ell^2 + rho_dot^2 [P^nu, kappa] + rho_dot^2 [P^nu, kcheck].

    Parameters
    ----------
    model : SpikedModel
    nu : int
        1-based spike index.
    gamma : float
        Limiting aspect ratio.
    gamma_n : float, default=None
        Finite-sample aspect ratio p/n used for the centering rho_n. Defaults to gamma.

    Returns
    -------
    prediction : EigenvaluePrediction

    Raises
    ------
    DomainError : spike not simple, or not supercritical at gamma or gamma_n.
    """
    gamma_n = gamma if gamma_n is None else gamma_n
    ell = _check_spike(model, nu, gamma)
    _check_spike(model, nu, gamma_n)

    proj_kappa = contract(model.P, nu, nu, nu, nu, kappa_tensor(model))
    proj_kcheck = contract(model.P, nu, nu, nu, nu, kcheck_tensor(model))
    rd, rd_n = rho_dot(ell, gamma), rho_dot(ell, gamma_n)
    terms = _variance_terms(ell, rd, proj_kappa, proj_kcheck)
    terms_n = _variance_terms(ell, rd_n, proj_kappa, proj_kcheck)

    var_total = sum(terms.values())
    if not var_total > 0:
        raise NumericalFailure(f"Non-positive asymptotic variance {var_total:.3e} for spike {nu}", residual=var_total)

    return EigenvaluePrediction(nu=nu, ell=ell, gamma=gamma, gamma_n=gamma_n, rho=rho(ell, gamma),
                                rho_n=rho(ell, gamma_n), rho_dot=rd, rho_dot_n=rd_n, var_terms=terms,
                                var_total=var_total, var_total_n=sum(terms_n.values()),
                                var_covariance=terms["gaussian_cov"] + terms["nongaussian"],
                                var_covariance_n=terms_n["gaussian_cov"] + terms_n["nongaussian"])


def covariance_eigenvalue_variance(model, nu, gamma):
    """CLT variance 2 rho_dot ell^2 + rho_dot^2 [P^nu, kappa] of the sample covariance spike.

    Only meaningful for the sample covariance when the signal variances are all 1."""
    ell = _check_spike(model, nu, gamma)
    rd = rho_dot(ell, gamma)
    return 2 * rd * ell ** 2 + rd ** 2 * contract(model.P, nu, nu, nu, nu, kappa_tensor(model))


def _require_gaussian(model, operation):
    if not model.is_gaussian:
        raise UnsupportedOperation(f"{operation} requires a Gaussian model, got a {model.dist.kind} model "
                                   f"with {model.dist.family} innovations")


def _spike_traces(model, nu):
    """sum p_i^4 and sum (p_i kappa_ij p_j)^2 for p = p_nu."""
    p = model.eigenvector(nu)
    PGP = p[:, None] * model.Gamma * p[None, :]
    return float(np.sum(p ** 4)), float(np.sum(PGP ** 2))


def eigenvalue_variance_gaussian(model, nu, gamma):
    """Closed-form CLT variance of a Gaussian sample correlation spike.

    2 ell^2 rho_dot [1 - rho_dot (2 ell tr P_D^4 - tr (P_D Gamma P_D)^2)], with P_D = diag(p_nu).

    Raises
    ------
    UnsupportedOperation : non-Gaussian model.
    """
    _require_gaussian(model, "eigenvalue_variance_gaussian")
    ell = _check_spike(model, nu, gamma)
    rd = rho_dot(ell, gamma)
    fourth, quad = _spike_traces(model, nu)
    return 2 * ell ** 2 * rd * (1 - rd * (2 * ell * fourth - quad))


@dataclass(frozen=True)
class VarianceReduction:
    """Whether normalizing by sample variances reduces the CLT variance of a Gaussian spike.

    Attributes
    ----------
    nu : int
    delta : float
        2 ell sum p_i^4 - sum (p_i kappa_ij p_j)^2. The variance is reduced iff delta > 0.
    reduced : bool
    conditions : dict
        Sufficient conditions for delta > 0: 'i' Gamma and p_nu entrywise nonnegative, 'ii' 2 ell sum p_i^4 > 1,
        'iii' 2 ell > ell_1^2.
    ratio : float or None
        Correlation over covariance variance 1 - rho_dot delta, when the spike is supercritical at gamma.
    """
    nu: int
    delta: float
    reduced: bool
    conditions: dict
    ratio: Optional[float] = None

    def to_dict(self):
        return _to_serializable(asdict(self))


def variance_reduction_report(model, nu, gamma):
    """Variance reduction diagnostics for a Gaussian spike.

    Parameters
    ----------
    model : SpikedModel
        Gaussian model.
    nu : int
    gamma : float

    Returns
    -------
    report : VarianceReduction
    """
    _require_gaussian(model, "variance_reduction_report")
    check_index(model.m, nu=nu)
    check_positive(gamma=gamma)
    ell = model.spike(nu)
    p = model.eigenvector(nu)
    fourth, quad = _spike_traces(model, nu)
    delta = 2 * ell * fourth - quad

    conditions = {
        "i": bool(np.all(model.Gamma >= -1e-12) and np.all(p >= -1e-12)),
        "ii": bool(2 * ell * fourth > 1),
        "iii": bool(2 * ell > model.L[0] ** 2),
    }
    ratio = None
    if ell > critical_spike(gamma):
        ratio = 1 - rho_dot(ell, gamma) * delta
    return VarianceReduction(nu=nu, delta=delta, reduced=bool(delta > 0), conditions=conditions, ratio=ratio)


def centering_shift(ell, gamma, gamma_n, n):
    """Mean of sqrt(n) (ell_hat - rho(ell, gamma)) when the data have ratio gamma_n.

    Equals sqrt(n) (rho(ell, gamma_n) - rho(ell, gamma)) = a ell / (ell - 1) for gamma_n = gamma + a / sqrt(n).
    """
    check_positive(n=n)
    return np.sqrt(n) * (rho(ell, gamma_n) - rho(ell, gamma))


########################################################################################################################
# EIGENVECTORS
@dataclass(frozen=True, eq=False)
class EigenvectorPrediction:
    """Limit and CLT covariance of the signal part of a supercritical sample eigenvector.

    <p_hat_nu, p_nu>^2 converges to proj_sq_limit and sqrt(n) (P^T a_nu - e_nu) to N(0, Sigma_nu).

    Attributes
    ----------
    nu : int
    ell, gamma, rho, rho_dot : float
    proj_sq_limit : float
        rho_dot ell / rho.
    D_nu : ndarray of shape (m, m)
        sum_{k != nu} (ell_nu - ell_k)^-1 e_k e_k^T.
    Sigma_tilde : ndarray of shape (m, m)
        rho_dot^-1 ell_k ell_nu delta_kl + [P^{k nu l nu}, kappa] + [P^{k nu l nu}, kcheck].
    Sigma_nu : ndarray of shape (m, m)
        D_nu Sigma_tilde D_nu, in the basis of population eigenvectors. Row and column nu are exactly zero.
    basis : str
        'projection' (P^T a_nu).
    """
    nu: int
    ell: float
    gamma: float
    rho: float
    rho_dot: float
    proj_sq_limit: float
    D_nu: np.ndarray
    Sigma_tilde: np.ndarray
    Sigma_nu: np.ndarray
    P: np.ndarray
    basis: str = "projection"

    def coordinate_covariance(self):
        """Covariance P Sigma_nu P^T of sqrt(n) (a_nu - p_nu)."""
        return self.P @ self.Sigma_nu @ self.P.T

    def to_dict(self):
        return _to_serializable(dict(nu=self.nu, ell=self.ell, gamma=self.gamma, rho=self.rho, rho_dot=self.rho_dot,
                                     proj_sq_limit=self.proj_sq_limit, basis=self.basis,
                                     D_nu=np.diag(self.D_nu), Sigma_tilde=self.Sigma_tilde, Sigma_nu=self.Sigma_nu))


def _resolvent_weights(model, nu, ell):
    idx = nu - 1
    d = np.zeros(model.m)
    others = np.arange(model.m) != idx
    d[others] = 1 / (ell - model.L[others])
    return np.diag(d)


def _sandwich(D, Sigma_tilde, nu):
    Sigma_tilde = (Sigma_tilde + Sigma_tilde.T) / 2
    Sigma = D @ Sigma_tilde @ D
    Sigma = (Sigma + Sigma.T) / 2
    Sigma[nu - 1, :] = 0.0
    Sigma[:, nu - 1] = 0.0

    scale = max(1.0, float(np.abs(Sigma).max()))
    w_min = linalg.eigvalsh(Sigma)[0]
    if w_min < -1e-12 * scale:
        raise NumericalFailure(f"Eigenvector covariance is not positive semidefinite (eigenvalue {w_min:.3e})",
                               residual=w_min)
    return Sigma_tilde, Sigma


def eigenvector_prediction(model, nu, gamma):
    """Theorem-level prediction for the signal part a_nu of the nu-th sample eigenvector.

    Parameters
    ----------
    model : SpikedModel
    nu : int
        1-based spike index.
    gamma : float

    Returns
    -------
    prediction : EigenvectorPrediction

    Raises
    ------
    DomainError : spike not simple or not supercritical.
    """
    ell = _check_spike(model, nu, gamma)
    rd = rho_dot(ell, gamma)

    D = _resolvent_weights(model, nu, ell)
    Sigma_tilde = (np.diag(model.L * ell / rd)
                   + contract_matrix(model.P, nu, kappa_tensor(model))
                   + contract_matrix(model.P, nu, kcheck_tensor(model)))
    Sigma_tilde, Sigma = _sandwich(D, Sigma_tilde, nu)

    return EigenvectorPrediction(nu=nu, ell=ell, gamma=gamma, rho=rho(ell, gamma), rho_dot=rd,
                                 proj_sq_limit=rd * ell / rho(ell, gamma), D_nu=D, Sigma_tilde=Sigma_tilde,
                                 Sigma_nu=Sigma, P=np.array(model.P))


def _gaussian_projections(model, nu):
    """Matrices Z = P^T P_D (Gamma o Gamma) P_D P and Y = P^T P_D^2 P for P_D = diag(p_nu)."""
    p = model.eigenvector(nu)
    P = model.P
    Z = P.T @ (p[:, None] * model.Gamma ** 2 * p[None, :]) @ P
    Y = P.T @ (p[:, None] ** 2 * P)
    return Z, Y


def eigenvector_covariance_gaussian(model, nu, gamma):
    """Closed-form eigenvector CLT covariance Sigma_nu for Gaussian data.

    Sigma_tilde = (ell/rho_dot) L + (ell I + L)(Z/2 - ell Y)(ell I + L) + ell (ell^2 Y - L Y L), then
    Sigma_nu = D_nu Sigma_tilde D_nu.

    Returns
    -------
    Sigma_nu : ndarray of shape (m, m)

    Raises
    ------
    UnsupportedOperation : non-Gaussian model.
    """
    _require_gaussian(model, "eigenvector_covariance_gaussian")
    ell = _check_spike(model, nu, gamma)
    rd = rho_dot(ell, gamma)
    Z, Y = _gaussian_projections(model, nu)
    L = np.diag(model.L)
    shifted = ell * np.eye(model.m) + L

    Sigma_tilde = (ell / rd) * L + shifted @ (Z / 2 - ell * Y) @ shifted + ell * (ell ** 2 * Y - L @ Y @ L)
    _, Sigma = _sandwich(_resolvent_weights(model, nu, ell), Sigma_tilde, nu)
    return Sigma


def gaussian_eigenvector_entry(model, nu, k, l, gamma):
    """Entry (k, l) of the Gaussian Sigma_nu from the entrywise formula.

    (ell - ell_k)^-1 (ell - ell_l)^-1 [(ell/rho_dot) ell_k delta_kl + (ell + ell_k)(ell + ell_l) Z_kl / 2
    - ell (ell (ell_k + ell_l) + 2 ell_k ell_l) Y_kl]. Zero when k or l equals nu.
    """
    _require_gaussian(model, "gaussian_eigenvector_entry")
    check_index(model.m, k=k, l=l)
    ell = _check_spike(model, nu, gamma)
    if nu in (k, l):
        return 0.0
    rd = rho_dot(ell, gamma)
    Z, Y = _gaussian_projections(model, nu)
    lk, ll = model.L[k - 1], model.L[l - 1]
    zkl, ykl = Z[k - 1, l - 1], Y[k - 1, l - 1]

    bracket = ((ell / rd) * lk * (k == l)
               + (ell + lk) * (ell + ll) * zkl / 2
               - ell * (ell * (lk + ll) + 2 * lk * ll) * ykl)
    return float(bracket / ((ell - lk) * (ell - ll)))


########################################################################################################################
# SUBCRITICAL SPIKES
@dataclass(frozen=True)
class SubcriticalLimits:
    """Almost sure limits of a subcritical sample spike: the bulk edge and a vanishing projection."""
    eigenvalue_limit: float
    projection_limit: float = 0.0

    def to_dict(self):
        return asdict(self)


def subcritical_limits(gamma):
    """Limits (1 + sqrt(gamma))^2 and 0 of a subcritical spike eigenvalue and squared projection."""
    return SubcriticalLimits(eigenvalue_limit=mp_edges(gamma)[1], projection_limit=0.0)


########################################################################################################################
# BILINEAR FORM CLT
@dataclass(frozen=True)
class CltParams:
    """Weights of the bilinear-form CLT at t = rho(ell, gamma).

    omega = phi = rho^2 / ell^2 and theta = omega / rho_dot.
    """
    omega: float
    theta: float
    phi: float

    def to_dict(self):
        return asdict(self)


def clt_params(ell, gamma):
    """CLT weights for a supercritical spike.

    Raises
    ------
    DomainError : ell not supercritical.
    """
    omega = (rho(ell, gamma) / ell) ** 2
    return CltParams(omega=omega, theta=omega / rho_dot(ell, gamma), phi=omega)


def bilinear_clt_covariance(C_xx, C_xy, C_yx, C_yy, C_zz, C_ww, C_wz, theta, omega, phi):
    """Limiting covariance D = theta J + omega K + phi K2 of a vector of normalized bilinear forms.

    J = C_xy o C_yx + C_xx o C_yy, K = C_zz - J and K2 = C_ww - C_wz - C_wz^T.

    Parameters
    ----------
    C_xx, C_xy, C_yx, C_yy : array-like of shape (M, M)
        Cross-covariances of the pairs (x_l, y_l). C_xx and C_yy have unit diagonals.
    C_zz, C_ww, C_wz : array-like of shape (M, M)
        Covariances of z_l = x_l y_l and w_l = rho_l (x_l^2 + y_l^2) / 2.
    theta, omega, phi : float
        CLT weights, see clt_params.

    Returns
    -------
    D : ndarray of shape (M, M)

    Raises
    ------
    InvalidArgument : dimension mismatch or non-unit diagonals.
    """
    mats = check_square(C_xx=C_xx, C_xy=C_xy, C_yx=C_yx, C_yy=C_yy, C_zz=C_zz, C_ww=C_ww, C_wz=C_wz)
    C_xx, C_xy, C_yx, C_yy, C_zz, C_ww, C_wz = mats
    if len({a.shape for a in mats}) != 1:
        raise InvalidArgument(f"Covariance blocks have mismatched shapes {[a.shape for a in mats]}")
    for name, C in (("C_xx", C_xx), ("C_yy", C_yy)):
        if not np.allclose(np.diag(C), 1.0, rtol=0, atol=1e-10):
            raise InvalidArgument(f"{name} must have a unit diagonal")

    J = C_xy * C_yx + C_xx * C_yy
    K = C_zz - J
    K2 = C_ww - C_wz - C_wz.T
    return theta * J + omega * K + phi * K2


def pair_index(m):
    """0-based index pairs (i, j) with i <= j, in the order used by pairs_matrix. There are m (m + 1) / 2."""
    check_int(m=m)
    return [(i, j) for i in range(m) for j in range(i, m)]


def pairs_matrix(T):
    """Restrict an (m, m, m, m) covariance array to the symmetric index pairs of pair_index."""
    T = np.asarray(T)
    pairs = pair_index(T.shape[0])
    rows = np.array([i for i, _ in pairs])
    cols = np.array([j for _, j in pairs])
    return T[rows[:, None], cols[:, None], rows[None, :], cols[None, :]]


def induced_pair_covariances(model):
    """Covariance blocks of the bilinear-form CLT induced by the entries of the standardized signal block.

    Pair l = (i, j) maps to x_l = xi_bar_i and y_l = xi_bar_j.

    Returns
    -------
    blocks : dict
        C_xx, C_xy, C_yx, C_yy, C_zz, C_ww, C_wz as (M, M) arrays, M = m (m + 1) / 2.
    """
    K = np.asarray(model.Gamma)
    mu = fourth_moment_tensor(model).values
    pp, pc, _ = _kcheck_parts(K, mu)
    m = model.m
    ones = np.ones((m, m))

    # Index the (i, j, i', j') arrays, then restrict to pairs
    blocks = dict(
        C_xx=np.einsum("ik,jl->ijkl", K, ones),
        C_xy=np.einsum("il,jk->ijkl", K, ones),
        C_yx=np.einsum("jk,il->ijkl", K, ones),
        C_yy=np.einsum("jl,ik->ijkl", K, ones),
        C_zz=mu - np.einsum("ij,kl->ijkl", K, K),
        C_ww=pp,
        C_wz=pc,
    )
    return {k: pairs_matrix(v) for k, v in blocks.items()}


def wmatrix_covariance(model, nu, gamma):
    """Limiting covariance of the entries of W_n(rho_nu).

    Cov[W_ij, W_i'j'] = theta (kappa_ij' kappa_ji' + kappa_ii' kappa_jj') + omega kappa_iji'j' + phi kcheck_iji'j'.

    Parameters
    ----------
    model : SpikedModel
    nu : int
    gamma : float

    Returns
    -------
    cov : ndarray of shape (m, m, m, m)
        Use pairs_matrix to restrict to the distinct entries i <= j.
    """
    ell = _check_spike(model, nu, gamma)
    params = clt_params(ell, gamma)
    K = np.asarray(model.Gamma)
    gaussian_part = np.einsum("il,jk->ijkl", K, K) + np.einsum("ik,jl->ijkl", K, K)
    return (params.theta * gaussian_part
            + params.omega * kappa_tensor(model).values
            + params.phi * kcheck_tensor(model).values)


########################################################################################################################
# CONSTANT CORRELATION CLOSED FORMS
def constant_correlation_summary(m, r, gamma):
    """Closed forms of the Gaussian constant-correlation model for the leading spike.

    Parameters
    ----------
    m : int
        Dimension, at least 2.
    r : float
        Common correlation in (0, 1), large enough for ell_1 = 1 + r (m - 1) to be supercritical.
    gamma : float

    Returns
    -------
    summary : dict
        ell1, ell2, rho_dot, delta, var_cov (2 ell1^2 rho_dot), var_corr, var_ratio, zeta, Sigma_cov_22,
        Sigma_corr_22 and eig_ratio (Sigma_corr_22 / Sigma_cov_22).
    """
    check_int(m=m)
    check_between(2, np.inf, m=m)
    check_between(0, 1, r=r)
    ell1, ell2 = 1 + r * (m - 1), 1 - r
    rd = rho_dot(ell1, gamma)

    delta = 1 - (1 - r) ** 2 * (1 - 1 / m)
    var_cov = 2 * ell1 ** 2 * rd
    var_ratio = 1 - rd * delta

    zeta = 1 - r + 0.5 * (1 + r) / (1 + (1 - r) / (r * m))
    sigma_cov_22 = ell1 * ell2 / ((r * m) ** 2 * rd)
    sigma_corr_22 = sigma_cov_22 - zeta / (r * m) ** 2 * ell1 * ell2 * (ell1 + ell2) / m

    return dict(m=m, r=r, gamma=gamma, ell1=ell1, ell2=ell2, rho_dot=rd, delta=delta, var_cov=var_cov,
                var_corr=var_cov * var_ratio, var_ratio=var_ratio, zeta=zeta, Sigma_cov_22=sigma_cov_22,
                Sigma_corr_22=sigma_corr_22, eig_ratio=1 - zeta * rd * (ell1 + ell2) / m)


def constant_correlation_limits(m, r, gamma):
    """Limits of the correlation-to-covariance variance ratios of the constant-correlation model.

    Returns
    -------
    limits : dict
        'var_ratio_r_to_1' = gamma / (m - 1)^2, 'var_ratio_m_to_inf' = (1 - r)^2 and
        'eig_ratio_m_to_inf' = (1 - r)(1 - r/2).
    """
    check_positive(gamma=gamma)
    return dict(var_ratio_r_to_1=gamma / (m - 1) ** 2,
                var_ratio_m_to_inf=(1 - r) ** 2,
                eig_ratio_m_to_inf=(1 - r) * (1 - r / 2))


def supercritical_r_grid(m, gamma, num=50, margin=NEAR_CRITICAL_MARGIN, r_max=0.99):
    """Grid of r values for which ell_1 = 1 + r (m - 1) clears the phase transition by margin."""
    r_min = (np.sqrt(gamma) + margin) / (m - 1)
    if r_min >= r_max:
        raise DomainError(f"No supercritical r below {r_max} for m={m}, gamma={gamma}")
    return np.linspace(r_min, r_max, num)


def variance_curve(m, gamma, r_grid=None):
    """Eigenvalue CLT variances of the constant-correlation model along r.

    Returns
    -------
    table : pandas.DataFrame
        Columns r, m, gamma, var_cov, var_corr.
    """
    r_grid = supercritical_r_grid(m, gamma) if r_grid is None else r_grid
    rows = list()
    for r in r_grid:
        s = constant_correlation_summary(m, float(r), gamma)
        rows.append(dict(r=float(r), m=m, gamma=gamma, var_cov=s["var_cov"], var_corr=s["var_corr"]))
    return pd.DataFrame(rows, columns=["r", "m", "gamma", "var_cov", "var_corr"])


def eigenvector_curve(m, gamma, r_grid=None):
    """Eigenvector CLT variances Sigma_{1,22} of the constant-correlation model along r.

    Returns
    -------
    table : pandas.DataFrame
        Columns r, m, gamma, Sigma_cov_22, Sigma_corr_22.
    """
    r_grid = supercritical_r_grid(m, gamma) if r_grid is None else r_grid
    rows = list()
    for r in r_grid:
        s = constant_correlation_summary(m, float(r), gamma)
        rows.append(dict(r=float(r), m=m, gamma=gamma, Sigma_cov_22=s["Sigma_cov_22"],
                         Sigma_corr_22=s["Sigma_corr_22"]))
    return pd.DataFrame(rows, columns=["r", "m", "gamma", "Sigma_cov_22", "Sigma_corr_22"])


########################################################################################################################
# ALL PREDICTIONS FOR ONE SPIKE
def predict_spike(model, nu, gamma, gamma_n=None):
    """Classify spike nu and collect every available prediction.

    Returns
    -------
    report : dict
        'class' and, for supercritical spikes, 'eigenvalue', 'eigenvector' and (Gaussian models) 'variance_reduction';
        for subcritical spikes, 'limits'.

    Raises
    ------
    DomainError : critical spike.
    """
    check_index(model.m, nu=nu)
    ell = model.spike(nu)
    kind = classify_spike(ell, gamma)
    report = dict(nu=nu, ell=ell, gamma=gamma, gamma_n=gamma if gamma_n is None else gamma_n, **{"class": kind.value})

    if kind is SpikeClass.CRITICAL:
        raise DomainError(f"Spike {nu} (ell={ell:.6g}) is critical at gamma={gamma}: no limit theorem applies")
    if kind is SpikeClass.SUBCRITICAL:
        report["limits"] = subcritical_limits(gamma).to_dict()
        return report

    report["eigenvalue"] = eigenvalue_prediction(model, nu, gamma, gamma_n).to_dict()
    report["eigenvector"] = eigenvector_prediction(model, nu, gamma).to_dict()
    if model.is_gaussian:
        report["variance_reduction"] = variance_reduction_report(model, nu, gamma).to_dict()
    return report
