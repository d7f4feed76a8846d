"""Population spiked correlation model.

The signal block xi in R^m has covariance Sigma and correlation Gamma = Sigma_D^-1/2 Sigma Sigma_D^-1/2 = P L P^T. The
full observation x = [xi, eta] appends p independent unit-variance noise coordinates, so the population correlation
of x is blkdiag(Gamma, I_p).

Spike indices (nu) are 1-based throughout the package: nu=1 is the largest population eigenvalue.
"""
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from sklearn.utils.validation import check_symmetric

from .exceptions import InvalidArgument
from .innovation.build_innovation import build_innovation
from .innovation.innovation import Innovation
from .utils import check_in, check_index, check_int, check_nonneg, check_square

# Dense order-4 tensors are built on the signal block, cap its size
MAX_SIGNAL_DIM = 64

DIST_KINDS = ("gaussian", "linear_mixing")


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """Distribution of the signal block xi.

    Parameters
    ----------
    kind : {'gaussian', 'linear_mixing'}, default='gaussian'
        - 'gaussian': xi is multivariate normal.
        - 'linear_mixing': xi = A z with i.i.d. innovations z of the given family.
    mixing : ndarray of shape (m, k), default=None
        Mixing matrix A with A A^T = Sigma. Required for 'linear_mixing'. Optional for 'gaussian', where it sets the
        sampling factor (e.g. a rank-revealing factor of a singular Sigma). Defaults to the symmetric square root.
    innovation : str, dict or Innovation, default='gaussian'
        Innovation family, see spikedcorr.innovation.build_innovation.INNOVATION_DICT. Forced to 'gaussian' for
        kind='gaussian'.
    """
    kind: str = "gaussian"
    mixing: Optional[np.ndarray] = None
    innovation: Innovation = "gaussian"

    def __post_init__(self):
        check_in(DIST_KINDS, kind=self.kind)
        innovation = build_innovation("gaussian" if self.kind == "gaussian" else self.innovation)
        object.__setattr__(self, "innovation", innovation)

        if self.mixing is not None:
            mixing = np.array(self.mixing, dtype=float)
            if mixing.ndim != 2 or not np.all(np.isfinite(mixing)):
                raise InvalidArgument(f"Expected mixing to be a finite 2D array, got shape {mixing.shape}")
            mixing.setflags(write=False)
            object.__setattr__(self, "mixing", mixing)
        elif self.kind == "linear_mixing":
            raise InvalidArgument("A linear_mixing distribution requires a mixing matrix")

    @property
    def excess_kurtosis(self):
        return self.innovation.excess_kurtosis

    @property
    def family(self):
        return self.innovation.name

    def to_dict(self):
        return dict(kind=self.kind,
                    kurtosis=self.excess_kurtosis,
                    family=self.family,
                    family_params=self.innovation.get_parameters(),
                    mixing=None if self.mixing is None else self.mixing.tolist())

    @classmethod
    def from_dict(cls, d):
        innovation = dict(family=d.get("family", "gaussian"), **d.get("family_params", dict()))
        spec = cls(kind=d.get("kind", "gaussian"), mixing=d.get("mixing"), innovation=innovation)
        if "kurtosis" in d and not np.isclose(d["kurtosis"], spec.excess_kurtosis):
            raise InvalidArgument(f"Kurtosis {d['kurtosis']} is inconsistent with the {spec.family} family "
                                  f"({spec.excess_kurtosis})")
        return spec


@dataclass(frozen=True, eq=False)
class SpikedModel:
    """Spiked correlation model of the signal block.

    Build instances with build_model or the named constructors of spikedcorr.datasets.

    Attributes
    ----------
    Sigma : ndarray of shape (m, m)
        Covariance of xi.
    sigma_sq : ndarray of shape (m,)
        Variances of xi.
    Gamma : ndarray of shape (m, m)
        Correlation matrix, unit diagonal.
    P : ndarray of shape (m, m)
        Orthogonal eigenvectors of Gamma in columns. The largest-magnitude entry of each column is positive.
    L : ndarray of shape (m,)
        Eigenvalues of Gamma in descending order.
    dist : DistributionSpec
        Distribution of xi.
    factor : ndarray of shape (m, k)
        Sampling factor A with xi = A z.
    singular : bool
        Gamma is allowed to be singular.
    params : dict
        Constructor name and arguments, for reports.
    """
    Sigma: np.ndarray
    sigma_sq: np.ndarray
    Gamma: np.ndarray
    P: np.ndarray
    L: np.ndarray
    dist: DistributionSpec
    factor: np.ndarray
    singular: bool = False
    params: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.Gamma.shape[0]

    @property
    def is_gaussian(self):
        return self.dist.kind == "gaussian"

    def spike(self, nu):
        """Population eigenvalue ell_nu."""
        check_index(self.m, nu=nu)
        return float(self.L[nu - 1])

    def eigenvector(self, nu):
        """Population eigenvector p_nu."""
        check_index(self.m, nu=nu)
        return self.P[:, nu - 1]

    def is_simple(self, nu):
        """Whether ell_nu is separated from every other eigenvalue by more than 1e-8 * ell_1."""
        check_index(self.m, nu=nu)
        if self.m == 1:
            return True
        gaps = np.abs(np.delete(self.L, nu - 1) - self.L[nu - 1])
        return bool(gaps.min() > 1e-8 * self.L[0])

    @property
    def scaled_factor(self):
        """Sampling factor with row i divided by sigma_i, so that xi_bar = scaled_factor @ z."""
        return self.factor / np.sqrt(self.sigma_sq)[:, None]


@dataclass(frozen=True, eq=False)
class FullModel:
    """Spiked model augmented with p independent unit-variance noise coordinates.

    Parameters
    ----------
    spiked : SpikedModel
        Signal block.
    p : int
        Noise dimension.
    """
    spiked: SpikedModel
    p: int

    def __post_init__(self):
        check_int(p=self.p)
        check_nonneg(p=self.p)

    @property
    def m(self):
        return self.spiked.m

    @property
    def dim(self):
        return self.spiked.m + self.p

    def population_correlation(self):
        """blkdiag(Gamma, I_p)."""
        return linalg.block_diag(self.spiked.Gamma, np.eye(self.p))

    def population_eigenvalues(self):
        """ell_1, ..., ell_m followed by p unit eigenvalues, in descending order."""
        return np.sort(np.concatenate((self.spiked.L, np.ones(self.p))))[::-1]

    def spike_vector(self, nu):
        """Population spike eigenvector [p_nu, 0_p] in R^(m+p)."""
        return np.concatenate((self.spiked.eigenvector(nu), np.zeros(self.p)))


def _eigen_decomposition(Gamma):
    """Descending eigenpairs with deterministic signs."""
    w, V = linalg.eigh(Gamma)

    # eigh is ascending; a stable sort on -w keeps tied eigenvalues in solver order
    order = np.argsort(-w, kind="stable")
    L, P = w[order], V[:, order]

    for k in range(P.shape[1]):
        col = np.abs(P[:, k])
        idx = np.flatnonzero(col >= col.max() * (1 - 1e-12))[0]
        if P[idx, k] < 0:
            P[:, k] = -P[:, k]
    return L, P


def build_model(Sigma, dist=None, allow_singular=False, params=None):
    """Build a spiked model from the covariance of the signal block.

    Parameters
    ----------
    Sigma : array-like of shape (m, m)
        Symmetric positive-definite covariance of xi.
    dist : DistributionSpec, default=None
        Distribution of xi. Defaults to Gaussian.
    allow_singular : bool, default=False
        Accept positive semidefinite Sigma. The resulting model is flagged singular.
    params : dict, default=None
        Metadata stored on the model (constructor name, arguments).

    Returns
    -------
    model : SpikedModel

    Raises
    ------
    InvalidArgument : Sigma not symmetric positive definite, or mixing matrix inconsistent with Sigma.
    """
    (Sigma,) = check_square(Sigma=Sigma)
    m = Sigma.shape[0]
    if m > MAX_SIGNAL_DIM:
        raise InvalidArgument(f"Signal dimension m={m} exceeds the supported maximum {MAX_SIGNAL_DIM}")
    if dist is None:
        dist = DistributionSpec()

    scale = max(1.0, float(np.abs(Sigma).max()))
    try:
        check_symmetric(Sigma, tol=1e-10 * scale, raise_exception=True)
    except ValueError:
        raise InvalidArgument("Sigma must be symmetric")
    Sigma = (Sigma + Sigma.T) / 2

    norm = np.linalg.norm(Sigma, 2)
    w_sigma, V_sigma = linalg.eigh(Sigma)
    if allow_singular:
        if w_sigma[0] < -1e-10 * norm:
            raise InvalidArgument(f"Sigma is not positive semidefinite (smallest eigenvalue {w_sigma[0]:.3e})")
    elif w_sigma[0] <= 1e-12 * norm:
        raise InvalidArgument(f"Sigma is not positive definite (smallest eigenvalue {w_sigma[0]:.3e})")

    sigma_sq = np.diag(Sigma).copy()
    if np.any(sigma_sq <= 0):
        raise InvalidArgument("Sigma has non-positive variances on its diagonal")

    s = np.sqrt(sigma_sq)
    Gamma = Sigma / np.outer(s, s)
    Gamma = (Gamma + Gamma.T) / 2
    np.fill_diagonal(Gamma, 1.0)
    L, P = _eigen_decomposition(Gamma)

    if dist.mixing is not None:
        factor = dist.mixing
        if factor.shape[0] != m:
            raise InvalidArgument(f"Mixing matrix has {factor.shape[0]} rows, expected {m}")
        if not np.allclose(factor @ factor.T, Sigma, rtol=0, atol=1e-10 * scale):
            raise InvalidArgument("Mixing matrix A is inconsistent with Sigma: A A^T != Sigma")
    else:
        factor = (V_sigma * np.sqrt(np.clip(w_sigma, 0, None))) @ V_sigma.T

    for a in (Sigma, sigma_sq, Gamma, P, L):
        a.setflags(write=False)
    factor = np.array(factor)
    factor.setflags(write=False)

    return SpikedModel(Sigma=Sigma, sigma_sq=sigma_sq, Gamma=Gamma, P=P, L=L, dist=dist, factor=factor,
                       singular=bool(allow_singular), params=dict(params or dict()))


def model_to_dict(model):
    """JSON-serializable description of a spiked model."""
    return dict(m=model.m,
                sigma=model.Sigma.ravel().tolist(),
                dist=model.dist.to_dict(),
                singular=model.singular,
                params=model.params)


def model_from_dict(d):
    """Inverse of model_to_dict."""
    try:
        m = int(d["m"])
        Sigma = np.asarray(d["sigma"], dtype=float).reshape(m, m)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidArgument(f"Malformed model description: {e}")
    dist = DistributionSpec.from_dict(d.get("dist", dict()))
    return build_model(Sigma, dist=dist, allow_singular=d.get("singular", False), params=d.get("params"))


def save_model(model, path):
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=2)


def load_model(path):
    with open(path) as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgument(f"Model file {path} is not valid JSON: {e}")
    return model_from_dict(d)
