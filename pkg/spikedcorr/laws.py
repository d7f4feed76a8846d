"""Marchenko-Pastur and companion laws.

Bulk spectral laws of the noise block, the Stieltjes transform of the companion law and the spike maps rho, rho_dot
and c. The companion law is the limiting spectral distribution of the n x n companion matrix n^-1 X^T X and equals
(1 - gamma) * delta_0 + gamma * F_gamma, where F_gamma is the Marchenko-Pastur law.
"""
import enum
import os
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import DomainError, InvalidArgument, NumericalFailure
from .utils import check_in, check_positive

# Target absolute error of every quadrature
QUAD_ABS_TOL = 1e-10


class SpikeClass(str, enum.Enum):
    """Position of a population spike relative to the phase transition at 1 + sqrt(gamma)."""
    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"
    SUBCRITICAL = "subcritical"


@dataclass(frozen=True)
class AspectRatio:
    """Limiting and finite-sample aspect ratios.

    Parameters
    ----------
    gamma : float
        Limit of p/n.
    gamma_n : float
        Finite-sample ratio p/n.
    """
    gamma: float
    gamma_n: float

    def __post_init__(self):
        check_positive(gamma=self.gamma, gamma_n=self.gamma_n)

    @classmethod
    def from_dims(cls, p, n, gamma=None):
        """Build from the noise dimension and sample size. gamma defaults to p/n."""
        check_positive(p=p, n=n)
        gamma_n = p / n
        return cls(gamma=gamma_n if gamma is None else gamma, gamma_n=gamma_n)


def mp_edges(gamma):
    """Support edges of the Marchenko-Pastur law.

    Parameters
    ----------
    gamma : float
        Aspect ratio.

    Returns
    -------
    a_edge, b_edge : float
        (1 - sqrt(gamma))^2 and (1 + sqrt(gamma))^2.
    """
    check_positive(gamma=gamma)
    s = np.sqrt(gamma)
    return (1 - s) ** 2, (1 + s) ** 2


def critical_spike(gamma):
    """Phase transition 1 + sqrt(gamma)."""
    check_positive(gamma=gamma)
    return 1 + np.sqrt(gamma)


def mp_density(x, gamma):
    """Density of the continuous part of the Marchenko-Pastur law.

    Integrates to min(1, 1/gamma); the remaining mass sits at 0 when gamma > 1.

    Parameters
    ----------
    x : float or array-like
        Evaluation points.
    gamma : float
        Aspect ratio.

    Returns
    -------
    density : ndarray
        sqrt((b - x)(x - a)) / (2 pi gamma x) on (a, b), 0 elsewhere.
    """
    a, b = mp_edges(gamma)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.sqrt(np.clip((b - x) * (x - a), 0, None)) / (2 * np.pi * gamma * x)
    return np.where((x > a) & (x < b), density, 0.0)


def _mp_continuous_integral(f, gamma):
    """Integral of f against the continuous part of F_gamma.

    The substitution x = (a + b)/2 + (b - a)/2 sin(theta) turns the square-root edges into a smooth cos^2 factor.
    """
    a, b = mp_edges(gamma)
    center, half = (a + b) / 2, (b - a) / 2

    def integrand(theta):
        x = center + half * np.sin(theta)
        return f(x) * (half * np.cos(theta)) ** 2 / (2 * np.pi * gamma * x)

    result = integrate.quad(integrand, -np.pi / 2, np.pi / 2, epsabs=QUAD_ABS_TOL / 100, epsrel=1e-12, limit=200,
                            full_output=1)
    value, abserr = result[0], result[1]

    # quad only returns a message when the integration flagged a problem
    if len(result) > 3 or not np.isfinite(value):
        message = result[3] if len(result) > 3 else "non-finite value"
        raise NumericalFailure(f"Quadrature over the Marchenko-Pastur law did not converge: {message}",
                               residual=abserr)
    if abserr > QUAD_ABS_TOL:
        raise NumericalFailure(f"Quadrature error estimate {abserr:.3e} exceeds {QUAD_ABS_TOL:.0e}",
                               residual=abserr)
    return value


@dataclass(frozen=True)
class SpectralLaw:
    """Marchenko-Pastur law F_gamma or its companion law.

    Use the marchenko_pastur and companion_law constructors rather than instantiating directly.

    Parameters
    ----------
    gamma : float
        Aspect ratio.
    a_edge : float
        Lower edge of the continuous part.
    b_edge : float
        Upper edge of the continuous part.
    atom_at_zero : float
        Point mass at 0: max(0, 1 - 1/gamma) for F_gamma, max(0, 1 - gamma) for the companion law.
    companion : bool
        True for the companion law.
    """
    gamma: float
    a_edge: float
    b_edge: float
    atom_at_zero: float
    companion: bool = False

    @property
    def _weight(self):
        # The companion law scales the continuous part of F_gamma by gamma
        return self.gamma if self.companion else 1.0

    def density(self, x):
        """Density of the continuous part."""
        return self._weight * mp_density(x, self.gamma)

    def integrate(self, f):
        """Integral of f against the law.

        Parameters
        ----------
        f : callable
            Function finite on the support. Only evaluated at 0 if the law has an atom there.

        Returns
        -------
        value : float
        """
        value = self._weight * _mp_continuous_integral(f, self.gamma)
        if self.atom_at_zero > 0:
            value += self.atom_at_zero * f(0.0)
        return value

    def total_mass(self):
        return self.integrate(lambda x: 1.0)

    def stieltjes(self, t, method="closed"):
        """Stieltjes transform int (x - t)^-1 dF(x)."""
        m = stieltjes_m(t, self.gamma, method=method)
        if self.companion:
            return m
        # F_gamma and its companion differ by the atom (1 - gamma) delta_0 and a factor gamma
        return (m + (1 - self.gamma) / t) / self.gamma


def marchenko_pastur(gamma):
    """Marchenko-Pastur law F_gamma."""
    a, b = mp_edges(gamma)
    return SpectralLaw(gamma=gamma, a_edge=a, b_edge=b, atom_at_zero=max(0.0, 1 - 1 / gamma), companion=False)


def companion_law(gamma):
    """Companion law (1 - gamma) delta_0 + gamma F_gamma."""
    a, b = mp_edges(gamma)
    return SpectralLaw(gamma=gamma, a_edge=a, b_edge=b, atom_at_zero=max(0.0, 1 - gamma), companion=True)


def companion_integrate(f, gamma):
    """Integrate f against the companion law of ratio gamma.

    Parameters
    ----------
    f : callable
        Bounded continuous function on a neighborhood of the support.
    gamma : float
        Aspect ratio.

    Returns
    -------
    value : float
        (1 - gamma)^+ f(0) + gamma * int f dF_gamma, with the continuous part computed by adaptive quadrature.

    Raises
    ------
    NumericalFailure : the quadrature did not reach an absolute error of 1e-10.
    """
    return companion_law(gamma).integrate(f)


def _check_outside_support(t, gamma):
    a, b = mp_edges(gamma)
    if t == 0 or a <= t <= b:
        raise DomainError(f"t={t} lies in the support of the companion law ([{a:.6g}, {b:.6g}] and 0) "
                          f"for gamma={gamma}")
    return a, b


def _stieltjes_closed(t, gamma, a, b):
    # m solves t m^2 + (t + 1 - gamma) m + 1 = 0. The root is sqrt((t - a)(t - b)) and its sign makes m -> 0 at
    # infinity above the support and matches the quadrature below it.
    root = np.sqrt((t - a) * (t - b))
    if t < a:
        root = -root
    return (-(t + 1 - gamma) + root) / (2 * t), root


def stieltjes_m(t, gamma, method="closed", check=None):
    """Stieltjes transform of the companion law.

    Parameters
    ----------
    t : float
        Point outside the support: t > b, or t < a with t != 0.
    gamma : float
        Aspect ratio.
    method : {'closed', 'quadrature'}, default='closed'
        Closed-form root of the companion equation t = -1/m + gamma/(1 + m) or direct quadrature.
    check : bool, default=None
        Cross-check the closed form against quadrature. Defaults to the SPIKEDCORR_DEBUG environment variable.

    Returns
    -------
    m : float
        int (x - t)^-1 dF(x). Equals -1/ell at t = rho(ell, gamma).

    Raises
    ------
    DomainError : t inside the support.
    """
    check_positive(gamma=gamma)
    check_in(["closed", "quadrature"], method=method)
    a, b = _check_outside_support(t, gamma)

    if method == "quadrature":
        return companion_integrate(lambda x: 1 / (x - t), gamma)

    m, _ = _stieltjes_closed(t, gamma, a, b)

    if check is None:
        check = os.environ.get("SPIKEDCORR_DEBUG", "0") == "1"
    if check:
        m_quad = companion_integrate(lambda x: 1 / (x - t), gamma)
        if abs(m - m_quad) > 1e-8 * max(1.0, abs(m)):
            raise NumericalFailure(f"Closed-form Stieltjes transform {m} disagrees with quadrature {m_quad} at t={t}",
                                   residual=abs(m - m_quad))
    return m


def c_integral(t, gamma, method="closed"):
    """Integral c(t) = int x (t - x)^-2 dF(x) against the companion law.

    The closed form uses c(t) = m(t) + t m'(t), with m' obtained by differentiating the companion equation.
    c diverges as t decreases to the upper edge.

    Parameters
    ----------
    t : float
        Point above the support, t > b.
    gamma : float
        Aspect ratio.
    method : {'closed', 'quadrature'}, default='closed'

    Returns
    -------
    c : float

    Raises
    ------
    DomainError : t <= b.
    """
    check_positive(gamma=gamma)
    check_in(["closed", "quadrature"], method=method)
    a, b = mp_edges(gamma)
    if not t > b:
        raise DomainError(f"c(t) requires t above the upper edge {b:.6g}, got t={t}")

    if method == "quadrature":
        return companion_integrate(lambda x: x / (t - x) ** 2, gamma)

    m, root = _stieltjes_closed(t, gamma, a, b)
    dm = -m * (1 + m) / root
    return m + t * dm


def _check_supercritical(ell, gamma):
    check_positive(gamma=gamma)
    crit = 1 + np.sqrt(gamma)
    if not ell > crit:
        raise DomainError(f"Spike ell={ell} is not supercritical at gamma={gamma}: requires ell > {crit:.6g}")


def rho(ell, gamma):
    """Almost sure limit rho(ell, gamma) = ell + gamma ell / (ell - 1) of a supercritical sample spike.

    Raises
    ------
    DomainError : ell <= 1 + sqrt(gamma).
    """
    _check_supercritical(ell, gamma)
    return ell + gamma * ell / (ell - 1)


def rho_dot(ell, gamma):
    """Derivative of rho in ell, 1 - gamma / (ell - 1)^2, in (0, 1) above the phase transition."""
    _check_supercritical(ell, gamma)
    return 1 - gamma / (ell - 1) ** 2


def classify_spike(ell, gamma, tol=None):
    """Position of a spike relative to the phase transition.

    Parameters
    ----------
    ell : float
        Population spike, must exceed 1.
    gamma : float
        Aspect ratio.
    tol : float, default=None
        Half-width of the critical band. Defaults to 1e-9 * (1 + sqrt(gamma)).

    Returns
    -------
    kind : SpikeClass
    """
    check_positive(gamma=gamma)
    if not ell > 1:
        raise InvalidArgument(f"Spikes must exceed 1 to be in the model, got ell={ell}")
    crit = 1 + np.sqrt(gamma)
    if tol is None:
        tol = 1e-9 * crit

    if abs(ell - crit) <= tol:
        return SpikeClass.CRITICAL
    return SpikeClass.SUPERCRITICAL if ell > crit else SpikeClass.SUBCRITICAL
