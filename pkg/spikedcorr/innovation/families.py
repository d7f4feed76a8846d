import numpy as np

from spikedcorr.innovation.innovation import Innovation
from spikedcorr.utils import check_between


class GaussianInnovation(Innovation):
    """Standard normal innovations."""
    name = "gaussian"

    def sample(self, rng, size):
        return rng.standard_normal(size)

    @property
    def excess_kurtosis(self):
        return 0.0


class Rademacher(Innovation):
    """Symmetric +-1 innovations. z^2 is identically 1, the lowest kurtosis possible."""
    name = "rademacher"

    def sample(self, rng, size):
        return 2.0 * rng.integers(0, 2, size=size) - 1.0

    @property
    def excess_kurtosis(self):
        return -2.0


class Uniform(Innovation):
    """Uniform innovations on [-sqrt(3), sqrt(3)]."""
    name = "uniform"

    def sample(self, rng, size):
        bound = np.sqrt(3.0)
        return rng.uniform(-bound, bound, size=size)

    @property
    def excess_kurtosis(self):
        return -1.2


class Laplace(Innovation):
    """Laplace innovations with scale 1/sqrt(2)."""
    name = "laplace"

    def sample(self, rng, size):
        return rng.laplace(0.0, 1 / np.sqrt(2.0), size=size)

    @property
    def excess_kurtosis(self):
        return 3.0


class TwoPointAsymmetric(Innovation):
    """Standardized Bernoulli(p) innovations, (B - p) / sqrt(p (1 - p)).

    Parameters
    ----------
    p : float, default=0.5
        Success probability in (0, 1). p=0.5 recovers the Rademacher family.
    """
    name = "two_point"

    def __init__(self, p=0.5):
        super().__init__(p=p)

    def check_parameters(self):
        check_between(1e-6, 1 - 1e-6, p=self.parameters["p"])

    def sample(self, rng, size):
        p = self.parameters["p"]
        b = (rng.random(size=size) < p).astype(float)
        return (b - p) / np.sqrt(p * (1 - p))

    @property
    def excess_kurtosis(self):
        q = self.parameters["p"] * (1 - self.parameters["p"])
        return (1 - 6 * q) / q
