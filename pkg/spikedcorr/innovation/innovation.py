"""Innovation families.

Encapsulate the i.i.d., zero-mean, unit-variance variables z used to build the signal block xi = A z and the noise
block eta."""
from abc import ABC, abstractmethod
import copy


class Innovation(ABC):
    """Abstract class for innovation families.

    Innovations are scalar distributions with zero mean, unit variance and finite fourth moment. The only property the
    asymptotic theory needs is the excess kurtosis; sampling is used by the Monte Carlo harness.

    All family parameters should be values of the self.parameters dict attribute.

    To add an innovation family, you must :
        - Inherit from Innovation.
        - Implement the sample method and the excess_kurtosis property.
        - Add a corresponding string in the INNOVATION_DICT of build_innovation.py.

    Attributes
    ----------
    self.parameters : dict
        Dictionary with all family parameters.

    """
    name = None

    def __init__(self, **parameters):
        self.parameters = dict(parameters)
        self.check_parameters()

    def check_parameters(self):
        """Validate family parameters."""

    def get_parameters(self):
        """Get a copy of family parameters.

        Returns
        -------
        parameters: dict
            Copy of family parameters.

        """
        return copy.deepcopy(self.parameters)

    def to_dict(self):
        """Descriptor that build_innovation accepts."""
        return dict(family=self.name, **self.get_parameters())

    @abstractmethod
    def sample(self, rng, size):
        """Sample i.i.d. innovations.

        Parameters
        ----------
        rng : numpy.random.Generator
            Random stream.
        size : int or tuple of int
            Output shape.

        Returns
        -------
        samples : ndarray of shape size
            Samples

        """
        raise NotImplementedError

    @property
    @abstractmethod
    def excess_kurtosis(self):
        """E[z^4] - 3."""
        raise NotImplementedError

    def __repr__(self):
        params = ", ".join(f"{k}={v}" for k, v in self.parameters.items())
        return f"{self.__class__.__name__}({params})"
