from .families import GaussianInnovation, Laplace, Rademacher, TwoPointAsymmetric, Uniform
from .innovation import Innovation
from ..utils import check_in, check_type

INNOVATION_DICT = {
    'gaussian': GaussianInnovation,
    'normal': GaussianInnovation,
    'rademacher': Rademacher,
    'uniform': Uniform,
    'laplace': Laplace,
    'two_point': TwoPointAsymmetric,
}


def build_innovation(descriptor, **kwargs):
    """Build an innovation family.

    Is a simple switch between a string, a dict and an existing Innovation. A dict must hold the
    family name under the 'family' key, remaining keys are family parameters.

    Parameters
    ----------
    descriptor: str, dict or Innovation

    Returns
    -------
    innovation: Innovation

    """
    if isinstance(descriptor, Innovation):
        return descriptor
    if isinstance(descriptor, dict):
        kwargs = {**{k: v for k, v in descriptor.items() if k != 'family'}, **kwargs}
        descriptor = descriptor.get('family')
    check_type(str, innovation=descriptor)
    check_in(INNOVATION_DICT.keys(), innovation=descriptor)
    return INNOVATION_DICT[descriptor](**kwargs)
