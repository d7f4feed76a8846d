"""Named spiked models.

Constructors for the correlation structures used in the worked examples and simulations, and a registry so models
can be described by short strings such as 'const-corr:m=10,r=0.9'."""
import os

import numpy as np

from .exceptions import InvalidArgument
from .model import DistributionSpec, build_model, load_model
from .utils import check_between, check_in, check_int, check_positive, check_type


def _mixing_factor(Gamma, mixing):
    """Square mixing matrix A with A A^T = Gamma."""
    check_in(["cholesky", "sqrt"], mixing=mixing)
    if mixing == "cholesky":
        return np.linalg.cholesky(Gamma)
    w, V = np.linalg.eigh(Gamma)
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.T


def _distribution(innovation, factor):
    if innovation is None or innovation == "gaussian":
        return DistributionSpec(kind="gaussian", mixing=factor)
    return DistributionSpec(kind="linear_mixing", mixing=factor, innovation=innovation)


def identity_model(m, innovation=None):
    """Uncorrelated signal block, Gamma = I_m. No spike separates from the bulk.

    Parameters
    ----------
    m : int
        Signal dimension.
    innovation : str, default=None
        Innovation family. None or 'gaussian' gives a Gaussian model.

    Returns
    -------
    model : SpikedModel
    """
    check_int(m=m)
    check_positive(m=m)
    Gamma = np.eye(m)
    dist = _distribution(innovation, None if innovation in (None, "gaussian") else np.eye(m))
    return build_model(Gamma, dist, params=dict(name="identity", m=m, innovation=innovation))


def constant_correlation_model(m, r, innovation=None, mixing="cholesky"):
    """Equicorrelated signal block, Gamma = (1 - r) I + r 1 1^T.

    The leading spike is ell_1 = 1 + r (m - 1) with eigenvector m^-1/2 1; the other m - 1 eigenvalues equal 1 - r.

    Parameters
    ----------
    m : int
        Signal dimension, at least 2.
    r : float
        Common correlation in [0, 1).
    innovation : str, default=None
        Innovation family. None or 'gaussian' gives a Gaussian model, any other family a linear mixing model.
    mixing : {'cholesky', 'sqrt'}, default='cholesky'
        Mixing matrix of the linear mixing model. The fourth cumulants depend on this choice.

    Returns
    -------
    model : SpikedModel
    """
    check_int(m=m)
    check_between(2, np.inf, m=m)
    check_between(0, 1, r=r)
    if r >= 1:
        raise InvalidArgument(f"Expected r in [0, 1), got {r}")

    Gamma = (1 - r) * np.eye(m) + r * np.ones((m, m))
    factor = None if innovation in (None, "gaussian") else _mixing_factor(Gamma, mixing)
    return build_model(Gamma, _distribution(innovation, factor),
                       params=dict(name="const-corr", m=m, r=r, innovation=innovation))


def two_group_model(m, r, innovation=None):
    """Two negatively correlated groups of identical variables.

    Gamma = [[1, -r], [-r, 1]] kron 1 1^T with blocks of size m/2. Gamma has rank 2 with eigenvalues (1 + r) m / 2
    and (1 - r) m / 2, so the model is flagged singular. Sampling uses the rank-2 mixing matrix whose rows are
    replicated within each group.

    Parameters
    ----------
    m : int
        Even signal dimension.
    r : float
        Between-group correlation magnitude in (0, 1).
    innovation : str, default=None
        Innovation family of the two latent variables.

    Returns
    -------
    model : SpikedModel
    """
    check_int(m=m)
    check_positive(m=m)
    if m % 2:
        raise InvalidArgument(f"Expected an even m, got {m}")
    check_between(0, 1, r=r)
    if not 0 < r < 1:
        raise InvalidArgument(f"Expected r in (0, 1), got {r}")

    half = m // 2
    Gamma = np.kron(np.array([[1.0, -r], [-r, 1.0]]), np.ones((half, half)))
    factor = np.vstack((np.tile([1.0, 0.0], (half, 1)),
                        np.tile([-r, np.sqrt(1 - r ** 2)], (half, 1))))
    return build_model(Gamma, _distribution(innovation, factor), allow_singular=True,
                       params=dict(name="two-group", m=m, r=r, innovation=innovation))


def two_group_supercritical(m, r, gamma):
    """Whether both spikes of the two-group model exceed the phase transition, i.e. m > 2 (1 + sqrt(gamma)) / (1 - r)."""
    check_positive(gamma=gamma)
    return bool(m > 2 * (1 + np.sqrt(gamma)) / (1 - r))


def ar1_block_model(block, r, total_m=None, innovation=None):
    """AR(1) correlation r^|i - j| on a leading block, identity elsewhere.

    Parameters
    ----------
    block : int
        Size of the correlated block.
    r : float
        Lag-one correlation in (-1, 1).
    total_m : int, default=None
        Signal dimension. Defaults to block.
    innovation : str, default=None
        Innovation family.

    Returns
    -------
    model : SpikedModel
    """
    total_m = block if total_m is None else total_m
    check_int(block=block, total_m=total_m)
    check_positive(block=block)
    if block > total_m:
        raise InvalidArgument(f"Expected block <= total_m, got block={block}, total_m={total_m}")
    check_type((int, float, np.floating), r=r)
    if not -1 < r < 1:
        raise InvalidArgument(f"Expected r in (-1, 1), got {r}")

    idx = np.arange(block)
    Sigma = np.eye(total_m)
    Sigma[:block, :block] = r ** np.abs(idx[:, None] - idx[None, :])
    factor = None if innovation in (None, "gaussian") else _mixing_factor(Sigma, "cholesky")
    return build_model(Sigma, _distribution(innovation, factor),
                       params=dict(name="ar1-block", m=total_m, r=r, block=block, innovation=innovation))


MODEL_DICT = {
    'identity': identity_model,
    'const-corr': constant_correlation_model,
    'equicorr': constant_correlation_model,
    'two-group': two_group_model,
    'ar1-block': ar1_block_model,
}


def _parse_value(value):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def build_named_model(descriptor):
    """Build a model from a 'name:key=value,...' string.

    Parameters
    ----------
    descriptor: str
        Model name from MODEL_DICT, optionally followed by ':' and comma-separated keyword arguments,
        e.g. 'const-corr:m=10,r=0.9' or 'const-corr:m=4,r=0.8,innovation=rademacher'.

    Returns
    -------
    model: SpikedModel

    """
    check_type(str, model=descriptor)
    name, _, args = descriptor.partition(":")
    check_in(MODEL_DICT.keys(), model=name.strip())

    kwargs = dict()
    for item in filter(None, (a.strip() for a in args.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise InvalidArgument(f"Malformed model argument '{item}' in '{descriptor}', expected key=value")
        kwargs[key.strip()] = _parse_value(value.strip())

    try:
        return MODEL_DICT[name.strip()](**kwargs)
    except TypeError as e:
        raise InvalidArgument(f"Invalid arguments for model '{name}': {e}")


def resolve_model(spec):
    """Model from a JSON file path or a named descriptor."""
    check_type(str, model=spec)
    if spec.endswith(".json") or os.path.isfile(spec):
        if not os.path.isfile(spec):
            raise InvalidArgument(f"Model file {spec} does not exist")
        return load_model(spec)
    return build_named_model(spec)
