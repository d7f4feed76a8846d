import numbers

import numpy as np

from .exceptions import InvalidArgument


# Check parameters utils adapted from the PHATE library
def check_positive(**params):
    """Check that parameters are positive as expected
    Raises
    ------
    InvalidArgument : unacceptable choice of parameters
    """
    for p in params:
        if not isinstance(params[p], numbers.Number) or not params[p] > 0:
            raise InvalidArgument("Expected {} > 0, got {}".format(p, params[p]))


def check_nonneg(**params):
    """Check that parameters are non-negative as expected
    Raises
    ------
    InvalidArgument : unacceptable choice of parameters
    """
    for p in params:
        if not isinstance(params[p], numbers.Number) or not params[p] >= 0:
            raise InvalidArgument("Expected {} >= 0, got {}".format(p, params[p]))


def check_int(**params):
    """Check that parameters are integers as expected
    Raises
    ------
    InvalidArgument : unacceptable choice of parameters
    """
    for p in params:
        if isinstance(params[p], bool) or not isinstance(params[p], numbers.Integral):
            raise InvalidArgument("Expected {} integer, got {}".format(p, params[p]))


def check_in(choices, **params):
    """Checks parameters are in a list of allowed parameters
    Parameters
    ----------
    choices : array-like, accepted values
    params : object
        Named arguments, parameters to be checked
    Raises
    ------
    InvalidArgument : unacceptable choice of parameters
    """
    for p in params:
        if params[p] not in choices:
            raise InvalidArgument(
                "{} value {} not recognized. Choose from {}".format(
                    p, params[p], list(choices)
                )
            )


def check_type(type, **params):
    """Checks parameters are of a given type.
    Parameters
    ----------
    type : type or tuple of types, accepted types
    params : object
        Named arguments, parameters to be checked
    Raises
    ------
    InvalidArgument : unacceptable choice of parameters
    """
    for p in params:
        if not isinstance(params[p], type):
            raise InvalidArgument(
                "{} value {} has type {}, expected {}".format(
                    p, params[p], params[p].__class__.__name__, type
                )
            )


def check_between(v_min, v_max, **params):
    """Checks parameters are in a specified range
    Parameters
    ----------
    v_min : float, minimum allowed value (inclusive)
    v_max : float, maximum allowed value (inclusive)
    params : object
        Named arguments, parameters to be checked
    Raises
    ------
    InvalidArgument : unacceptable choice of parameters
    """
    for p in params:
        if not isinstance(params[p], numbers.Number) or not v_min <= params[p] <= v_max:
            raise InvalidArgument(
                "Expected {} between {} and {}, "
                "got {}".format(p, v_min, v_max, params[p])
            )


def check_index(m, **params):
    """Check that spike indices are 1-based integers in 1..m.

    Parameters
    ----------
    m : int, number of spikes
    params : object
        Named arguments, indices to be checked
    Raises
    ------
    InvalidArgument : index out of range
    """
    check_int(**params)
    for p in params:
        if not 1 <= params[p] <= m:
            raise InvalidArgument("Expected {} between 1 and {}, got {}".format(p, m, params[p]))


def check_square(**params):
    """Check that parameters are finite square 2D arrays and return them as float arrays.

    Returns
    -------
    arrays : list of ndarray
        Validated arrays, in the order of params.
    Raises
    ------
    InvalidArgument : not a finite square matrix
    """
    arrays = list()
    for p in params:
        a = np.asarray(params[p], dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgument(f"Expected {p} to be a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidArgument(f"{p} contains non-finite values")
        arrays.append(a)
    return arrays


def print_parameters(params, name, indent=1, np_precision=4):
    """Print a vector or matrix with nice formatting.

    Parameters
    ----------
    params: np.ndarray
        Array to print. Scalars are printed on a single line.
    name: str
        Label of the array.
    indent: int
        Indent of the print.
    np_precision: int
        Float precision for numpy prints.
    """
    indent_str = "    " * indent
    params = np.asarray(params)

    with np.printoptions(precision=np_precision, suppress=True, linewidth=120):
        if params.ndim == 0:
            print(indent_str + f"{name:<30}: {params.item():.{np_precision}f}")
        elif params.ndim == 1:
            print(indent_str + f"{name:<30}: {params}")
        else:
            print(indent_str + f"{name} :")
            for row in params:
                print(indent_str + f"    {row}")


def print_report(report):
    """Print a detailed Monte Carlo report.

    Parameters
    ----------
    report: spikedcorr.montecarlo.McReport
        Report returned by one of the MonteCarlo run methods.
    """
    print("=" * 80)
    print(f"MONTE CARLO REPORT : {report.target}")
    print("=" * 80)
    print(f"    Spike                         : {report.nu}")
    print(f"    Number of observations        : {report.n}")
    print(f"    Noise dimension               : {report.p}")
    print(f"    Aspect ratio gamma_n          : {report.gamma_n:.4f}")
    print(f"    Replicates                    : {report.replicates}")
    print(f"    Elapsed (s)                   : {report.elapsed:.2f}")

    print("    " + "=" * 76)
    print(f"    Model")
    print("    " + "=" * 76)
    for key, value in report.model_params.items():
        if isinstance(value, numbers.Number) and not isinstance(value, bool):
            print_parameters(value, key, indent=2)
        else:
            print(f"        {key:<30}: {value}")

    print("    " + "=" * 76)
    print(f"    Statistics")
    print("    " + "=" * 76)
    for stat in report.statistics:
        verdict = "PASS" if stat.verdict else "FAIL"
        theory = "-" if stat.theory is None else f"{stat.theory:.5g}"
        se = "-" if stat.se is None else f"{stat.se:.3g}"
        print(f"        {stat.name:<28} empirical={stat.empirical:<11.5g} theory={theory:<11} se={se:<9} [{verdict}]")

    if report.normality is not None:
        print("    " + "=" * 76)
        print(f"    Normality")
        print("    " + "=" * 76)
        flag = " (flagged)" if report.normality["flagged"] else ""
        print(f"        KS statistic={report.normality['ks_statistic']:.4f} "
              f"p-value={report.normality['ks_pvalue']:.4f}{flag}")
    if report.notes:
        print(f"    Note: {report.notes}")
