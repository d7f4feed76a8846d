"""Monte Carlo harness comparing simulated sample spikes with their asymptotic predictions.

Each run simulates independent replicates of the spiked model, aggregates fluctuation statistics and grades them
against the asymptotics module.
"""
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg, stats
from sklearn.base import BaseEstimator

from . import utils
from .asymptotics import centering_shift, eigenvalue_prediction, eigenvector_prediction, wmatrix_covariance
from .exceptions import InvalidArgument
from .innovation.build_innovation import build_innovation
from .laws import critical_spike, mp_edges, rho, rho_dot
from .model import FullModel
from .sampling import RngSpec, b_trace, extract_spikes, generate, k_matrix, sample_correlation, sample_covariance

SCHEMA_VERSION = 1

TARGET_KINDS = ("eigenvalue_clt", "eigenvector_clt", "subcritical", "cov_vs_corr", "k_diagnostic")

TOLERANCE_RULES = ("se", "rel", "upper", "sign", "info")

# CLT targets need enough replicates for the variance standard errors to mean anything
MIN_CLT_REPLICATES = 100

FRAME_COLUMNS = ["r", "gamma", "m", "n", "stat", "theory", "empirical", "se", "verdict"]


########################################################################################################################
# STATISTICS AND REPORTS
@dataclass
class Statistic:
    """Empirical quantity graded against a theoretical value.

    Parameters
    ----------
    name : str
    empirical : float
    theory : float, default=None
    se : float, default=None
        Standard error of the empirical value.
    rule : {'se', 'rel', 'upper', 'sign', 'info'}, default='se'
        - 'se': pass iff |empirical - theory| <= tol * se.
        - 'rel': pass iff |empirical - theory| <= tol * |theory|.
        - 'upper': pass iff empirical <= tol.
        - 'sign': pass iff empirical has the sign of theory and |empirical| > tol * se.
        - 'info': always pass, reported for context.
    tol : float, default=4.0
    """
    name: str
    empirical: float
    theory: Optional[float] = None
    se: Optional[float] = None
    rule: str = "se"
    tol: float = 4.0
    verdict: bool = field(init=False)

    def __post_init__(self):
        utils.check_in(TOLERANCE_RULES, rule=self.rule)
        self.empirical = float(self.empirical)
        self.theory = None if self.theory is None else float(self.theory)
        self.se = None if self.se is None else float(self.se)
        self.verdict = bool(self._evaluate())

    def _evaluate(self):
        if self.rule == "info":
            return True
        if self.rule == "upper":
            return self.empirical <= self.tol
        if self.rule == "rel":
            return abs(self.empirical - self.theory) <= self.tol * abs(self.theory)
        if self.rule == "sign":
            return np.sign(self.empirical) == np.sign(self.theory) and abs(self.empirical) > self.tol * self.se
        return abs(self.empirical - self.theory) <= self.tol * self.se

    def to_dict(self):
        return dict(name=self.name, empirical=self.empirical, theory=self.theory, se=self.se, rule=self.rule,
                    tol=float(self.tol), verdict=self.verdict)


@dataclass
class McReport:
    """Outcome of one Monte Carlo run.

    Attributes
    ----------
    target : str
        One of TARGET_KINDS.
    nu : int
    n, p : int
        Sample size and noise dimension (the largest ones for grids).
    gamma, gamma_n : float
        Limiting and finite-sample aspect ratios.
    replicates : int
    statistics : list of Statistic
    normality : dict or None
        Kolmogorov-Smirnov statistic and p-value of the standardized fluctuations. 'flagged' marks p < 0.05, which
        does not fail the run.
    tables : dict
        Named pandas DataFrames (samples, histograms, scatters, grids).
    config : dict
        Resolved harness parameters.
    model_params : dict
        Metadata of the spiked model.
    elapsed : float
        Wall time in seconds.
    notes : str
    """
    target: str
    nu: int
    n: int
    p: int
    gamma: float
    gamma_n: float
    replicates: int
    statistics: list
    normality: Optional[dict] = None
    tables: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    model_params: dict = field(default_factory=dict)
    elapsed: float = 0.0
    notes: str = ""

    @property
    def passed(self):
        return all(s.verdict for s in self.statistics)

    def statistic(self, name):
        for s in self.statistics:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self, runtime=False):
        """JSON-serializable report. Runtime metadata is left out unless runtime=True so reports are reproducible."""
        d = dict(schema_version=SCHEMA_VERSION, target=self.target, nu=self.nu, n=self.n, p=self.p,
                 gamma=self.gamma, gamma_n=self.gamma_n, replicates=self.replicates, passed=self.passed,
                 statistics=[s.to_dict() for s in self.statistics], normality=self.normality,
                 tables={k: v.to_dict(orient="list") for k, v in self.tables.items()},
                 config=self.config, model=self.model_params, notes=self.notes)
        if runtime:
            d["runtime"] = dict(elapsed=self.elapsed)
        return d

    def to_frame(self):
        """One row per statistic with columns r, gamma, m, n, stat, theory, empirical, se, verdict."""
        rows = [dict(r=self.model_params.get("r", np.nan), gamma=self.gamma, m=self.model_params.get("m"), n=self.n,
                     stat=s.name, theory=s.theory, empirical=s.empirical, se=s.se,
                     verdict="pass" if s.verdict else "fail") for s in self.statistics]
        return pd.DataFrame(rows, columns=FRAME_COLUMNS)

    def save(self, path, format="json", runtime=False):
        """Write the report. CSV output also writes each table to '<stem>_<table>.csv'."""
        utils.check_in(["json", "csv"], format=format)
        if format == "json":
            with open(path, "w") as f:
                json.dump(self.to_dict(runtime=runtime), f, indent=2, default=_json_default)
            return
        self.to_frame().to_csv(path, index=False)
        stem = str(path)[:-4] if str(path).endswith(".csv") else str(path)
        for name, table in self.tables.items():
            table.to_csv(f"{stem}_{name}.csv", index=False)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


@dataclass(frozen=True)
class Target:
    """Run request for MonteCarlo.run.

    Parameters
    ----------
    kind : str
        One of TARGET_KINDS.
    nu : int, default=1
    projections : list of tuple, default=None
        1-based index pairs (k, l) of eigenvector projections, or ((i, j), (i', j')) entry pairs of W for
        'k_diagnostic'.
    """
    kind: str
    nu: int = 1
    projections: Optional[tuple] = None

    def __post_init__(self):
        utils.check_in(TARGET_KINDS, kind=self.kind)


def _mean_se(x):
    return float(np.std(x, ddof=1) / np.sqrt(len(x)))


def _var_se(x):
    """Asymptotic standard error of the sample variance, from the fourth central moment."""
    x = np.asarray(x)
    centered = x - x.mean()
    m4 = np.mean(centered ** 4)
    s2 = np.var(x, ddof=1)
    return float(np.sqrt(max(m4 - s2 ** 2, 0.0) / len(x)))


def _cov_and_se(x, y):
    prod = (x - x.mean()) * (y - y.mean())
    n = len(x)
    return float(prod.sum() / (n - 1)), float(np.std(prod, ddof=1) / np.sqrt(n))


def _normality(values, scale):
    result = stats.kstest(np.asarray(values) / scale, "norm")
    return dict(ks_statistic=float(result.statistic), ks_pvalue=float(result.pvalue),
                flagged=bool(result.pvalue < 0.05))


########################################################################################################################
# HARNESS
class MonteCarlo(BaseEstimator):
    """Monte Carlo harness for the spiked correlation model.

    All experiment settings are constructor parameters, so get_params() is the full configuration of a run and is
    embedded in every report.

    Parameters
    ----------
    n : int, default=1000
        Sample size.
    p : int, default=None
        Noise dimension. Exactly one of p and gamma must be given.
    gamma : float, default=None
        Aspect ratio. The noise dimension is then round(gamma * n).
    replicates : int, default=2000
        Number of independent replicates. CLT targets require at least 100.
    random_state : int, default=0
        Master seed. Replicate r uses the stream RngSpec(random_state).generator(r).
    n_jobs : int, default=1
        Worker threads. Results do not depend on it.
    noise : str, default='gaussian'
        Innovation family of the noise block.
    n_se : float, default=4.0
        Tolerance of the 'se' verdicts, in standard errors.
    verbose : int, default=0
        Print a report after each run if verbose >= 1.

    Attributes
    ----------
    p_ : int
        Resolved noise dimension of the last run.
    gamma_n_ : float
        p_ / n.
    """

    def __init__(
            self,
            n=1000,
            p=None,
            gamma=None,
            replicates=2000,
            random_state=0,
            n_jobs=1,
            noise="gaussian",
            n_se=4.0,
            verbose=0,
    ):
        self.n = n
        self.p = p
        self.gamma = gamma
        self.replicates = replicates
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.noise = noise
        self.n_se = n_se
        self.verbose = verbose

    ########################################################################################################################
    # INPUT VALIDATION
    def _check_parameters(self, clt=True):
        """Validate parameters and resolve the noise dimension.

        Raises
        ------
        InvalidArgument : unacceptable choice of parameters
        """
        utils.check_int(n=self.n, replicates=self.replicates, random_state=self.random_state, n_jobs=self.n_jobs,
                        verbose=self.verbose)
        utils.check_positive(n=self.n, replicates=self.replicates, n_jobs=self.n_jobs, n_se=self.n_se)
        utils.check_nonneg(random_state=self.random_state, verbose=self.verbose)
        build_innovation(self.noise)

        if (self.p is None) == (self.gamma is None):
            raise InvalidArgument("Exactly one of p and gamma must be set")
        if self.p is not None:
            utils.check_int(p=self.p)
            utils.check_positive(p=self.p)
            self.p_ = int(self.p)
        else:
            utils.check_positive(gamma=self.gamma)
            self.p_ = int(round(self.gamma * self.n))
            if self.p_ < 1:
                raise InvalidArgument(f"gamma={self.gamma} and n={self.n} give an empty noise block")
        self.gamma_n_ = self.p_ / self.n

        if clt and self.replicates < MIN_CLT_REPLICATES:
            raise InvalidArgument(f"CLT targets require at least {MIN_CLT_REPLICATES} replicates, "
                                  f"got {self.replicates}")

    @property
    def _gamma_limit(self):
        return self.gamma_n_ if self.gamma is None else float(self.gamma)

    def _ratio_tolerance(self):
        """Relative tolerance of a variance ratio: 10%, widened to three sampling standard errors sqrt(2 / R)."""
        return max(0.1, 3 * np.sqrt(2 / self.replicates))

    def _map_replicates(self, func, offset=0):
        """Evaluate func on every replicate index. Output order follows the replicate index."""
        indices = range(offset, offset + self.replicates)
        if self.n_jobs == 1:
            return [func(r) for r in indices]
        with ThreadPoolExecutor(max_workers=self.n_jobs) as executor:
            return list(executor.map(func, indices))

    def _report(self, target, nu, model, statistics, start, n=None, p=None, **kwargs):
        report = McReport(target=target, nu=nu, n=self.n if n is None else n, p=self.p_ if p is None else p,
                          gamma=self._gamma_limit, gamma_n=self.gamma_n_ if p is None else p / n,
                          replicates=self.replicates, statistics=statistics, config=self.get_params(),
                          model_params={**model.params, "m": model.m}, elapsed=time.perf_counter() - start,
                          **kwargs)
        if self.verbose >= 1:
            utils.print_report(report)
        return report

    ########################################################################################################################
    # EIGENVALUES
    def run_eigenvalue_clt(self, model, nu=1, which="correlation", center_gamma=None):
        """Fluctuations s = sqrt(n) (ell_hat_nu - rho_nu,n) of a supercritical sample spike.

        The centering rho_nu,n uses gamma_n = p / n and the predicted variance uses the limiting gamma (gamma_n when
        gamma is not set). The 'variance_ratio' verdict allows a relative error of max(0.1, 3 sqrt(2 / replicates)).

        Parameters
        ----------
        model : SpikedModel
        nu : int, default=1
        which : {'correlation', 'covariance'}, default='correlation'
            Sample matrix. The covariance theory assumes unit signal variances.
        center_gamma : float, default=None
            Center at rho(ell, center_gamma) instead of rho(ell, gamma_n). The mean of s then estimates
            centering_shift(ell, center_gamma, gamma_n, n).

        Returns
        -------
        report : McReport
        """
        start = time.perf_counter()
        self._check_parameters()
        utils.check_in(["correlation", "covariance"], which=which)
        gamma_n, n = self.gamma_n_, self.n
        prediction = eigenvalue_prediction(model, nu, self._gamma_limit, gamma_n)
        ell = prediction.ell

        notes = ""
        if which == "correlation":
            var_theory = prediction.var_total_n
        else:
            var_theory = prediction.var_covariance_n
            if not np.allclose(model.sigma_sq, 1.0):
                notes = "Covariance theory assumes unit signal variances; this model has other variances."
        center = prediction.rho_n if center_gamma is None else rho(ell, center_gamma)
        mean_theory = 0.0 if center_gamma is None else centering_shift(ell, center_gamma, gamma_n, n)

        full = FullModel(model, self.p_)
        rng = RngSpec(self.random_state)

        def replicate(r):
            X = generate(full, n, rng, replicate=r, noise=self.noise)
            M = sample_correlation(X) if which == "correlation" else sample_covariance(X)
            spectrum = extract_spikes(M, full, [nu], which=which)
            top_signal = linalg.eigvalsh(M[:model.m, :model.m])[-1]
            return spectrum.ell_hat[nu], top_signal > spectrum.eigenvalues[0] + 1e-10

        results = self._map_replicates(replicate)
        ell_hat = np.array([res[0] for res in results])
        s = np.sqrt(n) * (ell_hat - center)
        violations = sum(res[1] for res in results)

        var_s = float(np.var(s, ddof=1))
        statistics = [
            Statistic("mean", s.mean(), mean_theory, _mean_se(s), tol=self.n_se),
            Statistic("variance", var_s, var_theory, _var_se(s), tol=self.n_se),
            Statistic("variance_ratio", var_s / var_theory, 1.0, rule="rel", tol=self._ratio_tolerance()),
            Statistic("interlacing_violations", violations, 0.0, rule="upper", tol=0),
        ]
        samples = pd.DataFrame(dict(replicate=np.arange(self.replicates), ell_hat=ell_hat, s=s))
        return self._report("eigenvalue_clt", nu, model, statistics, start,
                            normality=_normality(s - mean_theory, np.sqrt(var_theory)),
                            tables=dict(samples=samples), notes=notes)

    ########################################################################################################################
    # EIGENVECTORS
    def _default_projections(self, model, nu):
        indices = [k for k in range(1, model.m + 1) if k != nu][:3]
        return [(k, l) for i, k in enumerate(indices) for l in indices[i:]]

    def run_eigenvector_clt(self, model, nu=1, projections=None):
        """Fluctuations v = sqrt(n) (P^T a_nu - e_nu) of the signal part of a sample spike eigenvector.

        Same convention as run_eigenvalue_clt: the mean of <p_hat_nu, p_nu>^2 is compared with its limit at gamma_n,
        Sigma_nu is evaluated at the limiting gamma.

        Parameters
        ----------
        model : SpikedModel
        nu : int, default=1
        projections : list of (int, int), default=None
            1-based pairs (k, l) whose covariance Cov(v_k, v_l) is compared with Sigma_nu. Defaults to every pair
            among the first three indices other than nu.

        Returns
        -------
        report : McReport
        """
        start = time.perf_counter()
        self._check_parameters()
        n, gamma_n = self.n, self.gamma_n_
        prediction = eigenvector_prediction(model, nu, self._gamma_limit)
        proj_sq_center = rho_dot(prediction.ell, gamma_n) * prediction.ell / rho(prediction.ell, gamma_n)
        projections = self._default_projections(model, nu) if projections is None else list(projections)
        for k, l in projections:
            utils.check_index(model.m, k=k, l=l)

        full = FullModel(model, self.p_)
        rng = RngSpec(self.random_state)
        e_nu = np.eye(model.m)[nu - 1]

        def replicate(r):
            X = generate(full, n, rng, replicate=r, noise=self.noise)
            spectrum = extract_spikes(sample_correlation(X), full, [nu])
            return spectrum.proj[nu] ** 2, np.sqrt(n) * (spectrum.proj_vec[nu] - e_nu)

        results = self._map_replicates(replicate)
        proj_sq = np.array([res[0] for res in results])
        v = np.vstack([res[1] for res in results])

        statistics = [
            Statistic("proj_sq_mean", proj_sq.mean(), proj_sq_center, rule="rel", tol=0.02),
            Statistic(f"var_v{nu}", np.var(v[:, nu - 1], ddof=1), 0.0, rule="upper", tol=0.01),
        ]
        for k, l in projections:
            cov, se = _cov_and_se(v[:, k - 1], v[:, l - 1])
            theory = prediction.Sigma_nu[k - 1, l - 1]
            statistics.append(Statistic(f"cov_v{k}_v{l}", cov, theory, se, tol=self.n_se))
            if k != l and abs(theory) > 2 * se:
                statistics.append(Statistic(f"sign_v{k}_v{l}", cov, theory, se, rule="sign", tol=2.0))

        columns = dict(replicate=np.arange(self.replicates), proj_sq=proj_sq)
        columns.update({f"v_{k + 1}": v[:, k] for k in range(model.m)})
        return self._report("eigenvector_clt", nu, model, statistics, start,
                            tables=dict(projections=pd.DataFrame(columns)))

    ########################################################################################################################
    # SUBCRITICAL SPIKES
    def run_subcritical(self, model, nu=1, n_grid=(250, 500, 1000, 2000), edge_tol=0.15, proj_tol=0.08):
        """Approach of a subcritical sample spike to the bulk edge along a grid of sample sizes.

        The aspect ratio is held at gamma (or p/n of the harness) while n grows.

        Parameters
        ----------
        model : SpikedModel
        nu : int, default=1
        n_grid : tuple of int
            Increasing sample sizes.
        edge_tol : float, default=0.15
            Bound on |mean ell_hat - (1 + sqrt(gamma_n))^2| at the largest n.
        proj_tol : float, default=0.08
            Bound on the mean squared projection at the largest n.

        Returns
        -------
        report : McReport

        Raises
        ------
        InvalidArgument : supercritical spike.
        """
        start = time.perf_counter()
        self._check_parameters(clt=False)
        gamma = self._gamma_limit
        utils.check_index(model.m, nu=nu)
        ell = model.spike(nu)
        if ell > critical_spike(gamma):
            raise InvalidArgument(f"Spike {nu} (ell={ell:.6g}) is supercritical at gamma={gamma}; "
                                  f"run_subcritical needs ell <= {critical_spike(gamma):.6g}")
        n_grid = sorted(int(n) for n in n_grid)
        rng = RngSpec(self.random_state)

        rows = list()
        for step, n in enumerate(n_grid):
            p = max(1, int(round(gamma * n)))
            full = FullModel(model, p)

            def replicate(r, n=n, full=full):
                X = generate(full, n, rng, replicate=r, noise=self.noise)
                spectrum = extract_spikes(sample_correlation(X), full, [nu])
                return spectrum.ell_hat[nu], spectrum.proj[nu] ** 2

            results = np.array(self._map_replicates(replicate, offset=step * self.replicates))
            rows.append(dict(n=n, p=p, gamma_n=p / n, edge=mp_edges(p / n)[1], ell_hat_mean=results[:, 0].mean(),
                             proj_sq_mean=results[:, 1].mean()))

        grid = pd.DataFrame(rows)
        last = grid.iloc[-1]
        statistics = [
            Statistic("edge_gap", abs(last.ell_hat_mean - last.edge), 0.0, rule="upper", tol=edge_tol),
            Statistic("proj_sq_mean", last.proj_sq_mean, 0.0, rule="upper", tol=proj_tol),
            Statistic("proj_sq_trend", last.proj_sq_mean - grid.proj_sq_mean.iloc[0], 0.0, rule="upper", tol=0.01),
        ]
        return self._report("subcritical", nu, model, statistics, start, n=int(last.n), p=int(last.p),
                            tables=dict(grid=grid))

    ########################################################################################################################
    # COVARIANCE VS CORRELATION
    def run_cov_vs_corr(self, model, nu=1, projections=None, bins=30, ratio_bound=0.5):
        """Sample covariance and sample correlation spikes side by side.

        Emits histogram tables of sqrt(n) (ell_hat - rho_n) for S and R, a scatter table of two eigenvector
        projections, and the ratio of the correlation to the covariance fluctuation variance.

        Parameters
        ----------
        model : SpikedModel
            Unit signal variances, e.g. ar1_block_model.
        nu : int, default=1
        projections : list of (int, int), default=None
            First pair is used for the scatter table. Defaults to the first two indices other than nu.
        bins : int, default=30
        ratio_bound : float, default=0.5
            The variance ratio must stay below this bound.

        Returns
        -------
        report : McReport
        """
        start = time.perf_counter()
        self._check_parameters()
        n = self.n
        prediction = eigenvalue_prediction(model, nu, self._gamma_limit, self.gamma_n_)
        if projections is None:
            indices = [k for k in range(1, model.m + 1) if k != nu][:2]
            projections = [tuple(indices)] if len(indices) == 2 else []
        full = FullModel(model, self.p_)
        rng = RngSpec(self.random_state)
        e_nu = np.eye(model.m)[nu - 1]

        def replicate(r):
            X = generate(full, n, rng, replicate=r, noise=self.noise)
            out = dict()
            for which, M in (("covariance", sample_covariance(X)), ("correlation", sample_correlation(X))):
                spectrum = extract_spikes(M, full, [nu], which=which)
                out[which] = (spectrum.ell_hat[nu], np.sqrt(n) * (spectrum.proj_vec[nu] - e_nu))
            return out

        results = self._map_replicates(replicate)
        s = {w: np.sqrt(n) * (np.array([res[w][0] for res in results]) - prediction.rho_n)
             for w in ("covariance", "correlation")}

        edges = np.histogram_bin_edges(np.concatenate(list(s.values())), bins=bins)
        histogram = pd.DataFrame(dict(bin_left=edges[:-1], bin_right=edges[1:],
                                      count_covariance=np.histogram(s["covariance"], edges)[0],
                                      count_correlation=np.histogram(s["correlation"], edges)[0]))
        tables = dict(histogram=histogram)
        if projections:
            k, l = projections[0]
            utils.check_index(model.m, k=k, l=l)
            frames = [pd.DataFrame(dict(replicate=np.arange(self.replicates), matrix=w,
                                        v_k=[res[w][1][k - 1] for res in results],
                                        v_l=[res[w][1][l - 1] for res in results]))
                      for w in ("covariance", "correlation")]
            tables["scatter"] = pd.concat(frames, ignore_index=True)

        var_cov, var_corr = np.var(s["covariance"], ddof=1), np.var(s["correlation"], ddof=1)
        ratio = var_corr / var_cov
        ratio_se = ratio * np.sqrt((_var_se(s["covariance"]) / var_cov) ** 2
                                   + (_var_se(s["correlation"]) / var_corr) ** 2)
        theory_ratio = prediction.var_total_n / prediction.var_covariance_n
        statistics = [
            Statistic("variance_ratio", ratio, theory_ratio, ratio_se, rule="upper", tol=ratio_bound),
            Statistic("variance_covariance", var_cov, prediction.var_covariance_n, _var_se(s["covariance"]),
                      rule="info"),
            Statistic("variance_correlation", var_corr, prediction.var_total_n, _var_se(s["correlation"]),
                      rule="info"),
        ]
        return self._report("cov_vs_corr", nu, model, statistics, start, tables=tables,
                            notes="Figure reproductions are qualitative: shapes and variance ratio.")

    ########################################################################################################################
    # K(t) DIAGNOSTIC
    def run_k_diagnostic(self, model, nu=1, pairs=None, k_norm_tol=0.05):
        """Convergence of K(rho_nu,n) and fluctuations of W_n(rho_nu,n).

        Parameters
        ----------
        model : SpikedModel
        nu : int, default=1
        pairs : list of ((int, int), (int, int)), default=None
            1-based entry pairs ((i, j), (i', j')) of W whose covariance is graded. Defaults to
            (W_11, W_11), (W_11, W_22) and (W_12, W_12) when m >= 2.
        k_norm_tol : float, default=0.05
            Bound on the mean spectral norm of K(rho_nu,n) - (rho_nu,n / ell) Gamma.

        Returns
        -------
        report : McReport
        """
        start = time.perf_counter()
        self._check_parameters()
        n, gamma_n = self.n, self.gamma_n_
        cov_theory = wmatrix_covariance(model, nu, gamma_n)
        ell = model.spike(nu)
        t = rho(ell, gamma_n)
        if pairs is None:
            pairs = [((1, 1), (1, 1))] if model.m == 1 else [((1, 1), (1, 1)), ((1, 1), (2, 2)), ((1, 2), (1, 2))]
        for (i, j), (i2, j2) in pairs:
            utils.check_index(model.m, i=i, j=j, i2=i2, j2=j2)

        full = FullModel(model, self.p_)
        rng = RngSpec(self.random_state)
        Gamma = np.asarray(model.Gamma)

        def replicate(r):
            X = generate(full, n, rng, replicate=r, noise=self.noise)
            K = k_matrix(X, t)
            W = np.sqrt(n) * (K - b_trace(X, t) / n * Gamma)
            return np.linalg.norm(K - t / ell * Gamma, 2), W

        results = self._map_replicates(replicate)
        k_norms = np.array([res[0] for res in results])
        W = np.stack([res[1] for res in results])

        statistics = [Statistic("k_norm", k_norms.mean(), 0.0, rule="upper", tol=k_norm_tol)]
        entries = sorted({e for pair in pairs for e in pair})
        for i, j in entries:
            w = W[:, i - 1, j - 1]
            statistics.append(Statistic(f"mean_W{i}{j}", w.mean(), 0.0, _mean_se(w), tol=self.n_se))
        for (i, j), (i2, j2) in pairs:
            cov, se = _cov_and_se(W[:, i - 1, j - 1], W[:, i2 - 1, j2 - 1])
            theory = cov_theory[i - 1, j - 1, i2 - 1, j2 - 1]
            statistics.append(Statistic(f"cov_W{i}{j}_W{i2}{j2}", cov, theory, se, tol=self.n_se))

        columns = dict(replicate=np.arange(self.replicates), k_norm=k_norms)
        columns.update({f"W_{i}{j}": W[:, i - 1, j - 1] for i, j in entries})
        return self._report("k_diagnostic", nu, model, statistics, start, tables=dict(samples=pd.DataFrame(columns)))

    ########################################################################################################################
    # DISPATCH
    def run(self, model, targets):
        """Run a list of targets.

        Parameters
        ----------
        model : SpikedModel
        targets : list of Target

        Returns
        -------
        reports : list of McReport
        """
        dispatch = {
            "eigenvalue_clt": lambda t: self.run_eigenvalue_clt(model, t.nu),
            "eigenvector_clt": lambda t: self.run_eigenvector_clt(model, t.nu, t.projections),
            "subcritical": lambda t: self.run_subcritical(model, t.nu),
            "cov_vs_corr": lambda t: self.run_cov_vs_corr(model, t.nu, t.projections),
            "k_diagnostic": lambda t: self.run_k_diagnostic(model, t.nu, t.projections),
        }
        reports = list()
        for target in targets:
            if not isinstance(target, Target):
                target = Target(**target)
            reports.append(dispatch[target.kind](target))
        return reports

