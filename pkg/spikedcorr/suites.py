"""Bundled verification suites and figure tables.

The 'paper-desk' suite runs every acceptance check at full size. The 'smoke' suite runs the same checks with fewer
models, samples and replicates so it finishes in about a minute.
"""
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import utils
from .asymptotics import (eigenvalue_prediction, eigenvalue_variance_gaussian, eigenvector_covariance_gaussian,
                          eigenvector_curve, eigenvector_prediction, variance_curve)
from .cumulants import empirical_cumulants, gaussian_kcheck_tensor, kappa_tensor, kcheck_tensor
from .datasets import ar1_block_model, constant_correlation_model, identity_model
from .laws import c_integral, companion_law, critical_spike, rho, rho_dot, stieltjes_m
from .model import FullModel, build_model
from .montecarlo import FRAME_COLUMNS, SCHEMA_VERSION, MonteCarlo, Statistic, _json_default
from .sampling import RngSpec, generate, normalized_bilinear_form, sample_correlation

logger = logging.getLogger(__name__)

SUITES = ("smoke", "paper-desk")

FIGURES = ("fig1a", "fig1b", "fig2a", "fig2b")

# Sizes of each check; smoke trades accuracy for speed
SUITE_SIZES = {
    "smoke": dict(random_models=10, cumulant_samples=100_000, replicates=200, clt_n=400, clt_p=200,
                  nongaussian_n=400, subcritical_grid=(250, 500, 1000), subcritical_replicates=20, k_n=400,
                  k_norm_n=2000, k_norm_tol=0.15, property_cases=50),
    "paper-desk": dict(random_models=50, cumulant_samples=1_000_000, replicates=2000, clt_n=1000, clt_p=500,
                       nongaussian_n=2000, subcritical_grid=(250, 500, 1000, 2000),
                       subcritical_replicates=100, k_n=2000, k_norm_n=10_000,
                       k_norm_tol=0.05, property_cases=200),
}

GAMMA_GRID = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass
class Check:
    """Named group of graded statistics."""
    name: str
    statistics: list
    elapsed: float = 0.0

    @property
    def passed(self):
        return all(s.verdict for s in self.statistics)


@dataclass
class SuiteReport:
    """Outcome of a verification suite.

    Attributes
    ----------
    suite : str
    checks : list of Check
        Deterministic checks (analytic identities, dual pathways, cumulant estimates, properties).
    reports : dict
        Name -> McReport of the Monte Carlo checks.
    config : dict
    """
    suite: str
    checks: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks) and all(r.passed for r in self.reports.values())

    def to_dict(self, runtime=False):
        d = dict(schema_version=SCHEMA_VERSION, suite=self.suite, passed=self.passed, config=self.config,
                 checks={c.name: dict(passed=c.passed, statistics=[s.to_dict() for s in c.statistics])
                         for c in self.checks},
                 reports={k: r.to_dict(runtime=runtime) for k, r in self.reports.items()})
        if runtime:
            d["runtime"] = {c.name: c.elapsed for c in self.checks}
        return d

    def to_frame(self):
        frames = [r.to_frame().assign(check=name) for name, r in self.reports.items()]
        for c in self.checks:
            rows = [dict(stat=s.name, theory=s.theory, empirical=s.empirical, se=s.se,
                         verdict="pass" if s.verdict else "fail", check=c.name) for s in c.statistics]
            frames.append(pd.DataFrame(rows))
        return pd.concat(frames, ignore_index=True).reindex(columns=["check"] + FRAME_COLUMNS)

    def save(self, path, format="json", runtime=False):
        utils.check_in(["json", "csv"], format=format)
        if format == "csv":
            self.to_frame().to_csv(path, index=False)
            return
        with open(path, "w") as f:
            json.dump(self.to_dict(runtime=runtime), f, indent=2, default=_json_default)


def _timed(name, func, *args, **kwargs):
    start = time.perf_counter()
    logger.info(f"Running check {name}")
    statistics = func(*args, **kwargs)
    return Check(name=name, statistics=statistics, elapsed=time.perf_counter() - start)


########################################################################################################################
# DETERMINISTIC CHECKS
def analytic_identities():
    """m(rho) = -1/ell, 1 + c(rho) ell = rho / (ell rho_dot) and unit companion mass over an (ell, gamma) grid."""
    m_err, c_err, mass_err = 0.0, 0.0, 0.0
    for gamma in GAMMA_GRID:
        mass_err = max(mass_err, abs(companion_law(gamma).total_mass() - 1))
        for factor in (1.05, 1.5, 2.0, 5.0, 20.0):
            ell = factor * critical_spike(gamma)
            r = rho(ell, gamma)
            m_err = max(m_err, abs(stieltjes_m(r, gamma) + 1 / ell))
            c_err = max(c_err, abs(1 + c_integral(r, gamma) * ell - r / (ell * rho_dot(ell, gamma))))
    return [Statistic("stieltjes_at_rho", m_err, 0.0, rule="upper", tol=1e-7),
            Statistic("c_at_rho", c_err, 0.0, rule="upper", tol=1e-7),
            Statistic("companion_mass", mass_err, 0.0, rule="upper", tol=1e-9)]


def random_gaussian_model(rng, m):
    """Gaussian model with a random factor covariance, Sigma = B B^T + diag."""
    B = rng.standard_normal((m, max(1, m // 2)))
    Sigma = B @ B.T + np.diag(rng.uniform(0.1, 1.0, size=m))
    return build_model(Sigma, params=dict(name="random", m=m))


def dual_pathway(random_state=0, count=50, margin=0.1):
    """Tensor contractions against the Gaussian closed forms on random models.

    Each model gets a gamma from GAMMA_GRID for which the leading spike clears the phase transition by margin.
    """
    rng = RngSpec(random_state).generator(0)
    var_err, vec_err, kcheck_err, kappa_max = 0.0, 0.0, 0.0, 0.0
    done = 0
    while done < count:
        model = random_gaussian_model(rng, int(rng.integers(2, 9)))
        gammas = [g for g in GAMMA_GRID if model.L[0] > critical_spike(g) + margin]
        if not gammas or not model.is_simple(1):
            continue
        gamma = gammas[int(rng.integers(len(gammas)))]

        v_tensor = eigenvalue_prediction(model, 1, gamma).var_total
        v_closed = eigenvalue_variance_gaussian(model, 1, gamma)
        var_err = max(var_err, abs(v_tensor - v_closed) / max(1.0, abs(v_closed)))

        S_tensor = eigenvector_prediction(model, 1, gamma).Sigma_nu
        S_closed = eigenvector_covariance_gaussian(model, 1, gamma)
        vec_err = max(vec_err, np.abs(S_tensor - S_closed).max() / max(1.0, np.abs(S_closed).max()))

        kcheck_err = max(kcheck_err, np.abs(kcheck_tensor(model).values
                                            - gaussian_kcheck_tensor(model.Gamma).values).max())
        kappa_max = max(kappa_max, np.abs(kappa_tensor(model).values).max())
        done += 1
    return [Statistic("eigenvalue_variance", var_err, 0.0, rule="upper", tol=1e-10),
            Statistic("eigenvector_covariance", vec_err, 0.0, rule="upper", tol=1e-10),
            Statistic("kcheck_closed_form", kcheck_err, 0.0, rule="upper", tol=1e-12),
            Statistic("gaussian_kappa", kappa_max, 0.0, rule="upper", tol=0.0)]


def cumulant_estimates(random_state=0, n_samples=1_000_000, n_se=5.0):
    """Empirical kappa and kcheck of linear mixing models against their closed forms, entry by entry."""
    statistics = list()
    models = [constant_correlation_model(3, 0.5, innovation="rademacher"),
              constant_correlation_model(4, 0.8, innovation="uniform"),
              ar1_block_model(3, 0.6, innovation="uniform")]
    for k, model in enumerate(models):
        gen = RngSpec(random_state).generator(k)
        z = model.dist.innovation.sample(gen, (model.factor.shape[1], n_samples))
        samples = (model.factor @ z).T
        est = empirical_cumulants(samples, sigma=np.sqrt(model.sigma_sq), kappa2=model.Gamma)
        label = f"{model.params['name']}_{model.dist.family}_m{model.m}"
        for name, emp, se, theory in (("kappa", est.kappa, est.kappa_se, kappa_tensor(model).values),
                                      ("kcheck", est.kcheck, est.kcheck_se, kcheck_tensor(model).values)):
            z_scores = np.abs(emp - theory) / np.maximum(se, 1e-9)
            statistics.append(Statistic(f"{name}_{label}_max_z", z_scores.max(), 0.0, rule="upper", tol=n_se))
    return statistics


def concentration_properties(random_state=0, cases=200, n=10_000):
    """Bilinear-form concentration and scale invariance of the sample correlation on randomized cases."""
    small, near_half, invariance = 0, 0, 0.0
    ones = np.ones(n)
    alternating = np.where(np.arange(n) % 2, 2.0, 0.0)
    for case in range(cases):
        gen = RngSpec(random_state).generator(case)
        x, y = gen.standard_normal(n), gen.standard_normal(n)
        small += abs(normalized_bilinear_form(x, y, ones)) < 5 / np.sqrt(n)
        y_corr = 0.5 * x + np.sqrt(0.75) * y
        near_half += abs(normalized_bilinear_form(x, y_corr, alternating) - 0.5) <= 0.05

        X = gen.standard_normal((5, 50))
        D = gen.uniform(0.1, 10.0, size=5)
        invariance = max(invariance, np.abs(sample_correlation(D[:, None] * X) - sample_correlation(X)).max())
    return [Statistic("independent_forms_small", 1 - small / cases, 0.0, rule="upper", tol=0.05),
            Statistic("correlated_forms_near_half", 1 - near_half / cases, 0.0, rule="upper", tol=0.05),
            Statistic("correlation_scale_invariance", invariance, 0.0, rule="upper", tol=1e-12)]


def noise_edge(random_state=0, n=4000, gamma=0.5):
    """Largest sample correlation eigenvalue without spikes against the bulk edge."""
    p = int(round(gamma * n))
    X = generate(FullModel(identity_model(1), p), n, RngSpec(random_state))
    top = np.linalg.eigvalsh(sample_correlation(X))[-1]
    edge = (1 + np.sqrt((p + 1) / n)) ** 2
    return [Statistic("noise_edge_gap", abs(top - edge), 0.0, rule="upper", tol=0.1)]


########################################################################################################################
# MONTE CARLO CHECKS
def _largest_cross_pair(model, nu, gamma):
    Sigma = eigenvector_prediction(model, nu, gamma).Sigma_nu
    masked = np.abs(np.triu(Sigma, 1))
    masked[nu - 1, :] = 0
    masked[:, nu - 1] = 0
    k, l = np.unravel_index(np.argmax(masked), masked.shape)
    return int(k) + 1, int(l) + 1


def monte_carlo_checks(sizes, random_state=0, n_jobs=1):
    reports = dict()
    reps = sizes["replicates"]
    harness = dict(replicates=reps, random_state=random_state, n_jobs=n_jobs)

    gaussian = constant_correlation_model(10, 0.9)
    mc = MonteCarlo(n=sizes["clt_n"], p=sizes["clt_p"], **harness)
    logger.info("Running eigenvalue CLT checks")
    reports["eigenvalue_correlation"] = mc.run_eigenvalue_clt(gaussian, 1)
    reports["eigenvalue_covariance"] = mc.run_eigenvalue_clt(gaussian, 1, which="covariance")
    ratio = (reports["eigenvalue_correlation"].statistic("variance").empirical
             / reports["eigenvalue_covariance"].statistic("variance").empirical)
    reports["eigenvalue_correlation"].statistics.append(
        Statistic("correlation_covariance_ratio", ratio, None, rule="upper", tol=0.05))

    logger.info("Running non-Gaussian eigenvalue CLT check")
    rademacher = constant_correlation_model(4, 0.8, innovation="rademacher")
    n = sizes["nongaussian_n"]
    reports["eigenvalue_rademacher"] = MonteCarlo(n=n, gamma=0.25, **harness).run_eigenvalue_clt(rademacher, 1)

    logger.info("Running eigenvector CLT checks")
    reports["eigenvector_constant_correlation"] = mc.run_eigenvector_clt(gaussian, 1, projections=[(2, 2)])
    ar1 = ar1_block_model(10, 0.95)
    mc_ar1 = MonteCarlo(n=sizes["clt_n"], gamma=0.5, **harness)
    pair = _largest_cross_pair(ar1, 1, 0.5)
    reports["eigenvector_ar1_block"] = mc_ar1.run_eigenvector_clt(ar1, 1, projections=[pair])

    logger.info("Running subcritical check")
    weak = constant_correlation_model(4, 0.1)
    subcritical = MonteCarlo(n=max(sizes["subcritical_grid"]), gamma=1.0, replicates=sizes["subcritical_replicates"],
                             random_state=random_state, n_jobs=n_jobs)
    reports["subcritical"] = subcritical.run_subcritical(weak, 1, n_grid=sizes["subcritical_grid"])

    logger.info("Running K(t) diagnostics")
    pair_model = constant_correlation_model(2, 0.8)
    reports["k_diagnostic"] = MonteCarlo(n=sizes["k_n"], gamma=0.25, **harness).run_k_diagnostic(
        pair_model, 1, k_norm_tol=np.inf)
    reports["k_norm"] = MonteCarlo(n=sizes["k_norm_n"], gamma=0.25, replicates=100, random_state=random_state,
                                   n_jobs=n_jobs).run_k_diagnostic(pair_model, 1, pairs=[],
                                                                   k_norm_tol=sizes["k_norm_tol"])
    return reports


def determinism(random_state=0):
    """A small run repeated, and repeated with 4 workers, must give identical reports."""
    model = constant_correlation_model(4, 0.8)
    dumps = list()
    for jobs in (1, 1, 4):
        d = MonteCarlo(n=200, p=50, replicates=100, random_state=random_state, n_jobs=jobs).run_eigenvalue_clt(
            model, 1).to_dict()
        # The worker count is part of the config echo but must not change anything else
        d["config"].pop("n_jobs")
        dumps.append(json.dumps(d, sort_keys=True, default=_json_default))
    mismatches = sum(d != dumps[0] for d in dumps[1:])
    return [Statistic("report_mismatches", mismatches, 0.0, rule="upper", tol=0)]


def run_suite(suite="smoke", random_state=0, n_jobs=1):
    """Run a bundled verification suite.

    Parameters
    ----------
    suite : {'smoke', 'paper-desk'}, default='smoke'
    random_state : int, default=0
    n_jobs : int, default=1

    Returns
    -------
    report : SuiteReport
    """
    utils.check_in(SUITES, suite=suite)
    sizes = SUITE_SIZES[suite]
    report = SuiteReport(suite=suite, config=dict(suite=suite, random_state=random_state, **sizes))
    report.checks = [
        _timed("analytic_identities", analytic_identities),
        _timed("dual_pathway", dual_pathway, random_state, sizes["random_models"]),
        _timed("cumulant_estimates", cumulant_estimates, random_state, sizes["cumulant_samples"]),
        _timed("concentration_properties", concentration_properties, random_state, sizes["property_cases"]),
        _timed("noise_edge", noise_edge, random_state),
        _timed("determinism", determinism, random_state),
    ]
    report.reports = monte_carlo_checks(sizes, random_state=random_state, n_jobs=n_jobs)
    return report


########################################################################################################################
# FIGURES
def reproduce_figure(figure, replicates=2000, random_state=0, n_jobs=1, m_values=(5, 10, 20),
                     gamma_values=(0.25, 1.0)):
    """Data tables behind the figures.

    Parameters
    ----------
    figure : {'fig1a', 'fig1b', 'fig2a', 'fig2b'}
        - 'fig1a': histograms of the largest sample covariance and correlation eigenvalue, AR(1) block of 10 with
          r=0.95, n=200, p=90.
        - 'fig1b': scatter of the leading eigenvector projected on the second and fourth population eigenvectors,
          same setting.
        - 'fig2a': asymptotic eigenvalue variances of the constant-correlation model along r.
        - 'fig2b': asymptotic variances of p_2^T a_1 in the same model.
    replicates : int, default=2000
        Replicates of the simulated figures.
    random_state : int, default=0
    n_jobs : int, default=1
    m_values, gamma_values : tuple
        Grid of the theory curves.

    Returns
    -------
    table : pandas.DataFrame
    """
    utils.check_in(FIGURES, figure=figure)
    if figure in ("fig1a", "fig1b"):
        mc = MonteCarlo(n=200, p=90, replicates=replicates, random_state=random_state, n_jobs=n_jobs)
        report = mc.run_cov_vs_corr(ar1_block_model(10, 0.95), 1, projections=[(2, 4)])
        return report.tables["histogram" if figure == "fig1a" else "scatter"]

    curve = variance_curve if figure == "fig2a" else eigenvector_curve
    frames = [curve(m, gamma) for m in m_values for gamma in gamma_values]
    return pd.concat(frames, ignore_index=True)

