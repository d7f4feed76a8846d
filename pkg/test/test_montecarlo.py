import json

import numpy as np
import pandas as pd
import pytest

from spikedcorr.asymptotics import eigenvalue_prediction, eigenvector_prediction
from spikedcorr.datasets import constant_correlation_model
from spikedcorr.exceptions import InvalidArgument
from spikedcorr.montecarlo import FRAME_COLUMNS, SCHEMA_VERSION, McReport, MonteCarlo, Statistic, Target


@pytest.mark.parametrize("rule,kwargs,verdict", [
    ("se", dict(empirical=1.3, theory=1.0, se=0.1), True),
    ("se", dict(empirical=1.5, theory=1.0, se=0.1), False),
    ("rel", dict(empirical=1.05, theory=1.0, tol=0.1), True),
    ("rel", dict(empirical=0.8, theory=1.0, tol=0.1), False),
    ("upper", dict(empirical=0.01, tol=0.05), True),
    ("upper", dict(empirical=0.06, tol=0.05), False),
    ("sign", dict(empirical=-0.5, theory=-1.0, se=0.1, tol=2.0), True),
    ("sign", dict(empirical=0.5, theory=-1.0, se=0.1, tol=2.0), False),
    ("sign", dict(empirical=-0.1, theory=-1.0, se=0.1, tol=2.0), False),
    ("info", dict(empirical=100.0, theory=1.0, se=0.1), True),
])
def test_statistic_rules(rule, kwargs, verdict):
    assert Statistic("stat", rule=rule, **kwargs).verdict is verdict


def test_statistic_invalid_rule():
    with pytest.raises(InvalidArgument):
        Statistic("stat", 1.0, rule="close")


def test_parameter_validation(equicorr_small):
    with pytest.raises(InvalidArgument):
        MonteCarlo(n=200, p=50, gamma=0.25).run_eigenvalue_clt(equicorr_small)
    with pytest.raises(InvalidArgument):
        MonteCarlo(n=200).run_eigenvalue_clt(equicorr_small)
    with pytest.raises(InvalidArgument):
        MonteCarlo(n=200, p=50, replicates=50).run_eigenvalue_clt(equicorr_small)
    with pytest.raises(InvalidArgument):
        MonteCarlo(n=200, p=50, replicates=100, noise="cauchy").run_eigenvalue_clt(equicorr_small)
    with pytest.raises(InvalidArgument):
        MonteCarlo(n=200, p=50, replicates=100).run_eigenvalue_clt(equicorr_small, which="precision")


def test_get_params(mc_kwargs):
    mc = MonteCarlo(**mc_kwargs)
    params = mc.get_params()
    assert params["n"] == 200 and params["p"] == 50 and params["replicates"] == 100
    mc.set_params(n=300)
    assert mc.n == 300


def test_eigenvalue_clt(equicorr_small, mc_kwargs):
    report = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1)
    assert isinstance(report, McReport)
    assert report.target == "eigenvalue_clt"
    assert report.gamma_n == pytest.approx(0.25)
    assert report.replicates == 100
    assert {s.name for s in report.statistics} == {"mean", "variance", "variance_ratio", "interlacing_violations"}
    assert report.statistic("interlacing_violations").verdict
    # Loose bound: 100 replicates estimate the variance to about 15%
    assert report.statistic("variance").empirical / report.statistic("variance").theory == pytest.approx(1.0, abs=0.5)
    assert len(report.tables["samples"]) == 100
    assert set(report.normality) == {"ks_statistic", "ks_pvalue", "flagged"}
    assert report.model_params["m"] == 4
    with pytest.raises(KeyError):
        report.statistic("skewness")


def test_covariance_pathway(equicorr_small, mc_kwargs):
    report = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1, which="covariance")
    correlation = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1)
    assert report.statistic("variance").theory > correlation.statistic("variance").theory
    assert report.notes == ""


def test_center_gamma(equicorr_small, mc_kwargs):
    report = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1, center_gamma=0.2)
    assert report.statistic("mean").theory > 0


def test_reproducible_across_workers(equicorr_small, mc_kwargs):
    d1 = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1).to_dict()
    d4 = MonteCarlo(**{**mc_kwargs, "n_jobs": 4}).run_eigenvalue_clt(equicorr_small, 1).to_dict()
    d1["config"].pop("n_jobs")
    d4["config"].pop("n_jobs")
    assert json.dumps(d1, sort_keys=True, default=str) == json.dumps(d4, sort_keys=True, default=str)


def test_different_seeds_differ(equicorr_small, mc_kwargs):
    a = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1)
    b = MonteCarlo(**{**mc_kwargs, "random_state": 43}).run_eigenvalue_clt(equicorr_small, 1)
    assert a.statistic("variance").empirical != b.statistic("variance").empirical


def test_eigenvector_clt(ar1, mc_kwargs):
    report = MonteCarlo(**{**mc_kwargs, "p": 90}).run_eigenvector_clt(ar1, 1, projections=[(2, 2), (2, 4)])
    names = {s.name for s in report.statistics}
    assert {"proj_sq_mean", "var_v1", "cov_v2_v2", "cov_v2_v4"} <= names
    assert report.statistic("var_v1").verdict
    assert report.statistic("proj_sq_mean").theory == pytest.approx(0.9, abs=0.1)
    assert list(report.tables["projections"].columns[:3]) == ["replicate", "proj_sq", "v_1"]


def test_eigenvector_default_projections(equicorr_small, mc_kwargs):
    report = MonteCarlo(**mc_kwargs).run_eigenvector_clt(equicorr_small, 1)
    names = [s.name for s in report.statistics if s.name.startswith("cov_")]
    assert names == ["cov_v2_v2", "cov_v2_v3", "cov_v2_v4", "cov_v3_v3", "cov_v3_v4", "cov_v4_v4"]


def test_gamma_convention(equicorr_small):
    # p = round(0.251 * 200) = 50, so gamma_n = 0.25 differs from the limiting gamma
    mc = MonteCarlo(n=200, gamma=0.251, replicates=100, random_state=0)
    vector = mc.run_eigenvector_clt(equicorr_small, 1, projections=[(2, 2)])
    assert vector.gamma_n == pytest.approx(0.25)
    limit = eigenvector_prediction(equicorr_small, 1, 0.251)
    finite = eigenvector_prediction(equicorr_small, 1, 0.25)
    assert vector.statistic("cov_v2_v2").theory == pytest.approx(limit.Sigma_nu[1, 1])
    assert vector.statistic("proj_sq_mean").theory == pytest.approx(finite.proj_sq_limit)
    value = mc.run_eigenvalue_clt(equicorr_small, 1)
    assert value.statistic("variance").theory == pytest.approx(
        eigenvalue_prediction(equicorr_small, 1, 0.251, 0.25).var_total_n)


def test_variance_ratio_tolerance(equicorr_small, mc_kwargs):
    report = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1)
    assert report.statistic("variance_ratio").tol == pytest.approx(3 * np.sqrt(2 / 100))
    # 2000 replicates keep the 10% bound
    assert MonteCarlo(n=200, p=50, replicates=2000)._ratio_tolerance() == pytest.approx(0.1)


def test_subcritical():
    weak = constant_correlation_model(4, 0.1)
    mc = MonteCarlo(n=500, gamma=1.0, replicates=5, random_state=0)
    report = mc.run_subcritical(weak, 1, n_grid=(100, 500))
    grid = report.tables["grid"]
    assert list(grid.n) == [100, 500]
    assert report.n == 500 and report.p == 500
    assert report.statistic("edge_gap").empirical < 0.5

    with pytest.raises(InvalidArgument):
        mc.run_subcritical(constant_correlation_model(10, 0.9), 1)


def test_cov_vs_corr(ar1, mc_kwargs):
    report = MonteCarlo(**{**mc_kwargs, "p": 90}).run_cov_vs_corr(ar1, 1, projections=[(2, 4)], bins=10)
    histogram = report.tables["histogram"]
    assert len(histogram) == 10
    assert histogram.count_covariance.sum() == histogram.count_correlation.sum() == 100
    scatter = report.tables["scatter"]
    assert set(scatter.matrix) == {"covariance", "correlation"}
    assert len(scatter) == 200
    assert report.statistic("variance_ratio").empirical < 0.5
    assert report.statistic("variance_covariance").rule == "info"


def test_k_diagnostic(mc_kwargs):
    model = constant_correlation_model(2, 0.8)
    report = MonteCarlo(**{**mc_kwargs, "n": 400}).run_k_diagnostic(model, 1, k_norm_tol=np.inf)
    names = {s.name for s in report.statistics}
    assert {"k_norm", "mean_W11", "mean_W22", "mean_W12", "cov_W11_W11", "cov_W11_W22", "cov_W12_W12"} == names
    assert report.statistic("k_norm").empirical < 0.5
    assert "W_12" in report.tables["samples"]


def test_run_targets(equicorr_small, mc_kwargs):
    reports = MonteCarlo(**mc_kwargs).run(equicorr_small, [Target("eigenvalue_clt"),
                                                           dict(kind="eigenvector_clt", nu=1)])
    assert [r.target for r in reports] == ["eigenvalue_clt", "eigenvector_clt"]
    with pytest.raises(InvalidArgument):
        Target("eigenvalue_pdf")


def test_report_output(tmp_path, equicorr_small, mc_kwargs):
    report = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1)

    d = report.to_dict()
    assert d["schema_version"] == SCHEMA_VERSION
    assert "runtime" not in d
    assert "elapsed" in report.to_dict(runtime=True)["runtime"]

    frame = report.to_frame()
    assert list(frame.columns) == FRAME_COLUMNS
    assert frame.r.iloc[0] == 0.8

    report.save(tmp_path / "report.json")
    with open(tmp_path / "report.json") as f:
        assert json.load(f)["target"] == "eigenvalue_clt"

    report.save(tmp_path / "report.csv", format="csv")
    assert len(pd.read_csv(tmp_path / "report.csv")) == 4
    assert len(pd.read_csv(tmp_path / "report_samples.csv")) == 100


def test_verbose_report(capsys, equicorr_small, mc_kwargs):
    MonteCarlo(**{**mc_kwargs, "verbose": 1}).run_eigenvalue_clt(equicorr_small, 1)
    out = capsys.readouterr().out
    assert "MONTE CARLO REPORT : eigenvalue_clt" in out
    assert "variance_ratio" in out


@pytest.mark.parametrize("noise", ["rademacher", "uniform"])
def test_noise_family(equicorr_small, mc_kwargs, noise):
    """The predictions do not depend on the noise family, and neither should the simulated variance."""
    gaussian = MonteCarlo(**mc_kwargs).run_eigenvalue_clt(equicorr_small, 1)
    other = MonteCarlo(**{**mc_kwargs, "noise": noise}).run_eigenvalue_clt(equicorr_small, 1)
    assert other.statistic("variance").theory == gaussian.statistic("variance").theory
    assert other.statistic("variance").empirical / other.statistic("variance").theory == pytest.approx(1.0, abs=0.5)
