import json

import pandas as pd
import pytest

from spikedcorr.cli import EXIT_ERROR, EXIT_OK, EXIT_USAGE, build_parser, config_path, main


def _load(path):
    with open(path) as f:
        return json.load(f)


def test_predict(tmp_path):
    out = tmp_path / "predict.json"
    code = main(["predict", "--model", "const-corr:m=10,r=0.9", "--gamma", "0.5", "--n", "1000", "--nu", "1",
                 "--output", str(out)])
    assert code == EXIT_OK
    d = _load(out)
    assert d["schema_version"] == 1
    assert d["config"]["model"] == "const-corr:m=10,r=0.9"
    prediction = d["predictions"][0]
    assert prediction["class"] == "supercritical"
    assert prediction["eigenvalue"]["rho"] == pytest.approx(9.6617, abs=1e-4)
    assert prediction["eigenvalue"]["var_total"] == pytest.approx(2.7205, abs=1e-3)


def test_predict_csv(tmp_path):
    out = tmp_path / "predict.csv"
    code = main(["predict", "--model", "ar1-block:block=10,r=0.95", "--p", "90", "--n", "200", "--nu", "1",
                 "--format", "csv", "-o", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert len(frame) == 1
    assert frame["gamma_n"].iloc[0] == pytest.approx(0.45)
    assert "eigenvalue.var_total" in frame


def test_predict_subcritical(tmp_path, capsys):
    code = main(["predict", "--model", "const-corr:m=4,r=0.1", "--gamma", "1.0"])
    assert code == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["predictions"][0]["class"] == "subcritical"


@pytest.mark.parametrize("argv", [
    ["predict", "--model", "const-corr:m=10;r=0.9", "--gamma", "0.5"],
    ["predict", "--model", "nope", "--gamma", "0.5"],
    ["predict", "--model", "const-corr:m=10,r=0.9"],
    ["predict", "--model", "const-corr:m=10,r=0.9", "--gamma", "0.5", "--p", "10", "--n", "20"],
    ["predict", "--model", "const-corr:m=10,r=0.9", "--gamma", "0.5", "--nu", "11"],
    ["predict", "--gamma", "0.5"],
    ["predict", "--model", "const-corr:m=10,r=0.9", "--gamma", "abc"],
    ["bogus"],
])
def test_usage_errors(tmp_path, argv):
    out = tmp_path / "out.json"
    assert main(argv + ["--output", str(out)] if argv != ["bogus"] else argv) == EXIT_USAGE
    assert not out.exists()


def test_critical_spike(tmp_path):
    out = tmp_path / "out.json"
    code = main(["predict", "--model", "const-corr:m=2,r=0.5", "--gamma", "0.25", "--output", str(out)])
    assert code == EXIT_ERROR
    assert not out.exists()


def test_config_file(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(dict(model="const-corr:m=10,r=0.9", gamma=0.25, nu=1)))
    out = tmp_path / "predict.json"
    # Flags take precedence over the file
    code = main(["predict", "--config", str(config), "--gamma", "0.5", "--output", str(out)])
    assert code == EXIT_OK
    d = _load(out)
    assert d["config"]["gamma"] == 0.5
    assert d["config"]["nu"] == [1]

    config.write_text(json.dumps(dict(model="const-corr:m=10,r=0.9", gama=0.25)))
    assert main(["predict", "--config", str(config), "--output", str(out)]) == EXIT_USAGE


def test_simulate(tmp_path, monkeypatch):
    monkeypatch.setenv("SPIKEDCORR_THREADS", "2")
    out = tmp_path / "simulate.json"
    code = main(["simulate", "--model", "const-corr:m=4,r=0.8", "--n", "200", "--p", "50", "--replicates", "100",
                 "--seed", "3", "--output", str(out)])
    assert code == EXIT_OK
    d = _load(out)
    assert d["config"]["threads"] == 2
    report = d["reports"][0]
    assert report["target"] == "eigenvalue_clt"
    assert report["config"]["random_state"] == 3
    assert "runtime" not in report


def test_simulate_csv(tmp_path):
    out = tmp_path / "simulate.csv"
    code = main(["simulate", "--model", "const-corr:m=4,r=0.8", "--n", "200", "--gamma", "0.25", "--replicates",
                 "100", "--target", "eigenvector_clt", "--format", "csv", "--output", str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert "proj_sq_mean" in set(frame.stat)
    assert set(frame.gamma) == {0.25}
    assert _load(config_path(out))["config"]["target"] == "eigenvector_clt"


def test_simulate_requires_n(tmp_path):
    assert main(["simulate", "--model", "const-corr:m=4,r=0.8", "--gamma", "0.25"]) == EXIT_USAGE
    assert main(["simulate", "--model", "const-corr:m=4,r=0.8", "--n", "200", "--gamma", "0.25",
                 "--p", "50"]) == EXIT_USAGE


def test_simulate_too_few_replicates():
    assert main(["simulate", "--model", "const-corr:m=4,r=0.8", "--n", "200", "--p", "50",
                 "--replicates", "10"]) == EXIT_USAGE


def test_reproduce(tmp_path):
    out = tmp_path / "fig2a.csv"
    assert main(["reproduce", "--figure", "fig2a", "--format", "csv", "--output", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["r", "m", "gamma", "var_cov", "var_corr"]
    echo = _load(config_path(out))
    assert echo["command"] == "reproduce"
    assert echo["config"]["figure"] == "fig2a" and echo["config"]["format"] == "csv"

    # JSON unless asked otherwise, with the resolved config embedded
    out = tmp_path / "fig2a.json"
    assert main(["reproduce", "--figure", "fig2a", "--output", str(out)]) == EXIT_OK
    d = _load(out)
    assert d["command"] == "reproduce"
    assert d["config"]["seed"] == 0
    assert list(d["table"]) == ["r", "m", "gamma", "var_cov", "var_corr"]
    assert main(["reproduce", "--figure", "fig9"]) == EXIT_USAGE


def test_cumulants(tmp_path):
    out = tmp_path / "cumulants.json"
    assert main(["cumulants", "--model", "const-corr:m=3,r=0.5,innovation=rademacher", "--output", str(out)]) == 0
    d = _load(out)
    assert set(d["tensors"]) == {"mu", "kappa", "kcheck"}
    assert d["tensors"]["kappa"]["shape"] == [3, 3, 3, 3]
    assert d["tensors"]["kcheck"]["symmetry"] == "pair"
    contraction = d["contractions"][0]
    assert contraction["psi_psi"] - 2 * contraction["psi_chi"] == pytest.approx(contraction["kcheck"], abs=1e-12)

    out = tmp_path / "cumulants.csv"
    assert main(["cumulants", "--model", "const-corr:m=2,r=0.5", "--format", "csv", "--output", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 3 * 2 ** 4
    assert frame[["i", "j", "k", "l"]].min().min() == 1


def test_verify_unknown_suite():
    assert main(["verify", "--suite", "nightly"]) == EXIT_USAGE


def test_parser_commands():
    parser = build_parser()
    args = parser.parse_args(["verify"])
    assert args.command == "verify"
    assert args.suite is None
