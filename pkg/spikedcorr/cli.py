"""Command-line front end.

    spikedcorr predict --model const-corr:m=10,r=0.9 --gamma 0.5 --n 1000 --nu 1
    spikedcorr simulate --model const-corr:m=10,r=0.9 --n 1000 --p 500 --replicates 2000
    spikedcorr verify --suite smoke
    spikedcorr reproduce --figure fig2a --format csv --output fig2a.csv
    spikedcorr cumulants --model const-corr:m=4,r=0.8,innovation=rademacher

Exit codes: 0 success, 1 failed verdict, 2 invalid usage, 3 domain or numerical failure.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path

import pandas as pd

from .asymptotics import predict_spike
from .cumulants import contract, fourth_moment_tensor, kappa_tensor, kcheck_split, kcheck_tensor
from .datasets import resolve_model
from .exceptions import DegenerateData, InvalidArgument, SpikedCorrError
from .model import model_to_dict
from .montecarlo import SCHEMA_VERSION, TARGET_KINDS, MonteCarlo, Target, _json_default
from .suites import FIGURES, SUITES, reproduce_figure, run_suite

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3

COMMANDS = ("predict", "simulate", "verify", "reproduce", "cumulants")

# Used when neither the command line nor the config file sets a value
DEFAULTS = dict(nu=[1], replicates=2000, seed=0, format=None, suite="smoke", which="correlation", noise="gaussian",
                target="eigenvalue_clt")


def _add_io(parser):
    parser.add_argument("--output", "-o", type=str, help="Output path. Defaults to stdout, or a file for verify.")
    parser.add_argument("--format", choices=["json", "csv"], help="Output format.")
    parser.add_argument("--config", type=str, help="JSON file with option values. Flags take precedence.")


def _add_model(parser, dims=True):
    parser.add_argument("--model", type=str,
                        help="Named model 'name:key=value,...' (identity, const-corr, equicorr, two-group, ar1-block) "
                             "or path to a model JSON file.")
    parser.add_argument("--nu", type=int, nargs="+", help="1-based spike indices.")
    if dims:
        parser.add_argument("--gamma", type=float, help="Aspect ratio p/n.")
        parser.add_argument("--n", type=int, help="Sample size.")
        parser.add_argument("--p", type=int, help="Noise dimension.")


def _add_runtime(parser):
    parser.add_argument("--replicates", type=int, help="Monte Carlo replicates.")
    parser.add_argument("--seed", type=int, help="Master random seed.")
    parser.add_argument("--threads", type=int, help="Worker threads. Defaults to $SPIKEDCORR_THREADS, then 1.")


def build_parser():
    parser = argparse.ArgumentParser(prog="spikedcorr",
                                     description="Asymptotic eigenstructure of spiked sample correlation matrices.",
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Increase logging verbosity.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    predict = subparsers.add_parser("predict", help="Asymptotic predictions for each spike.")
    _add_model(predict)
    _add_io(predict)

    simulate = subparsers.add_parser("simulate", help="Monte Carlo run against the predictions.")
    _add_model(simulate)
    _add_runtime(simulate)
    simulate.add_argument("--target", choices=TARGET_KINDS, help="Statistic to simulate.")
    simulate.add_argument("--which", choices=["correlation", "covariance"], help="Sample matrix.")
    simulate.add_argument("--noise", type=str, help="Innovation family of the noise block.")
    _add_io(simulate)

    verify = subparsers.add_parser("verify", help="Bundled acceptance suites.")
    verify.add_argument("--suite", choices=SUITES, help="Suite to run.")
    _add_runtime(verify)
    _add_io(verify)

    reproduce = subparsers.add_parser("reproduce", help="Data tables behind the figures.")
    reproduce.add_argument("--figure", type=str, required=False, help=f"One of {', '.join(FIGURES)}.")
    _add_runtime(reproduce)
    _add_io(reproduce)

    cumulants = subparsers.add_parser("cumulants", help="Dump the order-4 tensors of a model.")
    _add_model(cumulants, dims=False)
    _add_io(cumulants)
    return parser


########################################################################################################################
# CONFIGURATION
def _load_config(path):
    try:
        with open(path) as f:
            config = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidArgument(f"Cannot read config file {path}: {e}")
    if not isinstance(config, dict):
        raise InvalidArgument(f"Config file {path} must hold a JSON object")
    return config


def resolve_config(args):
    """Merge command-line flags, the config file and defaults into one dict. Flags win over the file."""
    config = {k: v for k, v in vars(args).items() if v is not None}
    if args.config is not None:
        for key, value in _load_config(args.config).items():
            if key == "command":
                continue
            if key not in vars(args):
                raise InvalidArgument(f"Unknown option '{key}' in config file {args.config}")
            config.setdefault(key, value)
    for key, value in DEFAULTS.items():
        if key in vars(args):
            config.setdefault(key, value)
    config.pop("config", None)

    if "threads" in vars(args) and config.get("threads") is None:
        threads = os.environ.get("SPIKEDCORR_THREADS", "1")
        try:
            config["threads"] = int(threads)
        except ValueError:
            raise InvalidArgument(f"SPIKEDCORR_THREADS must be an integer, got '{threads}'")
    if isinstance(config.get("nu"), int):
        config["nu"] = [config["nu"]]
    return config


def _resolve_ratio(config, require_n=False):
    """Limiting and finite-sample aspect ratios, and the noise dimension."""
    gamma, n, p = config.get("gamma"), config.get("n"), config.get("p")
    if gamma is not None and p is not None:
        raise InvalidArgument("Give either --gamma or --p, not both")
    if p is not None:
        if n is None:
            raise InvalidArgument("--p requires --n")
        return p / n, p / n, p
    if gamma is None:
        raise InvalidArgument("One of --gamma or --p (with --n) is required")
    if n is None:
        if require_n:
            raise InvalidArgument("--n is required")
        return gamma, gamma, None
    p = int(round(gamma * n))
    return gamma, p / n, p


def _require(config, *keys):
    for key in keys:
        if config.get(key) is None:
            raise InvalidArgument(f"--{key} is required for {config['command']}")


########################################################################################################################
# OUTPUT
def _write_json(payload, path):
    text = json.dumps(payload, indent=2, default=_json_default)
    if path is None:
        sys.stdout.write(text + "\n")
        return
    with open(path, "w") as f:
        f.write(text + "\n")
    logger.info(f"Wrote {path}")


def _write_frame(frame, path, config):
    """Write a CSV table. File output also echoes the resolved config to the sibling '<stem>.config.json'."""
    if path is None:
        frame.to_csv(sys.stdout, index=False)
        return
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {path}")
    _write_json(dict(schema_version=SCHEMA_VERSION, command=config["command"], config=config),
                config_path(path))


def config_path(path):
    """Sibling file holding the config echo of a CSV output."""
    return Path(path).with_suffix(".config.json")


def _scalar_columns(records):
    frame = pd.json_normalize(records)
    keep = [c for c in frame.columns if not frame[c].map(lambda v: isinstance(v, (list, dict))).any()]
    return frame[keep]


########################################################################################################################
# COMMANDS
def predict(config):
    _require(config, "model")
    gamma, gamma_n, _ = _resolve_ratio(config)
    model = resolve_model(config["model"])
    predictions = [predict_spike(model, nu, gamma, gamma_n) for nu in config["nu"]]

    if config["format"] == "csv":
        _write_frame(_scalar_columns(predictions), config.get("output"), config)
    else:
        _write_json(dict(schema_version=SCHEMA_VERSION, command="predict", config=config,
                         model=model_to_dict(model), predictions=predictions), config.get("output"))
    return EXIT_OK


def simulate(config):
    _require(config, "model", "n")
    gamma, gamma_n, p = _resolve_ratio(config, require_n=True)
    logger.info(f"Noise dimension p={p}, gamma={gamma:.4g}, gamma_n={gamma_n:.4g}")
    model = resolve_model(config["model"])
    fixed_p = config.get("p") is not None
    mc = MonteCarlo(n=config["n"], p=p if fixed_p else None, gamma=None if fixed_p else gamma,
                    replicates=config["replicates"], random_state=config["seed"], n_jobs=config["threads"],
                    noise=config["noise"], verbose=int(config["verbose"] >= 2))

    reports = list()
    for nu in config["nu"]:
        logger.info(f"Simulating {config['target']} for spike {nu}")
        if config["target"] == "eigenvalue_clt":
            reports.append(mc.run_eigenvalue_clt(model, nu, which=config["which"]))
        else:
            reports.extend(mc.run(model, [Target(config["target"], nu)]))

    if config["format"] == "csv":
        _write_frame(pd.concat([r.to_frame() for r in reports], ignore_index=True), config.get("output"), config)
    else:
        _write_json(dict(schema_version=SCHEMA_VERSION, command="simulate", config=config,
                         model=model_to_dict(model), reports=[r.to_dict() for r in reports]), config.get("output"))
    return EXIT_OK


def verify(config):
    fmt = config["format"] or "json"
    output = config.get("output") or f"spikedcorr_{config['suite']}.{fmt}"
    report = run_suite(config["suite"], random_state=config["seed"], n_jobs=config["threads"])
    report.save(output, format=fmt)
    logger.info(f"Wrote {output}")
    if fmt == "csv":
        _write_json(dict(schema_version=SCHEMA_VERSION, command="verify", config=config), config_path(output))

    for check in report.checks:
        logger.info(f"{check.name}: {'PASS' if check.passed else 'FAIL'}")
    for name, mc_report in report.reports.items():
        logger.info(f"{name}: {'PASS' if mc_report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_FAILED


def reproduce(config):
    _require(config, "figure")
    if config["figure"] not in FIGURES:
        raise InvalidArgument(f"Unknown figure '{config['figure']}', expected one of {FIGURES}")
    table = reproduce_figure(config["figure"], replicates=config["replicates"], random_state=config["seed"],
                             n_jobs=config["threads"])
    if config["format"] == "csv":
        _write_frame(table, config.get("output"), config)
    else:
        _write_json(dict(schema_version=SCHEMA_VERSION, command="reproduce", config=config,
                         table=table.to_dict(orient="list")), config.get("output"))
    return EXIT_OK


def cumulants(config):
    _require(config, "model")
    model = resolve_model(config["model"])
    tensors = dict(mu=fourth_moment_tensor(model), kappa=kappa_tensor(model), kcheck=kcheck_tensor(model))

    contractions = list()
    for nu in config["nu"]:
        psi_psi, psi_chi = kcheck_split(model, nu)
        contractions.append(dict(nu=nu,
                                 kappa=contract(model.P, nu, nu, nu, nu, tensors["kappa"]),
                                 kcheck=contract(model.P, nu, nu, nu, nu, tensors["kcheck"]),
                                 psi_psi=psi_psi, psi_chi=psi_chi))

    if config["format"] == "csv":
        rows = list()
        for name, tensor in tensors.items():
            m = tensor.m
            for flat, value in enumerate(tensor.values.ravel()):
                i, j, k, l = (flat // m ** 3, flat // m ** 2 % m, flat // m % m, flat % m)
                rows.append(dict(tensor=name, i=i + 1, j=j + 1, k=k + 1, l=l + 1, value=value))
        _write_frame(pd.DataFrame(rows), config.get("output"), config)
    else:
        _write_json(dict(schema_version=SCHEMA_VERSION, command="cumulants", config=config,
                         model=model_to_dict(model), tensors={k: t.to_dict() for k, t in tensors.items()},
                         contractions=contractions), config.get("output"))
    return EXIT_OK


COMMAND_DICT = {
    "predict": predict,
    "simulate": simulate,
    "verify": verify,
    "reproduce": reproduce,
    "cumulants": cumulants,
}


def main(argv=None):
    """Entry point. Returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    logging.basicConfig(level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
                        format="%(asctime)s - %(levelname)s - %(message)s")
    logging.captureWarnings(True)

    try:
        config = resolve_config(args)
        return COMMAND_DICT[config["command"]](config)
    except DegenerateData as e:
        logger.error(f"Degenerate data: {e}")
        return EXIT_ERROR
    except InvalidArgument as e:
        logger.error(f"Invalid argument: {e}")
        return EXIT_USAGE
    except SpikedCorrError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
