"""Command-line entry point: ``python -m dzne <subcommand> [options]``.

Each subcommand writes ``<out>/<subcommand>.csv`` and a provenance file
``<out>/<subcommand>.json``. Exit codes: 0 success, 2 configuration error,
3 numerical failure (for example a requested fit that could not be made).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..circuits import PauliString, build_spin_chain, from_text
from ..extrapolate import ExtrapolationError
from ..sim import NoiseModel
from . import studies
from .config import NOISE_PARAMS, PARAMS, REQUIRED, ConfigError, read_config, resolve, write_csv, write_json
from .estimator import EstimatorJob, ideal_expectations, noise_to_dict, run_mitigated_estimator

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class NumericalFailure(RuntimeError):
    pass


def _add_params(p: argparse.ArgumentParser, params) -> None:
    for prm in params:
        flag = "--" + prm.name.replace("_", "-")
        default = "required" if prm.default is REQUIRED else prm.default
        p.add_argument(flag, dest=prm.name, default=None, metavar="V",
                       help=f"{prm.help + ' ' if prm.help else ''}(default: {default})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dzne", description="Digital zero-noise extrapolation harness.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, params in PARAMS.items():
        p = sub.add_parser(name, help=f"run the {name} harness")
        p.add_argument("--config", help="INI file; a section named after the subcommand is read")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        _add_params(p, params)
        if name == "estimate":
            _add_params(p, NOISE_PARAMS)
    return ap


def _estimate(cfg: dict, noise_cfg: dict):
    if cfg["circuit"]:
        path = Path(cfg["circuit"])
        if not path.is_file():
            raise ConfigError(f"circuit file not found: {path}")
        try:
            circuit = from_text(path.read_text())
        except ValueError as exc:
            raise ConfigError(f"bad circuit file: {exc}") from None
    else:
        circuit = build_spin_chain(cfg["n"], cfg["steps"], theta1=cfg["theta1"],
                                   disorder_seed=cfg["disorder_seed"])
    n = circuit.n_qubits
    obs = tuple(PauliString(o) for o in cfg["observables"]) or (PauliString.z_all(n),)
    readout = ()
    if noise_cfg["readout_p01"] or noise_cfg["readout_p10"]:
        readout = ((noise_cfg["readout_p01"], noise_cfg["readout_p10"]),) * n
    noise = NoiseModel(noise_cfg["depol_2q"], noise_cfg["depol_1q"], noise_cfg["coherent_epsilon"],
                       readout=readout)
    job = EstimatorJob(circuit, obs, cfg["noise_factors"], cfg["fold_samples"], cfg["num_twirls"],
                       cfg["readout_mitigation"], cfg["shots"], cfg["models"], cfg["seed"],
                       cfg["scope"], cfg["foldable"], cfg["calibration_shots"])
    res = run_mitigated_estimator(job, noise)
    ideal = ideal_expectations(circuit, obs) if n <= 12 else [float("nan")] * len(obs)
    rows = []
    for o, r in enumerate(res.observables):
        base = {"observable": r.observable, "ideal": ideal[o]}
        for p in r.points:
            rows.append({**base, "kind": "point", "model": "", "lambda_eff": p.lambda_eff,
                         "value": p.mean, "stderr": p.stderr, "flags": ""})
        for m in job.extrapolation_models:
            if m in r.fits:
                f = r.fits[m]
                rows.append({**base, "kind": "zne", "model": m, "lambda_eff": 0.0,
                             "value": f.zero_noise_value, "stderr": f.zero_noise_stderr,
                             "flags": ";".join(sorted(f.flags))})
            else:
                rows.append({**base, "kind": "zne", "model": m, "lambda_eff": 0.0,
                             "value": float("nan"), "stderr": float("nan"), "flags": "fit_error"})
    prov = {"result": res.to_dict(), "noise": noise_to_dict(noise)}
    failure = "; ".join(f"{r.observable}/{m}: {e}" for r in res.observables for m, e in r.fit_errors.items())
    return rows, prov, failure


def _harness(command: str, cfg: dict):
    if command == "calibrate":
        cells = studies.run_calibration_sweep(cfg["n"], cfg["depths"], cfg["error_probs"],
                                              cfg["noise_factors"], cfg["shots"], cfg["repetitions"],
                                              cfg["seed"], cfg["models"])
        return [c.row() for c in cells], {"label_counts": studies.label_counts(cells)}
    if command == "study-partial-fold":
        rows = studies.run_partial_fold_variance_study(
            cfg["seed"], cfg["n"], cfg["total_2q"], tuple(cfg["error_range"]), cfg["noise_factors"],
            cfg["sample_counts"], cfg["repetitions"], cfg["shots"])
    elif command == "study-shots":
        rows = studies.run_shot_scaling_study(
            cfg["seed"], cfg["n"], cfg["steps"], cfg["error_probs"], cfg["shot_list"],
            cfg["repetitions"], cfg["noise_factors"], cfg["exact"])
    elif command == "study-readout":
        rows = studies.run_readout_study(
            cfg["seed"], cfg["n"], cfg["steps_list"], cfg["depol"], cfg["p01"], cfg["p10"],
            cfg["noise_factors"], cfg["shots"], cfg["repetitions"], cfg["model"])
    elif command == "study-twirl":
        rows = studies.run_twirl_study(
            cfg["seed"], cfg["n"], cfg["steps_list"], cfg["depol"], cfg["epsilon"],
            cfg["noise_factors"], cfg["shots"], cfg["repetitions"], cfg["twirl_counts"], cfg["model"])
        summary = {f"rmse_{k}_twirls": studies.overall_rmse(rows, k) for k in cfg["twirl_counts"]}
        return studies.rows_as_dicts(rows), summary
    elif command == "benchmark":
        rows = studies.run_benchmark(
            cfg["seed"], cfg["n"], cfg["steps_list"], cfg["noise_factor_sets"], cfg["models"],
            cfg["shots"], cfg["depol"], cfg["epsilon"], cfg["p01"], cfg["p10"], cfg["num_twirls"])
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown command {command}")
    return studies.rows_as_dicts(rows), {}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
    out = Path(args.out)
    try:
        cp = read_config(args.config)
        cfg = resolve(command, cp, overrides)
        noise_cfg = resolve(command, cp, overrides, NOISE_PARAMS, "noise") if command == "estimate" else None
        out.mkdir(parents=True, exist_ok=True)
        failure = ""
        with np.errstate(all="ignore"):
            if command == "estimate":
                rows, extra, failure = _estimate(cfg, noise_cfg)
            else:
                rows, extra = _harness(command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExtrapolationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid parameter combinations surface as ValueError from the library
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_csv(out / f"{command}.csv", rows)
    write_json(out / f"{command}.json", {
        "command": command,
        "version": __version__,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items()},
        "noise": noise_cfg,
        **extra,
    })
    if failure:
        print(f"numerical failure: {failure}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
