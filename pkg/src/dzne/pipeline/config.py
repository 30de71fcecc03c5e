"""INI configuration, CSV/JSON output and the parameter tables behind the CLI.

A config file has one section per subcommand plus an optional ``[noise]``
section used by ``estimate``::

    [calibrate]
    seed = 7
    depths = 0, 10, 20
    error_probs = 0.001, 0.01
    shots = exact

List values are comma separated; ``shots = exact`` selects infinite-shot mode.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable


class ConfigError(ValueError):
    """Invalid configuration value or missing required setting."""


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.replace(";", ",").split(",") if v.strip())


def _ints(s: str) -> tuple[int, ...]:
    out = []
    for part in (v.strip() for v in s.split(",")):
        if not part:
            continue
        if ":" in part:  # start:stop:step, inclusive of stop
            a, b, *c = (int(x) for x in part.split(":"))
            out.extend(range(a, b + 1, c[0] if c else 1))
        else:
            out.append(int(part))
    return tuple(out)


def _shots(s: str) -> int | None:
    s = str(s).strip().lower()
    if s in ("exact", "inf", "none"):
        return None
    return int(s)


def _bool(s: str) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _strs(s: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in s.split(",") if v.strip())


def _lambda_sets(s: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(part) for part in s.split("|") if part.strip())


@dataclass(frozen=True)
class Param:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str = ""


REQUIRED = object()

COMMON = [Param("seed", int, REQUIRED, "master seed (mandatory)")]

PARAMS: dict[str, list[Param]] = {
    "estimate": [
        Param("seed", int, 0, "job seed"),
        Param("circuit", str, "", "circuit text file; empty builds a spin chain"),
        Param("n", int, 6, "qubits of the generated spin chain"),
        Param("steps", int, 5, "Floquet steps of the generated spin chain"),
        Param("theta1", float, 0.05 * math.pi, "coupling angle of the generated chain"),
        Param("disorder_seed", int, 0, "disorder seed of the generated chain"),
        Param("observables", _strs, (), "comma-separated Pauli strings (default Z on all)"),
        Param("noise_factors", _floats, (1.0, 3.0, 5.0)),
        Param("fold_samples", int, 1),
        Param("num_twirls", int, 0),
        Param("readout_mitigation", _bool, False),
        Param("shots", _shots, 8000, "shots per noise factor or 'exact'"),
        Param("models", _strs, ("linear", "poly2", "exponential")),
        Param("scope", str, "local"),
        Param("foldable", str, "2q"),
        Param("calibration_shots", _shots, None),
    ],
    "calibrate": COMMON + [
        Param("n", int, 6),
        Param("depths", _ints, tuple(range(0, 41, 2)), "two-qubit depths (even)"),
        Param("error_probs", _floats, (0.001, 0.00170, 0.00288, 0.00489, 0.00829, 0.01406, 0.02384, 0.04)),
        Param("noise_factors", _floats, (1.0, 3.0, 5.0)),
        Param("shots", _shots, 8000),
        Param("repetitions", int, 5),
        Param("models", _strs, ("L", "Q", "E")),
    ],
    "study-partial-fold": COMMON + [
        Param("n", int, 6),
        Param("total_2q", _ints, (15, 30)),
        Param("error_range", _floats, (0.01, 0.10)),
        Param("noise_factors", _floats, (1.0, 1.1)),
        Param("sample_counts", _ints, (1, 2, 5, 10)),
        Param("repetitions", int, 100),
        Param("shots", _shots, 8000),
    ],
    "study-shots": COMMON + [
        Param("n", int, 6),
        Param("steps", int, 5),
        Param("error_probs", _floats, (0.001, 0.01, 0.02)),
        Param("shot_list", _ints, (1000, 10000, 100000)),
        Param("repetitions", int, 50),
        Param("noise_factors", _floats, (1.0, 3.0, 5.0)),
        Param("exact", _bool, False),
    ],
    "study-readout": COMMON + [
        Param("n", int, 6),
        Param("steps_list", _ints, tuple(range(1, 11))),
        Param("depol", float, 0.01),
        Param("p01", float, 0.02),
        Param("p10", float, 0.01),
        Param("noise_factors", _floats, (1.0, 3.0, 5.0)),
        Param("shots", _shots, 8000),
        Param("repetitions", int, 5),
        Param("model", str, "linear"),
    ],
    "study-twirl": COMMON + [
        Param("n", int, 6),
        Param("steps_list", _ints, tuple(range(1, 11))),
        Param("depol", float, 0.01),
        Param("epsilon", float, 0.15),
        Param("noise_factors", _floats, (1.0, 3.0, 5.0)),
        Param("shots", _shots, 8000),
        Param("repetitions", int, 3),
        Param("twirl_counts", _ints, (0, 10, 50)),
        Param("model", str, "linear"),
    ],
    "benchmark": COMMON + [
        Param("n", int, 10),
        Param("steps_list", _ints, (1, 5, 10, 15, 20, 25, 30, 35)),
        Param("noise_factor_sets", _lambda_sets, ((1.0, 3.0, 5.0), (1.0, 1.1, 1.2)),
              "noise-factor sets separated by '|'"),
        Param("models", _strs, ("L", "Q", "E")),
        Param("shots", _shots, 16384),
        Param("depol", float, 0.005),
        Param("epsilon", float, 0.05),
        Param("p01", float, 0.02),
        Param("p10", float, 0.01),
        Param("num_twirls", int, 8),
    ],
}

NOISE_PARAMS = [
    Param("depol_2q", float, 0.0),
    Param("depol_1q", float, 0.0),
    Param("coherent_epsilon", float, 0.0),
    Param("readout_p01", float, 0.0),
    Param("readout_p10", float, 0.0),
]


def _parse(param: Param, raw: str, where: str):
    try:
        return param.parse(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: bad value {raw!r} for {param.name}: {exc}") from None


def read_config(path: str | Path | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            cp.read(p)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from None
    return cp


def resolve(command: str, cp: configparser.ConfigParser, overrides: dict[str, str | None],
            params: list[Param] | None = None, section: str | None = None) -> dict[str, Any]:
    """Defaults, then the config section, then command-line overrides."""
    params = PARAMS[command] if params is None else params
    section = command if section is None else section
    known = {p.name for p in params}
    if cp.has_section(section):
        unknown = set(cp[section]) - known
        if unknown:
            raise ConfigError(f"[{section}]: unknown keys {sorted(unknown)}")
    out = {}
    for p in params:
        raw = overrides.get(p.name)
        if raw is not None:
            out[p.name] = _parse(p, raw, "command line")
        elif cp.has_option(section, p.name):
            out[p.name] = _parse(p, cp.get(section, p.name), f"[{section}]")
        elif p.default is REQUIRED:
            raise ConfigError(f"{command}: --{p.name.replace('_', '-')} is required")
        else:
            out[p.name] = p.default
    return out


def write_csv(path: str | Path, rows: list[dict]) -> None:
    """Write rows with a header; floats use ``repr`` so re-runs are byte-identical."""
    if not rows:
        raise ValueError("no rows to write")
    cols = list(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    Path(path).write_text(buf.getvalue())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_json(path: str | Path, data: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
