"""Experiment configuration: schema, JSON files and flag precedence.

A config file is a flat JSON object whose keys are the long option names of
the subcommand with dashes replaced by underscores (``--M-list`` becomes
``M_list``).  An optional ``"command"`` key must match the subcommand.
Precedence is defaults < file < explicit flags; keys set by flags over a
file value are recorded in the manifest.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


def _int(v):
    if isinstance(v, bool):
        raise ValueError("boolean where an integer was expected")
    if isinstance(v, float) and not v.is_integer():
        raise ValueError(f"{v} is not an integer")
    return int(v)


def _float(v):
    if isinstance(v, bool):
        raise ValueError("boolean where a number was expected")
    if isinstance(v, str):
        return float(eval_fraction(v))
    return float(v)


def eval_fraction(s: str) -> float:
    """'1/8' -> 0.125; plain numbers pass through."""
    s = s.strip()
    if "/" in s:
        a, b = s.split("/", 1)
        return float(a) / float(b)
    return float(s)


def _float_list(v):
    if isinstance(v, str):
        return [eval_fraction(x) for x in v.split(",") if x.strip()]
    return [_float(x) for x in v]


def _int_pair(v):
    if isinstance(v, str):
        v = [x for x in v.split(",") if x.strip()]
    out = [_int(x) for x in v]
    if len(out) != 2:
        raise ValueError("expected two integers")
    return out


def _str(v):
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _bool01(v):
    v = _int(v)
    if v not in (0, 1):
        raise ValueError("expected 0 or 1")
    return v


def _opt_int(v):
    return None if v is None else _int(v)


def _center(v):
    if v == "centroid":
        return v
    return _float(v)


@dataclass(frozen=True)
class Param:
    key: str
    conv: object
    default: object = None
    required: bool = False
    choices: tuple | None = None
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.key.replace("_", "-")


# fmt: off
SCHEMA: dict[str, list[Param]] = {
    "resonances": [
        Param("radius", _int, required=True, help="ModeSet radius P"),
        Param("j", _int_pair, required=True, help="output mode as JX,JY"),
        Param("format", _str, "csv", choices=("csv", "json")),
        Param("method", _str, "factored", choices=("factored", "bruteforce")),
        Param("out", _str, None, help="output file name inside the out-dir"),
    ],
    "sumlem-sweep": [
        Param("radius", _int, required=True),
        Param("out", _str, "sumlem.csv"),
    ],
    "simulate-resonant": [
        Param("radius", _int, 2),
        Param("Lx", _float, 64.0),
        Param("Nx", _int, 1024),
        Param("dt", _float, required=True),
        Param("T", _float, required=True),
        Param("init", _str, "multimode-gaussian", choices=("scalar-gaussian", "multimode-gaussian", "constant", "file")),
        Param("init_file", _str, None, help="RSNL checkpoint for --init file"),
        Param("amplitude", _float, 1.0),
        Param("width", _float, 2.0),
        Param("decay", _float, 2.5, help="multimode weight exp(-decay |p|^2)"),
        Param("c", _float, 0.7, help="value for --init constant"),
        Param("snapshot_every", _int, 100, help="steps between conserved.csv rows"),
        Param("checkpoint_every", _int, 0, help="steps between checkpoints; 0 = final only"),
        Param("rho", _bool01, 1),
        Param("boundary_limit", _float, 1e-4, help="validity limit on the boundary-mode fraction"),
    ],
    "simulate-nls": [
        Param("Lx", _float, 32.0),
        Param("Nx", _int, 256),
        Param("Ny", _int, 32),
        Param("dt", _float, required=True),
        Param("T", _float, required=True),
        Param("init", _str, "gaussian3d", choices=("gaussian3d", "largescale", "euclidean", "constant", "file")),
        Param("init_file", _str, None, help="NLS3 checkpoint for --init file"),
        Param("amplitude", _float, 1.0),
        Param("width_x", _float, 2.0),
        Param("width_y", _float, 0.8),
        Param("xi0", _float, 0.0, help="x carrier; must be a multiple of 2 pi / Lx"),
        Param("k0", _int_pair, [0, 0], help="y carrier as K1,K2"),
        Param("c", _float, 0.7, help="value for --init constant"),
        Param("M", _float, 0.25, help="scale for --init largescale"),
        Param("N", _float, 4.0, help="scale for --init euclidean"),
        Param("rho", _bool01, 1),
        Param("cadence", _int, 100, help="steps between diagnostics rows"),
        Param("R", _float, 4.0, help="virial cutoff radius"),
        Param("center", _center, 0.0, help="virial centre: a number or 'centroid'"),
        Param("checkpoint_every", _int, 0),
        Param("boundary_limit", _float, 1e-6, help="validity limit on the outer-10% mass fraction"),
    ],
    "multiscale": [
        Param("psi", _str, "gaussian-y2mode", choices=("gaussian-y2mode", "file")),
        Param("psi_file", _str, None, help="NLS3 checkpoint holding psi on its reference grid"),
        Param("M_list", _float_list, required=True),
        Param("T0", _float, required=True),
        Param("dt", _float, 0.05),
        Param("Lref", _float, 96.0),
        Param("Nx", _int, 512),
        Param("Ny", _int, 16),
        Param("width", _float, 6.0),
        Param("amplitude", _float, 1.0),
        Param("second", _float, 0.5, help="weight of the (1,1) y-mode"),
        Param("radius", _int, 2),
        Param("sample_every", _int, 2),
        Param("rho", _bool01, 1),
    ],
    "strichartz": [
        Param("profile", _str, "gaussian", choices=("gaussian", "bump", "planewave")),
        Param("N_list", _float_list, required=True),
        Param("p", _float, required=True),
        Param("gamma_max", _int, 16),
        Param("Lx", _float, 32.0),
        Param("Nx", _int, 1024),
        Param("Ny", _int, 128),
        Param("width_x", _float, 1.0),
        Param("width_y", _float, 0.3),
        Param("samples_per_window", _opt_int, None),
        Param("out", _str, "strichartz.csv"),
    ],
    "weyl": [
        Param("N", _float, required=True),
        Param("t_samples", _int, 64),
        Param("out", _str, "weyl.csv"),
    ],
    "report": [],
}
# fmt: on

GLOBAL_KEYS = ("seed", "threads")


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    seed: int = 0
    threads: int = 1
    out_dir: str = "out"
    overrides: list = field(default_factory=list)

    def snapshot(self) -> dict:
        return {"command": self.command, "seed": self.seed, **self.params}


def required_keys(command: str) -> list[str]:
    return [p.key for p in SCHEMA[command] if p.required]


def load_file(path: str, command: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    if not text.strip():
        raise ConfigError(
            f"config file {path} is empty; required keys for {command}: "
            + ", ".join(required_keys(command) or ["(none)"])
        )
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path}: top level must be an object")
    return data


def resolve(command: str, file_values: dict, flag_values: dict, out_dir=None) -> ExperimentConfig:
    """Merge defaults, file values and explicit flags, then validate."""
    if command not in SCHEMA:
        raise ConfigError(f"unknown command {command!r}")
    schema = {p.key: p for p in SCHEMA[command]}
    file_values = dict(file_values)
    fc = file_values.pop("command", command)
    if fc != command:
        raise ConfigError(f"config file is for command {fc!r}, not {command!r}")
    unknown = sorted(set(file_values) - set(schema) - set(GLOBAL_KEYS) - {"out_dir"})
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    merged = {k: p.default for k, p in schema.items()}
    raw = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    overrides = sorted(k for k in flag_values if flag_values[k] is not None and k in file_values)
    for key, value in raw.items():
        if key in GLOBAL_KEYS or key == "out_dir":
            continue
        p = schema[key]
        try:
            value = p.conv(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{command}.{key}: {e}") from e
        if p.choices is not None and value not in p.choices:
            raise ConfigError(f"{command}.{key}: {value!r} not in {list(p.choices)}")
        merged[key] = value
    missing = [k for k, p in schema.items() if p.required and k not in raw]
    if missing:
        raise ConfigError(f"missing required keys for {command}: {', '.join(missing)}")
    try:
        seed = _int(raw.get("seed", 0))
        threads = _int(raw.get("threads", 1))
    except ValueError as e:
        raise ConfigError(f"global option: {e}") from e
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    out = out_dir if out_dir is not None else raw.get("out_dir", "out")
    cfg = ExperimentConfig(command, merged, seed, threads, str(out), overrides)
    validate(cfg)
    return cfg


def _pow2(name, module, v):
    if not (v >= 1 and (v & (v - 1)) == 0):
        raise ConfigError(f"{name}={v} violates the {module} invariant: must be a power of two")


def _positive(name, v):
    if not v > 0:
        raise ConfigError(f"{name} must be > 0, got {v}")


def validate(cfg: ExperimentConfig) -> None:
    """Module preconditions, checked before any allocation."""
    c, p = cfg.command, cfg.params
    if c in ("resonances", "sumlem-sweep", "simulate-resonant", "multiscale") and p["radius"] < 0:
        raise ConfigError("ModeSet radius must be non-negative")
    if c == "resonances":
        if max(abs(p["j"][0]), abs(p["j"][1])) > p["radius"]:
            raise ConfigError(f"mode j={p['j']} lies outside the ModeSet of radius {p['radius']}")
    if c == "simulate-resonant":
        _pow2("Nx", "GridSpec", p["Nx"])
        for k in ("Lx", "dt", "T"):
            _positive(k, p[k])
        if p["init"] == "file" and not p["init_file"]:
            raise ConfigError("--init file needs --init-file")
        if p["snapshot_every"] < 1:
            raise ConfigError("snapshot_every must be >= 1")
    if c == "simulate-nls":
        _pow2("Nx", "GridSpec", p["Nx"])
        _pow2("Ny", "GridSpec", p["Ny"])
        for k in ("Lx", "dt", "T", "R"):
            _positive(k, p[k])
        if p["init"] == "file" and not p["init_file"]:
            raise ConfigError("--init file needs --init-file")
        m = p["xi0"] * p["Lx"] / (2 * np.pi)
        if abs(m - round(m)) > 1e-9:
            raise ConfigError("xi0 must be a multiple of 2 pi / Lx (box periodicity)")
        if p["init"] == "largescale" and not 0 < p["M"] <= 1:
            raise ConfigError("largescale M must lie in (0, 1]")
        if p["init"] == "euclidean" and p["N"] < 1:
            raise ConfigError("euclidean N must be >= 1")
        if p["cadence"] < 1:
            raise ConfigError("cadence must be >= 1")
    if c == "multiscale":
        _pow2("Nx", "GridSpec", p["Nx"])
        _pow2("Ny", "GridSpec", p["Ny"])
        if not p["M_list"]:
            raise ConfigError("M_list is empty")
        for M in p["M_list"]:
            if not 0 < M <= 1:
                raise ConfigError(f"M={M} outside (0, 1]")
        for k in ("T0", "dt", "Lref"):
            _positive(k, p[k])
        if p["psi"] == "file" and not p["psi_file"]:
            raise ConfigError("--psi file needs --psi-file")
        if p["radius"] > p["Ny"] // 2:
            raise ConfigError("mode radius exceeds the y-Nyquist")
    if c == "strichartz":
        if not p["p"] > 4:
            raise ConfigError("Strichartz exponent p must exceed 4")
        _pow2("Nx", "GridSpec", p["Nx"])
        _pow2("Ny", "GridSpec", p["Ny"])
        for N in p["N_list"]:
            if N < 1:
                raise ConfigError("N values must be >= 1")
        if p["gamma_max"] < 0:
            raise ConfigError("gamma_max must be >= 0")
    if c == "weyl":
        if p["N"] < 1:
            raise ConfigError("N must be >= 1")
        if p["t_samples"] < 1:
            raise ConfigError("t_samples must be >= 1")
