"""Run manifests and deterministic output writing.

``manifest.json`` is written before any computation with status
``"running"`` and rewritten at the end as ``"completed"`` or ``"failed"``.
Only files that were closed successfully appear in the inventory.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .. import __version__
from .config import ExperimentConfig

MANIFEST = "manifest.json"
STREAMS = {"resonant-init": 1, "nls-init": 2, "multiscale": 3, "strichartz": 4}


def seed_sequence(seed: int, stream: str) -> np.random.SeedSequence:
    """Counter-based expansion: stream ``k`` of seed ``s`` is SeedSequence([s, k])."""
    return np.random.SeedSequence([seed, STREAMS[stream]])


def rng_for(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, stream))


def sha256_bytes(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(cfg: ExperimentConfig) -> str:
    payload = {"config": cfg.snapshot(), "version": __version__}
    return sha256_bytes(json.dumps(payload, sort_keys=True).encode())


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def fmt(v) -> str:
    """Shortest round-trip text for numbers; integers and strings as is."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Run:
    """Owns an out-dir: manifest lifecycle and the output inventory."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out_dir).resolve()
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs: dict[str, str] = {}
        self.validity: dict = {}
        self.data = {
            "command": cfg.command,
            "config": cfg.snapshot(),
            "config_hash": config_hash(cfg),
            "seed": cfg.seed,
            "threads": cfg.threads,
            "flag_overrides": list(cfg.overrides),
            "version": __version__,
            "started": _now(),
            "finished": None,
            "status": "running",
            "validity": {},
            "outputs": {},
        }
        self._write_manifest()

    def path(self, name: str) -> Path:
        p = (self.dir / name).resolve()
        if self.dir not in p.parents:
            raise ValueError(f"output {name} would leave the out-dir")
        return p

    def _write_manifest(self):
        tmp = self.dir / (MANIFEST + ".tmp")
        tmp.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, self.dir / MANIFEST)

    def register(self, name: str) -> None:
        self.outputs[name] = sha256_file(self.path(name))
        self.data["outputs"] = dict(sorted(self.outputs.items()))
        self._write_manifest()

    def finish(self, status: str, error: str | None = None) -> None:
        self.data["status"] = status
        self.data["finished"] = _now()
        self.data["validity"] = self.validity
        self.data["outputs"] = dict(sorted(self.outputs.items()))
        if error:
            self.data["error"] = error
        self._write_manifest()


class CsvSink:
    """Incremental CSV writer registered with the run on close."""

    def __init__(self, run: Run, name: str, columns):
        self.run = run
        self.name = name
        self.f = open(run.path(name), "w", newline="")
        self.w = csv.writer(self.f, lineterminator="\n")
        self.w.writerow(columns)

    def row(self, values):
        self.w.writerow([fmt(v) for v in values])
        self.f.flush()

    def close(self):
        if not self.f.closed:
            self.f.close()
            self.run.register(self.name)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self.f.close()
