"""Aggregate every run manifest under a directory into summary.md / summary.json."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from ..profiles import loglog_slope
from .manifest import MANIFEST


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _summarize(run_dir: Path, m: dict) -> dict:
    cmd = m.get("command")
    out = {"dir": str(run_dir), "command": cmd, "status": m.get("status"), "config_hash": m.get("config_hash")}
    outputs = m.get("outputs", {})
    if cmd == "simulate-resonant" and "conserved.csv" in outputs:
        rows = _read_csv(run_dir / "conserved.csv")
        keys = [k for k in rows[0] if k != "time"] if rows else []
        drift = {}
        for k in keys:
            q0 = float(rows[0][k])
            d = max(abs(float(r[k]) - q0) for r in rows)
            drift[k] = d / abs(q0) if q0 != 0 else d
        out["max_relative_drift"] = drift
    elif cmd == "simulate-nls" and "diagnostics.csv" in outputs:
        rows = _read_csv(run_dir / "diagnostics.csv")
        out["max_relative_drift"] = m.get("validity", {}).get("max_relative_drift")
        out["boundary_frac_max"] = max(float(r["boundary_frac"]) for r in rows) if rows else None
    elif cmd == "multiscale" and "multiscale.csv" in outputs:
        rows = _read_csv(run_dir / "multiscale.csv")
        good = [r for r in rows if r["valid"] == "1"]
        Ms = [float(r["M"]) for r in good]
        out["rows"] = len(rows)
        out["valid_rows"] = len(good)
        out["slope_error"] = loglog_slope(Ms, [float(r["sup_H1_error"]) for r in good])
        out["slope_residual"] = loglog_slope(Ms, [float(r["residual_duhamel"]) for r in good])
        out["table"] = rows
    elif cmd == "strichartz":
        name = m.get("config", {}).get("out", "strichartz.csv")
        if name in outputs:
            rows = _read_csv(run_dir / name)
            out["table"] = rows
            r = [float(x["ratio"]) for x in rows]
            out["variation"] = max(r) / min(r) if r else None
    elif cmd == "sumlem-sweep":
        out["max_statistic"] = m.get("validity", {}).get("max_statistic")
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.4g}"
    return str(v)


def build_report(root) -> tuple[dict, str]:
    root = Path(root)
    runs, problems = [], []
    for mpath in sorted(root.rglob(MANIFEST)) if root.exists() else []:
        try:
            m = json.loads(mpath.read_text())
            if not isinstance(m, dict) or "command" not in m:
                raise ValueError("missing command")
            runs.append(_summarize(mpath.parent, m))
        except (OSError, ValueError, KeyError) as e:
            problems.append({"manifest": str(mpath), "error": str(e)})
    summary = {"root": str(root), "runs": runs, "invalid_manifests": problems}

    lines = ["# Run summary", ""]
    if not runs and not problems:
        lines.append("No runs found.")
    for r in runs:
        lines.append(f"## {r['command']} ({r['status']})")
        lines.append(f"- directory: `{r['dir']}`")
        if "max_relative_drift" in r and r["max_relative_drift"]:
            for k, v in r["max_relative_drift"].items():
                lines.append(f"- max relative drift {k}: {_fmt(v)}")
        if r["command"] == "multiscale" and "rows" in r:
            lines.append(f"- valid rows: {r['valid_rows']} of {r['rows']}")
            lines.append(f"- fitted slope (sup H1 error, valid rows): {_fmt(r['slope_error'])}")
            lines.append(f"- fitted slope (Duhamel residual, valid rows): {_fmt(r['slope_residual'])}")
            lines.append("")
            lines.append("| M | sup_H1_error | residual_duhamel | valid |")
            lines.append("|---|---|---|---|")
            for row in r["table"]:
                lines.append(f"| {row['M']} | {row['sup_H1_error']} | {row['residual_duhamel']} | {row['valid']} |")
        if r["command"] == "strichartz" and "table" in r:
            lines.append(f"- ratio variation max/min: {_fmt(r['variation'])}")
            lines.append("")
            lines.append("| N | p | q | ratio |")
            lines.append("|---|---|---|---|")
            for row in r["table"]:
                lines.append(f"| {row['N']} | {row['p']} | {row['q']} | {row['ratio']} |")
        if r.get("max_statistic") is not None:
            lines.append(f"- max statistic: {_fmt(r['max_statistic'])}")
        lines.append("")
    if problems:
        lines.append("## Unreadable manifests")
        for p in problems:
            lines.append(f"- `{p['manifest']}`: {p['error']}")
    return summary, "\n".join(lines) + "\n"


def write_report(root) -> dict:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    summary, text = build_report(root)
    (root / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (root / "summary.md").write_text(text)
    return summary
