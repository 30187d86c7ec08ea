import csv
import json

import numpy as np
import pytest

from resonantlab.checkpoint import read_resonant
from resonantlab.cli import main
from resonantlab.cli import commands
from resonantlab.cli.config import ConfigError, SCHEMA, eval_fraction, resolve
from resonantlab.cli.manifest import rng_for, seed_sequence
from resonantlab.cli.report import build_report


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_resonances_csv_matches_count(tmp_path, oracles):
    out = tmp_path / "r"
    assert main(["resonances", "--radius", "1", "--j", "0,0", "--out-dir", str(out)]) == 0
    assert len(rows(out / "resonances.csv")) == oracles["resonance_counts_r1"]["0,0"]
    m = manifest(out)
    assert m["status"] == "completed" and "resonances.csv" in m["outputs"]
    assert m["validity"]["count"] == 1033


def test_resonances_json_and_bruteforce(tmp_path):
    out = tmp_path / "r"
    args = ["resonances", "--radius", "1", "--j", "1,0", "--format", "json", "--method", "bruteforce"]
    assert main(args + ["--out-dir", str(out)]) == 0
    data = json.loads((out / "resonances.json").read_text())
    assert data["j"] == [1, 0] and len(data["rows"]) == 1165


@pytest.mark.parametrize(
    "argv",
    [
        ["resonances", "--radius", "1"],
        ["resonances", "--radius", "1", "--j", "3,0"],
        ["simulate-resonant", "--dt", "0.01", "--T", "0.1", "--Nx", "1000"],
        ["simulate-nls", "--dt", "0.01", "--T", "0.1", "--xi0", "0.1"],
        ["multiscale", "--M-list", "1/4,2", "--T0", "0.25"],
        ["strichartz", "--N-list", "1,2", "--p", "4"],
        ["weyl", "--N", "0.5"],
        ["resonances", "--radius", "1", "--j", "0,0", "--bogus", "1"],
        ["nonexistent"],
    ],
)
def test_config_errors_exit_2(tmp_path, argv, capsys):
    assert main(argv + ["--out-dir", str(tmp_path)]) == 2
    assert not (tmp_path / "manifest.json").exists()


def test_power_of_two_message(tmp_path, capsys):
    main(["simulate-nls", "--dt", "0.01", "--T", "0.1", "--Ny", "24", "--out-dir", str(tmp_path)])
    assert "violates the GridSpec invariant" in capsys.readouterr().err


def test_empty_config_lists_required_keys(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("")
    assert main(["multiscale", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "M_list" in err and "T0" in err


def test_config_file_unknown_key_and_bad_json(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"radius": 1, "j": [0, 0], "colour": "red"}))
    assert main(["resonances", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2
    cfg.write_text("{not json")
    assert main(["resonances", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"command": "weyl", "N": 2}))
    assert main(["resonances", "--config", str(cfg)]) == 2


def test_flag_overrides_recorded(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 2, "t_samples": 4}))
    out = tmp_path / "w"
    assert main(["weyl", "--config", str(cfg), "--t-samples", "8", "--out-dir", str(out)]) == 0
    m = manifest(out)
    assert m["flag_overrides"] == ["t_samples"]
    assert m["config"]["t_samples"] == 8 and m["config"]["N"] == 2.0
    assert len(rows(out / "weyl.csv")) == 8


def test_resolve_precedence_and_types():
    cfg = resolve("multiscale", {"M_list": [0.25], "T0": 0.5}, {"T0": "1/4"})
    assert cfg.params["T0"] == 0.25 and cfg.params["M_list"] == [0.25]
    assert cfg.params["dt"] == {q.key: q for q in SCHEMA["multiscale"]}["dt"].default
    assert cfg.overrides == ["T0"]
    assert eval_fraction("1/8") == 0.125
    with pytest.raises(ConfigError):
        resolve("weyl", {"N": True}, {})
    with pytest.raises(ConfigError):
        resolve("weyl", {"N": 2, "seed": -1}, {})


def test_seed_streams_independent_and_reproducible():
    a = rng_for(5, "resonant-init").integers(1 << 60, size=3)
    b = rng_for(5, "resonant-init").integers(1 << 60, size=3)
    c = rng_for(5, "nls-init").integers(1 << 60, size=3)
    assert (a == b).all() and not (a == c).all()
    assert list(seed_sequence(5, "nls-init").entropy) == [5, 2]


def _resonant_args(out, T="0.02", extra=()):
    return [
        "simulate-resonant", "--radius", "1", "--Nx", "128", "--Lx", "32", "--dt", "0.005",
        "--T", T, "--snapshot-every", "2", "--boundary-limit", "1", "--out-dir", str(out), *extra,
    ]


def test_simulate_resonant_outputs_and_restart(tmp_path):
    a, b, full = tmp_path / "a", tmp_path / "b", tmp_path / "full"
    assert main(_resonant_args(a, "0.02", ["--checkpoint-every", "2"])) == 0
    names = sorted(p.name for p in a.glob("state_*.bin"))
    assert names == ["state_00000002.bin", "state_00000004.bin"]
    assert main(_resonant_args(b, "0.02", ["--init", "file", "--init-file", str(a / names[-1])])) == 0
    assert main(_resonant_args(full, "0.04")) == 0
    s_b = read_resonant(b / "state_00000004.bin")
    s_full = read_resonant(full / "state_00000008.bin")
    assert s_b.time == pytest.approx(0.04) and np.array_equal(s_b.fields, s_full.fields)
    r = rows(a / "conserved.csv")
    assert [float(x["time"]) for x in r] == pytest.approx([0.0, 0.01, 0.02])
    m = manifest(a)
    assert set(m["outputs"]) == {"conserved.csv", *names}


def test_checkpoint_mismatch_is_config_error(tmp_path):
    a = tmp_path / "a"
    main(_resonant_args(a, "0.01"))
    ck = next(a.glob("state_*.bin"))
    args = _resonant_args(tmp_path / "b", "0.01", ["--init", "file", "--init-file", str(ck), "--Nx", "64"])
    assert main(args) == 2


def test_missing_init_file_exit_1(tmp_path):
    args = _resonant_args(tmp_path / "b", "0.01", ["--init", "file", "--init-file", str(tmp_path / "nope.bin")])
    assert main(args) == 1
    assert manifest(tmp_path / "b")["status"] == "failed"


def test_numerical_abort_exit_3(tmp_path):
    out = tmp_path / "x"
    args = _resonant_args(out, "0.01", ["--init", "constant", "--c", "1e70"])
    with np.errstate(all="ignore"):
        assert main(args) == 3
    m = manifest(out)
    assert m["status"] == "failed" and "numerical abort" in m["error"]


def test_validity_failure_exit_4(tmp_path):
    out = tmp_path / "n"
    args = [
        "simulate-nls", "--Lx", "16", "--Nx", "64", "--Ny", "8", "--dt", "0.01", "--T", "0.02",
        "--width-x", "4", "--cadence", "1", "--out-dir", str(out),
    ]
    assert main(args) == 4
    m = manifest(out)
    assert m["status"] == "failed" and m["validity"]["boundary_ok"] is False
    assert "diagnostics.csv" in m["outputs"]


def test_simulate_nls_runs(tmp_path):
    out = tmp_path / "n"
    args = [
        "simulate-nls", "--Lx", "32", "--Nx", "128", "--Ny", "16", "--dt", "0.01", "--T", "0.04",
        "--cadence", "2", "--checkpoint-every", "4", "--center", "centroid", "--out-dir", str(out),
    ]
    assert main(args) == 0
    r = rows(out / "diagnostics.csv")
    assert list(r[0]) == ["t", "mass", "energy", "mom_x", "mom_y1", "mom_y2", "virial", "boundary_frac"]
    assert len(r) == 3
    assert (out / "state_00000004.bin").exists()


def test_interrupted_run_is_marked_failed(tmp_path, monkeypatch):
    def boom(cfg, run):
        with commands.CsvSink(run, "partial.csv", ("a",)) as sink:
            sink.row((1,))
            raise KeyboardInterrupt

    monkeypatch.setitem(commands.COMMANDS, "weyl", boom)
    out = tmp_path / "i"
    with pytest.raises(KeyboardInterrupt):
        main(["weyl", "--N", "2", "--out-dir", str(out)])
    m = manifest(out)
    assert m["status"] == "failed" and "KeyboardInterrupt" in m["error"]
    assert "partial.csv" not in m["outputs"]


def test_report_cases(tmp_path):
    root = tmp_path / "runs"
    assert main(["report", "--out-dir", str(root)]) == 0
    assert "No runs found." in (root / "summary.md").read_text()

    main(["weyl", "--N", "2", "--t-samples", "4", "--out-dir", str(root / "w")])
    (root / "bad").mkdir()
    (root / "bad" / "manifest.json").write_text("{broken")
    (root / "ms").mkdir()
    (root / "ms" / "manifest.json").write_text(json.dumps({"command": "multiscale", "status": "completed",
                                                           "outputs": {"multiscale.csv": "x"}}))
    (root / "ms" / "multiscale.csv").write_text(
        "M,sup_H1_error,slope_running,residual_L1H1,boundary_frac,tail_mass,valid,residual_duhamel\n"
        "0.25,1.0,nan,1,0,0,1,1.0\n0.125,0.25,2.0,1,0,0,1,0.25\n0.0625,9.0,nan,1,0,0,0,9.0\n"
    )
    summary, text = build_report(root)
    assert len(summary["invalid_manifests"]) == 1
    ms = next(r for r in summary["runs"] if r["command"] == "multiscale")
    assert ms["valid_rows"] == 2 and ms["slope_error"] == pytest.approx(2.0)
    assert "Unreadable manifests" in text
    assert main(["report", "--out-dir", str(root)]) == 0
    assert json.loads((root / "summary.json").read_text())["runs"]


def test_strichartz_command(tmp_path):
    out = tmp_path / "s"
    args = [
        "strichartz", "--N-list", "1,2", "--p", "9/2", "--gamma-max", "1", "--Lx", "32",
        "--Nx", "256", "--Ny", "16", "--samples-per-window", "64", "--out-dir", str(out),
    ]
    assert main(args) == 0
    r = rows(out / "strichartz.csv")
    assert [float(x["N"]) for x in r] == [1.0, 2.0]
    assert float(r[0]["q"]) == pytest.approx(7.2)


def test_sumlem_command(tmp_path, sumlem_golden):
    out = tmp_path / "s"
    assert main(["sumlem-sweep", "--radius", "1", "--out-dir", str(out)]) == 0
    r = rows(out / "sumlem.csv")
    assert len(r) == 9
    assert max(float(x["statistic"]) for x in r) == pytest.approx(sumlem_golden["maxima"]["1"]["max"], rel=1e-14)


def test_version_flag(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
