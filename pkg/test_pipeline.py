"""End-to-end runs of the SpinSim experiments and the command-line front end."""

import re

import pytest

from app import main
from config.experiment_config import build_config, deep_merge, parse_config
from config.presets import preset_document
from pipeline.experiment_runner import ExperimentError, run_experiment
from visualization.report_generator import read_report

FAST = {"target_error": 1e-7}
NARROW_SCAN = {"detunings_hz": {"start": -1500, "stop": 1500, "num": 41}}


def _run(doc, out_dir):
    cfg = build_config(deep_merge(doc, {"output": {"directory": str(out_dir)}}))
    manifest = run_experiment(cfg)
    return manifest, read_report(out_dir / "fit_report.txt")


def test_rabi_run(tmp_path):
    print("=" * 60)
    print("SpinSim — Rabi oscillation")
    print("=" * 60)

    manifest, report = _run({"experiment": "rabi"}, tmp_path / "rabi")
    print(f"\n[1] Fitted Rabi frequency: {report['rabi_hz_fitted']} Hz")
    print(f"    Relative error: {report['rabi_relative_error']}")
    assert float(report["rabi_relative_error"]) < 1e-3
    assert report["converged"] == "true"
    assert manifest.all_converged
    assert {"rabi_scan.csv", "rabi_scan.svg", "fit_report.txt", "config.yaml"} <= set(manifest.outputs)
    assert (tmp_path / "rabi" / "manifest.txt").exists()

    saved = parse_config((tmp_path / "rabi" / "config.yaml").read_text())
    assert saved.experiment == "rabi"


def test_reversal_phase_run(tmp_path):
    doc = {"experiment": "reversal_phase", "numerics": FAST, "output": {"trajectory": True}}
    manifest, report = _run(doc, tmp_path / "reverse")
    for f in (1, 2):
        print(f"    F={f}: geometric {report[f'f{f}.geometric_phase_rad']} rad → {report[f'f{f}.class']}")
    assert report["f1.class"] == "pi"
    assert report["f2.class"] == "trivial"
    assert report["f1.parity_factor"] == "-1"
    assert report["f2.parity_factor"] == "1"
    assert {"reversal_phase.csv", "trajectory_f1.csv", "trajectory_f2.csv"} <= set(manifest.outputs)


def test_adiabaticity_report_run(tmp_path):
    _, report = _run({"experiment": "adiabaticity_report"}, tmp_path / "gaps")
    for b in ("0.2", "0.02", "0.004"):
        assert report[f"f2.smooth_bmin_{b}.classification"] == "adiabatic"
    assert report["f2.sudden.classification"] == "sudden"
    assert float(report["f2.smooth_bmin_0.004.min_gap_hz"]) == pytest.approx(2799.25, rel=1e-6)


def test_adiabatic_ramsey_run_is_reproducible(tmp_path):
    doc = deep_merge(preset_document("adiabatic_140khz"), {"numerics": FAST, "scan": NARROW_SCAN})
    _, report_a = _run(deep_merge(doc, {"numerics": {"workers": 1}}), tmp_path / "a")
    _, report_b = _run(deep_merge(doc, {"numerics": {"workers": 2}}), tmp_path / "b")
    print(f"\n[2] Phase shift: {report_a['phase_shift_rad']} rad → class {report_a['class']}")
    assert report_a["class"] == "pi"
    assert report_a == report_b
    for name in ("fringe_scan.csv", "baseline_scan.csv", "fringe_scan.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_fringe_svg_markers(tmp_path):
    doc = {"experiment": "ramsey_scan", "scan": NARROW_SCAN}
    _run(doc, tmp_path / "svg")
    svg = (tmp_path / "svg" / "fringe_scan.svg").read_text()
    points = svg.split('<g id="fringe-points">', 1)[1].split('<g id="fringe-fit">', 1)[0]
    assert len(re.findall(r"<use ", points)) == 41
    fit = svg.split('<g id="fringe-fit">', 1)[1].split('<g id="', 1)[0]
    assert len(re.findall(r"<path ", fit)) == 1
    assert "<dc:date>" not in svg


def test_failed_run_removes_partial_outputs(tmp_path):
    trace = tmp_path / "broken.csv"
    trace.write_text("time,b\n0,1\n")
    out_dir = tmp_path / "failed"
    cfg = build_config({
        "experiment": "reversal_phase",
        "schedule": {"kind": "sampled_trace", "trace_path": str(trace)},
        "output": {"directory": str(out_dir)},
    })
    with pytest.raises(ExperimentError):
        run_experiment(cfg)
    assert not out_dir.exists()


# ── command line ──

def test_cli_success(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("numerics:\n  target_error: 1.0e-7\n")
    out_dir = tmp_path / "cli"
    assert main(["reverse", "--config", str(config), "--out", str(out_dir)], environ={}) == 0
    assert read_report(out_dir / "fit_report.txt")["f1.class"] == "pi"


def test_cli_config_error(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("schedule:\n  b_min_g: -0.1\n")
    assert main(["reverse", "--config", str(config), "--out", str(tmp_path / "x")], environ={}) == 2
    assert main(["robustness", "--out", str(tmp_path / "y")], environ={}) == 2
    assert main([], environ={}) == 2
    assert main(["ramsey", "--preset", "robustness", "--out", str(tmp_path / "z")], environ={}) == 2
    assert main(["ramsey", "--preset", "adiabatic", "--out", str(tmp_path / "w")], environ={}) == 2
    assert not (tmp_path / "z").exists()


def test_cli_runtime_error(tmp_path):
    trace = tmp_path / "broken.csv"
    trace.write_text("t_s,bx_g,by_g,bz_g\n0,0,0,1\n")
    config = tmp_path / "run.yaml"
    config.write_text(f"schedule:\n  kind: sampled_trace\n  trace_path: {trace}\n")
    out_dir = tmp_path / "runtime"
    assert main(["reverse", "--config", str(config), "--out", str(out_dir)], environ={}) == 3
    assert not out_dir.exists()


def test_cli_lists_presets(capsys):
    assert main(["--list-presets"], environ={}) == 0
    assert "parity_phase" in capsys.readouterr().out


def test_cli_preset_by_fragment(tmp_path):
    out_dir = tmp_path / "gaps"
    assert main(["adiabaticity", "--preset", "gap_reg", "--out", str(out_dir)], environ={}) == 0
    assert read_report(out_dir / "fit_report.txt")["f2.sudden.classification"] == "sudden"
