"""Acceptance criteria 1-10, one experiment each; prints a pass/fail line per criterion."""
import os
import time
from pathlib import Path

import pytest

from istlab.harness import RunConfig, emit_report, run_experiment

OUT = Path(os.environ.get("ISTLAB_ACCEPTANCE_OUT", "acceptance_out"))
WORKERS = max(1, min(8, os.cpu_count() or 1))


def _run(exp, **over):
    cfg = RunConfig.from_dict({"experiment": exp, "workers": WORKERS, **over})
    start = time.perf_counter()
    rep = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    emit_report(rep, OUT)
    return rep, elapsed


def _line(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def _metrics(rep):
    return "; ".join(f"{m.name}={m.value:.3g}" for m in rep.metrics)


def test_criterion_01_operator_suite(capsys):
    rep, dt = _run("operator-suite")
    ok = rep.passed and dt < 10
    _line(capsys, 1, ok, f"{_metrics(rep)}; {dt:.1f}s")
    assert rep.metric("cauchy_difference_identity").value <= 1e-14
    assert rep.metric("beurling_dbar_to_d").value <= 1e-12
    assert rep.metric("dbar_solid_cauchy_identity").value <= 1e-10
    assert rep.metric("antilinear_fourier_involution").value <= 1e-10
    assert dt < 10


def test_criterion_02_nls_direct(capsys):
    rep, dt = _run("nls-direct", n=2048)
    ok = rep.passed and dt < 30
    _line(capsys, 2, ok, f"{_metrics(rep)}; {dt:.1f}s")
    assert rep.metric("unitarity_gaussian").value <= 1e-8
    assert rep.metric("unitarity_box").value <= 1e-8
    assert rep.metric("box_vs_matrix_exponential").value <= 1e-8
    assert dt < 30


def test_criterion_03_nls_roundtrip(capsys):
    rep, dt = _run("nls-roundtrip", n=2048, amplitude=1.0)
    sup_r = rep.metric("sup_r").value
    ok = rep.passed and dt < 120
    _line(capsys, 3, ok, f"{_metrics(rep)}; {dt:.1f}s")
    assert rep.metric("roundtrip_rel_l2").value <= 1e-4
    assert rep.metric("fixed_point_contraction").value <= sup_r + 0.05
    assert dt < 120


def test_criterion_04_nls_linearization(capsys):
    rep, _ = _run("nls-linearization")
    s = rep.slope("linearization_slope")
    ok = abs(s.slope - 2) <= 0.3
    _line(capsys, 4, ok, f"slope={s.slope:.3f} +- {s.half_width:.3f}")
    assert abs(s.slope - 2) <= 0.3


def test_criterion_05_nls_evolve_compare(capsys):
    rep, dt = _run("nls-evolve-compare", t=1.0, dt=1e-3, amplitude=1.0)
    err = rep.metric("ist_vs_splitstep_rel_l2").value
    ok = err <= 1e-3 and dt < 300
    _line(capsys, 5, ok, f"{_metrics(rep)}; {dt:.1f}s")
    assert err <= 1e-3
    assert dt < 300


def test_criterion_06_nls_asymptotics(capsys):
    rep, dt = _run("nls-asymptotics", times=[16, 32, 64, 128], amplitude=0.7)
    s = rep.slope("asymptotic_error_slope")
    ok = -1.0 <= s.slope <= -0.55 and dt < 600
    _line(capsys, 6, ok, f"slope={s.slope:.3f} +- {s.half_width:.3f} window [-1.0, -0.55]; {_metrics(rep)}; {dt:.1f}s")
    assert dt < 600
    assert -1.0 <= s.slope <= -0.55


def test_criterion_07_dsii_involution(capsys):
    rep, dt = _run("dsii-involution", n=128, amplitude=0.5, k_block=48)
    ok = rep.passed and dt < 900
    _line(capsys, 7, ok, f"{_metrics(rep)}; {dt:.1f}s with {WORKERS} worker(s)")
    assert rep.metric("involution_rel_l2").value <= 2e-3
    assert rep.metric("isometry_defect").value <= 1e-3
    assert dt < 900


def test_criterion_08_dsii_evolve_compare(capsys):
    rep, dt = _run("dsii-evolve-compare", t=0.5, amplitude=0.4)
    ok = rep.passed
    _line(capsys, 8, ok, f"{_metrics(rep)}; {dt:.1f}s")
    assert rep.metric("ist_vs_splitstep_rel_l2").value <= 5e-3
    assert rep.metric("splitstep_mass_drift").value <= 1e-8


def test_criterion_09_dsii_maximal(capsys):
    rep, _ = _run("dsii-maximal")
    c = rep.metric("maximal_ratio_max").value
    mono = bool(rep.metric("maximal_ratio_monotone_in_amplitude").value)
    ok = c > 0 and c < float("inf")
    _line(capsys, 9, ok, f"{_metrics(rep)}; constant={c:.3f}, monotone={mono}")
    assert ok


# reduced configurations of every experiment; each is run at two worker counts
SMALL = {
    "operator-suite": {},
    "nls-direct": dict(n=256, half_width=8.0),
    "nls-roundtrip": dict(n=256, half_width=8.0, amplitude=0.5),
    "nls-linearization": dict(n=256, half_width=8.0),
    "nls-evolve-compare": dict(n=256, half_width=12.0, t=0.1),
    "nls-asymptotics": dict(n=256, half_width=8.0, lambda_n=2048, lambda_half_width=8.0, times=[2.0, 4.0, 8.0], samples=5),
    "dsii-involution": dict(n=32, half_width=6.0, amplitude=0.3, k_block=8, z_block=8),
    "dsii-evolve-compare": dict(n=32, half_width=6.0, amplitude=0.3, k_block=8, z_block=8, t=0.05, dt=0.01),
    "dsii-maximal": dict(n=32, half_width=6.0, k_block=8, amplitudes=[0.25, 0.5]),
}


def test_criterion_10_determinism(tmp_path, capsys):
    mismatched = []
    for exp, over in SMALL.items():
        outs = []
        for workers in (1, 2):
            d = tmp_path / f"w{workers}"
            emit_report(run_experiment(RunConfig.from_dict({"experiment": exp, "workers": workers, **over})), d)
            outs.append(d)
        files = sorted(p.name for p in outs[0].glob(f"{exp}.*") if not p.name.endswith("timing.txt"))
        for name in files:
            if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes():
                mismatched.append(name)
    ok = not mismatched
    _line(capsys, 10, ok, f"{len(SMALL)} experiments at workers 1 and 2; mismatched files: {mismatched or 'none'}")
    assert ok
