"""End-to-end acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (visible without ``-s``) before asserting.
"""
from __future__ import annotations

from dataclasses import replace

import pytest

from dynspec.harness import load_config, run_experiment
from dynspec.properties import run_property_suite

SEEDS = (1234, 2345, 3456, 4567)


def _report(capsys, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def test_lifegame_period_recovery(capsys):
    cfg = replace(load_config("period-lifegame"), seeds=SEEDS)
    rep = run_experiment(cfg)
    betas = [r["beta"] for r in rep.results]
    ok = betas == [8] * 4
    _report(capsys, "LifeGame period recovery", ok, f"beta per seed {betas}, expected 8 on 4/4")
    assert ok


def test_circle_period_recovery(capsys):
    cfg = replace(load_config("period-circle"), seeds=SEEDS)
    rep = run_experiment(cfg)
    betas = [r["beta"] for r in rep.results]
    anp = [r["anp"] for r in rep.results]
    ok = betas == [5] * 4 and all(anp)
    _report(capsys, "circle period recovery", ok, f"beta per seed {betas}, nearly-period confirmed {sum(anp)}/4")
    assert ok


def test_eigenvalue_table(capsys):
    cfg = replace(load_config("eigen-permshrink"), seeds=SEEDS)
    rep = run_experiment(cfg)
    per = rep.aggregate["per_c_sim"]
    parts = []
    for c in cfg.eigen.c_sim:
        e = per[str(c)]
        errs = [r["max_error"] for r in rep.results if r["c_sim"] == c]
        txt = f"C_sim={c} max errors {[round(x, 4) for x in errs]}"
        if "tolerance" in e:
            txt += f" ({e['within']}/{e['runs']} within {e['tolerance']})"
        parts.append(txt)
    passed = rep.passed
    _report(capsys, "eigenvalue table", passed, "; ".join(parts))
    assert passed, "; ".join(parts)


@pytest.mark.slow
def test_convergence_rate(capsys):
    rep = run_experiment(load_config("eigen-rate"))
    f = rep.aggregate["factors"]
    lo, hi = rep.aggregate["band"]
    _report(capsys, "convergence rate", rep.passed,
            f"error ratios per 4x N {[round(x, 3) for x in f]}, band [{lo}, {hi}]")
    assert rep.passed


def test_property_suite(capsys):
    results = run_property_suite()
    failed = [r for r in results if not r.passed]
    detail = f"{len(results) - len(failed)}/{len(results)} pass"
    if failed:
        detail += "; " + "; ".join(f"{r.name}: {r.detail}" for r in failed)
    _report(capsys, "property suite", not failed, detail)
    assert not failed, detail
