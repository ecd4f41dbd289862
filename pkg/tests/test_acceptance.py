"""Acceptance criteria AC1-AC11, each run through the bundled CLI configs.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (section "acceptance criteria").
"""
import math
import os
import time

import numpy as np
import pytest

from jcurrents.cli import run_experiment
from conftest import ACCEPTANCE_LINES

CSV = {}


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def run(out_dir, kind, config, budget):
    t0 = time.perf_counter()
    status, csv_path, outcome = run_experiment(kind, config, str(out_dir / "t1"))
    elapsed = time.perf_counter() - t0
    CSV[config] = (kind, csv_path.read_bytes())
    return status, outcome, elapsed


def record(ac, ok, detail, elapsed=None, budget=None):
    t = "" if elapsed is None else f" [{elapsed:.1f}s / {budget}s]"
    ACCEPTANCE_LINES.append(f"{ac:<5} {'PASS' if ok else 'FAIL'}  {detail}{t}")
    return ok


def check(ac, status, outcome, conditions, detail, elapsed, budget):
    ok = status == 0 and all(conditions) and elapsed <= budget
    record(ac, ok, detail, elapsed, budget)
    assert status == 0, outcome.messages
    assert all(conditions), detail
    assert elapsed <= budget, f"{elapsed:.1f}s > {budget}s"


def test_ac01_model_constant(out_dir):
    status, out, el = run(out_dir, "pl-experiment", "model_constant", 60)
    worst = max(r["rel_err"] for r in out.rows)
    check("AC1", status, out, [len(out.rows) == 2, worst <= 1e-6],
          f"model constant p=1,2: max rel err {worst:.2e} (tol 1e-6)", el, 60)


def test_ac02_expansion_identity(out_dir):
    status, out, el = run(out_dir, "pl-experiment", "expansion_identity", 120)
    worst = max(r["max_abs_diff"] for r in out.rows)
    labels = {r["structure"] for r in out.rows}
    points = out.rows[0]["points"]
    check("AC2", status, out, [worst <= 1e-8, points == 200,
                               {"standard", "twisted(0.0)", "twisted(0.1)"} <= labels],
          f"w1 - w2 vs direct MA at {points} points: max diff {worst:.2e} (tol 1e-8)", el, 120)


def test_ac03_pl_integrable(out_dir):
    status, out, el = run(out_dir, "pl-experiment", "pl_integrable", 600)
    lim = [r for r in out.rows if r["row"] == "limit"]
    rem = max(abs(complex(r["remainder_re"], r["remainder_im"])) for r in lim)
    rel = max(abs(complex(r["remainder_re"], r["remainder_im"])) / abs(r["Z_pairing"]) for r in lim)
    check("AC3", status, out, [len(lim) == 5, rel <= 1e-3, rem <= 1e-3],
          f"integrable PL on 5 forms: max rel dev {rel:.2e}, max |R| {rem:.2e}", el, 600)


def test_ac04_pl_twisted_slope(out_dir):
    status, out, el = run(out_dir, "pl-experiment", "pl_twisted", 1200)
    slope = out.summary.get("slope", math.nan)
    rems = [r["remainder_re"] for r in out.rows if r["row"] == "limit"]
    finite = all(math.isfinite(v) for v in rems)
    check("AC4", status, out, [finite, slope >= 0.99, len(rems) == 3],
          f"twisted remainder |R(lambda)| log-log slope {slope:.4f} (need >= 1 - 0.01)", el, 1200)


def test_ac05_split_check(out_dir):
    status, out, el = run(out_dir, "split-check", "split_check", 60)
    summ = out.summary
    rec = max(v["max_residual"] for v in summ.values())
    st, tw = summ["standard"], summ["twisted(0.2)"]
    counts = {lab: sum(r["structure"] == lab for r in out.rows) for lab in summ}
    conds = [rec <= 1e-8, st["max_torsion"] <= 1e-8, tw["max_torsion"] >= 1e-3,
             all(c == 100 for c in counts.values())]
    check("AC5", status, out, conds,
          f"split residual {rec:.1e} on 100 fields each; torsion J_st {st['max_torsion']:.1e}, "
          f"twisted(0.2) {tw['max_torsion']:.3f}", el, 60)


def limits(out):
    return {r["current"]: r for r in out.rows if r.get("row") == "limit"}


def test_ac06_lelong(out_dir):
    status, out, el = run(out_dir, "lelong", "lelong", 600)
    lim = limits(out)
    nu = {k: v["nu"] for k, v in lim.items()}
    conds = [abs(nu["disc"] - 1) <= 1e-2, abs(nu["smooth"]) <= 1e-2,
             abs(nu["2disc+smooth"] - 2) <= 2e-2,
             all(math.isfinite(v["c"]) and v["c"] >= 0 for v in lim.values())]
    check("AC6", status, out, conds,
          f"nu: disc {nu['disc']:.5f}, smooth {nu['smooth']:.1e}, "
          f"2disc+smooth {nu['2disc+smooth']:.5f}; c found", el, 600)


def test_ac07_lelong_psh(out_dir):
    status, out, el = run(out_dir, "lelong", "lelong_psh", 600)
    lim = limits(out)
    conds = [abs(lim["-disc"]["nu"] + 1) <= 2e-2, abs(lim["psh_example"]["nu"]) <= 2e-2]
    for name in ("-disc", "psh_example"):
        prof = [r for r in out.rows if r["current"] == name and r.get("row") == "profile"]
        g = [abs(r["g"]) for r in prof]
        corrected = np.array([r["corrected"] for r in prof])
        errs = np.array([r["nu_err"] for r in prof])
        # radii descend, so the corrected quantity must not grow along the rows
        conds.append(bool(np.all(corrected[:-1] >= corrected[1:] - errs[:-1] - errs[1:] - 1e-12)))
        conds.append(g[-1] <= max(g[0], 1e-12) and g[-1] <= 1e-2)
    check("AC7", status, out, conds,
          f"psh: -disc {lim['-disc']['nu']:.5f}, (|z|^2-R^2)Phi "
          f"{lim['psh_example']['nu']:.2e}; corrected profile nondecreasing, g -> 0", el, 600)


def test_ac08_coord_invariance(out_dir):
    status, out, el = run(out_dir, "coord-invariance", "coord_invariance", 600)
    rows = [r for r in out.rows if r["row"] == "limit" and r["status"] == "ok"]
    diff = max(r["diff"] for r in rows)
    check("AC8", status, out, [len(rows) == 2, diff <= 2e-2],
          f"nu in linear vs perturbed chart (J_st, twisted 0.1): max diff {diff:.1e}", el, 600)


def test_ac09_restriction(out_dir):
    status, out, el = run(out_dir, "restriction", "restriction", 900)
    devs = [r["rel_dev"] for r in out.rows]
    labels = {r["structure"] for r in out.rows}
    check("AC9", status, out, [len(devs) == 10, max(devs) <= 5e-2, len(labels) == 2],
          f"1_A T vs m_A [A] over 5 probes x 2 structures: max rel dev {max(devs):.1e}", el, 900)


def test_ac10_validate(out_dir):
    status, out, el = run(out_dir, "validate", "validate_strata", 300)
    verdicts = {r["stratification"]: r["value"] for r in out.rows if r["kind"] == "verdict"}
    exp_rows = [r for r in out.rows if r["kind"] == "area" and "exp" in r["stratification"]]
    ratios = [r["ratio"] for r in exp_rows if math.isfinite(r["ratio"])]
    conds = [verdicts.get("{w=0}") == "pass", any(v == "fail" for k, v in verdicts.items()
                                                   if "exp" in k),
             len(ratios) >= 3 and all(x > 2 for x in ratios[:3])]
    check("AC10", status, out, conds,
          f"area probe: {verdicts}; e^(1/w) ratios {[round(x, 2) for x in ratios]}", el, 300)


FAST = ("model_constant", "split_check", "expansion_identity", "validate_strata", "lelong",
        "coord_invariance")


def test_ac11_byte_identical_across_threads(out_dir):
    names = list(CSV) if os.environ.get("JCURRENTS_FULL_AC11") else \
        [n for n in FAST if n in CSV]
    if not names:
        pytest.skip("AC11 reuses the AC1-AC10 outputs; run the whole module")
    bad = []
    for name in names:
        kind, ref = CSV[name]
        for t in (4, 8):
            _, path, _ = run_experiment(kind, name, str(out_dir / f"t{t}"), threads=t)
            if path.read_bytes() != ref:
                bad.append(f"{name}@{t}")
    ok = record("AC11", not bad, f"CSV byte-identical for threads 1/4/8 on {len(names)} configs"
                + (f"; mismatches {bad}" if bad else ""))
    assert ok, bad
