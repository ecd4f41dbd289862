"""Experiment runners shared by the command line and the acceptance tests.

Each runner takes a parsed config dict and returns an :class:`Outcome` with
CSV rows, a summary, and an exit status (0 ok, 2 non-convergence, 3 failed
check).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import specs
from .algebra import ExteriorValue
from .calculus import FD, EXACT, FormField, component_field, d, split_d
from .errors import (ConfigError, ExtrapolationUnstable, IntegrandBlowup,
                     MonotoneFitFailure, NonConvergence)
from .plelong import ma_log_form, model_constant, pl_limit, w1_w2
from .structures import nijenhuis_norm

OK, NONCONVERGENCE, CHECK_FAILED = 0, 2, 3


@dataclass
class Outcome:
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    status: int = OK
    messages: list = field(default_factory=list)

    def fail(self, code: int, message: str):
        self.status = max(self.status, code)
        self.messages.append(message)


def engine_of(name: str):
    if name not in ("exact", "fd"):
        raise ConfigError(f"unknown engine {name!r}")
    return EXACT if name == "exact" else FD


def _structures(cfg: dict) -> list:
    items = cfg.get("structures") or [cfg.get("structure", {"kind": "standard", "n": 2})]
    return [(s.get("label", _label(s)), specs.structure(s)) for s in items]


def _label(s: dict) -> str:
    return s["kind"] if s["kind"] == "standard" else f"{s['kind']}({s.get('lambda', 0.0)})"


# -- split-check -------------------------------------------------------------------
def random_field(n: int, k: int, rng, engine=EXACT) -> FormField:
    """Degree-k field with random quadratic polynomial coefficients."""
    m = 2 * n
    coefs = {K: (rng.normal(), rng.normal(size=m), rng.normal(size=(m, m)) * 0.5)
             for K in combinations(range(m), k)}

    def ev(c):
        out = {}
        for K, (a, b, C) in coefs.items():
            v = a + 0.0 * c[0]
            for i in range(m):
                v = v + b[i] * c[i]
                for j in range(m):
                    v = v + C[i, j] * c[i] * c[j]
            out[K] = v
        return ExteriorValue(n, out)

    return FormField(n, ev, k, engine, f"rand{k}")


def run_split_check(cfg: dict, seed: int, engine: str = "exact", threads: int = 1) -> Outcome:
    eng = engine_of(engine)
    count = int(cfg.get("fields", 100))
    tol = float(cfg.get("tolerance", 1e-8 if engine == "exact" else eng.error_budget))
    out = Outcome()
    for s_idx, (label, J) in enumerate(_structures(cfg)):
        rng = np.random.default_rng([seed, s_idx])
        n = J.n
        lo, hi = np.asarray(J.domain.lo), np.asarray(J.domain.hi)
        worst_res, worst_tor = 0.0, 0.0
        for i in range(count):
            k = int(rng.integers(0, 2 * n))
            choices = [(a, k - a) for a in range(k + 1) if a <= n and k - a <= n]
            a, b = choices[int(rng.integers(len(choices)))]
            phi = component_field(random_field(n, k, rng, eng), J, a, b)
            x = 0.5 * (lo + hi) + 0.8 * 0.5 * (hi - lo) * rng.uniform(-1, 1, 2 * n)
            parts = split_d(phi, J, x, (a, b))
            rec = parts["del"] + parts["dbar"] - parts["theta"] - parts["thetabar"]
            residual = (d(phi, x) - rec).max_abs()
            th, thb = parts["theta"].max_abs(), parts["thetabar"].max_abs()
            worst_res = max(worst_res, residual)
            worst_tor = max(worst_tor, th, thb)
            out.rows.append({"structure": label, "field": i, "bidegree": f"{a}.{b}",
                             "residual": residual, "theta": th, "thetabar": thb,
                             "nijenhuis": nijenhuis_norm(J, x)})
        out.summary[label] = {"max_residual": worst_res, "max_torsion": worst_tor}
        if worst_res > tol:
            out.fail(CHECK_FAILED, f"{label}: reconstruction residual {worst_res:.3e} > {tol:g}")
        if J.name == "standard" and worst_tor > tol:
            out.fail(CHECK_FAILED, f"{label}: torsion {worst_tor:.3e} on an integrable structure")
        floor = cfg.get("expect_torsion", {}).get(label)
        if floor is not None and worst_tor < float(floor):
            out.fail(CHECK_FAILED, f"{label}: torsion {worst_tor:.3e} below {floor}")
    return out


# -- pl-experiment -----------------------------------------------------------------
def run_pl(cfg: dict, seed: int, engine: str = "exact", threads: int = 1) -> Outcome:
    task = cfg.get("task", "limit")
    qcfg = specs.quadrature(cfg.get("quadrature"), threads)
    if task == "model-constant":
        return _pl_model_constant(cfg, qcfg)
    if task == "expansion":
        return _pl_expansion(cfg, seed, engine)
    if task in ("limit", "slope"):
        return _pl_limits(cfg, seed, engine, qcfg, task)
    raise ConfigError(f"unknown pl task {task!r}")


def _pl_model_constant(cfg, qcfg) -> Outcome:
    out = Outcome()
    tol = float(cfg.get("tolerance", 1e-6))
    for p in cfg.get("p", [1, 2]):
        exact = math.pi**p / math.factorial(p)
        try:
            r = model_constant(int(p), qcfg)
        except NonConvergence as exc:
            part = exc.result
            value = float(np.real(part.value)) if part is not None else math.nan
            error = float(part.error) if part is not None else math.inf
            out.rows.append({"p": p, "value": value, "error": error, "exact": exact,
                             "rel_err": abs(value - exact) / exact, "status": "NonConvergence"})
            out.fail(NONCONVERGENCE, str(exc))
            continue
        rel = abs(r.value - exact) / exact
        out.rows.append({"p": p, "value": float(np.real(r.value)), "error": r.error,
                         "exact": exact, "rel_err": rel, "status": "ok"})
        if rel > tol:
            out.fail(CHECK_FAILED, f"p={p}: relative error {rel:.3e} > {tol:g}")
    return out


def _pl_expansion(cfg, seed, engine) -> Outcome:
    out = Outcome()
    tol = float(cfg.get("tolerance", 1e-8))
    points = int(cfg.get("points", 200))
    eps_list = [float(e) for e in cfg.get("eps", [0.1])]
    for s_idx, (label, J) in enumerate(_structures(cfg)):
        dm = specs.defining_map(cfg.get("defining_map", {"kind": "w"}), J)
        rng = np.random.default_rng([seed, s_idx])
        lo, hi = np.asarray(J.domain.lo), np.asarray(J.domain.hi)
        for eps in eps_list:
            direct = ma_log_form(dm, eps)
            worst = 0.0
            for _ in range(points):
                x = lo + (hi - lo) * rng.uniform(0.1, 0.9, len(lo))
                w1, w2 = w1_w2(dm, eps, x)
                worst = max(worst, (direct(x) - (w1 - w2)).max_abs())
            out.rows.append({"structure": label, "eps": eps, "points": points,
                             "max_abs_diff": worst})
            if worst > tol:
                out.fail(CHECK_FAILED, f"{label} eps={eps}: |MA - (w1 - w2)| = {worst:.3e}")
    return out


def _pl_limits(cfg, seed, engine, qcfg, task) -> Outcome:
    out = Outcome()
    eng = engine_of(engine)
    grid = cfg.get("eps_grid")
    grid = [float(e) for e in grid] if grid else [0.2 * 2.0**-k for k in range(6)]
    rel_tol = cfg.get("relative_tolerance")
    max_rem = cfg.get("max_remainder")
    slope_rows = []
    for label, J in _structures(cfg):
        dm = specs.defining_map(cfg.get("defining_map", {"kind": "w"}), J)
        forms = specs.forms_from(cfg.get("forms", {"kind": "random"}), J.n, seed, J)
        for psi in forms:
            psi = psi.with_engine(eng)
            row = {"structure": label, "form": psi.name, "row": "limit", "epsilon": 0.0,
                   "raw_pairing_re": math.nan, "raw_pairing_im": math.nan,
                   "quad_error": math.nan, "normalized": math.nan, "Z_pairing": math.nan,
                   "remainder_re": math.nan, "remainder_im": math.nan, "status": "ok"}
            try:
                rep = pl_limit(dm, psi, grid, qcfg)
            except NonConvergence as exc:
                row["status"] = "NonConvergence"
                out.fail(NONCONVERGENCE, f"{label}/{psi.name}: {exc}")
            except ExtrapolationUnstable as exc:
                row["status"] = "ExtrapolationUnstable"
                out.fail(NONCONVERGENCE, f"{label}/{psi.name}: {exc}")
            else:
                zp = complex(rep.z_pairing)
                for e, raw, err in zip(rep.eps, rep.raw, rep.errors):
                    norm = raw / rep.kappa
                    out.rows.append({"structure": label, "form": psi.name, "row": "eps",
                                     "epsilon": e, "raw_pairing_re": raw.real,
                                     "raw_pairing_im": raw.imag, "quad_error": err,
                                     "normalized": norm.real, "Z_pairing": zp.real,
                                     "remainder_re": (norm - zp).real,
                                     "remainder_im": (norm - zp).imag, "status": "ok"})
                row.update(raw_pairing_re=rep.limit.real, raw_pairing_im=rep.limit.imag,
                           quad_error=rep.limit_err, normalized=rep.normalized.real,
                           Z_pairing=zp.real, remainder_re=rep.remainder.real,
                           remainder_im=rep.remainder.imag)
                if rel_tol is not None and abs(rep.remainder) > float(rel_tol) * max(abs(zp), 1e-12):
                    out.fail(CHECK_FAILED, f"{label}/{psi.name}: relative deviation "
                                           f"{abs(rep.remainder) / max(abs(zp), 1e-12):.3e}")
                if max_rem is not None and abs(rep.remainder) > float(max_rem):
                    out.fail(CHECK_FAILED, f"{label}/{psi.name}: remainder {rep.remainder.real:.3e}")
                lam = J.params.get("lambda") if J.params else None
                if lam:
                    slope_rows.append((float(lam), abs(rep.remainder), rep.limit_err / rep.kappa))
            out.rows.append(row)
    if task == "slope":
        _fit_slope(cfg, slope_rows, out)
    return out


def _fit_slope(cfg, slope_rows, out: Outcome):
    if len(slope_rows) < 2:
        out.fail(CHECK_FAILED, "slope fit needs at least two nonzero lambda values")
        return
    lam = np.log([r[0] for r in slope_rows])
    rem = np.log([max(r[1], 1e-300) for r in slope_rows])
    slope, intercept = np.polyfit(lam, rem, 1)
    out.summary["slope"] = float(slope)
    out.summary["intercept"] = float(intercept)
    need = float(cfg.get("min_slope", 0.99))
    if slope < need:
        out.fail(CHECK_FAILED, f"log-log slope {slope:.4f} < {need}")


# -- lelong ------------------------------------------------------------------------
def _radii(cfg: dict):
    from .lelong import DEFAULT_RADII
    r = cfg.get("radii")
    return tuple(float(v) for v in r) if r else DEFAULT_RADII


def run_lelong(cfg: dict, seed: int, engine: str = "exact", threads: int = 1) -> Outcome:
    from .lelong import lelong_number
    out = Outcome()
    qcfg = specs.quadrature(cfg.get("quadrature"), threads)
    radii = _radii(cfg)
    (label, J), = _structures(cfg)[:1]
    specs.require(cfg, "currents", where="lelong config")
    for item in cfg["currents"]:
        specs.require(item, "name", "current", where="lelong current")
        name = item["name"]
        T = specs.current(item["current"], J)
        chart = specs.chart(item.get("chart"), J)
        psh = bool(item.get("psh", False))
        try:
            prof, corr = lelong_number(T, chart, radii, qcfg, J, psh=psh)
        except NonConvergence as exc:
            out.rows.append({"current": name, "row": "limit", "status": "NonConvergence"})
            out.fail(NONCONVERGENCE, f"{name}: {exc}")
            continue
        except (MonotoneFitFailure, IntegrandBlowup) as exc:
            out.rows.append({"current": name, "row": "limit", "status": type(exc).__name__})
            out.fail(CHECK_FAILED, f"{name}: {exc}")
            continue
        for i, r in enumerate(prof.radii):
            row = {"current": name, "row": "profile", "r": r, "sigma": prof.sigma[i],
                   "sigma_err": prof.sigma_err[i], "nu": prof.values[i], "nu_err": prof.errors[i],
                   "nu_bar": math.nan, "g": math.nan, "corrected": math.nan, "status": "ok"}
            # the correction is only computed for the psh (non-closed) case
            if psh:
                row.update(nu_bar=corr.nu_bar[i], g=corr.g[i], corrected=corr.corrected[i])
            out.rows.append(row)
        out.rows.append({"current": name, "row": "limit", "r": 0.0, "nu": prof.nu0,
                         "nu_err": prof.width, "c": corr.c,
                         "delta": corr.delta if corr.delta is not None else math.nan,
                         "frame": corr.frame, "status": "ok"})
        out.summary[name] = {"nu0": prof.nu0, "width": prof.width, "c": corr.c,
                             "delta": corr.delta}
        if "expect" in item:
            tol = float(item.get("tolerance", 1e-2))
            if abs(prof.nu0 - float(item["expect"])) > tol:
                out.fail(CHECK_FAILED, f"{name}: nu0 {prof.nu0:.6f} vs {item['expect']} "
                                       f"(tolerance {tol})")
        if psh and corr.g and abs(corr.g[-1]) > float(item.get("g_tolerance", 1e-2)):
            out.fail(CHECK_FAILED, f"{name}: g does not tend to 0 (last {corr.g[-1]:.3e})")
    return out


def run_coord_invariance(cfg: dict, seed: int, engine: str = "exact",
                         threads: int = 1) -> Outcome:
    from .lelong import coord_invariance
    out = Outcome()
    qcfg = specs.quadrature(cfg.get("quadrature"), threads)
    radii = _radii(cfg)
    tol = float(cfg.get("tolerance", 2e-2))
    feps = tuple(float(e) for e in cfg.get("functional_eps", ()))
    for label, J in _structures(cfg):
        T = specs.current(cfg.get("current", {"kind": "integration"}), J)
        ca = specs.chart(cfg.get("chart_a"), J)
        cb = specs.chart(cfg.get("chart_b"), J)
        try:
            rep = coord_invariance(T, ca, cb, radii, qcfg, J, feps)
        except NonConvergence as exc:
            out.rows.append({"structure": label, "status": "NonConvergence"})
            out.fail(NONCONVERGENCE, f"{label}: {exc}")
            continue
        pa, pb = rep.profile_a, rep.profile_b
        for i, r in enumerate(pa.radii):
            out.rows.append({"structure": label, "row": "profile", "r": r,
                             "nu_chartA": pa.values[i], "nu_chartB": pb.values[i],
                             "diff": abs(pa.values[i] - pb.values[i]),
                             "err_a": pa.errors[i], "err_b": pb.errors[i], "status": "ok"})
        out.rows.append({"structure": label, "row": "limit", "r": 0.0, "nu_chartA": rep.nu_a,
                         "nu_chartB": rep.nu_b, "diff": rep.diff, "err_a": pa.width,
                         "err_b": pb.width, "status": "ok"})
        for row in rep.functional:
            out.rows.append({"structure": label, "row": "functional", "eps": row["eps"],
                             "r": row["r"], "functional": row["functional"],
                             "lower": row["lower"], "upper": row["upper"], "status": "ok"})
        out.summary[label] = {"diff": rep.diff, **rep.constants}
        if rep.diff > tol:
            out.fail(CHECK_FAILED, f"{label}: |nu_a - nu_b| = {rep.diff:.3e} > {tol}")
    return out


# -- janalytic ----------------------------------------------------------------------
def run_restriction(cfg: dict, seed: int, engine: str = "exact", threads: int = 1) -> Outcome:
    from .janalytic import integration_current, restriction_check, validate
    out = Outcome()
    qcfg = specs.quadrature(cfg.get("quadrature"), threads)
    tol = float(cfg.get("tolerance", 5e-2))
    eng = engine_of(engine)
    for label, J in _structures(cfg):
        A = specs.stratification(cfg.get("stratification", {"kind": "line_w0"}))
        if not validate(A, J).passed:
            out.fail(CHECK_FAILED, f"{label}: {A.name} failed validation")
            continue
        T = specs.current(cfg["current"], J)
        psis = [p.with_engine(eng) for p in
                specs.forms_from(cfg.get("forms", {"kind": "probes_on"}), J.n, seed, J, A)]
        try:
            rep = restriction_check(T, A, psis, float(cfg.get("delta0", 0.2)),
                                    int(cfg.get("levels", 7)), qcfg, J,
                                    current_A=integration_current(A, J))
        except NonConvergence as exc:
            out.rows.append({"structure": label, "status": "NonConvergence"})
            out.fail(NONCONVERGENCE, f"{label}: {exc}")
            continue
        for r in rep.rows:
            out.rows.append({"structure": label, "probe_id": r.probe_id, "lhs": r.lhs,
                             "rhs": r.rhs, "rel_dev": r.rel_dev, "lhs_err": r.lhs_err,
                             "m_A": rep.m_A})
        out.summary[label] = {"m_A": rep.m_A, "max_dev": rep.max_dev}
        if not rep.max_dev <= tol:
            out.fail(CHECK_FAILED, f"{label}: max deviation {rep.max_dev:.3e} > {tol}")
    return out


def run_validate(cfg: dict, seed: int, engine: str = "exact", threads: int = 1) -> Outcome:
    from .janalytic import AREA_DELTAS, validate
    out = Outcome()
    qcfg = specs.quadrature(cfg.get("quadrature", {"abs_tol": 1e-8, "rel_tol": 1e-6}), threads)
    (label, J), = _structures(cfg)[:1]
    specs.require(cfg, "stratifications", where="validate config")
    deltas = tuple(float(v) for v in cfg.get("deltas", AREA_DELTAS))
    for item in cfg["stratifications"]:
        A = specs.stratification(item)
        rep = validate(A, J, seed=seed, radius=float(cfg.get("radius", 0.5)), deltas=deltas,
                       cfg=qcfg)
        for i, res in enumerate(rep.residuals):
            out.rows.append({"stratification": A.name, "kind": "residual", "stratum": i,
                             "value": res})
        for j, pr in enumerate(rep.probes):
            for k, (dl, m) in enumerate(zip(pr.deltas, pr.masses)):
                out.rows.append({"stratification": A.name, "kind": "area", "stratum": j,
                                 "delta": dl, "value": m,
                                 "ratio": pr.ratios[k - 1] if k else math.nan})
        verdict = "pass" if rep.passed else "fail"
        out.rows.append({"stratification": A.name, "kind": "verdict", "value": verdict})
        out.summary[A.name] = {"passed": rep.passed, "failures": rep.failures}
        expect = item.get("expect", "pass")
        if verdict != expect:
            out.fail(CHECK_FAILED, f"{A.name}: validation {verdict}, expected {expect}")
    return out


RUNNERS = {
    "split-check": run_split_check,
    "pl-experiment": run_pl,
    "lelong": run_lelong,
    "coord-invariance": run_coord_invariance,
    "restriction": run_restriction,
    "validate": run_validate,
}
