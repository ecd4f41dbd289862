"""Regularized Monge-Ampere currents of log|f|^2, their eps -> 0 limit and the remainder.

For f = (f_1..f_p) with dbar_J f_j = 0 on Z = {f = 0}, the forms
(i del dbar log(|f|^2 + eps^2))^p converge to kappa(p) [Z] + R_J(f).  The
divisor kappa(p) = (2 pi)^p is calibrated on the integrable model (J_st,
f = coordinates), where the literal log|f|^2 carries mass 2 pi per unit area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jet
from .algebra import ExteriorValue, p10_matrix, wedge
from .testforms import wedge_top
from .calculus import (EXACT, FormField, dbar_field, ddbar_field, del_field, function_field,
                       wedge_power_field)
from .currents import IntegrationCurrent, SmoothCurrent
from .errors import ExtrapolationUnstable
from .extrapolate import lsq_limit
from .geometry import Box
from .quadrature import QuadratureConfig, QuadResult, integrate, integrate_unbounded
from .structures import AlmostComplexStructure
from .testforms import TestForm

DEFAULT_EPS_GRID = tuple(0.2 * 2.0**-k for k in range(6))


def kappa(p: int) -> float:
    return (2 * math.pi) ** p


def model_constant(p: int, cfg: QuadratureConfig | None = None) -> QuadResult:
    """Quadrature of int_{C^p} dV / (|w|^2 + 1)^(p + 1)  (= pi^p / p!)."""
    return integrate_unbounded(lambda x: (np.sum(x * x, axis=-1) + 1.0) ** -(p + 1), 2 * p, cfg)


@dataclass(frozen=True)
class DefiningMap:
    """f: coords -> list of p complex values; Z its zero set as an integration current."""

    J: AlmostComplexStructure
    f: Callable = field(repr=False)
    p: int
    domain: Box
    Z: IntegrationCurrent | None = None
    name: str = "f"

    @property
    def n(self) -> int:
        return self.J.n

    def abs2(self, coords):
        total = 0.0
        for fj in self.f(coords):
            total = total + jet.abs2(fj)
        return total

    def norm2_field(self) -> FormField:
        return function_field(self.n, self.abs2, name="|f|^2")

    def component_field(self, j: int) -> FormField:
        return function_field(self.n, lambda c: self.f(c)[j], name=f"f{j}")

    def check(self, samples: int = 20, seed: int = 0, tol: float = 1e-8) -> dict:
        """Hypotheses: dbar_J f_j = 0 on Z, del_J f_1 ^ ... ^ del_J f_p != 0 on U."""
        rng = np.random.default_rng(seed)
        worst_dbar = 0.0
        if self.Z is not None:
            for chart in self.Z.charts:
                t = rng.uniform(chart.box.lo, chart.box.hi, size=(samples, len(chart.box.lo)))
                x = chart(t)
                x = x[np.all(self.J.domain.contains(x, tol=1e-12), axis=-1)] \
                    if np.ndim(self.J.domain.contains(x, tol=1e-12)) else x
                for j in range(self.p):
                    v = dbar_field(self.component_field(j), self.J)(x)
                    worst_dbar = max(worst_dbar, v.max_abs())
        xs = rng.uniform(self.domain.lo, self.domain.hi, size=(samples, len(self.domain.lo)))
        min_wedge = math.inf
        for x in xs:
            w = ExteriorValue.scalar(self.n, 1.0)
            for j in range(self.p):
                w = wedge(w, del_field(self.component_field(j), self.J)(x))
            min_wedge = min(min_wedge, w.max_abs())
        return {"dbar_on_Z": worst_dbar, "min_del_wedge": min_wedge,
                "ok": worst_dbar <= tol and min_wedge > 1e-10}


def ma_log_form(dm: DefiningMap, eps: float) -> FormField:
    """(i del_J dbar_J log(|f|^2 + eps^2))^p."""
    e2 = eps * eps
    u = function_field(dm.n, lambda c: jet.log(dm.abs2(c) + e2), name="log(|f|^2+eps^2)")
    return wedge_power_field(ddbar_field(u, dm.J), dm.p)


def w1_w2(dm: DefiningMap, eps: float, x):
    """(w1, w2) with (i ddbar log(|f|^2+eps^2))^p = w1 - w2."""
    g = dm.norm2_field()
    x = np.asarray(x, dtype=float)
    A = ddbar_field(g, dm.J)(x)
    B = wedge(del_field(g, dm.J)(x), dbar_field(g, dm.J)(x)) * 1j
    s = g(x)[()] + eps * eps
    p = dm.p
    Ap = ExteriorValue.scalar(dm.n, 1.0)
    for _ in range(p - 1):
        Ap = wedge(Ap, A)
    w1 = wedge(Ap, A) * (1.0 / s**p)
    w2 = wedge(Ap, B) * (p / s ** (p + 1))
    return w1, w2


class MALogCurrent(SmoothCurrent):
    """The smooth current (i del dbar log(|f|^2 + eps^2))^p."""

    def __init__(self, dm: DefiningMap, eps: float):
        super().__init__(ma_log_form(dm, eps), dm.J, (dm.p, dm.p), dm.domain,
                         f"MA(log|{dm.name}|^2, eps={eps:g})")
        self.dm = dm
        self.eps = eps


def _expansion_fields(dm: DefiningMap):
    """eps-free ingredients of the expansion: |f|^2, A = i ddbar|f|^2, B = i del|f|^2 ^ dbar|f|^2."""
    g = dm.norm2_field()
    A = ddbar_field(g, dm.J)
    dg, dbg = del_field(g, dm.J), dbar_field(g, dm.J)
    return g, A, dg, dbg


def expansion_density(dm: DefiningMap, eps_values, psi: TestForm):
    """Integrand (N, K): top coefficient of (w1 - w2) ^ psi at each eps in ``eps_values``."""
    g, A, dg, dbg = _expansion_fields(dm)
    p = dm.p
    e2 = np.asarray(eps_values, dtype=float) ** 2

    def f(pts):
        coords = [pts[:, i] for i in range(pts.shape[1])]
        Ax = A.at(coords)
        Bx = wedge(dg.at(coords), dbg.at(coords)) * 1j
        base = psi.form.at(coords)
        for _ in range(p - 1):
            base = wedge(Ax, base)
        a = np.asarray(wedge_top(Ax, base)) + np.zeros(len(pts))
        b = np.asarray(wedge_top(Bx, base)) + np.zeros(len(pts))
        s = np.real(np.asarray(dm.abs2(coords))) + np.zeros(len(pts))
        s = s[:, None] + e2[None, :]
        return a[:, None] / s**p - p * b[:, None] / s ** (p + 1)

    return f


def _hinted(dm: DefiningMap, eps: float, cfg: QuadratureConfig | None) -> QuadratureConfig:
    """Singularity hint |f|: cells near Z are bisected across Z down to ~eps."""
    cfg = cfg or QuadratureConfig()
    hint = lambda pts: np.sqrt(dm.abs2([pts[:, i] for i in range(pts.shape[1])]))
    return cfg.replace(hints=(hint,), hint_floor=0.5 * eps)


def ma_log_pairings(dm: DefiningMap, eps_values, psi: TestForm,
                    cfg: QuadratureConfig | None = None) -> QuadResult:
    """<(i ddbar log(|f|^2+eps^2))^p, psi> for every eps on one shared adaptive mesh.

    Uses the pointwise identity MA = w1 - w2, so |f|^2 and its derivatives are
    evaluated once per node for the whole grid.
    """
    cfg = cfg or QuadratureConfig()
    if psi.degree != 2 * (dm.n - dm.p):
        from .errors import BidegreeMismatch
        raise BidegreeMismatch(f"test form degree {psi.degree} != {2 * (dm.n - dm.p)}")
    box = psi.support.intersect(dm.domain)
    if box is None:
        k = len(eps_values)
        return QuadResult(np.zeros(k, complex), np.zeros(k), 0, 0)
    return integrate(expansion_density(dm, eps_values, psi), box, _hinted(dm, min(eps_values), cfg))


def ma_log_pairing(dm: DefiningMap, eps: float, psi: TestForm,
                   cfg: QuadratureConfig | None = None, method: str = "expansion") -> QuadResult:
    """Single-eps pairing; method "direct" differentiates log(|f|^2+eps^2) itself."""
    if method == "direct":
        return MALogCurrent(dm, eps).pair(psi, _hinted(dm, eps, cfg))
    r = ma_log_pairings(dm, [eps], psi, cfg)
    return QuadResult(complex(r.value[0]), float(r.error[0]), r.cells, r.evaluations, r.converged)


@dataclass
class PLReport:
    eps: list
    raw: list
    errors: list
    limit: complex
    limit_err: float
    kappa: float
    normalized: complex
    z_pairing: complex
    remainder: complex
    fit: dict


def pl_limit(dm: DefiningMap, psi: TestForm, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
             cfg: QuadratureConfig | None = None, z_pairing: complex | None = None,
             rel: float = 0.05, floor: float = 1e-4) -> PLReport:
    """Extrapolate the eps-grid pairings to eps = 0 (see ``_eps_basis``)."""
    eps_grid = sorted((float(e) for e in eps_grid), reverse=True)
    if len(eps_grid) < 4:
        raise ValueError("the eps grid needs at least 4 points")
    r = ma_log_pairings(dm, eps_grid, psi, cfg)
    raw = [complex(v) for v in r.value]
    errs = [float(e) for e in r.error]
    limit, stderr, alt = _eps_fit(eps_grid, raw)
    gap = abs(limit - alt)
    scale = max(abs(limit), 1.0)
    if gap > rel * scale and gap > floor + 10 * max(errs):
        raise ExtrapolationUnstable(f"eps extrapolation unstable: {limit} vs {alt}", [limit, alt])
    k = kappa(dm.p)
    if z_pairing is None:
        z_pairing = complex(dm.Z.pair(psi, cfg).value) if dm.Z is not None else 0.0
    normalized = limit / k
    return PLReport(eps_grid, raw, errs, limit, gap + stderr, k, normalized, z_pairing,
                    normalized - z_pairing, {"alternate": alt, "stderr": stderr})


def _eps_basis(n_params: int):
    """Even-power expansion: eps enters the kernels only through eps^2, so after
    the angular integration the error is a series in eps^2k and eps^2k log eps."""
    basis = [lambda e: np.ones_like(e), lambda e: e * e * np.log(e), lambda e: e * e,
             lambda e: e**4 * np.log(e), lambda e: e**4]
    return basis[:n_params]


def _eps_fit(eps, raw):
    """Limit from the finest six points, and from the finest five (stability check).

    Coarse points with eps comparable to the test-form support sit outside the
    asymptotic regime, so only the tail of the grid is fitted.
    """
    eps = np.asarray(eps)[-6:]
    raw = np.asarray(raw)[-6:]
    k = min(5, len(eps) - 1)
    fit = lsq_limit(eps, raw, _eps_basis(k))
    alt = lsq_limit(eps[1:], raw[1:], _eps_basis(min(k, len(eps) - 1)))
    return complex(fit.value), fit.stderr, complex(alt.value)


def remainder(dm: DefiningMap, psi: TestForm, eps_grid=DEFAULT_EPS_GRID,
              cfg: QuadratureConfig | None = None) -> complex:
    """<R_J(f), psi> = normalized limit - <[Z], psi>."""
    return pl_limit(dm, psi, eps_grid, cfg).remainder


def p10_residual(J: AlmostComplexStructure, x) -> float:
    """Idempotence defect of the (1,0) projector at x (diagnostic)."""
    P = p10_matrix(J(x))
    return float(np.max(np.abs(P @ P - P)))
