"""Stratified J-analytic subsets, area probes, and restriction of currents.

A stratification is an ordered list of strata of increasing complex dimension.
Each stratum is described by parametrized charts covering its regular part; a
distance-like defining function is optional and only used for tube cutoffs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jet
from .currents import (Current, IntegrationCurrent, ParamChart, graph_chart,
                       invariance_residual, tube_limit)
from .errors import ConfigError, ExtrapolationUnstable, ValidationRequired
from .geometry import Box
from .lelong import DEFAULT_RADII, lelong_number
from .quadrature import QuadratureConfig, QuadResult, integrate
from .structures import AlmostComplexStructure, adapted_chart
from .testforms import TestForm, positive_probe, smooth_step

AREA_DELTAS = tuple(0.1 * 4.0**-k for k in range(4))
DIVERGENCE_RATIO = 2.0


@dataclass
class Stratum:
    """Regular part of A_j minus A_{j-1}: complex dimension ``dim`` and its charts."""

    dim: int
    charts: list = field(default_factory=list)
    defining: Callable | None = field(default=None, repr=False)
    truncate: Callable | None = field(default=None, repr=False)
    tube_box: Callable | None = field(default=None, repr=False)
    centers: list = field(default_factory=list)
    name: str = "stratum"

    def pieces(self, delta: float) -> list:
        """Charts covering the stratum at distance >= delta from lower strata."""
        return list(self.charts) if self.truncate is None else list(self.truncate(delta))

    def sample_points(self, count: int = 3, seed: int = 0) -> list:
        pts = [np.asarray(c, dtype=float) for c in self.centers]
        if self.charts:
            rng = np.random.default_rng(seed)
            for _ in range(count):
                chart = self.charts[rng.integers(len(self.charts))]
                t = chart.box.center + 0.5 * (rng.uniform(size=len(chart.box.lo)) - 0.5) \
                    * chart.box.widths
                pts.append(chart(t))
        return pts[:max(count, len(self.centers))]


@dataclass
class Stratification:
    strata: list
    n: int
    pure: bool = True
    irreducible: bool = True
    name: str = "A"
    validated: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.strata:
            raise ConfigError("a stratification needs at least one stratum")

    @property
    def top(self) -> Stratum:
        return self.strata[-1]

    @property
    def dim(self) -> int:
        return self.top.dim

    def tube_function(self, coords):
        if self.top.defining is None:
            raise ConfigError(f"{self.name}: top stratum has no defining function")
        return self.top.defining(coords)

    def tube_box(self, delta: float) -> Box | None:
        return None if self.top.tube_box is None else self.top.tube_box(delta)


# -- builders -----------------------------------------------------------------
def _graph_bounds(fn, box: Box, m: int = 33):
    axes = [np.linspace(box.lo[a], box.hi[a], m) for a in range(len(box.lo))]
    grid = np.meshgrid(*axes, indexing="ij")
    vals = np.stack(np.broadcast_arrays(*fn([g.ravel() for g in grid])), -1)
    slack = np.max(np.abs(np.diff(vals, axis=0))) if len(vals) > 1 else 0.0
    return vals.min(axis=0) - slack, vals.max(axis=0) + slack


def _box_minus_square(box: Box, center, half: float) -> list:
    """Up to four boxes covering ``box`` minus the square of half-width ``half``."""
    (x0, y0), (x1, y1) = box.lo, box.hi
    a0, b0 = center[0] - half, center[1] - half
    a1, b1 = center[0] + half, center[1] + half
    parts = [((x0, y0), (x1, b0)), ((x0, b1), (x1, y1)),
             ((x0, max(y0, b0)), (a0, min(y1, b1))), ((a1, max(y0, b0)), (x1, min(y1, b1)))]
    return [Box(lo, hi) for lo, hi in parts if lo[0] < hi[0] and lo[1] < hi[1]]


def graph_stratum(fn: Callable, box: Box, n: int, name: str = "graph",
                  puncture=None) -> Stratum:
    """Stratum {x'' = fn(x')} over the first 2p coordinates; optional punctured point."""
    d = len(box.lo)

    def defining(coords):
        vals = fn(list(coords[:d]))
        s = 0.0
        for k, v in enumerate(vals):
            s = s + (coords[d + k] - v) ** 2
        return jet.sqrt(s + 1e-300)

    lo, hi = _graph_bounds(fn, box)

    def tube_box(delta):
        return Box(tuple(box.lo) + tuple(lo - delta), tuple(box.hi) + tuple(hi + delta))

    truncate = None
    if puncture is not None:
        def truncate(delta):
            return [graph_chart(fn, b, n, f"{name}[{i}]")
                    for i, b in enumerate(_box_minus_square(box, puncture, delta))]

    return Stratum(d // 2, [graph_chart(fn, box, n, name)], defining, truncate, tube_box,
                   name=name)


def point_stratum(points, name: str = "points") -> Stratum:
    return Stratum(0, [], centers=[np.asarray(p, dtype=float) for p in points], name=name)


def line_w0(n: int = 2, half: float = 1.0, puncture: bool = False) -> Stratification:
    """{w = 0} over the z-square of half-width ``half``, optionally with A_0 = {0}."""
    box = Box.cube(2, half)
    zero = lambda t: [0.0 * t[0]] * (2 * n - 2)
    top = graph_stratum(zero, box, n, "w=0", puncture=(0.0, 0.0) if puncture else None)
    if not puncture:
        top.centers = [np.zeros(2 * n)]
    strata = [point_stratum([np.zeros(2 * n)], "origin"), top] if puncture else [top]
    return Stratification(strata, n, name="{w=0}" + (" punctured" if puncture else ""))


def polar_disc_chart(radius: float, n: int = 2, name: str = "polar disc") -> ParamChart:
    """(rho, phi) -> (rho cos phi, rho sin phi, 0, ...) on (0, radius] x [0, 2 pi]."""
    def sigma(t):
        rho, phi = t
        return [rho * jet.cos(phi), rho * jet.sin(phi)] + [0.0 * rho] * (2 * n - 2)

    return ParamChart(sigma, Box((0.0, 0.0), (radius, 2 * math.pi)), 1, name)


def exp_graph(z0: float = 1.5, reach: float = 1.0, name: str = "z=exp(1/w)") -> Stratification:
    """Candidate {w != 0, z = e^{1/w}} u {w = 0} with a single one-dimensional stratum.

    The graph is parametrized by u = 1/w = a + i b in strips of height 2 pi;
    only the part with |z| between z0 - reach and z0 + reach is charted, which
    covers every ball of radius <= reach around (z0, 0).  Truncation at
    distance delta from {w = 0} keeps strips with |b| <= 1/delta.
    """
    a_lo, a_hi = math.log(max(z0 - reach, 1e-3)), math.log(z0 + reach)

    def sigma(t):
        a, b = t
        ea = jet.exp(a)
        inv = 1.0 / (a * a + b * b)
        return [ea * jet.cos(b), ea * jet.sin(b), a * inv, -b * inv]

    def strips(delta):
        top = 1.0 / delta
        kmax = int(math.ceil((top / math.pi - 1) / 2))
        out = []
        for k in range(-kmax, kmax + 1):
            lo, hi = max((2 * k - 1) * math.pi, -top), min((2 * k + 1) * math.pi, top)
            if lo < hi:
                out.append(ParamChart(sigma, Box((a_lo, lo), (a_hi, hi)), 1, f"strip{k}"))
        return out

    line = graph_stratum(lambda t: [0.0 * t[0], 0.0 * t[0]], Box.cube(2, z0 + reach), 2, "w=0")

    def truncate(delta):
        return line.charts + strips(delta)

    st = Stratum(1, line.charts + strips(AREA_DELTAS[-1]), None, truncate,
                 centers=[np.array([z0, 0.0, 0.0, 0.0])], name=name)
    return Stratification([st], 2, name=name)


# -- area probe ------------------------------------------------------------------
def ball_weight(center, radius: float) -> Callable:
    """Smooth weight equal to 1 on B(center, radius/2) and 0 outside B(center, radius)."""
    c = np.asarray(center, dtype=float)

    def w(x):
        r = np.sqrt(np.sum((x - c) ** 2, axis=-1))
        return smooth_step(3.0 - 4.0 * r / radius)

    return w


def chart_area(chart: ParamChart, weight: Callable, support: Box,
               cfg: QuadratureConfig | None = None) -> QuadResult:
    """int weight(sigma) dvol over the chart, dvol the Gram-determinant volume."""
    box = chart.restrict(support)
    if box is None:
        return QuadResult(0.0, 0.0, 0, 0)

    def f(pts):
        M = chart.jacobian(pts)
        G = np.einsum("nia,nib->nab", M, M)
        vol = np.sqrt(np.abs(np.linalg.det(G)))
        return vol * weight(chart(pts))

    return integrate(f, box, cfg)


@dataclass
class AreaProbe:
    center: np.ndarray
    radius: float
    deltas: list
    masses: list
    ratios: list
    diverges: bool


def area_probe(stratum: Stratum, center, radius: float = 0.5,
               deltas: Sequence[float] = AREA_DELTAS, cfg=None) -> AreaProbe:
    """Weighted area of the stratum in B(center, radius) with the lower strata cut at delta.

    Divergence is flagged when the area grows by more than 2x at every
    refinement delta -> delta/4.
    """
    cfg = cfg or QuadratureConfig(abs_tol=1e-8, rel_tol=1e-6)
    w = ball_weight(center, radius)
    support = Box.around(center, radius)
    masses = []
    for dl in deltas:
        total = math.fsum(float(chart_area(c, w, support, cfg).value) for c in stratum.pieces(dl))
        masses.append(total)
    ratios = [b / a if a > 0 else math.inf for a, b in zip(masses[:-1], masses[1:])]
    finite = all(math.isfinite(m) for m in masses)
    diverges = (not finite) or (len(ratios) > 0 and all(r > DIVERGENCE_RATIO for r in ratios))
    return AreaProbe(np.asarray(center, dtype=float), radius, list(deltas), masses, ratios,
                     diverges)


# -- validation -------------------------------------------------------------------
@dataclass
class ValidationReport:
    name: str
    residuals: list
    dimensions_ok: bool
    probes: list
    tolerance: float
    passed: bool
    failures: list


def validate(A: Stratification, J: AlmostComplexStructure, samples: int = 10, seed: int = 0,
             tol: float = 1e-8, radius: float = 0.5, deltas=AREA_DELTAS, cfg=None,
             sampler: Callable | None = None) -> ValidationReport:
    """J-invariance, dimension, and area-finiteness checks; sets ``A.validated``."""
    rng = np.random.default_rng(seed)
    failures, residuals = [], []
    dims = [s.dim for s in A.strata]
    dims_ok = dims == sorted(set(dims)) and all(
        c.p == s.dim for s in A.strata for c in s.charts)
    if not dims_ok:
        failures.append(f"dimensions {dims} not strictly increasing or charts mismatched")
    for s in A.strata:
        worst = 0.0
        for c in s.pieces(deltas[0]):
            for _ in range(samples):
                t = sampler(c, rng) if sampler else rng.uniform(c.box.lo, c.box.hi)
                worst = max(worst, invariance_residual(c, J, t))
        residuals.append(worst)
        if worst > tol:
            failures.append(f"{s.name}: invariance residual {worst:.3e}")
    probes = []
    for j, s in enumerate(A.strata):
        if s.dim == 0 or not (s.charts or s.truncate):
            continue
        centers = list(s.centers)
        for lower in A.strata[:j]:
            centers.extend(lower.sample_points(1, seed))
        for c in centers:
            pr = area_probe(s, c, radius, deltas, cfg)
            probes.append(pr)
            if pr.diverges:
                failures.append(f"{s.name}: area diverges near {np.round(c, 3).tolist()}"
                                f" (ratios {[round(r, 2) for r in pr.ratios]})")
    passed = not failures
    A.validated = passed
    return ValidationReport(A.name, residuals, dims_ok, probes, tol, passed, failures)


def integration_current(A: Stratification, J: AlmostComplexStructure,
                        multiplicity: float = 1.0) -> IntegrationCurrent:
    """[A]: integration over the charts of the top stratum."""
    if not A.validated:
        raise ValidationRequired(f"{A.name} has not passed validate()")
    return IntegrationCurrent(list(A.top.charts), J, multiplicity, name=f"[{A.name}]")


def probes_on(A: Stratification, J: AlmostComplexStructure, count: int = 5, seed: int = 0,
              half=(0.2, 0.35)) -> list:
    """Seeded strongly positive (p', p') probes with supports centered on the top stratum."""
    rng = np.random.default_rng(seed)
    k = A.n - A.dim
    top = A.top
    out = []
    for i in range(count):
        chart = top.charts[rng.integers(len(top.charts))]
        t = chart.box.center + 0.5 * (rng.uniform(size=len(chart.box.lo)) - 0.5) * chart.box.widths
        center = chart(t)
        box = Box.around(center, rng.uniform(*half, size=2 * A.n))
        covs = [rng.normal(size=2 * A.n) for _ in range(k)]
        out.append(positive_probe(J, box, covs, name=f"probe{i}"))
    return out


# -- generic Lelong number and restriction --------------------------------------------
def lelong_along(T: Current, A: Stratification, points=None, radii=DEFAULT_RADII,
                 cfg=None, J=None, count: int = 3, seed: int = 0) -> list:
    """(point, nu_T(point)) in the adapted linear chart at sample points of the top stratum."""
    J = J or T.J
    pts = A.top.sample_points(count, seed) if points is None else points
    out = []
    for x in pts:
        x = np.asarray(x, dtype=float)
        prof, _ = lelong_number(T, adapted_chart(J, x), radii, cfg, J)
        out.append((x, prof.nu0))
    return out


def generic_lelong(T: Current, A: Stratification, points=None, cfg=None, J=None,
                   radii=DEFAULT_RADII, count: int = 3, seed: int = 0) -> float:
    """m_A = min over the sample of nu_T."""
    return min(v for _, v in lelong_along(T, A, points, radii, cfg, J, count, seed))


@dataclass
class RestrictionRow:
    probe_id: str
    lhs: float
    rhs: float
    rel_dev: float
    lhs_err: float


@dataclass
class RestrictionReport:
    m_A: float
    rows: list
    max_dev: float


def restriction_check(T: Current, A: Stratification, psis: Sequence[TestForm],
                      delta0: float = 0.2, levels: int = 7, cfg=None, J=None,
                      m_A: float | None = None, points=None, floor: float = 1e-6,
                      current_A: Current | None = None) -> RestrictionReport:
    """Tube-extrapolated <1_A T, psi> against m_A <[A], psi> for each probe."""
    J = J or T.J
    if m_A is None:
        m_A = generic_lelong(T, A, points, cfg, J)
    IA = current_A or integration_current(A, J)
    rows = []
    for psi in psis:
        try:
            tl = tube_limit(T, A, psi, delta0, levels, cfg)
            lhs, err = float(np.real(tl.value)), tl.error
        except ExtrapolationUnstable:
            lhs, err = math.nan, math.inf
        rhs = m_A * float(np.real(IA.pair(psi, cfg).value))
        dev = abs(lhs - rhs) / max(abs(rhs), floor) if math.isfinite(lhs) else math.inf
        rows.append(RestrictionRow(psi.name, lhs, rhs, dev, err))
    return RestrictionReport(m_A, rows, max(r.rel_dev for r in rows))
