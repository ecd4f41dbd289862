"""Ball masses, Lelong numbers and their corrected monotone surrogates.

nu_T(r) = sigma_T(r) / (tau_p r^{2p}) with sigma_T(r) = int_{B(r)} T ^ beta_1^p,
beta_1 = (i/2) sum del_J z_j ^ conj(del_J z_j) and tau_p = pi^p / p!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jet
from .calculus import (FormField, component_field, d_component, dbar_field, del_field,
                       exterior_derivative, function_field)
from .currents import (Ball, Current, IntegrationCurrent, LinearCombination, SmoothCurrent,
                       ZeroCurrent, d_current, ddbar_current, mass, power_field,
                       weighted_form)
from .errors import IntegrandBlowup, MonotoneFitFailure, UnsupportedCurrent
from .extrapolate import polynomial_limit, richardson
from .geometry import Box
from .quadrature import QuadratureConfig, gauss_legendre
from .structures import AlmostComplexStructure, CoordinateChart
from .testforms import smooth_step

DEFAULT_RADII = tuple(0.4 * 2.0**-k for k in range(6))


def tau(p: int) -> float:
    """Volume of the unit ball of C^p."""
    return math.pi**p / math.factorial(p)


# -- sigma and nu ----------------------------------------------------------------
def sigma_result(T: Current, chart: CoordinateChart, r: float, cfg=None, J=None):
    return mass(T, Ball(r), chart, cfg, J)


def sigma(T: Current, chart: CoordinateChart, r: float, cfg=None, J=None) -> float:
    return sigma_result(T, chart, r, cfg, J).value


def nu(T: Current, chart: CoordinateChart, r: float, cfg=None, J=None) -> float:
    return sigma(T, chart, r, cfg, J) / (tau(T.p) * r ** (2 * T.p))


# -- corrected sigma ------------------------------------------------------------
def abs2_field(chart: CoordinateChart) -> FormField:
    return function_field(chart.n, chart.abs2, name="|z|^2")


def beta_field(chart: CoordinateChart, J: AlmostComplexStructure) -> FormField:
    """beta = (i/2) d dbar_J |z|^2 (real; equals beta_1 + O(|z|))."""
    return exterior_derivative(dbar_field(abs2_field(chart), J)) * 0.5j


def _beta_power(chart, J, k: int) -> FormField:
    return power_field(beta_field(chart, J), k)


def _del_mixed(phi: FormField, J) -> FormField:
    """del_J of a form of mixed bidegree, component by component."""
    k = phi.degree
    parts = [d_component(component_field(phi, J, a, k - a), J, (a, k - a), "del")
             for a in range(k + 1)]
    out = parts[0]
    for q in parts[1:]:
        out = out + q
    return out


def is_zero_current(T: Current) -> bool:
    if isinstance(T, ZeroCurrent):
        return True
    return isinstance(T, LinearCombination) and all(is_zero_current(S) for _, S in T.terms)


def thetabar_current(T: Current) -> Current:
    """thetabar_J T: zero for closed currents, direct for smooth ones."""
    if isinstance(T, (IntegrationCurrent, ZeroCurrent)):
        k = T.degree + 1
        return ZeroCurrent(T.n, 2 * T.n - k, T.J, None)
    if isinstance(T, LinearCombination):
        out = None
        for c, S in T.terms:
            part = thetabar_current(S) * c
            out = part if out is None else out + part
        return out
    if isinstance(T, SmoothCurrent) and T.bidegree is not None and T.J is not None:
        return d_current(T, "thetabar")
    raise UnsupportedCurrent(f"thetabar is not computable for {type(T).__name__}")


def sigma_bar_result(T: Current, chart: CoordinateChart, r: float, cfg=None, J=None):
    """(value, error) of int_{B(r)} T^beta^p - (i/2) T^dbar|z|^2^del(beta^{p-1})
    + (i/2) thetabar T ^ del|z|^2 ^ beta^{p-1}.

    The printed middle factor "del_J beta_{p-1}" is read as del_J(beta^{p-1}).
    """
    J = J or T.J
    p = T.p
    r2 = abs2_field(chart)
    w_main = _beta_power(chart, J, p)
    if p >= 2:
        mid = dbar_field(r2, J) * _del_mixed(_beta_power(chart, J, p - 1), J) * (-0.5j)
        w_main = w_main + mid
    total = mass(T, Ball(r), chart, cfg, J, weight_form=w_main)
    value, err = total.value, total.error
    tb = thetabar_current(T)
    if not is_zero_current(tb):
        w3 = del_field(r2, J) * _beta_power(chart, J, p - 1) * 0.5j
        m3 = mass(tb, Ball(r), chart, cfg, J, weight_form=w3)
        value += m3.value
        err += m3.error
    return value, err


def sigma_bar(T: Current, chart: CoordinateChart, r: float, cfg=None, J=None) -> float:
    return sigma_bar_result(T, chart, r, cfg, J)[0]


def nu_bar(T: Current, chart: CoordinateChart, r: float, cfg=None, J=None) -> float:
    """sigma_bar / (tau_p r^{2p}); tau_p makes it comparable with nu."""
    return sigma_bar(T, chart, r, cfg, J) / (tau(T.p) * r ** (2 * T.p))


# -- g(r) -----------------------------------------------------------------------
def _interval_nodes(a: float, b: float, nodes: int):
    x, w = gauss_legendre(nodes)
    return (a + b) / 2 + (b - a) / 2 * x, (b - a) / 2 * w


def g_from_profile(nu_dd: Callable[[float], float], r: float, p: int, levels: int = 5,
                   nodes: int = 4, cache: dict | None = None) -> float:
    """int_0^r (t^{2p}/r^{2p} - 1) nu_dd(t)/t dt on geometric intervals r 2^-k.

    Raises IntegrandBlowup when |nu_dd(t)/t| grows like 1/t or faster at the
    smallest scales (non-integrable).
    """
    cache = {} if cache is None else cache

    def q(t):
        key = float(t)
        if key not in cache:
            cache[key] = float(nu_dd(key))
        return cache[key] / key

    edges = [r * 2.0**-k for k in range(levels + 1)] + [0.0]
    total = []
    for b, a in zip(edges[:-1], edges[1:]):
        ts, ws = _interval_nodes(a, b, nodes)
        total.extend(float(w * ((t / r) ** (2 * p) - 1.0) * q(t)) for t, w in zip(ts, ws))
    probe = [r * 2.0 ** -(k + 0.5) for k in range(levels - 2, levels + 1)]
    mags = np.array([abs(q(t)) for t in probe])
    if np.all(mags > 0):
        slope = np.polyfit(np.log(probe), np.log(mags), 1)[0]
        if slope <= -0.9:
            raise IntegrandBlowup(f"nu(t)/t ~ t^{slope:.2f} near 0: not integrable")
    return math.fsum(total)


def nu_ddbar(T: Current, chart: CoordinateChart, t: float, cfg=None, J=None) -> float:
    """nu of i ddbar T at radius t, normalized by tau_{p-1} t^{2(p-1)}."""
    S = ddbar_current(T)
    q = T.p - 1
    if is_zero_current(S):
        return 0.0
    return mass(S, Ball(t), chart, cfg, J or T.J).value / (tau(q) * t ** (2 * q))


def g_integral(T: Current, chart: CoordinateChart, r: float, t_grid=None, cfg=None, J=None,
               cache: dict | None = None) -> float:
    """g(r) for T as printed; ``t_grid`` = (levels, nodes) of the composite rule."""
    levels, nodes = t_grid or (5, 4)
    if is_zero_current(ddbar_current(T)):
        return 0.0
    return g_from_profile(lambda t: nu_ddbar(T, chart, t, cfg, J), r, T.p, levels, nodes, cache)


# -- profiles and fits ------------------------------------------------------------
@dataclass
class LelongProfile:
    radii: list
    values: list
    errors: list
    chart: str
    nu0: float
    width: float
    sigma: list = field(default_factory=list)
    sigma_err: list = field(default_factory=list)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise ValueError("radii must be positive and strictly decreasing")


@dataclass
class CorrectionData:
    c: float
    delta: float | None = None
    g: list = field(default_factory=list)
    nu_bar: list = field(default_factory=list)
    corrected: list = field(default_factory=list)
    frame: int = 1
    notes: str = ""


C_GRID = (0.0,) + tuple(np.logspace(-3, 3, 61))


def is_nondecreasing(radii, values, errors, floor: float = 1e-12) -> bool:
    """values(r) nondecreasing in r (radii descending) within summed error bars."""
    v = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    return bool(np.all(v[:-1] >= v[1:] - (e[:-1] + e[1:]) - floor))


def fit_monotone_constant(radii, values, errors, exponent: float, c_max: float = 1e3,
                          extra=None, extra_exponent: float | None = None) -> float:
    """Smallest c on a log grid with (1+cr)^exponent v(r) [+ (1+cr)^extra_exponent extra(r)]
    nondecreasing within error bars."""
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    for c in C_GRID:
        if c > c_max:
            break
        f = (1 + c * r) ** exponent
        vals = f * v
        errs = f * e
        if extra is not None:
            f2 = (1 + c * r) ** extra_exponent
            vals = vals + f2 * np.asarray(extra, dtype=float)
        if is_nondecreasing(r, vals, errs):
            return float(c)
    raise MonotoneFitFailure(f"no constant <= {c_max:g} makes the profile nondecreasing")


def _extrapolate(radii, values, errors):
    fit = polynomial_limit(radii, values, degree=min(2, len(radii) - 1))
    return float(fit.value), float(fit.stderr + max(errors))


def _frame(values) -> int:
    return -1 if float(np.sum(values)) < 0 else 1


def lelong_number(T: Current, chart: CoordinateChart, radii: Sequence[float] = DEFAULT_RADII,
                  cfg: QuadratureConfig | None = None, J=None, psh: bool = False,
                  c_max: float = 1e3, g_grid=None):
    """Profile of nu_T on the radii, extrapolated nu_T(0), and the fitted constants.

    Negative currents are analyzed in the frame -T (positive, with negative
    i ddbar), where the printed g is nonnegative and nondecreasing.
    """
    J = J or T.J
    radii = [float(r) for r in radii]
    p = T.p
    sig = [sigma_result(T, chart, r, cfg, J) for r in radii]
    scale = [tau(p) * r ** (2 * p) for r in radii]
    vals = [s.value / k for s, k in zip(sig, scale)]
    errs = [s.error / k for s, k in zip(sig, scale)]
    nu0, width = _extrapolate(radii, vals, errs)
    profile = LelongProfile(radii, vals, errs, chart.name, nu0, width,
                            [s.value for s in sig], [s.error for s in sig])
    s = _frame(vals)
    c = fit_monotone_constant(radii, [s * v for v in vals], errs, 2 * p, c_max)
    corr = CorrectionData(c, frame=s)
    if psh:
        Tf = T if s > 0 else T * -1.0
        cache = {}
        nb = [sigma_bar_result(Tf, chart, r, cfg, J) for r in radii]
        nbar = [v / k for (v, _), k in zip(nb, scale)]
        nerr = [e / k for (_, e), k in zip(nb, scale)]
        # g is normalized by tau_p like nu_bar so that f = nu_bar + g keeps the
        # relative weight of the unnormalized construction
        ratio = tau(p - 1) / tau(p)
        g = [ratio * g_integral(Tf, chart, r, g_grid, cfg, J, cache) for r in radii]
        delta = fit_monotone_constant(radii, nbar, nerr, 4 * p, c_max, g, 4 * p - 1)
        corrected = [(1 + delta * r) ** (4 * p) * a + (1 + delta * r) ** (4 * p - 1) * b
                     for r, a, b in zip(radii, nbar, g)]
        corr = CorrectionData(c, delta, g, nbar, corrected, s,
                              "frame -T" if s < 0 else "frame T")
    return profile, corr


# -- coordinate invariance ----------------------------------------------------------
@dataclass
class InvarianceReport:
    profile_a: LelongProfile
    profile_b: LelongProfile
    nu_a: float
    nu_b: float
    diff: float
    functional: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)


def level_mass(T: Current, level2: Callable, r: float, box: Box, weight: FormField,
               cfg=None, levels: int = 3, h0: float | None = None) -> float:
    """int_{level2 < r^2} T ^ weight with the smoothed indicator S((r - sqrt(level2))/h)."""
    h0 = h0 or r / 4
    vals = []
    for k in range(levels):
        h = h0 / 2**k

        def chi(c, h=h):
            return smooth_step((r - jet.sqrt(level2(c))) * (1.0 / h))

        grown = Box(tuple(np.asarray(box.lo) - h), tuple(np.asarray(box.hi) + h))
        vals.append(float(np.real(T.pair(weighted_form(weight, chi, grown), cfg).value)))
    return float(richardson(vals, 2.0, (2, 4))) if levels > 1 else vals[0]


def comparison_functional(T: Current, chart_a: CoordinateChart, chart_b: CoordinateChart,
                          eps: float, r: float, cfg=None, J=None) -> float:
    """(1/(tau_p r^{2p})) int_{psi_eps < r^2} T ^ ((i/2) d dbar psi_eps)^p,
    psi_eps = |z^B|^2 + eps |z^A|^2."""
    J = J or T.J
    p = T.p

    def level2(c):
        return chart_b.abs2(c) + eps * chart_a.abs2(c)

    f = function_field(chart_a.n, level2, name="psi_eps")
    w = power_field(exterior_derivative(dbar_field(f, J)) * 0.5j, p)
    box = chart_b.ball_box(r)
    return level_mass(T, level2, r, box, w, cfg) / (tau(p) * r ** (2 * p))


def coord_invariance(T: Current, chart_a: CoordinateChart, chart_b: CoordinateChart,
                     radii: Sequence[float] = DEFAULT_RADII, cfg=None, J=None,
                     functional_eps: Sequence[float] = ()) -> InvarianceReport:
    """nu_T(0) in two charts; optionally the comparison functional at r_eps = eps^{3/2}."""
    J = J or T.J
    pa, _ = lelong_number(T, chart_a, radii, cfg, J)
    pb, _ = lelong_number(T, chart_b, radii, cfg, J)
    rows = []
    for e in functional_eps:
        r = e**1.5
        phi = comparison_functional(T, chart_a, chart_b, e, r, cfg, J)
        lower = nu(T, chart_a, r / math.sqrt(e), cfg, J)
        upper = nu(T, chart_b, r, cfg, J)
        rows.append({"eps": e, "r": r, "functional": phi, "lower": lower, "upper": upper})
    consts = {}
    if rows:
        consts["C_lower"] = max(0.0, max((row["lower"] - row["functional"]) / row["r"]
                                         for row in rows))
        consts["C_upper"] = max(0.0, max((row["functional"] - row["upper"]) / row["eps"]
                                         for row in rows))
    return InvarianceReport(pa, pb, pa.nu0, pb.nu0, abs(pa.nu0 - pb.nu0), rows, consts)
