"""Currents: pairings by quadrature, masses, duality derivatives, probes, tubes.

A current of dimension k pairs with k-forms.  Bidimension (p, p) means
k = 2p and bidegree (n - p, n - p).  Derivatives act by duality,
``<X T, phi> = (-1)^(deg T + 1) <T, X phi>`` for X in {d, del, dbar, theta,
thetabar}; with the signed torsion names of :mod:`calculus` the same rule
holds for every component once phi is restricted to the complementary
bidegree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jet
from .algebra import ExteriorValue, p10_matrix, wedge
from .calculus import (EXACT, FormField, _jacobian, component_field, d_component,
                       ddbar_field, exterior_derivative, pullback_field)
from .errors import (BidegreeMismatch, ExtrapolationUnstable, NonConvergence,
                     UnsupportedCurrent)
from .extrapolate import polynomial_limit, richardson
from .geometry import Box
from .quadrature import QuadratureConfig, QuadResult, integrate
from .structures import AlmostComplexStructure, CoordinateChart
from .testforms import TestForm, smooth_step, wedge_top

_OPS = ("d", "del", "dbar", "theta", "thetabar")
_SHIFT = {"del": (1, 0), "dbar": (0, 1), "theta": (2, -1), "thetabar": (-1, 2)}


def _add_results(results: Sequence[QuadResult], coefs: Sequence[complex]) -> QuadResult:
    value = sum(c * r.value for c, r in zip(coefs, results))
    err = sum(abs(c) * r.error for c, r in zip(coefs, results))
    return QuadResult(value, err, sum(r.cells for r in results),
                      sum(r.evaluations for r in results),
                      all(r.converged for r in results))


class Current:
    """Interface: ``n``, ``dim`` (degree of test forms), ``bidegree`` (or None)."""

    n: int
    dim: int
    bidegree: tuple | None
    J: AlmostComplexStructure | None

    @property
    def degree(self) -> int:
        return 2 * self.n - self.dim

    @property
    def p(self) -> int:
        return self.dim // 2

    def pair(self, psi: TestForm, cfg: QuadratureConfig | None = None) -> QuadResult:
        raise NotImplementedError

    def __call__(self, psi: TestForm, cfg: QuadratureConfig | None = None) -> complex:
        return self.pair(psi, cfg).value

    def __add__(self, other: "Current") -> "LinearCombination":
        return LinearCombination([(1.0, self), (1.0, other)])

    def __sub__(self, other: "Current") -> "LinearCombination":
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __mul__(self, c) -> "LinearCombination":
        return LinearCombination([(c, self)])

    __rmul__ = __mul__

    def __neg__(self) -> "LinearCombination":
        return LinearCombination([(-1.0, self)])

    def _check_test_form(self, psi: TestForm):
        if psi.degree != self.dim:
            raise BidegreeMismatch(
                f"current of dimension {self.dim} paired with a {psi.degree}-form")


@dataclass(eq=False)
class SmoothCurrent(Current):
    """The current of a smooth form Theta: <T, psi> = int Theta ^ psi."""

    form: FormField
    J: AlmostComplexStructure | None = None
    bidegree: tuple | None = None
    domain: Box | None = None
    name: str = "smooth"

    @property
    def n(self) -> int:
        return self.form.n

    @property
    def dim(self) -> int:
        return 2 * self.form.n - self.form.degree

    def density(self, psi: TestForm) -> Callable:
        theta, test = self.form, psi.form

        def f(pts):
            coords = [pts[:, i] for i in range(pts.shape[1])]
            return np.asarray(wedge_top(theta.at(coords), test.at(coords))) + np.zeros(len(pts))

        return f

    def pair(self, psi, cfg=None):
        self._check_test_form(psi)
        box = psi.support if self.domain is None else psi.support.intersect(self.domain)
        if box is None:
            return QuadResult(0.0, 0.0, 0, 0)
        return integrate(self.density(psi), box, cfg)


@dataclass(frozen=True)
class ParamChart:
    """sigma: 2p parameter coordinates -> 2n ambient coordinates on ``box``."""

    sigma: Callable = field(repr=False)
    box: Box
    p: int
    name: str = "chart"
    preimage: Callable | None = field(default=None, repr=False)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        vals = self.sigma([t[..., i] for i in range(t.shape[-1])])
        return np.stack(np.broadcast_arrays(*vals), axis=-1)

    def jacobian(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        vals, M = _jacobian(self.sigma, [t[..., i] for i in range(t.shape[-1])], EXACT)
        M = np.asarray(M)
        return np.broadcast_to(M, t.shape[:-1] + M.shape[-2:])

    def restrict(self, support: Box) -> Box | None:
        """Parameter box whose image covers the part of the chart inside ``support``."""
        if self.preimage is not None:
            pre = self.preimage(support)
            return None if pre is None else self.box.intersect(pre)
        return self._sampled_preimage(support)

    def _sampled_preimage(self, support: Box, m: int = 65) -> Box | None:
        # bounding box of grid cells whose image meets the support, grown by one
        # cell; adequate when the support is not much smaller than a grid cell
        d = len(self.box.lo)
        axes = [np.linspace(self.box.lo[a], self.box.hi[a], m) for a in range(d)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        x = self(grid)
        step = self.box.widths / (m - 1)
        xs = x.reshape((m,) * d + (-1,))
        slack = np.max([np.max(np.abs(np.diff(xs, axis=a)), axis=tuple(range(d)))
                        for a in range(d)], axis=0)
        inside = np.all((x >= support.lo - slack) & (x <= support.hi + slack), axis=1)
        if not inside.any():
            return None
        lo = grid[inside].min(axis=0) - step
        hi = grid[inside].max(axis=0) + step
        return self.box.intersect(Box(tuple(lo), tuple(hi)))


def graph_chart(fn: Callable, box: Box, n: int, name: str = "graph") -> ParamChart:
    """Graph over the first 2p real coordinates: t -> (t, fn(t)), fn returning 2(n-p) values."""
    d = len(box.lo)

    def sigma(t):
        return list(t) + list(fn(t))

    def preimage(support: Box):
        return Box(tuple(support.lo[:d]), tuple(support.hi[:d])).intersect(box)

    return ParamChart(sigma, box, d // 2, name, preimage)


def reference_form(P10, p: int, n: int) -> ExteriorValue:
    """(i sum_a alpha_a ^ conj alpha_a)^p with alpha_a the (1,0) part of dx_a."""
    omega = ExteriorValue.zero(n)
    for a in range(2 * n):
        col = [P10[..., i, a] for i in range(2 * n)]
        alpha = ExteriorValue(n, {(i,): col[i] for i in range(2 * n)})
        omega = omega + wedge(alpha, alpha.conj()) * 1j
    out = ExteriorValue.scalar(n, 1.0)
    for _ in range(p):
        out = wedge(out, omega)
    return out


def chart_orientation(chart: ParamChart, J: AlmostComplexStructure, t=None) -> float:
    """+1 if the parametrization agrees with the orientation induced by J."""
    t = chart.box.center if t is None else np.asarray(t, dtype=float)
    x = chart(t)
    n = J.n
    omega = reference_form(p10_matrix(J(x)), chart.p, n)
    M = chart.jacobian(t)
    val = np.real(omega(*[M[:, a] for a in range(2 * chart.p)]))
    if abs(val) < 1e-12:
        raise ValueError(f"chart {chart.name} is degenerate or not J-complex at {t}")
    return float(np.sign(val))


def invariance_residual(chart: ParamChart, J: AlmostComplexStructure, t) -> float:
    """|| (I - P_V) J dsigma || with P_V the orthogonal projector onto the image."""
    t = np.asarray(t, dtype=float)
    M = chart.jacobian(t)
    Jx = J(chart(t), check=False)
    Q, _ = np.linalg.qr(M)
    JM = Jx @ M
    return float(np.linalg.norm(JM - Q @ (Q.T @ JM)))


@dataclass(eq=False)
class IntegrationCurrent(Current):
    """[Z] for a union of parametrized J-complex p-dimensional pieces."""

    charts: list
    J: AlmostComplexStructure
    multiplicity: float = 1.0
    name: str = "[Z]"
    signs: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.signs is None:
            self.signs = [chart_orientation(c, self.J) for c in self.charts]

    @property
    def n(self) -> int:
        return self.J.n

    @property
    def dim(self) -> int:
        return 2 * self.charts[0].p

    @property
    def bidegree(self):
        k = self.n - self.p
        return (k, k)

    def check_invariance(self, samples: int = 10, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for c in self.charts:
            for _ in range(samples):
                t = rng.uniform(c.box.lo, c.box.hi)
                worst = max(worst, invariance_residual(c, self.J, t))
        return worst

    def pair(self, psi, cfg=None):
        self._check_test_form(psi)
        results, coefs = [], []
        for chart, sign in zip(self.charts, self.signs):
            box = chart.restrict(psi.support)
            if box is None:
                continue
            pulled = pullback_field(psi.form, chart.sigma, chart.p)
            top = tuple(range(2 * chart.p))

            def f(pts, pulled=pulled, top=top):
                coords = [pts[:, i] for i in range(pts.shape[1])]
                v = pulled.at(coords)
                return np.asarray(v.coefficients.get(top, 0.0)) + np.zeros(len(pts))

            results.append(integrate(f, box, cfg))
            coefs.append(sign * self.multiplicity)
        if not results:
            return QuadResult(0.0, 0.0, 0, 0)
        return _add_results(results, coefs)


@dataclass(eq=False)
class LinearCombination(Current):
    terms: list

    def __post_init__(self):
        flat = []
        for c, T in self.terms:
            if isinstance(T, LinearCombination):
                flat.extend((c * c2, T2) for c2, T2 in T.terms)
            else:
                flat.append((c, T))
        self.terms = flat
        dims = {T.dim for _, T in flat}
        if len(dims) > 1:
            raise BidegreeMismatch("terms of a linear combination have different dimensions")

    @property
    def n(self):
        return self.terms[0][1].n

    @property
    def dim(self):
        return self.terms[0][1].dim

    @property
    def bidegree(self):
        b = {T.bidegree for _, T in self.terms}
        return b.pop() if len(b) == 1 else None

    @property
    def J(self):
        return next((T.J for _, T in self.terms if T.J is not None), None)

    def pair(self, psi, cfg=None):
        results = [T.pair(psi, cfg) for _, T in self.terms]
        return _add_results(results, [c for c, _ in self.terms])


@dataclass(eq=False)
class ZeroCurrent(Current):
    n: int
    dim: int
    J: AlmostComplexStructure | None = None
    bidegree: tuple | None = None

    def pair(self, psi, cfg=None):
        self._check_test_form(psi)
        return QuadResult(0.0, 0.0, 0, 0)


@dataclass(eq=False)
class DerivedCurrent(Current):
    """X T for X in {d, del, dbar, theta, thetabar}, by duality."""

    base: Current
    op: str
    J: AlmostComplexStructure | None = None

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown operator {self.op!r}")
        if self.J is None:
            self.J = self.base.J
        if self.op != "d" and (self.J is None or self.base.bidegree is None):
            raise UnsupportedCurrent("bidegree components need a structure and a pure bidegree")

    @property
    def n(self):
        return self.base.n

    @property
    def dim(self):
        return self.base.dim - 1

    @property
    def bidegree(self):
        if self.op == "d" or self.base.bidegree is None:
            return None
        a, b = self.base.bidegree
        da, db = _SHIFT[self.op]
        return (a + da, b + db)

    def dual_test_form(self, psi: TestForm) -> TestForm:
        """The test form T is paired with: (-1)^(deg T + 1) X(psi_complementary)."""
        sign = -1.0 if self.base.degree % 2 == 0 else 1.0
        n = self.n
        if self.op == "d":
            out = exterior_derivative(psi.form)
            return TestForm(out * sign, psi.support, None, f"d({psi.name})")
        a, b = self.bidegree
        comp = component_field(psi.form, self.J, n - a, n - b)
        out = d_component(comp, self.J, (n - a, n - b), self.op)
        return TestForm(out * sign, psi.support, self.base.bidegree and
                        (n - self.base.bidegree[0], n - self.base.bidegree[1]),
                        f"{self.op}({psi.name})")

    def pair(self, psi, cfg=None):
        self._check_test_form(psi)
        return self.base.pair(self.dual_test_form(psi), cfg)


def d_current(T: Current, op: str = "d") -> Current:
    """d T (or one of its signed bidegree components); direct for smooth currents."""
    if isinstance(T, SmoothCurrent) and T.J is not None and T.bidegree is not None and op != "d":
        a, b = T.bidegree
        f = d_component(T.form, T.J, (a, b), op)
        da, db = _SHIFT[op]
        return SmoothCurrent(f, T.J, (a + da, b + db), T.domain, f"{op}({T.name})")
    if isinstance(T, SmoothCurrent) and op == "d":
        return SmoothCurrent(exterior_derivative(T.form), T.J, None, T.domain, f"d({T.name})")
    return DerivedCurrent(T, op)


@dataclass(eq=False)
class DdbarCurrent(Current):
    """i del dbar T by two duality steps: <i del dbar T, phi> = -i <T, dbar del phi>."""

    base: Current
    J: AlmostComplexStructure | None = None

    def __post_init__(self):
        if self.J is None:
            self.J = self.base.J
        self._inner = DerivedCurrent(DerivedCurrent(self.base, "dbar", self.J), "del", self.J)

    @property
    def n(self):
        return self.base.n

    @property
    def dim(self):
        return self.base.dim - 2

    @property
    def bidegree(self):
        a, b = self.base.bidegree
        return (a + 1, b + 1)

    def pair(self, psi, cfg=None):
        r = self._inner.pair(psi, cfg)
        return QuadResult(1j * r.value, r.error, r.cells, r.evaluations, r.converged)


def ddbar_current(T: Current, direct: bool = True) -> Current:
    """i del_J dbar_J T; coefficientwise for smooth currents when ``direct``."""
    if isinstance(T, LinearCombination):
        return LinearCombination([(c, ddbar_current(S, direct)) for c, S in T.terms])
    if isinstance(T, ZeroCurrent):
        return ZeroCurrent(T.n, T.dim - 2, T.J, None)
    if isinstance(T, IntegrationCurrent):
        # closed currents of pure bidegree: both del T and dbar T vanish
        return ZeroCurrent(T.n, T.dim - 2, T.J, (T.bidegree[0] + 1, T.bidegree[1] + 1))
    if direct and isinstance(T, SmoothCurrent):
        a, b = T.bidegree
        f = ddbar_field(T.form, T.J, (a, b))
        return SmoothCurrent(f, T.J, (a + 1, b + 1), T.domain, f"i ddbar({T.name})")
    return DdbarCurrent(T)


# -- masses --------------------------------------------------------------------
@dataclass(frozen=True)
class Ball:
    """Chart ball {|z| < radius}."""

    radius: float


@dataclass
class MassResult:
    value: float
    error: float
    levels: list
    quad_error: float = 0.0


def beta1_field(chart: CoordinateChart, J: AlmostComplexStructure) -> FormField:
    """beta_1 = (i/2) sum_j del_J z_j ^ conj(del_J z_j) for the chart coordinates."""
    n = chart.n

    def ev(coords):
        P = p10_matrix(J.at(coords))
        grads = EXACT.gradient(lambda c: jet.stack(chart.at(c), -1), coords)
        out = ExteriorValue.zero(n)
        for j in range(n):
            g = [gk[..., j] if np.ndim(jet.base_value(gk)) else gk for gk in grads]
            coef = {}
            for i in range(2 * n):
                s = 0.0
                for k in range(2 * n):
                    s = s + P[..., i, k] * g[k]
                coef[(i,)] = s
            alpha = ExteriorValue(n, coef)
            out = out + wedge(alpha, alpha.conj()) * 0.5j
        return out

    return FormField(n, ev, 2, EXACT, "beta1")


def power_field(f: FormField, p: int) -> FormField:
    n = f.n

    def ev(coords):
        v = f.at(coords)
        out = ExteriorValue.scalar(n, 1.0)
        for _ in range(p):
            out = wedge(out, v)
        return out

    return FormField(n, ev, f.degree * p, f.engine, f"{f.name}^{p}")


def ball_indicator(chart: CoordinateChart, r: float, h: float) -> Callable:
    def chi(coords):
        rad = jet.sqrt(chart.abs2(coords))
        return smooth_step((r - rad) * (1.0 / h))

    return chi


def box_indicator(box: Box, h: float) -> Callable:
    def chi(coords):
        out = 1.0
        for k, x in enumerate(coords):
            out = out * smooth_step((x - box.lo[k]) * (1.0 / h)) \
                * smooth_step((box.hi[k] - x) * (1.0 / h))
        return out

    return chi


def weighted_form(f: FormField, weight: Callable, support: Box, name="chi*form") -> TestForm:
    field_ = FormField(f.n, lambda c: f.at(c) * weight(c), f.degree, f.engine, name)
    return TestForm(field_, support, None, name)


def ball_polar_integral(T: SmoothCurrent, form: FormField, chart: CoordinateChart, r: float,
                        cfg: QuadratureConfig | None = None, inner: float = 0.0) -> QuadResult:
    """int_{inner < |z| < r} Theta ^ form in polar coordinates of the chart."""
    from .quadrature import polar_box, polar_map

    d = 2 * T.n
    theta = T.form

    def f(v):
        zr, jac = polar_map(v, d)
        x = chart.inverse(zr)
        det = np.abs(np.linalg.det(chart.real_jacobian_at(x)))
        coords = [x[:, i] for i in range(d)]
        dens = np.asarray(wedge_top(theta.at(coords), form.at(coords))) + np.zeros(len(v))
        return dens * jac / det

    return integrate(f, polar_box(d, r, inner), cfg)


def mass(T: Current, region, chart: CoordinateChart, cfg: QuadratureConfig | None = None,
         J: AlmostComplexStructure | None = None, levels: int = 3,
         h0: float | None = None, weight_form: FormField | None = None,
         method: str = "auto") -> MassResult:
    """int_region T ^ beta_1^p (or T ^ weight_form).

    ``indicator``: smooth indicator of width h0, h0/2, h0/4 and Richardson
    extrapolation over the O(h^2), O(h^4) terms.  ``polar``: exact chart
    ball in polar coordinates (smooth currents only).  ``auto`` splits linear
    combinations and uses polar for smooth currents on balls.
    """
    J = J or T.J
    if J is None:
        raise UnsupportedCurrent("mass needs an almost complex structure")
    if isinstance(region, (int, float)):
        region = Ball(float(region))
    if method == "auto" and isinstance(T, LinearCombination):
        parts = [(c, mass(S, region, chart, cfg, J, levels, h0, weight_form, method))
                 for c, S in T.terms]
        value = float(np.real(sum(c * m.value for c, m in parts)))
        err = float(sum(abs(c) * m.error for c, m in parts))
        qerr = float(sum(abs(c) * m.quad_error for c, m in parts))
        return MassResult(value, err, [value], qerr)
    if isinstance(T, ZeroCurrent):
        return MassResult(0.0, 0.0, [0.0])
    form = weight_form if weight_form is not None else power_field(beta1_field(chart, J), T.p)
    if isinstance(region, Box):
        if region.is_empty:
            return MassResult(0.0, 0.0, [0.0])
        if isinstance(T, SmoothCurrent):
            res = T.pair(TestForm(form, region, None, "beta1^p"), cfg)
            v = float(np.real(res.value))
            return MassResult(v, res.error, [v], res.error)
        h0 = h0 or float(np.min(region.widths)) / 8
        make = lambda h: (box_indicator(region, h), Box(tuple(region.lo - h), tuple(region.hi + h)))
    else:
        if region.radius <= 0:
            return MassResult(0.0, 0.0, [0.0])
        r = region.radius
        if isinstance(T, SmoothCurrent) and method in ("auto", "polar"):
            res = ball_polar_integral(T, form, chart, r, cfg)
            v = float(np.real(res.value))
            return MassResult(v, res.error, [v], res.error)
        h0 = h0 or r / 4
        make = lambda h: (ball_indicator(chart, r, h), chart.ball_box(r + h))
    vals, qerr = [], 0.0
    for k in range(levels):
        h = h0 / 2**k
        chi, box = make(h)
        res = T.pair(weighted_form(form, chi, box), cfg)
        vals.append(float(np.real(res.value)))
        qerr = max(qerr, res.error)
    if levels == 1:
        return MassResult(vals[0], qerr, vals, qerr)
    est = richardson(vals, 2.0, (2, 4))
    return MassResult(float(est), abs(est - vals[-1]) + qerr, vals, qerr)


# -- probes --------------------------------------------------------------------
@dataclass
class ProbeReport:
    kind: str
    values: list
    extreme: float
    witness: str | None
    passed: bool
    tol: float


def probe_positive(T: Current, probes: Sequence[TestForm], cfg=None, tol: float = 1e-6) -> ProbeReport:
    vals = [complex(T.pair(ps, cfg).value) for ps in probes]
    re = [v.real for v in vals]
    i_min = int(np.argmin(re)) if re else 0
    worst_im = max((abs(v.imag) for v in vals), default=0.0)
    ok = (min(re, default=0.0) >= -tol) and worst_im <= max(tol, 1e-6 * max(map(abs, re), default=0))
    witness = None if ok else probes[i_min].name
    return ProbeReport("positive", vals, min(re, default=0.0), witness, ok, tol)


def probe_closed(T: Current, forms: Sequence[TestForm], cfg=None, tol: float = 1e-6) -> ProbeReport:
    dT = DerivedCurrent(T, "d")
    vals = [complex(dT.pair(f, cfg).value) for f in forms]
    mags = [abs(v) for v in vals]
    i_max = int(np.argmax(mags)) if mags else 0
    ok = max(mags, default=0.0) <= tol
    return ProbeReport("closed", vals, max(mags, default=0.0), None if ok else forms[i_max].name, ok, tol)


def probe_psh(T: Current, probes: Sequence[TestForm], cfg=None, tol: float = 1e-6,
              direct: bool = True) -> ProbeReport:
    L = ddbar_current(T, direct)
    rep = probe_positive(L, probes, cfg, tol)
    rep.kind = "psh"
    return rep


def random_test_forms(n: int, degree: int, region: Box, count: int, seed: int) -> list:
    """Seeded bump * (random constant real form of the given degree)."""
    import itertools

    from .testforms import make_test_form

    rng = np.random.default_rng(seed)
    keys = list(itertools.combinations(range(2 * n), degree))
    out = []
    for i in range(count):
        frac = rng.uniform(0.3, 0.6)
        half = region.widths * frac / 2
        center = rng.uniform(region.lo + half, region.hi - half)
        coefs = {K: float(rng.normal()) for K in keys}
        out.append(make_test_form(ExteriorValue(n, coefs), Box.around(center, half),
                                  name=f"eta{i}"))
    return out


# -- tubes ---------------------------------------------------------------------
def tube_cutoff(tube_function: Callable, delta: float) -> Callable:
    """Equal to 1 where dist <= delta/2, 0 where dist >= delta."""
    def chi(coords):
        return smooth_step(3.0 - 4.0 * tube_function(coords) * (1.0 / delta))

    return chi


def tube_mass(T: Current, A, delta: float, psi: TestForm, cfg=None,
              complement: bool = False) -> QuadResult:
    """<T, chi_delta psi> with chi_delta a cutoff of the delta-tube around A.

    ``A`` provides ``tube_function(coords)`` (a distance-like function to A)
    and optionally ``tube_box(delta)`` bounding the tube.  With ``complement``
    the weight is 1 - chi_delta (trivial-extension pairing).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    chi = tube_cutoff(A.tube_function, delta)
    support = psi.support
    if complement:
        weight = lambda c: 1.0 - chi(c)
    else:
        weight = chi
        tb = getattr(A, "tube_box", None)
        if tb is not None:
            box = tb(delta)
            support = None if box is None else support.intersect(box)
            if support is None:
                return QuadResult(0.0, 0.0, 0, 0)
    return T.pair(psi.weighted(weight, support), cfg)


@dataclass
class TubeLimit:
    value: complex
    deltas: list
    values: list
    extrapolants: list
    error: float


def tube_limit(T: Current, A, psi: TestForm, delta0: float = 0.2, levels: int = 7,
               cfg=None, complement: bool = False, rel: float = 0.1,
               floor: float = 1e-6) -> TubeLimit:
    """Linear extrapolation in delta of tube_mass over delta_k = delta0 2^-k."""
    deltas = [delta0 / 2**k for k in range(levels)]
    vals, qerr = [], 0.0
    for dl in deltas:
        r = tube_mass(T, A, dl, psi, cfg, complement)
        vals.append(complex(r.value))
        qerr = max(qerr, r.error)
    ext = [2 * b - a for a, b in zip(vals[:-1], vals[1:])]
    fit = polynomial_limit(deltas[-4:], vals[-4:], 1)
    value = complex(fit.value)
    if len(ext) >= 2:
        gap = abs(ext[-1] - ext[-2])
        if gap > rel * max(abs(ext[-1]), abs(ext[-2])) and gap > floor + 4 * qerr:
            raise ExtrapolationUnstable(f"tube extrapolants differ by {gap:.3e}", ext)
    err = (abs(ext[-1] - ext[-2]) if len(ext) >= 2 else 0.0) + qerr
    return TubeLimit(value, deltas, vals, ext, err)
