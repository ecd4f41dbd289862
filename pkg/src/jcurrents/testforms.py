"""Compactly supported test forms, bump profiles and smooth cutoffs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jet
from .algebra import ExteriorValue, _merge_sign, p10_matrix, wedge
from .calculus import EXACT, FormField, component_field
from .geometry import Box


def bump_profile(s2):
    """exp(1 - 1/(1 - s^2)) for s^2 < 1, else 0 (jet-friendly, C^infinity)."""
    inside = jet.base_value(s2) < 1.0
    safe = jet.where(inside, s2, 0.0)
    return jet.where(inside, jet.exp(1.0 - jet.reciprocal(1.0 - safe)), 0.0)


POLY_POWER = 4


def poly_profile(t):
    """(1 - t^2)^4 on |t| < 1, else 0: C^3, and a polynomial on the support."""
    inside = np.abs(jet.base_value(t)) < 1.0
    u = 1.0 - t * t
    u2 = u * u
    return jet.where(inside, u2 * u2, 0.0)


def bump(coords, box: Box, profile: str = "poly"):
    """Bump equal to 1 at the box center and supported in the box.

    "poly" is the product of (1 - t_k^2)^4 over the axes, so adaptive cells
    aligned with the box never straddle the edge of the support; "smooth" is
    the C^infinity profile on the inscribed ellipsoid.
    """
    c = box.center
    half = box.widths / 2
    if profile == "poly":
        out = 1.0
        for k, x in enumerate(coords):
            out = out * poly_profile((x - c[k]) / half[k])
        return out
    s2 = 0.0
    for k, x in enumerate(coords):
        s2 = s2 + ((x - c[k]) / half[k]) ** 2
    return bump_profile(s2)


def _psi(t):
    pos = jet.base_value(t) > 0
    safe = jet.where(pos, t, 1.0)
    return jet.where(pos, jet.exp(-jet.reciprocal(safe)), 0.0)


def smooth_step(s):
    """C^infinity step: 0 for s <= -1, 1 for s >= 1, and S(s) + S(-s) = 1."""
    a = _psi(1.0 - s)
    b = _psi(1.0 + s)
    inside = np.abs(jet.base_value(s)) < 1.0
    denom = jet.where(inside, a + b, 1.0)
    mid = b * jet.reciprocal(denom)
    return jet.where(inside, mid, jet.where(jet.base_value(s) >= 1.0, 1.0, 0.0))


def wedge_top(a: ExteriorValue, b: ExteriorValue):
    """Top coefficient of a ^ b without forming the full product."""
    full = tuple(range(2 * a.n))
    total = 0.0
    for I, ca in a.items():
        K = tuple(k for k in full if k not in I)
        cb = b.coefficients.get(K)
        if cb is None:
            continue
        term = ca * cb
        total = total - term if _merge_sign(I, K) < 0 else total + term
    return total


@dataclass(frozen=True)
class TestForm:
    """A form field vanishing outside ``support``."""

    __test__ = False

    form: FormField
    support: Box
    bidegree: tuple | None = None
    name: str = "psi"

    @property
    def n(self) -> int:
        return self.form.n

    @property
    def degree(self) -> int:
        return self.form.degree

    def at(self, coords) -> ExteriorValue:
        return self.form.at(coords)

    def __call__(self, x) -> ExteriorValue:
        return self.form(x)

    def __add__(self, other: "TestForm") -> "TestForm":
        lo = np.minimum(self.support.lo, other.support.lo)
        hi = np.maximum(self.support.hi, other.support.hi)
        bideg = self.bidegree if self.bidegree == other.bidegree else None
        return TestForm(self.form + other.form, Box(tuple(lo), tuple(hi)), bideg,
                        f"{self.name}+{other.name}")

    def __mul__(self, s) -> "TestForm":
        return TestForm(self.form * s, self.support, self.bidegree, self.name)

    __rmul__ = __mul__

    def with_engine(self, engine) -> "TestForm":
        return TestForm(self.form.with_engine(engine), self.support, self.bidegree, self.name)

    def weighted(self, weight: Callable, support: Box | None = None, name=None) -> "TestForm":
        """weight(coords) * psi, optionally on a smaller support box."""
        f = self.form
        field = FormField(f.n, lambda c: f.at(c) * weight(c), f.degree, f.engine, f.name)
        box = self.support if support is None else self.support.intersect(support)
        return TestForm(field, box, self.bidegree, name or self.name)

    def component(self, J, p: int, q: int) -> "TestForm":
        return TestForm(component_field(self.form, J, p, q), self.support, (p, q),
                        f"({p},{q})[{self.name}]")


def make_test_form(coefficient, support: Box, bidegree=None, name="psi", engine=EXACT,
                   profile: bool = True) -> TestForm:
    """bump(x) * coefficient, where coefficient is an ExteriorValue or a FormField."""
    if isinstance(coefficient, ExteriorValue):
        value = coefficient
        n = value.n
        degree = value.degree or 0

        def base(c):
            return value
    else:
        n = coefficient.n
        degree = coefficient.degree
        base = coefficient.at

    if profile:
        def ev(c):
            return base(c) * bump(c, support)
    else:
        ev = base
    return TestForm(FormField(n, ev, degree, engine, name), support, bidegree, name)


def scalar_test_function(n: int, support: Box, fn: Callable | None = None, name="chi") -> TestForm:
    """A 0-form test function bump * fn."""
    def ev(c):
        b = bump(c, support)
        return ExteriorValue.scalar(n, b if fn is None else b * fn(c))

    return TestForm(FormField(n, ev, 0, EXACT, name), support, (0, 0), name)


def positive_probe(J, support: Box, covectors, name="probe") -> TestForm:
    """bump * prod_k i alpha_k ^ conj(alpha_k) with alpha_k = (1,0) part of real covectors.

    Strongly positive at every point for the pointwise structure J(x).
    """
    covectors = [np.asarray(a, dtype=float) for a in covectors]
    n = J.n

    def ev(c):
        P = p10_matrix(J.at(c))
        out = ExteriorValue.scalar(n, 1.0)
        for a in covectors:
            v = P @ a
            comps = [v[..., i] for i in range(2 * n)]
            alpha = ExteriorValue(n, {(i,): comps[i] for i in range(2 * n)})
            out = wedge(out, wedge(alpha, alpha.conj()) * 1j)
        return out * bump(c, support)

    k = len(covectors)
    return TestForm(FormField(n, ev, 2 * k, EXACT, name), support, (k, k), name)


def random_positive_probes(J, region: Box, k: int, count: int, seed: int,
                           scale=(0.25, 0.6)) -> list:
    """Seeded strongly positive (k, k) probes with supports inside ``region``."""
    rng = np.random.default_rng(seed)
    dim = 2 * J.n
    out = []
    for i in range(count):
        frac = rng.uniform(*scale)
        half = region.widths * frac / 2
        lo = region.lo + half
        hi = region.hi - half
        center = rng.uniform(lo, hi)
        box = Box.around(center, half)
        covs = [rng.normal(size=dim) for _ in range(k)]
        out.append(positive_probe(J, box, covs, name=f"probe{i}"))
    return out
