"""Form fields and their derivatives: d, its J-splitting, i del dbar, pullbacks.

A :class:`FormField` wraps a pure evaluator ``coords -> ExteriorValue``.
Every operator here returns a new FormField whose evaluator is itself
differentiable, so operators compose (``d`` of a ``dbar`` field, pullbacks of
derivatives, ...).  The torsion components are read off by bidegree
projection of ``d``; they are never computed from a separate formula, so the
identity ``d = del + dbar - theta - thetabar`` holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jet
from .algebra import ExteriorValue, bidegree_of, p10_matrix, split_with, transform, wedge
from .errors import DifferentiationFailure, MixedBidegree
from .structures import AlmostComplexStructure, coords_of


@dataclass(frozen=True)
class DifferentiationEngine:
    """``exact``: nested dual numbers (round-off only).
    ``fd``: central differences with relative step ``step`` (error ~ step^2)."""

    mode: str = "exact"
    step: float = 1e-5

    def __post_init__(self):
        if self.mode not in ("exact", "fd"):
            raise ValueError(f"unknown engine mode {self.mode!r}")

    @property
    def error_budget(self) -> float:
        return 1e-12 if self.mode == "exact" else max(1e-6, 10 * self.step**2)

    def _steps(self, coords):
        return [self.step * (1.0 + np.abs(jet.base_value(c))) for c in coords]

    def gradient(self, u: Callable, coords) -> list:
        """Partials of a scalar callable ``u(coords)``."""
        if self.mode == "exact":
            Y, tag = jet.make_variables(list(coords))
            val = u(Y)
            return [jet.part(val, tag, k) for k in range(len(coords))]
        out = []
        for k, h in enumerate(self._steps(coords)):
            up = list(coords)
            dn = list(coords)
            up[k] = coords[k] + h
            dn[k] = coords[k] - h
            out.append((u(up) - u(dn)) / (2 * h))
        return out

    def partials(self, fn: Callable, coords):
        """(value, [d value / d x_k]) for ``fn: coords -> ExteriorValue``."""
        if self.mode == "exact":
            Y, tag = jet.make_variables(list(coords))
            v = fn(Y)
            value = v.map(lambda c: jet.strip(c, tag))
            parts = [v.map(lambda c, k=k: jet.part(c, tag, k)) for k in range(len(coords))]
            return value, parts
        value = fn(list(coords))
        parts = []
        for k, h in enumerate(self._steps(coords)):
            up = list(coords)
            dn = list(coords)
            up[k] = coords[k] + h
            dn[k] = coords[k] - h
            parts.append((fn(up) - fn(dn)) * (1.0 / (2 * h)))
        return value, parts


EXACT = DifferentiationEngine("exact")
FD = DifferentiationEngine("fd")


@dataclass(frozen=True)
class FormField:
    n: int
    evaluator: Callable = field(repr=False)
    degree: int = 0
    engine: DifferentiationEngine = EXACT
    name: str = ""

    def at(self, coords) -> ExteriorValue:
        return self.evaluator(coords)

    def __call__(self, x) -> ExteriorValue:
        return self.evaluator(coords_of(x))

    def with_engine(self, engine: DifferentiationEngine) -> "FormField":
        return FormField(self.n, self.evaluator, self.degree, engine, self.name)

    def check_degree(self, x) -> bool:
        deg = self(x).degree
        return deg is None or deg == self.degree

    # arithmetic on fields (pointwise)
    def __add__(self, other):
        return FormField(self.n, lambda c: self.at(c) + other.at(c), self.degree, self.engine)

    def __sub__(self, other):
        return FormField(self.n, lambda c: self.at(c) - other.at(c), self.degree, self.engine)

    def __mul__(self, s):
        if isinstance(s, FormField):
            return wedge_fields(self, s)
        return FormField(self.n, lambda c: self.at(c) * s, self.degree, self.engine)

    __rmul__ = __mul__


def function_field(n: int, fn: Callable, engine=EXACT, name="") -> FormField:
    """A 0-form from a scalar callable ``fn(coords)``."""
    return FormField(n, lambda c: ExteriorValue.scalar(n, fn(c)), 0, engine, name)


def constant_field(value: ExteriorValue, engine=EXACT) -> FormField:
    return FormField(value.n, lambda c: value, value.degree or 0, engine, "constant")


def scaled_field(u: Callable, phi: FormField) -> FormField:
    """u * phi for a scalar callable ``u(coords)``."""
    return FormField(phi.n, lambda c: phi.at(c) * u(c), phi.degree, phi.engine)


def wedge_fields(a: FormField, b: FormField) -> FormField:
    return FormField(a.n, lambda c: wedge(a.at(c), b.at(c)), a.degree + b.degree, a.engine)


def wedge_power_field(a: FormField, p: int) -> FormField:
    def ev(c):
        v = a.at(c)
        out = ExteriorValue.scalar(a.n, 1.0)
        for _ in range(p):
            out = wedge(out, v)
        return out

    return FormField(a.n, ev, a.degree * p, a.engine)


# -- exterior derivative and its components -----------------------------------
def _d_value(phi: FormField, coords) -> ExteriorValue:
    _, parts = phi.engine.partials(phi.evaluator, coords)
    n = phi.n
    out = ExteriorValue.zero(n)
    for k, pk in enumerate(parts):
        if pk.coefficients:
            out = out + wedge(ExteriorValue(n, {(k,): 1.0}), pk)
    return out


def exterior_derivative(phi: FormField) -> FormField:
    if phi.degree >= 2 * phi.n:
        return FormField(phi.n, lambda c: ExteriorValue.zero(phi.n), phi.degree + 1, phi.engine)
    return FormField(phi.n, lambda c: _d_value(phi, c), phi.degree + 1, phi.engine,
                     f"d({phi.name})")


_SHIFTS = {"del": (1, 0, 1.0), "dbar": (0, 1, 1.0), "theta": (2, -1, -1.0), "thetabar": (-1, 2, -1.0)}


def component_field(phi: FormField, J: AlmostComplexStructure, p: int, q: int) -> FormField:
    """The (p, q) component of ``phi`` relative to J, pointwise."""
    n = phi.n

    def ev(coords):
        if p < 0 or q < 0 or p > n or q > n:
            return ExteriorValue.zero(n)
        v = phi.at(coords)
        if not v.coefficients:
            return v
        P = p10_matrix(J.at(coords))
        return split_with(v, P, phi.degree).get((p, q), ExteriorValue.zero(n))

    return FormField(n, ev, phi.degree, phi.engine, f"({p},{q})[{phi.name}]")


def d_component(phi: FormField, J: AlmostComplexStructure, bidegree, kind: str) -> FormField:
    """Signed piece of d phi: del, dbar, theta or thetabar (d = del+dbar-theta-thetabar)."""
    a, b = bidegree
    dp, dq, sign = _SHIFTS[kind]
    comp = component_field(exterior_derivative(phi), J, a + dp, b + dq)
    if sign < 0:
        return FormField(phi.n, lambda c: -comp.at(c), phi.degree + 1, phi.engine, f"{kind}({phi.name})")
    return FormField(phi.n, comp.evaluator, phi.degree + 1, phi.engine, f"{kind}({phi.name})")


def dbar_field(phi: FormField, J, bidegree=(0, 0)) -> FormField:
    return d_component(phi, J, bidegree, "dbar")


def del_field(phi: FormField, J, bidegree=(0, 0)) -> FormField:
    return d_component(phi, J, bidegree, "del")


def ddbar_field(phi: FormField, J, bidegree=(0, 0)) -> FormField:
    """i del_J dbar_J phi (the (a+1, b+1) part of d(dbar phi), times i)."""
    a, b = bidegree
    inner = dbar_field(phi, J, (a, b))
    outer = del_field(inner, J, (a, b + 1))
    return FormField(phi.n, lambda c: outer.at(c) * 1j, phi.degree + 2, phi.engine,
                     f"i ddbar({phi.name})")


# -- pointwise operations ---------------------------------------------------
def d(phi: FormField, x) -> ExteriorValue:
    return exterior_derivative(phi)(x)


def bidegree_at(phi: FormField, J: AlmostComplexStructure, x, tol=1e-10):
    v = phi(x)
    if not v.coefficients:
        return None
    bideg = bidegree_of(v, p10_matrix(J(x)), tol)
    if bideg is None:
        raise MixedBidegree(f"field {phi.name!r} is not of pure bidegree at the sample")
    return bideg


def split_d(phi: FormField, J: AlmostComplexStructure, x, bidegree=None) -> dict:
    """{'del', 'dbar', 'theta', 'thetabar'} values at x, signed so that
    d phi = del + dbar - theta - thetabar."""
    x = np.asarray(x, dtype=float)
    if bidegree is None:
        bidegree = bidegree_at(phi, J, x)
        if bidegree is None:
            bidegree = (0, 0) if phi.degree == 0 else None
    dv = d(phi, x)
    n = phi.n
    if bidegree is None:
        zero = ExteriorValue.zero(n)
        return {"del": zero, "dbar": zero, "theta": zero, "thetabar": zero}
    a, b = bidegree
    comps = split_with(dv, p10_matrix(J(x)), phi.degree + 1)
    out = {}
    for kind, (dp, dq, sign) in _SHIFTS.items():
        v = comps.get((a + dp, b + dq), ExteriorValue.zero(n))
        out[kind] = v if sign > 0 else -v
    return out


def ddbar(u: FormField, J: AlmostComplexStructure, x) -> ExteriorValue:
    """i del_J dbar_J u at x for a function u (the (1,1) part)."""
    return ddbar_field(u, J)(x)


# -- pullbacks -----------------------------------------------------------------
def _jacobian(sigma: Callable, coords, engine: DifferentiationEngine):
    """(values, M) with M[..., i, a] = d sigma_i / d t_a."""
    m = len(coords)
    if engine.mode == "exact":
        T, tag = jet.make_variables(list(coords))
        S = sigma(T)
        vals = [jet.strip(s, tag) for s in S]
        rows = [jet.stack([jet.part(s, tag, a) for a in range(m)], -1) for s in S]
    else:
        vals = sigma(list(coords))
        derivs = []
        for a, h in enumerate(engine._steps(coords)):
            up = list(coords)
            dn = list(coords)
            up[a] = coords[a] + h
            dn[a] = coords[a] - h
            su, sd = sigma(up), sigma(dn)
            derivs.append([(x - y) / (2 * h) for x, y in zip(su, sd)])
        rows = [jet.stack([derivs[a][i] for a in range(m)], -1) for i in range(len(vals))]
    return vals, jet.stack(rows, -2)


def pullback_field(phi: FormField, sigma: Callable, p: int) -> FormField:
    """sigma^* phi as a form field on R^{2p}; sigma maps 2p coords to 2n coords."""

    def ev(coords):
        vals, M = _jacobian(sigma, coords, phi.engine)
        return transform(phi.at(vals), M, 2 * p)

    return FormField(p, ev, phi.degree, phi.engine, f"pullback({phi.name})")


def pullback(phi: FormField, sigma: Callable, t, p: int | None = None) -> ExteriorValue:
    t = np.asarray(t, dtype=float)
    if p is None:
        p = t.shape[-1] // 2
    try:
        return pullback_field(phi, sigma, p)(t)
    except (FloatingPointError, ZeroDivisionError) as exc:
        raise DifferentiationFailure(str(exc)) from exc
