"""Builders turning JSON experiment configs into library objects."""
from __future__ import annotations

import numpy as np

from .algebra import ExteriorValue
from .calculus import FormField
from .currents import Current, IntegrationCurrent, SmoothCurrent
from .errors import ConfigError
from .geometry import Box
from .janalytic import Stratification, exp_graph, line_w0, probes_on
from .plelong import DefiningMap
from .quadrature import QuadratureConfig
from .structures import AlmostComplexStructure, adapted_chart, from_config
from .testforms import make_test_form, random_positive_probes


def require(spec: dict, *keys, where: str = "config"):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object, got {type(spec).__name__}")
    missing = [k for k in keys if k not in spec]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")


def structure(spec: dict) -> AlmostComplexStructure:
    require(spec, "kind", where="structure")
    try:
        return from_config(spec)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"structure: {exc}") from exc


def quadrature(spec: dict | None, threads: int = 1) -> QuadratureConfig:
    try:
        cfg = QuadratureConfig.from_dict(spec)
    except TypeError as exc:
        raise ConfigError(f"quadrature: {exc}") from exc
    return cfg.replace(threads=threads)


def box(spec, where="box") -> Box:
    require(spec, "lo", "hi", where=where)
    b = Box.from_dict(spec)
    if b.dim == 0 or any(h <= l for l, h in zip(b.lo, b.hi)):
        raise ConfigError(f"{where}: empty box")
    return b


def _key(text: str) -> tuple:
    try:
        return tuple(sorted(int(i) for i in str(text).split(",")))
    except ValueError as exc:
        raise ConfigError(f"bad form index {text!r}") from exc


def constant_form(n: int, coefficients: dict) -> ExteriorValue:
    return ExteriorValue(n, {_key(k): float(v) for k, v in coefficients.items()})


def stratification(spec: dict) -> Stratification:
    require(spec, "kind", where="stratification")
    kind = spec["kind"]
    if kind == "line_w0":
        return line_w0(2, float(spec.get("half", 1.0)), bool(spec.get("puncture", False)))
    if kind == "exp_graph":
        return exp_graph(float(spec.get("z0", 1.5)), float(spec.get("reach", 1.0)))
    raise ConfigError(f"unknown stratification kind {kind!r}")


def _psh_example(J, R: float) -> SmoothCurrent:
    def theta(c):
        return ExteriorValue(2, {(2, 3): c[0] ** 2 + c[1] ** 2 + c[2] ** 2 + c[3] ** 2 - R * R})

    return SmoothCurrent(FormField(2, theta, 2), J, (1, 1), name=f"(|z|^2-{R}^2)Phi")


def current(spec: dict, J: AlmostComplexStructure) -> Current:
    """Registered kinds: integration, smooth_constant, psh_example, sum."""
    require(spec, "kind", where="current")
    kind = spec["kind"]
    if kind == "integration":
        A = stratification(spec.get("stratification", {"kind": "line_w0"}))
        return IntegrationCurrent(list(A.top.charts), J, float(spec.get("multiplicity", 1.0)),
                                  name=f"[{A.name}]")
    if kind == "smooth_constant":
        require(spec, "coefficients", where="current")
        form = constant_form(J.n, spec["coefficients"])
        k = _degree(form)

        def theta(c, form=form):
            return form.map(lambda v: v + 0.0 * c[0])

        return SmoothCurrent(FormField(J.n, theta, k, name="smooth"), J, (k // 2, k // 2),
                             name="smooth")
    if kind == "psh_example":
        return _psh_example(J, float(spec.get("R", 1.0)))
    if kind == "sum":
        require(spec, "terms", where="current")
        total = None
        for coef, sub in spec["terms"]:
            T = current(sub, J) * float(coef)
            total = T if total is None else total + T
        return total
    raise ConfigError(f"unknown current kind {kind!r}")


def _degree(form: ExteriorValue) -> int:
    degs = {len(K) for K in form.coefficients}
    if len(degs) != 1:
        raise ConfigError("constant form must be homogeneous")
    return degs.pop()


def chart(spec: dict | None, J: AlmostComplexStructure):
    spec = spec or {"kind": "adapted"}
    center = np.asarray(spec.get("center", [0.0] * (2 * J.n)), dtype=float)
    base = adapted_chart(J, center)
    kind = spec.get("kind", "adapted")
    if kind == "adapted":
        return base
    if kind == "perturbed":
        require(spec, "coeffs", where="chart")
        coeffs = np.asarray(spec["coeffs"], dtype=float)
        if "coeffs_imag" in spec:
            coeffs = coeffs + 1j * np.asarray(spec["coeffs_imag"], dtype=float)
        return base.perturb(coeffs)
    raise ConfigError(f"unknown chart kind {kind!r}")


def defining_map(spec: dict, J: AlmostComplexStructure) -> DefiningMap:
    """Only f = w with Z = {w = 0} is registered."""
    kind = spec.get("kind", "w")
    if kind != "w":
        raise ConfigError(f"unknown defining map {kind!r}")
    Z = IntegrationCurrent(list(line_w0(2).top.charts), J, name="[w=0]")
    return DefiningMap(J, lambda c: [c[2] + 1j * c[3]], 1, J.domain, Z, "w")


def forms_from(spec: dict, n: int, seed: int, J=None, A=None) -> list:
    """Kinds: explicit (coefficients + box), random (seeded normals), probes_on (positive)."""
    require(spec, "kind", where="forms")
    kind = spec["kind"]
    if kind == "explicit":
        require(spec, "coefficients", "box", where="forms")
        return [make_test_form(constant_form(n, spec["coefficients"]), box(spec["box"]),
                               name=spec.get("name", "psi"))]
    if kind == "random":
        rng = np.random.default_rng(seed)
        out = []
        for i in range(int(spec.get("count", 5))):
            coef = {(a, b): float(rng.normal()) for a in range(2 * n) for b in range(a + 1, 2 * n)}
            coef[(0, 1)] = coef[(0, 1)] + float(spec.get("bias", 0.0))
            center = rng.uniform(-1, 1, 2 * n) * np.asarray(spec.get("jitter", [0.1] * (2 * n)))
            half = float(spec.get("half", 0.3))
            out.append(make_test_form(ExteriorValue(n, coef), Box.around(center, half),
                                      name=f"psi{i}"))
        return out
    if kind == "positive":
        return random_positive_probes(J, box(spec["region"]), int(spec.get("k", 1)),
                                      int(spec.get("count", 5)), seed)
    if kind == "probes_on":
        return probes_on(A, J, int(spec.get("count", 5)), seed)
    raise ConfigError(f"unknown test form kind {kind!r}")
