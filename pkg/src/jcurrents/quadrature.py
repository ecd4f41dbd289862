"""Adaptive tensor Gauss-Legendre cubature on boxes.

Cells are refined by bisection along the axis whose Legendre tail (the top two
coefficients of the per-cell Legendre expansion) is largest.  Integrands take
an ``(N, d)`` array of points and return ``(N,)`` (or ``(N, K)``) values.

Determinism: new cells are batched into fixed-size chunks in list order, so
each integrand call sees the same points whatever the thread count, and the
final reduction uses ``math.fsum`` (correctly rounded, order-free).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import legendre

from .errors import ConfigError, NonConvergence
from .geometry import Box


@dataclass(frozen=True)
class QuadratureConfig:
    order: int = 8
    max_depth: int = 14
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    hints: tuple = field(default=(), compare=False)
    hint_floor: float = 1e-3
    threads: int = 1
    max_cells: int = 20000
    points_per_batch: int = 65536
    initial: int = 2

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ConfigError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.order < 2:
            raise ConfigError("order must be >= 2")
        if self.initial < 1:
            raise ConfigError("initial must be >= 1")

    def replace(self, **kw) -> "QuadratureConfig":
        data = {k: getattr(self, k) for k in self.__dataclass_fields__}
        data.update(kw)
        return QuadratureConfig(**data)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "hints"}

    @classmethod
    def from_dict(cls, data: dict | None) -> "QuadratureConfig":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__) - {"hints"}
        if unknown:
            raise ConfigError(f"unknown quadrature keys: {sorted(unknown)}")
        data.pop("hints", None)
        return cls(**data)


@dataclass
class QuadResult:
    value: complex
    error: float
    cells: int
    evaluations: int
    converged: bool = True

    @property
    def real(self) -> float:
        return float(np.real(self.value))


@lru_cache(maxsize=None)
def _rule(order: int):
    x, w = legendre.leggauss(order)
    # L[i, j]: Legendre coefficient i from nodal values (exact for degree < order)
    V = legendre.legvander(x, order - 1)
    L = (V * w[:, None]).T * ((2 * np.arange(order) + 1) / 2.0)[:, None]
    return x, w, L


@lru_cache(maxsize=None)
def _tensor(order: int, d: int):
    x, w, _ = _rule(order)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    wts = w
    for _ in range(d - 1):
        wts = np.multiply.outer(wts, w)
    return nodes, np.ravel(wts)


def _evaluate_chunk(f, lo, hi, order):
    """Integrals (C, K) and per-axis tail indicators (C, K, d) for a chunk of cells."""
    C, d = lo.shape
    nodes, wts = _tensor(order, d)
    P = len(wts)
    half = (hi - lo) / 2
    mid = (hi + lo) / 2
    pts = mid[:, None, :] + half[:, None, :] * nodes[None, :, :]
    vals = np.asarray(f(pts.reshape(-1, d)))
    if vals.ndim <= 1:
        vals = np.broadcast_to(vals, (C * P,))[:, None]
    K = vals.shape[1]
    vals = vals.reshape(C, P, K)
    vol = np.prod(2 * half, axis=1)
    integrals = np.einsum("cpk,p->ck", vals, wts) * (vol / 2**d)[:, None]
    _, _, L = _rule(order)
    coef = np.moveaxis(vals, 2, 1).reshape((C, K) + (order,) * d)
    for a in range(d):
        coef = np.moveaxis(np.tensordot(L, coef, axes=([1], [a + 2])), 0, a + 2)
    mag = np.abs(coef)
    tails = np.empty((C, K, d))
    for a in range(d):
        sl = [slice(None)] * (d + 2)
        sl[a + 2] = slice(order - 2, order)
        tails[:, :, a] = mag[tuple(sl)].reshape(C, K, -1).sum(axis=2) * vol[:, None]
    # geometric decay rho^k of the coefficients puts the Gauss error near
    # norm * rho^(2 order) = tail^2 / norm; rough cells keep the full tail
    norm = mag.reshape(C, K, -1).sum(axis=2) * vol[:, None]
    total = tails.sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(norm > 0, np.minimum(1.0, 10.0 * total / norm), 1.0)
    tails = tails * shrink[:, :, None]
    finite = np.all(np.isfinite(integrals), axis=1) & np.all(np.isfinite(tails), axis=(1, 2))
    if not np.all(finite):
        tails[~finite] = np.inf
    return integrals, tails


def _fsum_complex(values) -> complex:
    values = np.asarray(values)
    re = math.fsum(np.real(values).tolist())
    im = math.fsum(np.imag(values).tolist()) if np.iscomplexobj(values) else 0.0
    return complex(re, im)


def _forced(hints, lo, hi, floor):
    """Cells a hint marks as possibly containing its zero set, and the split axis.

    A hint h is a distance-like function vanishing on a singular set.  A cell
    is forced when h(center) is below the variation of h across the cell and
    that variation exceeds ``floor``; it is split along the axis of largest
    variation, so directions tangent to the singular set are left alone.
    """
    C, d = lo.shape
    forced = np.zeros(C, dtype=bool)
    axis = np.zeros(C, dtype=int)
    if not hints:
        return forced, axis
    center = (lo + hi) / 2
    half = (hi - lo) / 2
    best = np.zeros(C)
    for h in hints:
        h0 = np.abs(np.asarray(h(center), dtype=float))
        var = np.empty((C, d))
        for a in range(d):
            step = np.zeros(d)
            step[a] = 1.0
            up = np.abs(np.asarray(h(center + half[:, a:a + 1] * step), dtype=float))
            dn = np.abs(np.asarray(h(center - half[:, a:a + 1] * step), dtype=float))
            var[:, a] = np.maximum(np.abs(up - h0), np.abs(dn - h0))
        top = var.max(axis=1)
        hit = (h0 <= var.sum(axis=1)) & (top > floor)
        better = hit & (top > best)
        axis = np.where(better, var.argmax(axis=1), axis)
        best = np.where(better, top, best)
        forced |= hit
    return forced, axis


def integrate(f: Callable, box: Box, cfg: QuadratureConfig | None = None,
              initial: int | None = None) -> QuadResult:
    """Adaptive integral of ``f`` over ``box``.

    ``f`` may return ``(N,)`` values or ``(N, K)`` for K integrals sharing one
    mesh; then ``value`` and ``error`` are length-K arrays and every component
    meets its own tolerance.  Raises :class:`NonConvergence` (with the partial
    result attached) when the depth or cell budget runs out first.
    """
    cfg = cfg or QuadratureConfig()
    d = box.dim
    if box.is_empty:
        return QuadResult(0.0, 0.0, 0, 0)
    order = cfg.order
    # a single starting cell can alias a localized feature into a smooth fit
    initial = cfg.initial if initial is None else initial
    ticks = [np.linspace(box.lo[a], box.hi[a], initial + 1) for a in range(d)]
    idx = np.stack(np.meshgrid(*([np.arange(initial)] * d), indexing="ij"), -1).reshape(-1, d)
    lo = np.array([[ticks[a][i[a]] for a in range(d)] for i in idx])
    hi = np.array([[ticks[a][i[a] + 1] for a in range(d)] for i in idx])
    depth = np.zeros_like(lo, dtype=int)
    chunk = max(1, cfg.points_per_batch // order**d)
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    evaluations = 0
    vector = None

    def run(lo_new, hi_new):
        nonlocal evaluations
        starts = list(range(0, len(lo_new), chunk))
        jobs = [(lo_new[s:s + chunk], hi_new[s:s + chunk]) for s in starts]
        if pool is None:
            outs = [_evaluate_chunk(f, a, b, order) for a, b in jobs]
        else:
            outs = list(pool.map(lambda ab: _evaluate_chunk(f, ab[0], ab[1], order), jobs))
        evaluations += len(lo_new) * order**d
        return (np.concatenate([o[0] for o in outs]), np.concatenate([o[1] for o in outs]))

    def result(totals, errs_k, vals, ok=True):
        values = np.array([_scalar(t, vals) for t in totals])
        if not vector:
            return QuadResult(values[0].item(), float(errs_k[0]), len(vals), evaluations, ok)
        return QuadResult(values, errs_k, len(vals), evaluations, ok)

    try:
        vector = _probe_vector(f, box)
        vals, tails = run(lo, hi)
        K = vals.shape[1]
        forced, faxis = _forced(cfg.hints, lo, hi, cfg.hint_floor)
        cap = np.full((len(vals), K), np.inf)
        cap_axis = np.full(len(vals), -1)
        dominant = np.zeros(len(vals), dtype=bool)
        while True:
            # two-level estimate: children are no less accurate than the
            # observed change |I_parent - I_children|.  The change only sees
            # the split axis, so it bounds the whole error only when that axis
            # carried the largest tail; otherwise the other tails are added.
            total = tails.sum(axis=2)
            split_tail = tails[np.arange(len(vals)), :, np.maximum(cap_axis, 0)]
            partial_cap = np.minimum(total, cap + total - split_tail)
            errs = np.where(dominant[:, None], np.minimum(total, cap),
                            np.where((cap_axis >= 0)[:, None], partial_cap, total))
            forced &= depth[np.arange(len(depth)), faxis] < cfg.max_depth
            totals = [_fsum_complex(vals[:, k]) for k in range(K)]
            if np.all(np.isfinite(errs)):
                errs_k = np.array([math.fsum(errs[:, k].tolist()) for k in range(K)])
            else:
                errs_k = np.full(K, math.inf)
            tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(totals))
            if np.all(errs_k <= tol) and not forced.any():
                return result(totals, errs_k, vals)
            score = (errs / tol).max(axis=1)
            excess = float(np.max(errs_k / tol))
            splittable = np.any(depth < cfg.max_depth, axis=1)
            cand = np.flatnonzero(splittable & ((score > 0) | forced))
            if len(cand) == 0 or len(vals) >= cfg.max_cells:
                partial = result(totals, errs_k, vals, False)
                raise NonConvergence(
                    f"quadrature stopped at {len(vals)} cells with error "
                    f"{float(np.max(errs_k)):.3e} > {float(np.min(tol)):.3e}", partial)
            order_idx = cand[np.lexsort((cand, -score[cand]))]
            budget = excess - 0.5
            chosen = []
            acc = 0.0
            for i in order_idx:
                if forced[i] or acc < budget:
                    chosen.append(i)
                    acc += score[i]
            chosen = np.array(sorted(chosen[: max(1, min(len(chosen), cfg.max_cells - len(vals)))]))
            # split axis: largest tail among axes with depth left (hint axis when forced)
            tw = (tails[chosen] / tol[None, :, None]).sum(axis=1)
            t = np.where(depth[chosen] < cfg.max_depth, tw, -1.0)
            fa = faxis[chosen]
            fa_ok = depth[chosen, fa] < cfg.max_depth
            axis = np.where(forced[chosen] & fa_ok, fa, np.argmax(t, axis=1))
            was_dominant = axis == np.argmax(tw, axis=1)
            rows = np.arange(len(chosen))
            mid = (lo[chosen, axis] + hi[chosen, axis]) / 2
            lo1, hi1 = lo[chosen].copy(), hi[chosen].copy()
            lo2, hi2 = lo[chosen].copy(), hi[chosen].copy()
            hi1[rows, axis] = mid
            lo2[rows, axis] = mid
            dep = depth[chosen].copy()
            dep[rows, axis] += 1
            new_lo = np.empty((2 * len(chosen), d))
            new_hi = np.empty((2 * len(chosen), d))
            new_lo[0::2], new_lo[1::2] = lo1, lo2
            new_hi[0::2], new_hi[1::2] = hi1, hi2
            new_dep = np.repeat(dep, 2, axis=0)
            v_new, t_new = run(new_lo, new_hi)
            f_new, fa_new = _forced(cfg.hints, new_lo, new_hi, cfg.hint_floor)
            change = np.abs(vals[chosen] - (v_new[0::2] + v_new[1::2]))
            c_new = np.repeat(change, 2, axis=0)
            keep = np.ones(len(vals), dtype=bool)
            keep[chosen] = False
            lo = np.concatenate([lo[keep], new_lo])
            hi = np.concatenate([hi[keep], new_hi])
            depth = np.concatenate([depth[keep], new_dep])
            vals = np.concatenate([vals[keep], v_new])
            tails = np.concatenate([tails[keep], t_new])
            forced = np.concatenate([forced[keep], f_new])
            faxis = np.concatenate([faxis[keep], fa_new])
            cap = np.concatenate([cap[keep], c_new])
            cap_axis = np.concatenate([cap_axis[keep], np.repeat(axis, 2)])
            dominant = np.concatenate([dominant[keep], np.repeat(was_dominant, 2)])
    finally:
        if pool is not None:
            pool.shutdown()


def _probe_vector(f, box: Box) -> bool:
    """Whether f returns one column per point or a (N, K) block."""
    return np.ndim(f(np.asarray(box.center, dtype=float)[None, :])) == 2


def _scalar(total: complex, vals):
    return total if np.iscomplexobj(vals) else total.real


def polar_map(v, d: int):
    """Hyperspherical coordinates (rho, phi_1..phi_{d-1}) -> (x, jacobian)."""
    rho = v[..., 0]
    jac = rho ** (d - 1)
    x = np.empty(v.shape[:-1] + (d,))
    sin_prod = np.ones_like(rho)
    for k in range(1, d):
        phi = v[..., k]
        x[..., k - 1] = rho * sin_prod * np.cos(phi)
        sin_prod = sin_prod * np.sin(phi)
        if k < d - 1:
            jac = jac * np.sin(phi) ** (d - 1 - k)
    x[..., d - 1] = rho * sin_prod
    return x, jac


def polar_box(d: int, radius: float, inner: float = 0.0) -> Box:
    hi = np.full(d, np.pi)
    hi[0] = radius
    hi[-1] = 2 * np.pi
    lo = np.zeros(d)
    lo[0] = inner
    return Box(tuple(lo), tuple(hi))


def spherical_map(v, d: int, scale: float = 1.0):
    """Compactified hyperspherical coordinates: s in [0, 1) -> radius scale s / (1 - s)."""
    s = v[..., 0]
    w = np.array(v, dtype=float, copy=True)
    w[..., 0] = scale * s / (1.0 - s)
    x, jac = polar_map(w, d)
    return x, jac * scale / (1.0 - s) ** 2


def integrate_unbounded(f: Callable, d: int, cfg: QuadratureConfig | None = None,
                        scale: float = 1.0) -> QuadResult:
    """Integral of f over R^d (d >= 2) in compactified spherical coordinates."""
    if d < 2:
        def g1(u):
            s = 1.0 - u * u
            return f(scale * u / s) * scale * (1.0 + u * u) / s**2
        return integrate(g1, Box.cube(1, 1.0), cfg)
    def g(v):
        x, jac = spherical_map(v, d, scale)
        return f(x) * jac

    return integrate(g, polar_box(d, 1.0), cfg)


def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1]."""
    x, w, _ = _rule(order)
    return x.copy(), w.copy()


def fsum_complex(values: Sequence) -> complex:
    return _fsum_complex(values)
