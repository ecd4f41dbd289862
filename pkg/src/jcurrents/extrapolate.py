"""Limit extrapolation: least-squares fits in a chosen basis and Richardson."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass
class LimitFit:
    value: complex
    coefficients: np.ndarray
    residual: float
    stderr: float


def lsq_limit(xs: Sequence[float], ys: Sequence[complex],
              basis: Sequence[Callable], weights=None) -> LimitFit:
    """Fit y ~ sum_k c_k basis_k(x) and return c_0 (basis_0 should be 1)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys)
    A = np.stack([np.broadcast_to(np.asarray(b(xs), dtype=float), xs.shape) for b in basis], axis=1)
    w = np.ones_like(xs) if weights is None else np.asarray(weights, dtype=float)
    Aw = A * w[:, None]
    coef, *_ = np.linalg.lstsq(Aw, ys * w, rcond=None)
    resid = ys - A @ coef
    dof = max(len(xs) - len(basis), 0)
    rms = float(np.sqrt(np.sum(np.abs(resid * w) ** 2) / dof)) if dof else 0.0
    try:
        cov = np.linalg.inv(Aw.T @ Aw)
        stderr = rms * float(np.sqrt(abs(cov[0, 0])))
    except np.linalg.LinAlgError:
        stderr = float("inf")
    value = coef[0] if np.iscomplexobj(coef) else float(coef[0])
    return LimitFit(value, coef, float(np.max(np.abs(resid))) if len(resid) else 0.0, stderr)


def polynomial_limit(xs, ys, degree: int = 1, weights=None) -> LimitFit:
    basis = [lambda x, k=k: np.asarray(x, dtype=float) ** k for k in range(degree + 1)]
    return lsq_limit(xs, ys, basis, weights)


def richardson(values: Sequence[complex], ratio: float = 2.0, orders: Sequence[int] = (2, 4)):
    """Eliminate error terms h^orders[0], h^orders[1], ... from values at h, h/ratio, ..."""
    table = [complex(v) if np.iscomplexobj(v) else float(v) for v in values]
    for q in orders[: len(table) - 1]:
        f = ratio**q
        table = [(f * b - a) / (f - 1) for a, b in zip(table[:-1], table[1:])]
    return table[-1]
