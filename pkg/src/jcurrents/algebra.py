"""Pointwise complex exterior algebra on R^{2n}.

Forms are stored sparsely over the real coframe ``dx_0 .. dx_{2n-1}`` with
the ordering ``z_j = x_{2j} + i x_{2j+1}``.  Coefficients may be complex
scalars, numpy arrays (a batch of points) or :class:`~jcurrents.jet.Dual`
jets; all arithmetic is generic over those.  Bidegree is not stored: it is
computed against a projector built from a value of J.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import jet
from .errors import (
    DegenerateEigenspace,
    DimensionMismatch,
    MixedDegree,
    NegativeWeight,
    NotAlmostComplex,
    WrongBidegree,
)

PRUNE_EPS = 1e-14
DEFAULT_SEED = 20240521


def _is_zero(c) -> bool:
    if jet.is_dual(c):
        return False
    if isinstance(c, (int, float, complex)):
        return abs(c) <= PRUNE_EPS
    a = np.asarray(c)
    return bool(np.all(np.abs(a) <= PRUNE_EPS))


def _merge_sign(a: tuple, b: tuple) -> int:
    inversions = sum(1 for i in a for k in b if i > k)
    return -1 if inversions % 2 else 1


class ExteriorValue:
    """A complex exterior-algebra element on R^{2n}."""

    __slots__ = ("n", "coefficients")

    def __init__(self, n: int, coefficients=None, prune: bool = True):
        self.n = n
        coeffs = {}
        for key, c in (coefficients or {}).items():
            key = tuple(int(i) for i in key)
            if any(b <= a for a, b in zip(key, key[1:])):
                raise ValueError(f"multi-index {key} is not strictly increasing")
            if key and (key[0] < 0 or key[-1] >= 2 * n):
                raise ValueError(f"multi-index {key} out of range for n={n}")
            if prune and _is_zero(c):
                continue
            coeffs[key] = c
        self.coefficients = coeffs

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def scalar(cls, n, c):
        return cls(n, {(): c})

    @classmethod
    def from_covector(cls, n, vec):
        return cls(n, {(i,): vec[i] for i in range(2 * n)})

    # -- structure --------------------------------------------------------
    @property
    def degrees(self) -> set:
        return {len(k) for k in self.coefficients}

    @property
    def degree(self) -> int | None:
        """Total degree; ``None`` for the zero value."""
        degs = self.degrees
        if not degs:
            return None
        if len(degs) > 1:
            raise MixedDegree(f"value has mixed degrees {sorted(degs)}")
        return degs.pop()

    def __getitem__(self, key):
        return self.coefficients.get(tuple(key), 0.0)

    def items(self):
        return self.coefficients.items()

    def top(self):
        """Coefficient of dx_0 ^ ... ^ dx_{2n-1}."""
        return self.coefficients.get(tuple(range(2 * self.n)), 0.0)

    def homogeneous_part(self, k):
        return ExteriorValue(self.n, {I: c for I, c in self.items() if len(I) == k}, prune=False)

    def map(self, fn):
        return ExteriorValue(self.n, {I: fn(c) for I, c in self.items()})

    def __repr__(self):
        terms = ", ".join(f"{k}: {v!r}" for k, v in sorted(self.coefficients.items()))
        return f"ExteriorValue(n={self.n}, {{{terms}}})"

    # -- arithmetic -------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, ExteriorValue):
            raise TypeError(f"expected ExteriorValue, got {type(other).__name__}")
        if other.n != self.n:
            raise DimensionMismatch(f"n={self.n} vs n={other.n}")

    def __add__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        self._check(other)
        out = dict(self.coefficients)
        for k, c in other.items():
            out[k] = out[k] + c if k in out else c
        return ExteriorValue(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return ExteriorValue(self.n, {k: -c for k, c in self.items()}, prune=False)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, ExteriorValue):
            return wedge(self, s)
        return ExteriorValue(self.n, {k: c * s for k, c in self.items()})

    def __rmul__(self, s):
        return ExteriorValue(self.n, {k: s * c for k, c in self.items()})

    def __truediv__(self, s):
        return ExteriorValue(self.n, {k: c / s for k, c in self.items()})

    def __xor__(self, other):
        return wedge(self, other)

    def conj(self):
        return ExteriorValue(self.n, {k: jet.conj(c) for k, c in self.items()}, prune=False)

    def max_abs(self) -> float:
        vals = [np.max(np.abs(jet.base_value(c))) for c in self.coefficients.values()]
        return float(max(vals)) if vals else 0.0

    def allclose(self, other, tol=1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def __call__(self, *vectors):
        """Evaluate a homogeneous k-form on k real (or complex) vectors."""
        k = len(vectors)
        V = np.stack([np.asarray(v) for v in vectors], axis=-1)
        total = 0.0
        for I, c in self.items():
            if len(I) != k:
                continue
            total = total + c * det_sub(V, I, range(k))
        return total


def det_sub(M, rows, cols):
    rows, cols = list(rows), list(cols)
    if not rows:
        return 1.0
    sub = M[..., rows, :][..., :, cols]
    return jet.det(sub)


def wedge(a: ExteriorValue, b: ExteriorValue) -> ExteriorValue:
    if a.n != b.n:
        raise DimensionMismatch(f"n={a.n} vs n={b.n}")
    out = {}
    for I, ca in a.items():
        sI = set(I)
        for K, cb in b.items():
            if sI.intersection(K):
                continue
            key = tuple(sorted(I + K))
            term = ca * cb
            if _merge_sign(I, K) < 0:
                term = -term
            out[key] = out[key] + term if key in out else term
    return ExteriorValue(a.n, out)


def wedge_all(values, n=None) -> ExteriorValue:
    values = list(values)
    if not values:
        return ExteriorValue.scalar(n, 1.0)
    out = values[0]
    for v in values[1:]:
        out = wedge(out, v)
    return out


def wedge_power(v: ExteriorValue, p: int) -> ExteriorValue:
    if p == 0:
        return ExteriorValue.scalar(v.n, 1.0)
    out = v
    for _ in range(p - 1):
        out = wedge(out, v)
    return out


def brute_force_wedge(a: ExteriorValue, b: ExteriorValue) -> ExteriorValue:
    """Wedge via the shuffle/permutation definition (test oracle)."""
    out = {}
    for I, ca in a.items():
        for K, cb in b.items():
            word = I + K
            if len(set(word)) != len(word):
                continue
            key = tuple(sorted(word))
            perm = [key.index(i) for i in word]
            sign = _perm_sign(perm)
            out[key] = out.get(key, 0.0) + sign * ca * cb
    return ExteriorValue(a.n, out)


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


# -- coframe helpers ----------------------------------------------------------
def dx(n, i) -> ExteriorValue:
    return ExteriorValue(n, {(i,): 1.0})


def dz(n, j) -> ExteriorValue:
    return ExteriorValue(n, {(2 * j,): 1.0, (2 * j + 1,): 1j})


def dzbar(n, j) -> ExteriorValue:
    return ExteriorValue(n, {(2 * j,): 1.0, (2 * j + 1,): -1j})


def covector(v: ExteriorValue) -> list:
    """Coefficient list of a 1-form."""
    return [v[(i,)] for i in range(2 * v.n)]


def volume_form(n) -> ExteriorValue:
    return ExteriorValue(n, {tuple(range(2 * n)): 1.0})


def kahler_form(n) -> ExteriorValue:
    """beta_1 = (i/2) sum dz_j ^ dzbar_j for the standard structure."""
    out = ExteriorValue.zero(n)
    for j in range(n):
        out = out + 0.5j * wedge(dz(n, j), dzbar(n, j))
    return out


def transform(v: ExteriorValue, M, m_out: int | None = None) -> ExteriorValue:
    """Push a form through a linear coframe map.

    ``M[..., i, a]`` is the coefficient of the new coframe element ``a`` in
    the image of ``dx_i``; ``m_out`` is the size of the new coframe
    (default: the same as the old one).  Works for numeric or jet ``M``.
    """
    dim_in = 2 * v.n
    dim_out = dim_in if m_out is None else m_out
    n_out = dim_out // 2
    out = {}
    for k in sorted(v.degrees):
        targets = list(itertools.combinations(range(dim_out), k))
        for I, c in v.items():
            if len(I) != k:
                continue
            for K in targets:
                term = det_sub(M, I, K) * c if k else c
                out[K] = out[K] + term if K in out else term
    return ExteriorValue(n_out, out)


# -- bidegree ------------------------------------------------------------------
def p10_matrix(J):
    """(I - i J^T)/2 acting on covector coefficient columns; numeric or jet J."""
    dim = np.shape(jet.base_value(J))[-1]
    eye = np.eye(dim)
    return 0.5 * (eye - 1j * jet.mT(J))


@dataclass(frozen=True)
class BidegreeProjector:
    """Projector onto the (1,0) cotangent space at a point."""

    n: int
    P10: np.ndarray = field(repr=False)

    @property
    def P01(self):
        return np.conj(self.P10)


def projector_10(J_value, tol: float = 1e-10) -> BidegreeProjector:
    J_value = np.asarray(J_value, dtype=float)
    dim = J_value.shape[-1]
    if J_value.shape != (dim, dim) or dim % 2:
        raise NotAlmostComplex(f"J must be a square matrix of even size, got {J_value.shape}")
    dev = np.max(np.abs(J_value @ J_value + np.eye(dim)))
    if dev > tol:
        raise NotAlmostComplex(f"|J^2 + I| = {dev:.3e} exceeds {tol:g}")
    P = p10_matrix(J_value)
    rank = np.linalg.matrix_rank(P, tol=1e-8)
    if rank != dim // 2:
        raise DegenerateEigenspace(f"(1,0) projector has rank {rank}, expected {dim // 2}")
    return BidegreeProjector(dim // 2, P)


def split_with(v: ExteriorValue, P10, k: int | None = None) -> dict:
    """Bidegree components of a homogeneous value given a (possibly jet) P10.

    Uses the grading trick: the coframe map P10 + t*P01 scales the (p,q)
    component by t^q, so k+1 roots of unity separate the components.
    """
    if k is None:
        k = v.degree
    n = v.n
    if k is None:
        return {}
    if k == 0:
        return {(0, 0): v}
    if k == 2 * n:
        return {(n, n): v}
    P01 = jet.conj(P10)
    if k == 1:
        a = covector(v)
        comps = {}
        for key, P in (((1, 0), P10), ((0, 1), P01)):
            coeffs = {}
            for i in range(2 * n):
                s = 0.0
                for j in range(2 * n):
                    if _is_zero(a[j]) and not jet.is_dual(a[j]):
                        continue
                    s = s + P[..., i, j] * a[j]
                coeffs[(i,)] = s
            comps[key] = ExteriorValue(n, coeffs)
        return comps
    roots = np.exp(2j * np.pi * np.arange(k + 1) / (k + 1))
    images = [transform(v, jet.mT(P10 + t * P01)) for t in roots]
    comps = {}
    for q in range(k + 1):
        p = k - q
        if p > n or q > n:
            continue
        acc = ExteriorValue.zero(n)
        for m, img in enumerate(images):
            acc = acc + img * (roots[m] ** (-q) / (k + 1))
        comps[(p, q)] = acc
    return comps


def bidegree_split(v: ExteriorValue, proj: BidegreeProjector) -> dict:
    """Map (p, q) -> component; the components sum back to ``v``."""
    k = v.degree
    return split_with(v, proj.P10, k)


def bidegree_of(v: ExteriorValue, proj_or_P10, tol: float = 1e-10):
    """The unique (p, q) carrying ``v``, or ``None`` if it is mixed (or zero)."""
    P10 = proj_or_P10.P10 if isinstance(proj_or_P10, BidegreeProjector) else proj_or_P10
    comps = split_with(v, P10)
    scale = max(v.max_abs(), 1.0)
    live = [key for key, c in comps.items() if c.max_abs() > tol * scale]
    return live[0] if len(live) == 1 else None


# -- positivity -----------------------------------------------------------------
@dataclass(frozen=True)
class StronglyPositiveDecomposition:
    """sum_j lambda_j  i a_{1j}^ conj(a_{1j}) ^ ... ^ i a_{pj} ^ conj(a_{pj})."""

    n: int
    terms: tuple = ()

    def check(self, proj: BidegreeProjector | None = None, tol: float = 1e-10):
        for lam, alphas in self.terms:
            if lam < 0:
                raise NegativeWeight(f"weight {lam} < 0")
            if proj is not None:
                for a in alphas:
                    a = np.asarray(a, dtype=complex)
                    if np.max(np.abs(proj.P10 @ a - a)) > tol:
                        raise WrongBidegree("covector is not of type (1,0) at the anchor")


def strongly_positive_form(dec: StronglyPositiveDecomposition) -> ExteriorValue:
    out = ExteriorValue.zero(dec.n)
    for lam, alphas in dec.terms:
        if lam < 0:
            raise NegativeWeight(f"weight {lam} < 0")
        term = ExteriorValue.scalar(dec.n, complex(lam))
        for a in alphas:
            alpha = a if isinstance(a, ExteriorValue) else ExteriorValue.from_covector(dec.n, a)
            term = wedge(term, 1j * wedge(alpha, alpha.conj()))
        out = out + term
    return out


@dataclass
class PositivityResult:
    positive: bool
    min_value: float
    witness: tuple | None
    samples: int
    seed: int

    def __bool__(self):
        return self.positive


def is_positive_sample(v: ExteriorValue, J_value, rng=None, m: int = 10_000,
                       tol: float = 1e-12, seed: int = DEFAULT_SEED) -> PositivityResult:
    """Sampled test of phi(xi_1, J xi_1, ..., xi_p, J xi_p) >= -tol."""
    J_value = np.asarray(J_value, dtype=float)
    proj = projector_10(J_value)
    k = v.degree
    if k is None:
        return PositivityResult(True, 0.0, None, 0, seed)
    if k % 2:
        raise WrongBidegree(f"degree {k} is odd")
    p = k // 2
    bideg = bidegree_of(v, proj)
    if bideg != (p, p):
        raise WrongBidegree(f"expected bidegree ({p},{p}), got {bideg}")
    dim = 2 * v.n
    if rng is None:
        rng = np.random.default_rng(seed)
    # coordinate directions first, then seeded random tuples
    basis = [tuple(np.eye(dim)[list(c)]) for c in itertools.combinations(range(dim), p)]
    basis = [b for b in basis if len(b) == p][: m]
    rand = rng.standard_normal((max(m - len(basis), 0), p, dim))
    best, witness = math.inf, None
    batches = [np.array(basis)] if basis else []
    if len(rand):
        batches.append(rand)
    for xis in batches:
        vecs = []
        for j in range(p):
            xi = xis[:, j, :]
            vecs.extend([xi, xi @ J_value.T])
        vals = np.real(np.broadcast_to(v(*vecs), (len(xis),)))
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, witness = float(vals[i]), tuple(xis[i])
        if best < -tol:
            break
    return PositivityResult(best >= -tol, best, witness if best < -tol else None,
                            m, seed)
