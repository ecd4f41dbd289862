"""Almost complex structures as matrix fields, adapted charts, Nijenhuis tensor.

A structure is a pure map ``coords -> J`` where ``coords`` is a list of the
2n real coordinates (arrays or jets) and ``J`` has shape ``batch + (2n, 2n)``.
Coordinates are ordered ``(x_1, y_1, ..., x_n, y_n)`` with ``z_j = x_j + i y_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import jet
from .algebra import BidegreeProjector, p10_matrix, projector_10
from .errors import DegenerateEigenspace, DomainViolation
from .geometry import Box


def _batch_shape(coords):
    return np.broadcast_shapes(*[np.shape(jet.base_value(c)) for c in coords])


def coords_of(x):
    """Split an array of points ``(..., d)`` into a list of coordinate arrays."""
    x = np.asarray(x, dtype=float)
    return [x[..., i] for i in range(x.shape[-1])]


@dataclass(frozen=True)
class AlmostComplexStructure:
    n: int
    matrix_field: Callable = field(repr=False)
    domain: Box = None
    smoothness: int = 3
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain is None:
            object.__setattr__(self, "domain", Box.cube(2 * self.n, 1.0))
        if self.smoothness < 3:
            raise ValueError("structures below class C^3 are not supported")

    def at(self, coords):
        """Generic evaluation on coordinate arrays or jets (no domain check)."""
        return self.matrix_field(coords)

    def __call__(self, x, check: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if check and not np.all(self.domain.contains(x, tol=1e-12)):
            raise DomainViolation(f"{self.name}: point outside validity box {self.domain}")
        return np.asarray(self.matrix_field(coords_of(x)), dtype=float)

    def projector(self, x) -> BidegreeProjector:
        return projector_10(self(x))

    def square_defect(self, x) -> float:
        J = self(x)
        return float(np.max(np.abs(J @ J + np.eye(2 * self.n))))

    def to_dict(self) -> dict:
        return {"kind": self.name, "n": self.n, **self.params, "domain": self.domain.to_dict()}


def standard_matrix(n: int) -> np.ndarray:
    block = np.array([[0.0, -1.0], [1.0, 0.0]])
    return np.kron(np.eye(n), block)


def make_standard(n: int, domain: Box | None = None) -> AlmostComplexStructure:
    if n < 1:
        raise ValueError("n must be >= 1")
    J0 = standard_matrix(n)

    def field_(coords):
        return np.broadcast_to(J0, _batch_shape(coords) + J0.shape)

    return AlmostComplexStructure(n, field_, domain or Box.cube(2 * n, 1.0), name="standard")


def make_twisted(lam: float, domain: Box | None = None) -> AlmostComplexStructure:
    """Structure on R^4 with T^{0,1} spanned by d/dzbar + lam*wbar d/dw and d/dwbar."""
    lam = float(lam)
    if abs(lam) > 1:
        raise ValueError("|lambda| must be <= 1")
    c = 1.0 if lam == 0 else min(1.0, 0.7 / abs(lam))
    if domain is None:
        domain = Box((-1.0, -1.0, -c, -c), (1.0, 1.0, c, c))
    D = np.array([1j, 1j, -1j, -1j])

    def field_(coords):
        x2, y2 = coords[2], coords[3]
        shape = _batch_shape(coords)
        zero = np.zeros(shape)
        w = x2 + 1j * y2
        lw = lam * w
        lwb = lam * jet.conj(w)
        # columns X1, X2, conj(X1), conj(X2) in the real basis (x1, y1, x2, y2)
        cols = [
            [0.5 + zero, -0.5j + zero, 0.5 * lw, 0.5j * lw],
            [zero, zero, 0.5 + zero, -0.5j + zero],
            [0.5 + zero, 0.5j + zero, 0.5 * lwb, -0.5j * lwb],
            [zero, zero, 0.5 + zero, 0.5j + zero],
        ]
        V = jet.stack([jet.stack(col, -1) for col in cols], -1)
        J = (V * D) @ jet.inv(V)
        return jet.real(J)

    return AlmostComplexStructure(2, field_, domain, name="twisted", params={"lambda": lam})


def from_config(spec: dict) -> AlmostComplexStructure:
    kind = spec.get("kind", "standard")
    domain = Box.from_dict(spec["domain"]) if "domain" in spec else None
    if kind == "standard":
        return make_standard(int(spec.get("n", 2)), domain)
    if kind == "twisted":
        return make_twisted(float(spec.get("lambda", 0.0)), domain)
    raise ValueError(f"unknown structure kind {kind!r}")


# -- derivatives of J and the Nijenhuis tensor -----------------------------------
def matrix_derivatives(J: AlmostComplexStructure, x) -> np.ndarray:
    """dJ[k] = d J / d x_k at a single point (exact jets)."""
    x = np.asarray(x, dtype=float)
    X, tag = jet.make_variables(list(x))
    M = J.at(X)
    dim = 2 * J.n
    out = np.zeros((dim, dim, dim))
    for k in range(dim):
        out[k] = np.broadcast_to(np.real(jet.part(M, tag, k)), (dim, dim))
    return out


def _bracket(A, dA, B, dB):
    """[A, B] for vector fields given values and partials dA[k] = dA/dx_k."""
    return sum(A[k] * dB[k] for k in range(len(A))) - sum(B[k] * dA[k] for k in range(len(B)))


def nijenhuis(J: AlmostComplexStructure, x, X, Y) -> np.ndarray:
    """N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y] for constant fields X, Y."""
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Jx = J(x)
    dJ = matrix_derivatives(J, x)
    JX, JY = Jx @ X, Jx @ Y
    dJX = np.array([dJ[k] @ X for k in range(len(x))])
    dJY = np.array([dJ[k] @ Y for k in range(len(x))])
    zero = np.zeros_like(dJX)
    b1 = _bracket(JX, dJX, JY, dJY)
    b2 = _bracket(JX, dJX, Y, zero)
    b3 = _bracket(X, zero, JY, dJY)
    return b1 - Jx @ b2 - Jx @ b3


def nijenhuis_norm(J: AlmostComplexStructure, x) -> float:
    dim = 2 * J.n
    E = np.eye(dim)
    return max(float(np.linalg.norm(nijenhuis(J, x, E[a], E[b])))
               for a in range(dim) for b in range(a + 1, dim))


# -- charts -------------------------------------------------------------------
@dataclass(frozen=True)
class CoordinateChart:
    """n complex coordinate functions vanishing at ``center``."""

    n: int
    center: np.ndarray
    z: Callable = field(repr=False)
    linear: np.ndarray = field(default=None, repr=False)
    safety: float = 1.0
    name: str = "chart"

    def at(self, coords):
        return self.z(coords)

    def __call__(self, x) -> np.ndarray:
        vals = self.z(coords_of(x))
        return np.stack(np.broadcast_arrays(*vals), axis=-1)

    def abs2(self, coords):
        total = 0.0
        for zj in self.z(coords):
            total = total + jet.abs2(zj)
        return total

    def differential(self, x=None) -> np.ndarray:
        """Complex (n, 2n) Jacobian of the coordinate functions."""
        x = self.center if x is None else np.asarray(x, dtype=float)
        X, tag = jet.make_variables(list(x))
        vals = self.z(X)
        return np.array([[complex(np.asarray(jet.part(v, tag, k))) for k in range(len(x))]
                         for v in vals])

    def dbar_residual(self, J: AlmostComplexStructure, x=None) -> float:
        """max_j |dbar_J z_j(x)|."""
        x = self.center if x is None else np.asarray(x, dtype=float)
        D = self.differential(x)
        P01 = np.conj(p10_matrix(J(x)))
        return float(np.max(np.abs(D @ P01.T)))

    def check(self, J: AlmostComplexStructure, tol: float = 1e-10):
        res = self.dbar_residual(J)
        if res > tol:
            raise ValueError(f"dbar_J z(center) = {res:.3e} exceeds {tol:g}")
        D = self.differential()
        R = np.vstack([D.real, D.imag])
        if abs(np.linalg.det(R)) < 1e-12:
            raise DegenerateEigenspace("chart differential is singular at the center")
        return res

    def real_jacobian(self) -> np.ndarray:
        D = self.differential() if self.linear is None else self.linear
        rows = []
        for j in range(self.n):
            rows.extend([D[j].real, D[j].imag])
        return np.array(rows)

    def real_values(self, coords):
        """(Re z_1, Im z_1, ..., Re z_n, Im z_n) as a list (arrays or jets)."""
        out = []
        for zj in self.z(coords):
            out.extend([jet.real(zj), jet.imag(zj)])
        return out

    def inverse(self, zr, tol: float = 1e-13, max_iter: int = 30) -> np.ndarray:
        """Points x with real chart values zr (shape (..., 2n)), by Newton iteration."""
        zr = np.asarray(zr, dtype=float)
        Rinv = np.linalg.inv(self.real_jacobian())
        x = self.center + zr @ Rinv.T
        dim = 2 * self.n
        for _ in range(max_iter):
            X, tag = jet.make_variables([x[..., i] for i in range(dim)])
            vals = self.real_values(X)
            F = np.stack([np.broadcast_to(jet.strip(v, tag), zr.shape[:-1]) for v in vals], -1) - zr
            if np.max(np.abs(F), initial=0.0) < tol:
                break
            Jm = np.stack([np.stack([np.broadcast_to(jet.part(v, tag, k), zr.shape[:-1])
                                     for k in range(dim)], -1) for v in vals], -2)
            x = x - np.linalg.solve(Jm, F[..., None])[..., 0]
        return x

    def real_jacobian_at(self, x) -> np.ndarray:
        """d(Re z, Im z)/dx at points x (shape (..., 2n, 2n))."""
        x = np.asarray(x, dtype=float)
        dim = 2 * self.n
        X, tag = jet.make_variables([x[..., i] for i in range(dim)])
        vals = self.real_values(X)
        return np.stack([np.stack([np.broadcast_to(jet.part(v, tag, k), x.shape[:-1])
                                   for k in range(dim)], -1) for v in vals], -2)

    def ball_box(self, r: float) -> Box:
        """A box containing the chart ball {|z| < r} (small r)."""
        R = self.real_jacobian()
        Rinv = np.linalg.inv(R)
        half = r * np.sqrt(np.sum(Rinv**2, axis=1)) * self.safety
        return Box.around(self.center, half)

    def perturb(self, coeffs) -> "CoordinateChart":
        """z'_j = z_j + sum_{a,b} coeffs[j, a, b] z_a z_b (holomorphic quadratic terms)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        base = self.z
        n = self.n

        def z(coords):
            zs = base(coords)
            out = []
            for j in range(n):
                v = zs[j]
                for a in range(n):
                    for b in range(n):
                        if coeffs[j, a, b] != 0:
                            v = v + coeffs[j, a, b] * zs[a] * zs[b]
                out.append(v)
            return out

        return CoordinateChart(n, self.center, z, self.linear, safety=1.5,
                               name=self.name + "+quadratic")

    def rotate(self, U) -> "CoordinateChart":
        """z' = U z for a complex n x n matrix U."""
        U = np.asarray(U, dtype=complex)
        base = self.z
        n = self.n

        def z(coords):
            zs = base(coords)
            return [sum(U[j, a] * zs[a] for a in range(n)) for j in range(n)]

        lin = None if self.linear is None else U @ self.linear
        return CoordinateChart(n, self.center, z, lin, self.safety, name=self.name + "+rotated")


def linear_chart(center, A, name="linear") -> CoordinateChart:
    """z_j(x) = sum_k A[j, k] (x_k - center_k)."""
    center = np.asarray(center, dtype=float)
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]

    def z(coords):
        out = []
        for j in range(n):
            v = 0.0
            for k in range(A.shape[1]):
                if A[j, k] != 0:
                    v = v + A[j, k] * (coords[k] - center[k])
            out.append(v)
        return out

    return CoordinateChart(n, center, z, A, name=name)


def adapted_chart(J: AlmostComplexStructure, center) -> CoordinateChart:
    """Linear chart whose differentials span the (1,0) space of J(center)."""
    center = np.asarray(center, dtype=float)
    P = projector_10(J(center)).P10
    A = np.array([2.0 * P[:, 2 * j] for j in range(J.n)])
    if np.linalg.matrix_rank(A, tol=1e-8) != J.n:
        raise DegenerateEigenspace("projected coordinate differentials are dependent")
    return linear_chart(center, A, name="adapted")
