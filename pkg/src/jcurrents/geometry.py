"""Axis-aligned boxes used for domains, supports and quadrature cells."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same length")

    @classmethod
    def around(cls, center, halfwidth):
        c = np.asarray(center, dtype=float)
        h = np.broadcast_to(np.asarray(halfwidth, dtype=float), c.shape)
        return cls(tuple(c - h), tuple(c + h))

    @classmethod
    def cube(cls, dim, half=1.0):
        return cls((-half,) * dim, (half,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lo) + np.array(self.hi))

    @property
    def widths(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.maximum(self.widths, 0.0)))

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.widths <= 0))

    def contains(self, x, tol: float = 0.0):
        x = np.asarray(x, dtype=float)
        return np.all((x >= np.array(self.lo) - tol) & (x <= np.array(self.hi) + tol), axis=-1)

    def contains_box(self, other: "Box", tol: float = 1e-12) -> bool:
        return bool(np.all(np.array(other.lo) >= np.array(self.lo) - tol)
                    and np.all(np.array(other.hi) <= np.array(self.hi) + tol))

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(hi <= lo):
            return None
        return Box(tuple(lo), tuple(hi))

    def shrink(self, factor: float) -> "Box":
        return Box.around(self.center, 0.5 * self.widths * factor)

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, d) -> "Box":
        return cls(tuple(d["lo"]), tuple(d["hi"]))
