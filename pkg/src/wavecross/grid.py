"""Uniform periodic tensor grids shared by evaluation and the reference solver."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Periodic box [lower, upper)^d sampled with ``n`` points per axis."""
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    n: Tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        up = tuple(float(v) for v in np.atleast_1d(self.upper))
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        if not (len(lo) == len(up) == len(n)):
            raise ValueError("grid bounds and sizes must have equal length")
        for a, b, m in zip(lo, up, n):
            if b <= a:
                raise ValueError("upper bound must exceed lower bound")
            if m < 2 or m & (m - 1):
                raise ValueError("points per axis must be a power of two")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "n", n)

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.n

    @property
    def dx(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / np.array(self.n)

    @property
    def cell(self) -> float:
        return float(np.prod(self.dx))

    @property
    def axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(lo + h * np.arange(m) for lo, h, m in zip(self.lower, self.dx, self.n))

    @property
    def k_axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(2 * np.pi * np.fft.fftfreq(m, h) for m, h in zip(self.n, self.dx))

    def mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def k_mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.k_axes, indexing="ij"))

    def to_json(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "n": list(self.n)}

    @classmethod
    def from_json(cls, data: dict) -> "Grid":
        return cls(tuple(data["lower"]), tuple(data["upper"]), tuple(data["n"]))


def auto_grid(q_min: Sequence[float], q_max: Sequence[float], p_max: Sequence[float], eps: float,
              width: float = 1.0, margin: float = 10.0, min_points: int = 64) -> Grid:
    """Box covering [q_min, q_max] plus ``margin`` packet widths, resolving p_max/eps.

    ``width`` is the unit-scale packet width; the physical width is
    sqrt(eps) * width.
    """
    q_min = np.atleast_1d(np.asarray(q_min, float))
    q_max = np.atleast_1d(np.asarray(q_max, float))
    p_max = np.atleast_1d(np.asarray(p_max, float))
    w = np.sqrt(eps) * width
    lo = q_min - margin * w
    up = q_max + margin * w
    n = []
    for j in range(len(lo)):
        length = up[j] - lo[j]
        # Nyquist for the carrier plus spread, and 8 points per width
        kmax = abs(p_max[j]) / eps + 12.0 / w
        need = max(min_points, length * kmax / np.pi * 1.25, 8 * length / w)
        n.append(int(2 ** np.ceil(np.log2(need))))
    return Grid(tuple(lo), tuple(up), tuple(n))
