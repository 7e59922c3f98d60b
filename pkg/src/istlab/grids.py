"""Periodic sampling grids and the complex fields that live on them.

Both grids are tori: ``[-L, L)`` per axis sampled at ``x_j = -L + j h``.  The
spectral parameter of either scattering problem enters through phases
``exp(2 i x lambda)`` (1D) or ``e_k(z) = exp(2 i Re(k z))`` (2D), so the dual
lattice used throughout has spacing ``pi / (2 L)``; with that choice the
dual of the dual is the original grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on ``[-half_width, half_width)``."""

    n: int
    half_width: float

    def __post_init__(self):
        if self.n < 8 or not _is_pow2(self.n):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not (self.half_width > 0 and np.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n)

    @property
    def dual_spacing(self) -> float:
        return np.pi / (2.0 * self.half_width)

    def dual(self) -> "Grid1D":
        """Spectral grid on which ``exp(2 i x lambda)`` is grid-periodic."""
        return Grid1D(self.n, self.n * np.pi / (4.0 * self.half_width))

    @property
    def xi(self) -> np.ndarray:
        """Angular DFT frequencies in numpy FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)


@dataclass(frozen=True)
class Grid2D:
    """Product torus; arrays are indexed ``[i1, i2]`` with ``i1`` along x1."""

    n1: int
    n2: int
    half_width1: float
    half_width2: float

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if n < 8 or not _is_pow2(n):
                raise ValueError(f"point counts must be powers of two >= 8, got {n}")
        for L in (self.half_width1, self.half_width2):
            if not (L > 0 and np.isfinite(L)):
                raise ValueError(f"half widths must be positive, got {L}")

    @classmethod
    def square(cls, n: int, half_width: float) -> "Grid2D":
        return cls(n, n, half_width, half_width)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def h1(self) -> float:
        return 2.0 * self.half_width1 / self.n1

    @property
    def h2(self) -> float:
        return 2.0 * self.half_width2 / self.n2

    @property
    def cell_area(self) -> float:
        return self.h1 * self.h2

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x1 = -self.half_width1 + self.h1 * np.arange(self.n1)
        x2 = -self.half_width2 + self.h2 * np.arange(self.n2)
        return x1, x2

    @property
    def z(self) -> np.ndarray:
        x1, x2 = self.axes
        return x1[:, None] + 1j * x2[None, :]

    @property
    def dual_spacing(self) -> tuple[float, float]:
        return (np.pi / (2.0 * self.half_width1), np.pi / (2.0 * self.half_width2))

    def dual(self) -> "Grid2D":
        return Grid2D(
            self.n1,
            self.n2,
            self.n1 * np.pi / (4.0 * self.half_width1),
            self.n2 * np.pi / (4.0 * self.half_width2),
        )

    @property
    def xi(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular frequencies broadcastable to ``shape``."""
        xi1 = 2.0 * np.pi * np.fft.fftfreq(self.n1, d=self.h1)
        xi2 = 2.0 * np.pi * np.fft.fftfreq(self.n2, d=self.h2)
        return xi1[:, None], xi2[None, :]

    def index_of(self, z: complex) -> tuple[int, int]:
        """Lattice index of node ``z``; raises if ``z`` is not a node."""
        x1, x2 = self.axes
        j1 = (z.real + self.half_width1) / self.h1
        j2 = (z.imag + self.half_width2) / self.h2
        i1, i2 = int(round(j1)), int(round(j2))
        if abs(j1 - i1) > 1e-8 or abs(j2 - i2) > 1e-8:
            raise ValueError(f"{z} is not on the lattice")
        if not (0 <= i1 < self.n1 and 0 <= i2 < self.n2):
            raise ValueError(f"{z} lies outside the lattice")
        return i1, i2


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError("field samples must be finite")


@dataclass(frozen=True)
class Field1D:
    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        _check_finite(v)
        object.__setattr__(self, "values", v)

    def norm2(self) -> float:
        return float(np.sqrt(self.grid.h) * np.linalg.norm(self.values))

    def norm1(self) -> float:
        return float(self.grid.h * np.sum(np.abs(self.values)))

    def with_values(self, values) -> "Field1D":
        return Field1D(self.grid, values)


@dataclass(frozen=True)
class Field2D:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        _check_finite(v)
        object.__setattr__(self, "values", v)

    def norm2(self) -> float:
        return float(np.sqrt(self.grid.cell_area) * np.linalg.norm(self.values))

    def norm1(self) -> float:
        return float(self.grid.cell_area * np.sum(np.abs(self.values)))

    def with_values(self, values) -> "Field2D":
        return Field2D(self.grid, values)


def zeros_like(f):
    return f.with_values(np.zeros_like(f.values))
