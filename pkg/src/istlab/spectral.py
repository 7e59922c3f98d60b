"""Fourier-multiplier toolbox on periodic grids.

Every operator here is diagonal in the discrete Fourier basis of the torus
surrogate: the Cauchy projectors on the line, the solid Cauchy transform and
its conjugate, the Beurling transform, and the linear propagators.  The
antilinear Fourier transforms are trapezoid sums evaluated with the FFT on
the dual lattice.

Array-level helpers (``*_array``) act on the last one or two axes so that
solvers can batch many spectral parameters at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .grids import Field1D, Field2D, Grid1D, Grid2D

ZeroModePolicy = Literal["split", "plus"]


@dataclass(frozen=True)
class FourierMultiplierSpec:
    """A symbol on the discrete frequencies plus an explicit zero-mode value.

    ``symbol`` receives the angular frequencies (``xi`` for 1D, ``(xi1, xi2)``
    for 2D, broadcast to the grid shape) and may be singular at the origin;
    the origin is overwritten with ``zero_mode`` before use.
    """

    symbol: Callable
    zero_mode: complex = 0.0

    def values(self, grid) -> np.ndarray:
        if isinstance(grid, Grid1D):
            xi = grid.xi
            with np.errstate(divide="ignore", invalid="ignore"):
                m = np.asarray(self.symbol(xi), dtype=complex) * np.ones(grid.n)
            m[0] = self.zero_mode
        else:
            xi1, xi2 = grid.xi
            with np.errstate(divide="ignore", invalid="ignore"):
                m = np.asarray(self.symbol(xi1, xi2), dtype=complex) * np.ones(grid.shape)
            m[0, 0] = self.zero_mode
        if not np.all(np.isfinite(m)):
            raise ValueError("multiplier symbol is not finite away from the zero mode")
        return m

    def apply(self, f):
        m = self.values(f.grid)
        if isinstance(f, Field1D):
            return f.with_values(np.fft.ifft(m * np.fft.fft(f.values)))
        return f.with_values(np.fft.ifft2(m * np.fft.fft2(f.values)))


def cauchy_symbol(sign: str, zero_mode: ZeroModePolicy = "split") -> FourierMultiplierSpec:
    """C+ keeps positive frequencies; C- is minus the negative-frequency part."""
    if sign == "plus":
        z0 = 0.5 if zero_mode == "split" else 1.0
        return FourierMultiplierSpec(lambda xi: (xi > 0).astype(float), z0)
    if sign == "minus":
        z0 = -0.5 if zero_mode == "split" else 0.0
        return FourierMultiplierSpec(lambda xi: -(xi < 0).astype(float), z0)
    raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")


# Symbols of the plane operators.  dbar = (d1 + i d2)/2 has symbol
# i (xi1 + i xi2) / 2 and d = (d1 - i d2)/2 has symbol i (xi1 - i xi2) / 2.
def _dbar_sym(xi1, xi2):
    return 0.5j * (xi1 + 1j * xi2)


def _d_sym(xi1, xi2):
    return 0.5j * (xi1 - 1j * xi2)


SOLID_CAUCHY = FourierMultiplierSpec(lambda a, b: 1.0 / _dbar_sym(a, b), 0.0)
CONJ_SOLID_CAUCHY = FourierMultiplierSpec(lambda a, b: 1.0 / _d_sym(a, b), 0.0)
BEURLING = FourierMultiplierSpec(lambda a, b: _d_sym(a, b) / _dbar_sym(a, b), 0.0)
DBAR = FourierMultiplierSpec(_dbar_sym, 0.0)
DEE = FourierMultiplierSpec(_d_sym, 0.0)


def _require_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise ValueError("input samples must be finite")


# ---------------------------------------------------------------- line

def cauchy_project(f: Field1D, sign: str, zero_mode: ZeroModePolicy = "split") -> Field1D:
    """Discrete Cauchy projector ``C+`` (``sign='plus'``) or ``C-``."""
    _require_finite(f.values)
    return cauchy_symbol(sign, zero_mode).apply(f)


class CauchyPair:
    """Precomputed ``C+``/``C-`` multipliers acting on the last axis."""

    def __init__(self, n: int, zero_mode: ZeroModePolicy = "split"):
        xi = np.fft.fftfreq(n)
        self.plus = (xi > 0).astype(float)
        self.minus = -(xi < 0).astype(float)
        if zero_mode == "split":
            self.plus[0], self.minus[0] = 0.5, -0.5
        else:
            self.plus[0], self.minus[0] = 1.0, 0.0

    def cplus(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self.plus * np.fft.fft(f, axis=-1), axis=-1)

    def cminus(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self.minus * np.fft.fft(f, axis=-1), axis=-1)


# ---------------------------------------------------------------- plane

def solid_cauchy(f: Field2D, conjugate: bool = False) -> Field2D:
    """``dbar^{-1} f`` (or ``d^{-1} f`` when ``conjugate``); mean mode set to zero."""
    _require_finite(f.values)
    return (CONJ_SOLID_CAUCHY if conjugate else SOLID_CAUCHY).apply(f)


def beurling(f: Field2D) -> Field2D:
    """Beurling transform: the multiplier turning ``dbar g`` into ``d g``."""
    _require_finite(f.values)
    return BEURLING.apply(f)


def conjugate_beurling(f: Field2D) -> Field2D:
    return f.with_values(np.conj(beurling(f.with_values(np.conj(f.values))).values))


def dbar(f: Field2D) -> Field2D:
    return DBAR.apply(f)


def dee(f: Field2D) -> Field2D:
    return DEE.apply(f)


class PlaneOps:
    """Cached multipliers for batched plane transforms on the last two axes."""

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self.inv_dbar = SOLID_CAUCHY.values(grid)
        self.beurling = BEURLING.values(grid)

    def solid_cauchy(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(self.inv_dbar * np.fft.fft2(f, axes=(-2, -1)), axes=(-2, -1))

    def beurling_apply(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(self.beurling * np.fft.fft2(f, axes=(-2, -1)), axes=(-2, -1))


# ---------------------------------------------------------------- antilinear Fourier

def _phase_sum(g: np.ndarray, x0: float, h: float, k: np.ndarray, sign: int, axis: int) -> np.ndarray:
    """``sum_j exp(sign * 2i x_j k_m) g_j`` for the dual lattice ``k`` along ``axis``."""
    n = g.shape[axis]
    shape = [1] * g.ndim
    shape[axis] = n
    j = np.arange(n).reshape(shape)
    km = k.reshape(shape)
    pre = np.exp(sign * 2j * j * h * k[0])
    if sign < 0:
        s = np.fft.fft(g * pre, axis=axis)
    else:
        s = n * np.fft.ifft(g * pre, axis=axis)
    return np.exp(sign * 2j * x0 * km) * s


def antilinear_fourier(f, dims: int | None = None):
    """Antilinear Fourier transform onto the dual lattice.

    1D: ``-int exp(-2 i x lam) conj(f(x)) dx``; 2D: ``-(i/pi) int e_k(z) conj(f(z)) dz``
    with ``e_k(z) = exp(2 i Re(k z))``.  Both are trapezoid sums, so in 2D the
    map is an exact involution on the lattice pair.
    """
    if dims is None:
        dims = 1 if isinstance(f, Field1D) else 2
    if dims == 1:
        if not isinstance(f, Field1D):
            raise ValueError("dims=1 requires a Field1D")
        g = f.grid
        out = g.dual()
        s = _phase_sum(np.conj(f.values), g.nodes[0], g.h, out.nodes, -1, 0)
        return Field1D(out, -g.h * s)
    if dims == 2:
        if not isinstance(f, Field2D):
            raise ValueError("dims=2 requires a Field2D")
        return Field2D(f.grid.dual(), antilinear_fourier_array(np.conj(f.values), f.grid))
    raise ValueError(f"dims must be 1 or 2, got {dims}")


def antilinear_fourier_array(conj_f: np.ndarray, grid: Grid2D) -> np.ndarray:
    """2D kernel sum on already-conjugated samples (last two axes)."""
    out = grid.dual()
    x1, x2 = grid.axes
    k1, k2 = out.axes
    s = _phase_sum(conj_f, x1[0], grid.h1, k1, +1, conj_f.ndim - 2)
    s = _phase_sum(s, x2[0], grid.h2, k2, -1, conj_f.ndim - 1)
    return (-1j / np.pi) * grid.cell_area * s


def ek(grid: Grid2D, k: complex) -> np.ndarray:
    """``e_k(z) = exp(i (k z + conj(k z)))`` on the grid nodes."""
    return np.exp(2j * (k * grid.z).real)


# ---------------------------------------------------------------- propagators

def linear_propagator(f: Field1D, t: float) -> Field1D:
    """``exp(i t Laplacian)``: the multiplier ``exp(-i t xi^2)``."""
    return f.with_values(np.fft.ifft(np.exp(-1j * t * f.grid.xi**2) * np.fft.fft(f.values)))


def dsii_linear_symbol(grid: Grid2D, t: float) -> np.ndarray:
    xi1, xi2 = grid.xi
    return np.exp(-1j * t * (xi1**2 - xi2**2))


# ---------------------------------------------------------------- maximal function

def default_radii(grid) -> list[float]:
    if isinstance(grid, Grid1D):
        h, L = grid.h, grid.half_width
    else:
        h, L = max(grid.h1, grid.h2), min(grid.half_width1, grid.half_width2)
    # dyadic from one cell up to the torus diameter: far from the support only
    # the large balls see any mass, which is what gives M f its 1/|z|^2 tail
    reach = L if isinstance(grid, Grid1D) else np.sqrt(2.0) * L
    radii, r = [], h
    while True:
        radii.append(r)
        if r >= reach:
            return radii
        r *= 2


def _disc_kernel(grid, r: float) -> np.ndarray:
    """Normalised node-count stencil of the ball of radius ``r`` (periodic, FFT order)."""
    if isinstance(grid, Grid1D):
        d = grid.h * np.fft.fftfreq(grid.n, d=1.0 / grid.n)
        mask = np.abs(d) <= r + 1e-12
    else:
        d1 = grid.h1 * np.fft.fftfreq(grid.n1, d=1.0 / grid.n1)
        d2 = grid.h2 * np.fft.fftfreq(grid.n2, d=1.0 / grid.n2)
        mask = d1[:, None] ** 2 + d2[None, :] ** 2 <= r * r + 1e-12
    return mask / mask.sum()


def maximal_function(f, radii: list[float] | None = None) -> np.ndarray:
    """Sup over ``radii`` of centred ball averages of ``|f|`` (real array)."""
    if radii is None:
        radii = default_radii(f.grid)
    radii = list(radii)
    if not radii:
        raise ValueError("radii must be nonempty")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    a = np.abs(f.values)
    fa = np.fft.fftn(a)
    best = np.zeros(a.shape)
    for r in radii:
        ker = _disc_kernel(f.grid, r)
        avg = np.fft.ifftn(fa * np.fft.fftn(ker)).real
        np.maximum(best, avg, out=best)
    # FFT convolution of a nonnegative field can leave tiny negative noise
    return np.maximum(best, 0.0)


def dbar_estimate_ratio(f: Field2D, ks, radii=None) -> float:
    """Largest ``|dbar^{-1}(e_k f)(x)| / sqrt(Mf(x) * M fhat(k))`` over nodes and ``ks``.

    ``fhat(k) = (1/pi) int e_k f`` is evaluated on the dual lattice.  Nodes where
    the denominator underflows are skipped.
    """
    Mf = maximal_function(f, radii)
    # the kernel sum on f itself is -(i/pi) int e_k f
    fhat = Field2D(f.grid.dual(), 1j * antilinear_fourier_array(f.values, f.grid))
    Mfhat = maximal_function(fhat, radii)
    dual = f.grid.dual()
    ratio = 0.0
    for k in ks:
        idx = dual.index_of(k)
        u = np.abs(solid_cauchy(f.with_values(ek(f.grid, k) * f.values)).values)
        den = np.sqrt(Mf * Mfhat[idx])
        ok = den > 1e-14 * den.max()
        ratio = max(ratio, float(np.max(u[ok] / den[ok])))
    return ratio
