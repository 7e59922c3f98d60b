"""Scattering transform for defocusing Davey-Stewartson II.

For ``k`` on the dual lattice the complex geometric optics solutions reduce
to two scalar problems (``sigma = +1, -1``)

    dbar m_sigma = sigma * e_{-k} q conj(m_sigma),     m_sigma -> 1,

i.e. ``w = m_sigma - 1`` solves ``w - T w = sigma dbar^{-1}(e_{-k} q)`` with the
real-linear ``T w = sigma dbar^{-1}(e_{-k} q conj(w))``.  Then

    m1 = (m_+ + m_-)/2,   m2 = e_{-k} conj(m_+ - m_-)/2,
    s(k) = -(i/pi) int e_k(z) conj(q(z)) m1(z, k) dA(z).

The map is its own inverse, so the inverse transform is the same routine run
on the k-lattice with ``z`` as the spectral parameter.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .grids import Field2D, Grid2D
from .spectral import SOLID_CAUCHY, antilinear_fourier_array, default_radii, maximal_function

log = logging.getLogger(__name__)

FIXED_POINT_MAX_RATIO = 0.8


class CGOConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Potential2D:
    field: Field2D

    @property
    def grid(self) -> Grid2D:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def norm1(self) -> float:
        return self.field.norm1()

    def norm2(self) -> float:
        return self.field.norm2()

    def h1_norm(self) -> float:
        """Spectral H^1 surrogate ``(int (1 + |xi|^2) |qhat|^2)^(1/2)``."""
        xi1, xi2 = self.grid.xi
        fq = np.fft.fft2(self.values)
        w = 1.0 + xi1**2 + xi2**2
        return float(np.sqrt(self.grid.cell_area * np.sum(w * np.abs(fq) ** 2) / fq.size))

    @classmethod
    def gaussian(cls, grid: Grid2D, amplitude: float, width: float = 1.0) -> "Potential2D":
        z = grid.z
        return cls(Field2D(grid, amplitude * np.exp(-np.abs(z) ** 2 / width**2)))


@dataclass
class CGOState:
    k: complex
    m_plus: np.ndarray = field(repr=False)
    m_minus: np.ndarray = field(repr=False)
    ek: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    path: str

    @property
    def m1(self) -> np.ndarray:
        return 0.5 * (self.m_plus + self.m_minus)

    @property
    def m2(self) -> np.ndarray:
        return np.conj(self.ek) * np.conj(self.m_plus - self.m_minus) * 0.5


@dataclass
class KLog:
    """Per-k convergence record (one row per k and sign)."""

    k: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    path: np.ndarray


@dataclass
class DSIIScatteringData:
    k_grid: Grid2D
    s: np.ndarray = field(repr=False)
    block: tuple = (slice(None), slice(None))
    klog: KLog | None = field(default=None, repr=False)
    contraction: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.s, dtype=complex)
        if s.shape != self.k_grid.shape:
            raise ValueError("scattering data must cover the whole k-lattice (zero outside the block)")
        if not np.all(np.isfinite(s)):
            raise ValueError("scattering data must be finite")
        self.s = s

    def norm2(self) -> float:
        return float(np.sqrt(self.k_grid.cell_area) * np.linalg.norm(self.s))

    def as_potential(self) -> Potential2D:
        return Potential2D(Field2D(self.k_grid, self.s))


def centred_block(n: int, size: int) -> slice:
    if size > n or size <= 0:
        raise ValueError(f"block size {size} does not fit in {n}")
    start = n // 2 - size // 2
    return slice(start, start + size)


class _Solver:
    """Batched CGO solves for one potential; ``k`` rows along axis 0."""

    def __init__(self, q: Potential2D, tol: float, maxiter: int):
        self.grid = q.grid
        self.q = q.values
        self.tol = tol
        self.maxiter = maxiter
        self.inv = SOLID_CAUCHY.values(self.grid)
        x1, x2 = self.grid.axes
        self.x1, self.x2 = x1, x2

    def phases(self, ks: np.ndarray) -> np.ndarray:
        """``e_k(z) = exp(2 i (k1 x1 - k2 x2))`` for each k."""
        a = np.exp(2j * ks.real[:, None] * self.x1[None, :])
        b = np.exp(-2j * ks.imag[:, None] * self.x2[None, :])
        return a[:, :, None] * b[:, None, :]

    def dbar_inv(self, f: np.ndarray, scratch: bool = False) -> np.ndarray:
        """Solid Cauchy transform on the last two axes; ``scratch`` lets it reuse ``f``."""
        fh = sfft.fft2(f, axes=(-2, -1), overwrite_x=scratch)
        fh *= self.inv
        return sfft.ifft2(fh, axes=(-2, -1), overwrite_x=True)

    def solve(self, ks: np.ndarray, method: str = "auto"):
        ek = self.phases(ks)
        coef = np.conj(ek) * self.q  # e_{-k} q
        out = {}
        for sigma in (1, -1):
            c = sigma * coef
            w, it, res, path, ratio = self._fixed(c) if method in ("auto", "fixed") else (None,) * 5
            if w is None or (method == "auto" and ratio > FIXED_POINT_MAX_RATIO) or res.max() > self.tol:
                if method == "fixed":
                    raise CGOConvergenceError(f"fixed point failed (ratio {ratio:.3f}) at k = {ks}")
                w, it, res = self._krylov(c)
                path = np.array(["krylov"] * len(ks))
                ratio = ratio if ratio is not None else np.nan
            out[sigma] = (w, it, res, path, ratio)
        return ek, out

    def _residual(self, c, w):
        lhs = w - self.dbar_inv(c * np.conj(w), scratch=True)
        rhs = self.dbar_inv(c)
        num = np.sqrt(np.sum(np.abs(lhs - rhs) ** 2, axis=(-2, -1)))
        den = np.sqrt(np.sum(np.abs(rhs) ** 2, axis=(-2, -1)))
        return num / np.where(den > 0, den, 1.0)

    def _fixed(self, c):
        rhs = self.dbar_inv(c)
        w = rhs.copy()
        steps = []
        it = np.ones(c.shape[0], dtype=int)
        for k in range(1, self.maxiter):
            new = rhs + self.dbar_inv(c * np.conj(w), scratch=True)
            d = np.sqrt(np.sum(np.abs(new - w) ** 2, axis=(-2, -1)))
            scale = np.sqrt(np.sum(np.abs(new) ** 2, axis=(-2, -1)))
            rel = d / np.where(scale > 0, scale, 1.0)
            w = new
            steps.append(rel)
            active = rel > self.tol * 0.1
            it[active] = k + 1
            if not active.any():
                break
            if len(steps) >= 4:
                ratio = np.max(steps[-1] / np.maximum(steps[-2], 1e-300))
                if ratio > 0.95:
                    break
        ratio = _ratio(steps)
        res = self._residual(c, w)
        return w, it, res, np.array(["fixed"] * c.shape[0]), ratio

    def _krylov(self, c):
        nb = c.shape[0]
        shape = self.grid.shape
        n = shape[0] * shape[1]
        ws = np.empty(c.shape, dtype=complex)
        its = np.zeros(nb, dtype=int)
        for i in range(nb):
            ci = c[i]
            rhs_c = self.dbar_inv(ci)

            def mv(v, ci=ci):
                w = (v[:n] + 1j * v[n:]).reshape(shape)
                out = w - self.dbar_inv(ci * np.conj(w))
                return np.concatenate([out.real.ravel(), out.imag.ravel()])

            op = LinearOperator((2 * n, 2 * n), matvec=mv, dtype=float)
            rhs = np.concatenate([rhs_c.real.ravel(), rhs_c.imag.ravel()])
            hist = []
            sol, info = gmres(op, rhs, rtol=self.tol, atol=0.0, restart=100, maxiter=self.maxiter,
                              callback=lambda rk: hist.append(rk), callback_type="pr_norm")
            if info != 0:
                raise CGOConvergenceError(f"Krylov solve failed at k = {c.shape} index {i}")
            ws[i] = (sol[:n] + 1j * sol[n:]).reshape(shape)
            its[i] = len(hist)
        return ws, its, self._residual(c, ws)


def _ratio(steps) -> float:
    if len(steps) < 3:
        return 0.0
    s = np.array(steps[1:])  # first step is the size of the first correction
    s = np.maximum(s, 1e-300)
    r = s[1:] / s[:-1]
    good = s[:-1] > 1e-13
    return float(np.max(r[good])) if good.any() else 0.0


def cgo_solve(q: Potential2D, k: complex, tol: float = 1e-10, maxiter: int = 200, method: str = "auto") -> CGOState:
    """CGO solutions ``m_+, m_-`` at one lattice point ``k``."""
    dual = q.grid.dual()
    dual.index_of(complex(k))  # lattice check
    solver = _Solver(q, tol, maxiter)
    ek, out = solver.solve(np.array([k], dtype=complex), method)
    wp, itp, rp, pp, _ = out[1]
    wm, itm, rm, pm, _ = out[-1]
    return CGOState(
        complex(k), 1.0 + wp[0], 1.0 + wm[0], ek[0],
        float(max(rp[0], rm[0])), int(max(itp[0], itm[0])), str(pp[0]) if pp[0] == pm[0] else "krylov",
    )


def _batch_task(args):
    q, ks, tol, maxiter, method = args
    solver = _Solver(q, tol, maxiter)
    ek, out = solver.solve(ks, method)
    wsum = 0.5 * (out[1][0] + out[-1][0])
    qbar = np.conj(q.values)
    corr = -(1j / np.pi) * q.grid.cell_area * np.sum(ek * qbar * wsum, axis=(-2, -1))
    rows = [(ks, *out[sigma][1:4]) for sigma in (1, -1)]
    ratios = [out[sigma][4] for sigma in (1, -1)]
    ratio = max(float(r) if r is not None and np.isfinite(r) else 0.0 for r in ratios)
    return corr, rows, ratio


def scattering_transform(
    q: Potential2D,
    k_block: int | None = 48,
    tol: float = 1e-10,
    maxiter: int = 200,
    batch: int = 32,
    method: str = "auto",
    workers: int = 1,
) -> DSIIScatteringData:
    """``s(k)`` on a centred ``k_block``-square of the dual lattice (zero elsewhere).

    Computed as ``F_a q`` plus the correction ``-(i/pi) int e_k conj(q) (m1 - 1)``.
    The k-values are split into fixed batches, so the result does not depend
    on ``workers``.
    """
    grid = q.grid
    kg = grid.dual()
    b1 = centred_block(kg.n1, k_block or kg.n1)
    b2 = centred_block(kg.n2, k_block or kg.n2)
    k1, k2 = kg.axes
    kk = (k1[b1][:, None] + 1j * k2[b2][None, :]).ravel()
    tasks = [(q, kk[i : i + batch], tol, maxiter, method) for i in range(0, kk.size, batch)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_batch_task, tasks))
    else:
        results = [_batch_task(t) for t in tasks]
    corr = np.concatenate([r[0] for r in results])
    rows = [row for r in results for row in r[1]]
    worst_ratio = max(r[2] for r in results)
    lin = antilinear_fourier_array(np.conj(q.values), grid)
    s = np.zeros(kg.shape, dtype=complex)
    block = (b1, b2)
    s[block] = lin[block] + corr.reshape(b1.stop - b1.start, b2.stop - b2.start)
    klog = KLog(*(np.concatenate([r[i] for r in rows]) for i in range(4)))
    log.info("scattering transform: %d k-values, worst contraction %.3f", kk.size, worst_ratio)
    return DSIIScatteringData(kg, s, block, klog, worst_ratio)


def evolve_s(s0: DSIIScatteringData, t: float) -> DSIIScatteringData:
    """Multiply by ``exp(2 i (k^2 + conj(k)^2) t) = exp(4 i (k1^2 - k2^2) t)``."""
    k1, k2 = s0.k_grid.axes
    phase = np.exp(4j * t * (k1[:, None] ** 2 - k2[None, :] ** 2))
    return DSIIScatteringData(s0.k_grid, phase * s0.s, s0.block, None, s0.contraction)


def inverse_scattering(s: DSIIScatteringData, z_block: int | None = 48, **kw) -> Potential2D:
    """Apply the transform to ``s`` on the k-lattice; the result lives on the z-lattice."""
    out = scattering_transform(s.as_potential(), k_block=z_block, **kw)
    return Potential2D(Field2D(out.k_grid, out.s))


def maximal_ratio(q: Potential2D, s: DSIIScatteringData, radii=None) -> float:
    """Largest ``|s(k)| / M(qhat)(k)`` over the computed block (qhat = F_a q)."""
    kg = s.k_grid
    qhat = Field2D(kg, antilinear_fourier_array(np.conj(q.values), q.grid))
    mq = maximal_function(qhat, radii or default_radii(kg))
    blk = s.block
    num = np.abs(s.s[blk])
    den = mq[blk]
    mask = den > 1e-12 * den.max()
    return float(np.max(num[mask] / den[mask]))
