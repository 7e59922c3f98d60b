"""Inverse scattering through the Beals-Coifman integral equations.

For each sample ``x`` the pair ``(mu11, mu12)`` on the spectral grid solves

    mu11 = 1 + C_-( mu12 w_plus ),    w_plus  =  exp(2 i lam x) r
    mu12 =     C_+( mu11 w_minus ),   w_minus = -exp(-2 i lam x) conj(r)

with ``C_+-`` the torus Cauchy projections, and the potential is read off as

    q(x) = -(1/pi) int conj(r) exp(-2 i x lam) mu11 dlam.

The equations are complex-linear, batched over ``x``.  Small data use
fixed-point iteration (a contraction when ``sup|r| < 1``); otherwise GMRES.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .grids import Field1D, Grid1D
from .spectral import CauchyPair
from .zs_direct import ReflectionCoefficient

log = logging.getLogger(__name__)

FIXED_POINT_MAX_R = 0.8


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class BCWeights:
    """Jump weights for a batch of ``x`` samples (rows) on the spectral grid."""

    r: ReflectionCoefficient
    x: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        return self.r.lam

    def phase(self) -> np.ndarray:
        return np.exp(2j * self.x[:, None] * self.lam[None, :])

    def w_plus(self) -> np.ndarray:
        return self.phase() * self.r.r[None, :]

    def w_minus(self) -> np.ndarray:
        return -np.conj(self.phase()) * np.conj(self.r.r)[None, :]


@dataclass
class BCSolution:
    weights: BCWeights
    mu11: np.ndarray = field(repr=False)
    mu12: np.ndarray = field(repr=False)
    residual: np.ndarray
    iterations: np.ndarray
    path: str
    contraction: float
    residual_log: list = field(default_factory=list, repr=False)

    @property
    def mu21(self) -> np.ndarray:
        return np.conj(self.mu12)

    @property
    def mu22(self) -> np.ndarray:
        return np.conj(self.mu11)


def _apply(pair: CauchyPair, wp, wm, m11, m12):
    """Left-hand side ``(I - K)`` of the system on ``(mu11, mu12)``."""
    return m11 - pair.cminus(wp * m12), m12 - pair.cplus(wm * m11)


def _fixed_point(pair, wp, wm, tol, maxiter):
    m11 = np.ones(wp.shape, dtype=complex)
    m12 = np.zeros(wp.shape, dtype=complex)
    steps = []
    it = np.zeros(wp.shape[0], dtype=int)
    active = np.ones(wp.shape[0], dtype=bool)
    for k in range(maxiter):
        n11 = 1.0 + pair.cminus(wp * m12)
        n12 = pair.cplus(wm * n11)
        d = np.sqrt(np.mean(np.abs(n11 - m11) ** 2 + np.abs(n12 - m12) ** 2, axis=1))
        m11, m12 = n11, n12
        it[active] = k + 1
        steps.append(float(d.max()))
        active = d > tol * 0.1
        if not active.any():
            break
    else:
        raise ConvergenceError(f"fixed point stalled at step size {steps[-1]:.2e}")
    return m11, m12, it, steps


def _contraction_from(steps):
    s = np.asarray([v for v in steps if v > 1e-14])
    if s.size < 2:
        return 0.0
    return float(np.exp(np.mean(np.diff(np.log(s)))))


def _gmres(pair, wp, wm, tol, maxiter):
    nx, nl = wp.shape
    m11 = np.empty(wp.shape, dtype=complex)
    m12 = np.empty(wp.shape, dtype=complex)
    it = np.zeros(nx, dtype=int)
    ratios = []
    rhs = np.concatenate([np.ones(nl, dtype=complex), np.zeros(nl, dtype=complex)])
    for i in range(nx):
        a, b = wp[i], wm[i]

        def mv(v, a=a, b=b):
            u11, u12 = _apply(pair, a, b, v[:nl], v[nl:])
            return np.concatenate([u11, u12])

        op = LinearOperator((2 * nl, 2 * nl), matvec=mv, dtype=complex)
        hist = []
        sol, info = gmres(
            op, rhs, rtol=tol, atol=0.0, restart=200, maxiter=maxiter,
            callback=lambda rk: hist.append(float(rk)), callback_type="pr_norm",
        )
        if info != 0:
            raise ConvergenceError(f"GMRES did not converge (info {info})", i)
        m11[i], m12[i] = sol[:nl], sol[nl:]
        it[i] = len(hist)
        if len(hist) >= 2:
            ratios.append(_contraction_from(hist))
    return m11, m12, it, (float(np.max(ratios)) if ratios else 0.0)


def bc_solve(
    r: ReflectionCoefficient,
    x,
    tol: float = 1e-10,
    method: str = "auto",
    maxiter: int = 200,
    zero_mode: str = "split",
) -> BCSolution:
    """Solve the Beals-Coifman system at every ``x`` sample."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = BCWeights(r, x)
    wp, wm = w.w_plus(), w.w_minus()
    pair = CauchyPair(r.lambda_grid.n, zero_mode)
    if r.sup_norm == 0.0:
        one = np.ones(wp.shape, dtype=complex)
        zero = np.zeros(wp.shape, dtype=complex)
        return BCSolution(w, one, zero, np.zeros(x.size), np.zeros(x.size, dtype=int), "fixed", 0.0)
    if method == "auto":
        method = "fixed" if r.sup_norm <= FIXED_POINT_MAX_R else "gmres"
    try:
        if method == "fixed":
            m11, m12, it, steps = _fixed_point(pair, wp, wm, tol, maxiter)
            contraction = _contraction_from(steps)
        elif method == "gmres":
            m11, m12, it, contraction = _gmres(pair, wp, wm, tol, maxiter)
            steps = []
        else:
            raise ValueError(f"unknown method {method!r}")
    except ConvergenceError as err:
        where = x[err.args[1]] if len(err.args) > 1 else x
        raise ConvergenceError(f"{err.args[0]} at x = {where}") from None
    l11, l12 = _apply(pair, wp, wm, m11, m12)
    res = np.sqrt(np.sum(np.abs(l11 - 1.0) ** 2 + np.abs(l12) ** 2, axis=1) / r.lambda_grid.n)
    log.debug("bc_solve path=%s max residual %.2e", method, res.max())
    return BCSolution(w, m11, m12, res, it, method, contraction, steps)


def reconstruct_q(sol: BCSolution) -> np.ndarray:
    """``q(x) = -(1/pi) int conj(r) exp(-2 i x lam) mu11 dlam`` on the batch."""
    w = sol.weights
    h = w.r.lambda_grid.h
    return (h / np.pi) * np.sum(w.w_minus() * sol.mu11, axis=1)


@dataclass
class InverseResult:
    q: Field1D
    residual: np.ndarray
    iterations: np.ndarray
    path: str
    contraction: float


def inverse_scattering(
    r: ReflectionCoefficient,
    x_grid: Grid1D | None = None,
    tol: float = 1e-10,
    method: str = "auto",
    batch: int = 256,
) -> InverseResult:
    """Potential on every node of ``x_grid`` (default: the dual of the spectral grid)."""
    if x_grid is None:
        x_grid = r.lambda_grid.dual()
    x = x_grid.nodes
    q = np.empty(x.size, dtype=complex)
    res = np.empty(x.size)
    its = np.empty(x.size, dtype=int)
    contraction, path = 0.0, method
    for start in range(0, x.size, batch):
        sl = slice(start, start + batch)
        sol = bc_solve(r, x[sl], tol=tol, method=method)
        q[sl] = reconstruct_q(sol)
        res[sl], its[sl] = sol.residual, sol.iterations
        contraction = max(contraction, sol.contraction)
        path = sol.path
    return InverseResult(Field1D(x_grid, q), res, its, path, contraction)


def a_from_r(r: ReflectionCoefficient, z) -> np.ndarray:
    """``G(z) = exp( (1/2 pi i) int log(1-|r|^2) / (s - z) ds )``.

    For ``Im z < 0`` this is the transition coefficient ``a(z)``.  Points
    closer to the axis than one grid spacing are rejected: the trapezoid sum
    no longer resolves the Cauchy kernel there.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    s, h = r.lam, r.lambda_grid.h
    if np.any(np.abs(z.imag) < h):
        raise ValueError(f"|Im z| must be at least the grid spacing {h:.3g}")
    dens = np.log1p(-np.abs(r.r) ** 2)
    integral = h * np.sum(dens[None, :] / (s[None, :] - z[:, None]), axis=1)
    return np.exp(integral / (2j * np.pi))
