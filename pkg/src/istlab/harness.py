"""Experiment registry, configuration, reports and the command-line front end."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import io
from .dsii_flows import dsii_splitstep, linearised_solution
from .dsii_scatter import Potential2D, evolve_s, inverse_scattering, maximal_ratio, scattering_transform
from .grids import Field1D, Field2D, Grid1D, Grid2D
from .nls_flows import EvolutionConfig, deift_zhou_profile, ist_solve, ist_values, splitstep_nls
from .rhp_inverse import bc_solve, inverse_scattering as nls_inverse
from .spectral import BEURLING, DBAR, DEE, SOLID_CAUCHY, antilinear_fourier, cauchy_project
from .zs_direct import Potential1D, direct_scattering, reflection, transition_coefficients, transition_data

log = logging.getLogger(__name__)

EXPERIMENTS = (
    "operator-suite",
    "nls-direct",
    "nls-roundtrip",
    "nls-linearization",
    "nls-evolve-compare",
    "nls-asymptotics",
    "dsii-involution",
    "dsii-evolve-compare",
    "dsii-maximal",
)

VERBS = {
    "ops-selftest": ("operator-suite",),
    "nls-direct": ("nls-direct", "nls-linearization"),
    "nls-invert": ("nls-roundtrip",),
    "nls-evolve": ("nls-evolve-compare",),
    "nls-asym": ("nls-asymptotics",),
    "dsii-scatter": ("dsii-involution", "dsii-maximal"),
    "dsii-evolve": ("dsii-evolve-compare",),
}

# defaults per experiment; a config file overrides any of these keys
DEFAULTS = {
    "operator-suite": dict(n=256, half_width=8.0, n2=64, half_width2=8.0),
    "nls-direct": dict(n=2048, half_width=16.0, amplitude=1.0),
    "nls-roundtrip": dict(n=2048, half_width=16.0, amplitude=1.0),
    "nls-linearization": dict(n=2048, half_width=16.0, amplitude=1.0, epsilons=[0.2, 0.1, 0.05]),
    "nls-evolve-compare": dict(n=2048, half_width=24.0, amplitude=1.0, t=1.0, dt=1e-3),
    "nls-asymptotics": dict(
        n=2048, half_width=16.0, amplitude=0.7, lambda_n=65536, lambda_half_width=16.0,
        times=[16.0, 32.0, 64.0, 128.0], z0_max=2.0, samples=41,
    ),
    "dsii-involution": dict(n=128, half_width=10.0, amplitude=0.5, k_block=48, z_block=48),
    "dsii-evolve-compare": dict(
        n=128, half_width=10.0, amplitude=0.4, k_block=48, z_block=96, t=0.5, dt=1e-3,
    ),
    "dsii-maximal": dict(n=64, half_width=8.0, amplitude=0.5, k_block=32, amplitudes=[0.25, 0.5, 1.0]),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    n: int = 2048
    half_width: float = 16.0
    n2: int = 64
    half_width2: float = 8.0
    potential: str = "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    t: float = 1.0
    dt: float = 1e-3
    times: tuple = (16.0, 32.0, 64.0, 128.0)
    epsilons: tuple = (0.2, 0.1, 0.05)
    amplitudes: tuple = (0.25, 0.5, 1.0)
    lambda_n: int = 65536
    lambda_half_width: float = 16.0
    z0_max: float = 2.0
    samples: int = 41
    k_block: int = 48
    z_block: int = 48
    tol: float = 1e-10
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.potential not in ("gaussian", "box", "sech"):
            raise ConfigError(f"unknown potential family {self.potential!r}")
        for name in ("n", "n2", "lambda_n", "samples", "k_block", "z_block", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        for name in ("half_width", "half_width2", "width", "t", "dt", "lambda_half_width", "z0_max", "tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if not (isinstance(self.amplitude, (int, float)) and self.amplitude >= 0):
            raise ConfigError("amplitude must be nonnegative")
        for name in ("times", "epsilons", "amplitudes"):
            v = getattr(self, name)
            if not v or any(not (isinstance(x, (int, float)) and x > 0) for x in v):
                raise ConfigError(f"{name} must be a nonempty list of positive numbers")
            object.__setattr__(self, name, tuple(float(x) for x in v))

    @classmethod
    def from_dict(cls, d: dict, experiment: str | None = None) -> "RunConfig":
        d = dict(d)
        exp = d.get("experiment", experiment)
        if exp is None:
            raise ConfigError("config must name an experiment")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        merged = dict(DEFAULTS.get(exp, {}))
        merged.update(d)
        merged["experiment"] = exp
        return cls(**merged)

    @classmethod
    def from_json(cls, text: str, experiment: str | None = None) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON: {err}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d, experiment)

    def as_dict(self) -> dict:
        """Config echo for reports; the worker count is left out since results do not depend on it."""
        d = dataclasses.asdict(self)
        d.pop("workers")
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


@dataclass
class Metric:
    name: str
    value: float
    threshold: float | None = None
    op: str = "<="  # value op threshold

    @property
    def passed(self) -> bool:
        if self.threshold is None:
            return True
        v, t = self.value, self.threshold
        return {"<=": v <= t, ">=": v >= t, "<": v < t}[self.op] if np.isfinite(v) else False


@dataclass
class Slope:
    name: str
    slope: float
    half_width: float
    low: float | None = None
    high: float | None = None

    @property
    def passed(self) -> bool:
        if self.low is None:
            return True
        return bool(self.low <= self.slope <= self.high)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    metrics: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    wall_clock: float = 0.0
    tables: dict = field(default_factory=dict, repr=False)
    fields: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics) and all(s.passed for s in self.slopes)

    def metric(self, name: str) -> Metric:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    def slope(self, name: str) -> Slope:
        for s in self.slopes:
            if s.name == name:
                return s
        raise KeyError(name)


def fit_slope(points) -> tuple[float, float]:
    """Least-squares slope of ``log(error)`` against ``log(t)`` and its standard error."""
    pts = [(float(t), float(e)) for t, e in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if any(t <= 0 or e <= 0 for t, e in pts):
        raise ValueError("slope fit needs positive values")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    if sxx == 0:
        raise ValueError("abscissae must not all coincide")
    slope = float(xm @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xm
    dof = len(pts) - 2
    se = float(np.sqrt((resid @ resid) / dof / sxx)) if dof > 0 else 0.0
    return slope, se


# ---------------------------------------------------------------- potentials

def potential_1d(cfg: RunConfig, grid: Grid1D | None = None, amplitude: float | None = None) -> Potential1D:
    grid = grid or Grid1D(cfg.n, cfg.half_width)
    a = cfg.amplitude if amplitude is None else amplitude
    x = grid.nodes
    if cfg.potential == "gaussian":
        v = a * np.exp(-(x / cfg.width) ** 2)
    elif cfg.potential == "sech":
        v = a / np.cosh(x / cfg.width)
    else:
        v = box_values(grid, a, cfg.width)
    return Potential1D(Field1D(grid, v))


def box_values(grid: Grid1D, amplitude: float, length: float) -> np.ndarray:
    """Box on whole cells centred at nodes, so its edges sit at half-nodes."""
    x = grid.nodes
    return np.where((x >= -grid.h / 4) & (x < length - grid.h / 4), amplitude, 0.0).astype(complex)


def box_oracle(grid: Grid1D, values: np.ndarray, lam: np.ndarray):
    """``(a, b)`` for a one-level box from a single matrix exponential per lambda."""
    idx = np.nonzero(values)[0]
    c = values[idx[0]]
    xa = grid.nodes[idx[0]] - grid.h / 2
    xb = grid.nodes[idx[-1]] + grid.h / 2
    a = np.empty(lam.size, dtype=complex)
    b = np.empty(lam.size, dtype=complex)
    for i, l in enumerate(lam):
        B = np.array([[-1j * l, c], [np.conj(c), 1j * l]])
        col = scipy.linalg.expm(-(xb - xa) * B) @ np.array([np.exp(-1j * l * xb), 0.0])
        a[i] = np.exp(1j * l * xa) * col[0]
        b[i] = np.exp(-1j * l * xa) * col[1]
    return a, b


def potential_2d(cfg: RunConfig, amplitude: float | None = None) -> Potential2D:
    grid = Grid2D.square(cfg.n, cfg.half_width)
    a = cfg.amplitude if amplitude is None else amplitude
    return Potential2D.gaussian(grid, a, cfg.width)


def _edge(r) -> float:
    """Largest ``|r|`` on the outer tenth of the spectral grid (tail truncation diagnostic)."""
    m = max(1, r.r.size // 20)
    return float(max(np.max(np.abs(r.r[:m])), np.max(np.abs(r.r[-m:]))))


def _rel(a, b) -> float:
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / nb) if nb > 0 else float(np.linalg.norm(a - b))


# ---------------------------------------------------------------- experiments

def _operator_suite(cfg, rep):
    g1 = Grid1D(cfg.n, cfg.half_width)
    x = g1.nodes
    rng = np.random.default_rng(20240601)
    f = Field1D(g1, rng.standard_normal(g1.n) + 1j * rng.standard_normal(g1.n))
    cp = cauchy_project(f, "plus").values
    cm = cauchy_project(f, "minus").values
    rep.metrics.append(Metric("cauchy_difference_identity", float(np.max(np.abs(cp - cm - f.values))), 1e-14))

    g2 = Grid2D.square(cfg.n2, cfg.half_width2)
    z = g2.z
    gfun = np.exp(-np.abs(z) ** 2) * (1 + 0.5 * z)
    gh = np.fft.fft2(gfun)
    dbar_g = np.fft.ifft2(DBAR.values(g2) * gh)
    d_g = np.fft.ifft2(DEE.values(g2) * gh)
    s_dbar = np.fft.ifft2(BEURLING.values(g2) * np.fft.fft2(dbar_g))
    rep.metrics.append(Metric("beurling_dbar_to_d", float(np.max(np.abs(s_dbar - d_g))), 1e-12))

    hf = np.fft.fft2(gfun)
    hf[0, 0] = 0.0
    f0 = np.fft.ifft2(hf)
    back = np.fft.ifft2(DBAR.values(g2) * np.fft.fft2(np.fft.ifft2(SOLID_CAUCHY.values(g2) * np.fft.fft2(f0))))
    rep.metrics.append(Metric("dbar_solid_cauchy_identity", float(np.max(np.abs(back - f0))), 1e-10))

    q = Field2D(g2, gfun)
    twice = antilinear_fourier(antilinear_fourier(q))
    rep.metrics.append(Metric("antilinear_fourier_involution", float(np.max(np.abs(twice.values - q.values))), 1e-10))


def _nls_direct(cfg, rep):
    grid = Grid1D(cfg.n, cfg.half_width)
    q = potential_1d(cfg, grid)
    td = transition_data(q)
    rep.metrics.append(Metric("unitarity_gaussian", td.unitarity_defect(), 1e-8))
    box = Potential1D(Field1D(grid, box_values(grid, 0.8 + 0.3j, 2.0)))
    tdb = transition_data(box, order=2)
    rep.metrics.append(Metric("unitarity_box", tdb.unitarity_defect(), 1e-8))
    lam = tdb.lam[:: max(1, grid.n // 256)]
    a, b = box_oracle(grid, box.values, lam)
    a2, b2 = transition_coefficients(box, lam, order=2)
    err = float(max(np.max(np.abs(a2 - a)), np.max(np.abs(b2 - b))))
    rep.metrics.append(Metric("box_vs_matrix_exponential", err, 1e-8))
    r = reflection(td)
    rep.metrics.append(Metric("r_at_spectral_grid_edge", _edge(r)))
    rep.tables["transition.csv"] = (io.TRANSITION_COLUMNS, list(io.transition_rows(td, r)))


def _nls_linearization(cfg, rep):
    grid = Grid1D(cfg.n, cfg.half_width)
    q = potential_1d(cfg, grid)
    fa = antilinear_fourier(q.field).values
    pts = []
    for eps in cfg.epsilons:
        r = direct_scattering(potential_1d(cfg, grid, eps * cfg.amplitude)).r
        err = float(np.max(np.abs(r / eps - fa)))
        pts.append((eps, err))
        rep.metrics.append(Metric(f"linearization_error_eps_{eps:g}", err))
    s, hw = fit_slope(pts)
    rep.slopes.append(Slope("linearization_slope", s, hw, 1.7, 2.3))


def _nls_roundtrip(cfg, rep):
    grid = Grid1D(cfg.n, cfg.half_width)
    q = potential_1d(cfg, grid)
    r = direct_scattering(q)
    inv = nls_inverse(r, grid, tol=cfg.tol)
    rep.metrics.append(Metric("roundtrip_rel_l2", _rel(inv.q.values, q.values), 1e-4))
    rep.metrics.append(Metric("sup_r", r.sup_norm))
    rep.metrics.append(Metric("r_at_spectral_grid_edge", _edge(r)))
    rep.metrics.append(Metric("max_bc_residual", float(inv.residual.max()), cfg.tol))
    # contraction of the plain fixed-point iteration on a spread of x samples
    xs = grid.nodes[:: max(1, grid.n // 16)]
    sol = bc_solve(r, xs, tol=cfg.tol, method="fixed", maxiter=5000)
    rep.metrics.append(Metric("fixed_point_contraction", sol.contraction, r.sup_norm + 0.05))
    rep.tables["q.csv"] = (io.Q_COLUMNS, list(io.q_rows(grid.nodes, inv.q.values, inv.residual, inv.iterations)))
    rep.fields["q.istf"] = inv.q


def _nls_evolve(cfg, rep):
    grid = Grid1D(cfg.n, cfg.half_width)
    q0 = potential_1d(cfg, grid)
    ist = ist_solve(q0, cfg.t, EvolutionConfig(cfg.t, cfg.dt, tol=cfg.tol)).q.values
    ss = splitstep_nls(q0, cfg.t, cfg.dt).values
    n0 = np.linalg.norm(q0.values)
    rep.metrics.append(Metric("ist_vs_splitstep_rel_l2", float(np.linalg.norm(ist - ss) / n0), 1e-3))
    rep.metrics.append(Metric("splitstep_mass_drift", abs(np.linalg.norm(ss) - n0) / n0, 1e-8))
    rows = [(cfg.t, x, a.real, a.imag, b.real, b.imag, abs(a - b)) for x, a, b in zip(grid.nodes, ist, ss)]
    rep.tables["compare.csv"] = (io.NLS_COMPARE_COLUMNS, rows)


def _nls_asymptotics(cfg, rep):
    grid = Grid1D(cfg.n, cfg.half_width)
    q0 = potential_1d(cfg, grid)
    lg = Grid1D(cfg.lambda_n, cfg.lambda_half_width)
    r = direct_scattering(q0, lg)
    z0 = np.linspace(-cfg.z0_max, cfg.z0_max, cfg.samples)
    pts, lit = [], []
    rows = []
    for t in cfg.times:
        xs = -4.0 * t * z0
        qi = ist_values(r, xs, t, tol=cfg.tol)
        prof = deift_zhou_profile(r, xs, t).q
        err = float(np.max(np.abs(qi - prof)))
        lit.append((t, float(np.max(np.abs(qi - deift_zhou_profile(r, xs, t, "literal").q)))))
        pts.append((t, err))
        rep.metrics.append(Metric(f"sup_error_t_{t:g}", err))
        rows += [(t, x, a.real, a.imag, b.real, b.imag, abs(a - b)) for x, a, b in zip(xs, qi, prof)]
    s, hw = fit_slope(pts)
    rep.slopes.append(Slope("asymptotic_error_slope", s, hw, -1.0, -0.55))
    s2, hw2 = fit_slope(lit)
    rep.slopes.append(Slope("literal_formula_error_slope", s2, hw2))
    rep.tables["asymptotics.csv"] = (io.NLS_COMPARE_COLUMNS, rows)


def _dsii_involution(cfg, rep):
    q = potential_2d(cfg)
    s = scattering_transform(q, k_block=cfg.k_block, tol=cfg.tol, workers=cfg.workers)
    qq = inverse_scattering(s, z_block=cfg.z_block, tol=cfg.tol, workers=cfg.workers)
    nq = q.norm2()
    rep.metrics.append(Metric("involution_rel_l2", _rel(qq.values, q.values), 2e-3))
    rep.metrics.append(Metric("isometry_defect", abs(s.norm2() - nq) / nq, 1e-3))
    rep.metrics.append(Metric("inverse_isometry_defect", abs(qq.norm2() - s.norm2()) / s.norm2(), 1e-3))
    rep.metrics.append(Metric("worst_contraction", s.contraction))
    # the two error budgets: data lost outside the k-block, and the per-k solver residual
    lin = antilinear_fourier(q.field).values
    inside = np.zeros(lin.shape, bool)
    inside[s.block] = True
    rep.metrics.append(Metric("linear_data_outside_k_block", float(np.linalg.norm(lin[~inside]) / np.linalg.norm(lin))))
    rep.metrics.append(Metric("max_cgo_residual", float(np.max(s.klog.residual)), cfg.tol))
    rep.tables["klog.csv"] = (io.KLOG_COLUMNS, list(io.klog_rows(s.klog)))
    rep.fields["s.istf"] = Field2D(s.k_grid, s.s)
    rep.fields["q_inv.istf"] = qq.field


def _dsii_evolve(cfg, rep):
    q0 = potential_2d(cfg)
    s0 = scattering_transform(q0, k_block=cfg.k_block, tol=cfg.tol, workers=cfg.workers)
    qi = inverse_scattering(evolve_s(s0, cfg.t), z_block=cfg.z_block, tol=cfg.tol, workers=cfg.workers).values
    ss = dsii_splitstep(q0, cfg.t, cfg.dt).values
    lin = linearised_solution(q0, cfg.t, s0).values
    n0 = np.linalg.norm(q0.values)
    drift = abs(np.linalg.norm(ss) - n0) / n0
    rel_ss = float(np.linalg.norm(qi - ss) / n0)
    rel_lin = float(np.linalg.norm(qi - lin) / n0)
    rep.metrics.append(Metric("ist_vs_splitstep_rel_l2", rel_ss, 5e-3))
    rep.metrics.append(Metric("splitstep_mass_drift", drift, 1e-8))
    rep.metrics.append(Metric("ist_vs_linear_rel_l2", rel_lin))
    rep.tables["dsii_compare.csv"] = (io.DSII_COMPARE_COLUMNS, [(cfg.t, rel_ss, rel_lin, drift)])
    rep.fields["q_ist.istf"] = Field2D(q0.grid, qi)
    rep.fields["q_ss.istf"] = Field2D(q0.grid, ss)


def _dsii_maximal(cfg, rep):
    ratios = []
    for a in cfg.amplitudes:
        q = potential_2d(cfg, a)
        s = scattering_transform(q, k_block=cfg.k_block, tol=cfg.tol, workers=cfg.workers)
        c = maximal_ratio(q, s)
        ratios.append(c)
        rep.metrics.append(Metric(f"maximal_ratio_amp_{a:g}", c))
    rep.metrics.append(Metric("maximal_ratio_max", max(ratios)))
    mono = all(b >= a for a, b in zip(ratios, ratios[1:]))
    rep.metrics.append(Metric("maximal_ratio_monotone_in_amplitude", float(mono)))


RUNNERS = {
    "operator-suite": _operator_suite,
    "nls-direct": _nls_direct,
    "nls-roundtrip": _nls_roundtrip,
    "nls-linearization": _nls_linearization,
    "nls-evolve-compare": _nls_evolve,
    "nls-asymptotics": _nls_asymptotics,
    "dsii-involution": _dsii_involution,
    "dsii-evolve-compare": _dsii_evolve,
    "dsii-maximal": _dsii_maximal,
}


def run_experiment(cfg: RunConfig) -> ExperimentReport:
    rep = ExperimentReport(cfg.experiment, cfg.as_dict())
    start = time.perf_counter()
    RUNNERS[cfg.experiment](cfg, rep)
    rep.wall_clock = time.perf_counter() - start
    if not rep.metrics and not rep.slopes:
        raise RuntimeError(f"experiment {cfg.experiment} produced no metrics")
    return rep


# ---------------------------------------------------------------- reports

def _fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return io.fmt(v)


def report_text(rep: ExperimentReport) -> str:
    """Deterministic ``key = value`` rendering (wall-clock time is excluded)."""
    if not rep.metrics and not rep.slopes:
        raise ValueError("a report needs at least one metric")
    lines = [f"experiment = {rep.experiment}"]
    for k in sorted(rep.config):
        lines.append(f"config.{k} = {_fmt_value(rep.config[k])}")
    for m in rep.metrics:
        lines.append(f"metric.{m.name}.value = {_fmt_value(m.value)}")
        lines.append(f"metric.{m.name}.threshold = {_fmt_value(m.threshold)}")
        lines.append(f"metric.{m.name}.op = {m.op}")
        lines.append(f"metric.{m.name}.pass = {_fmt_value(m.passed)}")
    for s in rep.slopes:
        lines.append(f"slope.{s.name}.value = {_fmt_value(s.slope)}")
        lines.append(f"slope.{s.name}.half_width = {_fmt_value(s.half_width)}")
        lines.append(f"slope.{s.name}.window = {_fmt_value([s.low, s.high])}")
        lines.append(f"slope.{s.name}.pass = {_fmt_value(s.passed)}")
    lines.append(f"pass = {_fmt_value(rep.passed)}")
    return "\n".join(lines) + "\n"


def _parse_scalar(text: str):
    if text == "none":
        return None
    if text in ("true", "false"):
        return text == "true"
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_parse_scalar(p.strip()) for p in inner.split(",")] if inner else []
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_report(text: str) -> ExperimentReport:
    kv = {}
    order = []
    for line in text.splitlines():
        if not line.strip():
            continue
        k, _, v = line.partition(" = ")
        kv[k] = v
        order.append(k)
    rep = ExperimentReport(kv["experiment"], {})
    for k in order:
        if k.startswith("config."):
            rep.config[k[len("config."):]] = _parse_scalar(kv[k])
    seen = []
    for k in order:
        if k.startswith("metric.") and k.endswith(".value"):
            name = k[len("metric."): -len(".value")]
            seen.append(name)
            thr = _parse_scalar(kv[f"metric.{name}.threshold"])
            rep.metrics.append(Metric(name, float(_parse_scalar(kv[k])), None if thr is None else float(thr), kv[f"metric.{name}.op"]))
        if k.startswith("slope.") and k.endswith(".value"):
            name = k[len("slope."): -len(".value")]
            lo, hi = _parse_scalar(kv[f"slope.{name}.window"])
            rep.slopes.append(Slope(name, float(_parse_scalar(kv[k])), float(_parse_scalar(kv[f"slope.{name}.half_width"])),
                                    None if lo is None else float(lo), None if hi is None else float(hi)))
    return rep


def emit_report(rep: ExperimentReport, out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {out}: {err}") from None
    path = out / f"{rep.experiment}.report.txt"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_text(rep))
    for name, (cols, rows) in sorted(rep.tables.items()):
        io.write_csv(out / f"{rep.experiment}.{name}", cols, rows)
    for name, f in sorted(rep.fields.items()):
        io.write_field(out / f"{rep.experiment}.{name}", f)
    # timing is kept apart so the report itself is reproducible byte for byte
    with open(out / f"{rep.experiment}.timing.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"wall_clock_s = {rep.wall_clock:.3f}\n")
    return path


# ---------------------------------------------------------------- CLI

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="istlab", description="Inverse scattering experiments")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, exps in VERBS.items():
        sp = sub.add_parser(verb, help=f"run {', '.join(exps)}")
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", required=True, help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    allowed = VERBS[args.verb]
    try:
        cfg = RunConfig.from_json(Path(args.config).read_text(encoding="utf-8"), allowed[0])
        if cfg.experiment not in allowed:
            raise ConfigError(f"verb {args.verb} runs {', '.join(allowed)}, not {cfg.experiment}")
    except (OSError, ConfigError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    try:
        rep = run_experiment(cfg)
    except Exception as err:  # solver failures become a structured record
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{cfg.experiment}.error.txt").write_text(
            f"experiment = {cfg.experiment}\nerror_type = {type(err).__name__}\nmessage = {err}\n", encoding="utf-8"
        )
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    path = emit_report(rep, args.out)
    for m in rep.metrics:
        print(f"{m.name} = {io.fmt(m.value)} [{'pass' if m.passed else 'FAIL'}]")
    for s in rep.slopes:
        print(f"{s.name} = {io.fmt(s.slope)} +- {io.fmt(s.half_width)} [{'pass' if s.passed else 'FAIL'}]")
    print(f"report: {path}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
