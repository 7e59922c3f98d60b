import numpy as np
import pytest
import scipy.linalg

from istlab.grids import Field1D, Grid1D
from istlab.harness import box_oracle, box_values
from istlab.rhp_inverse import a_from_r
from istlab.spectral import antilinear_fourier
from istlab.zs_direct import (
    GridTooCoarse,
    Potential1D,
    ReflectionCoefficient,
    TransitionData,
    TruncationBoundError,
    UnitarityError,
    direct_scattering,
    filon_weights,
    jost_sweep,
    reflection,
    transition_coefficients,
    transition_data,
    volterra_bound,
    volterra_transition,
)


def gaussian(n=1024, L=16.0, amp=0.5):
    g = Grid1D(n, L)
    return Potential1D(Field1D(g, amp * np.exp(-g.nodes**2)))


def test_zero_potential_gives_identity():
    q = Potential1D(Field1D(Grid1D(128, 8.0), np.zeros(128)))
    traj = jost_sweep(q, 0.7)
    assert np.allclose(traj.n11, 1.0, atol=1e-15) and np.allclose(traj.n21, 0.0, atol=1e-15)
    td = transition_data(q)
    assert np.allclose(td.a, 1.0, atol=1e-14) and np.allclose(td.b, 0.0, atol=1e-14)
    assert np.all(reflection(td).r == 0)
    tv = volterra_transition(q, n_max=3)
    assert np.all(tv.a == 1) and np.all(tv.b == 0)


def test_box_matches_matrix_exponential():
    g = Grid1D(512, 8.0)
    box = Potential1D(Field1D(g, box_values(g, 0.8 + 0.3j, 2.0)))
    lam = np.linspace(-3, 3, 25)
    a, b = box_oracle(g, box.values, lam)
    a2, b2 = transition_coefficients(box, lam, order=2)
    assert np.max(np.abs(a2 - a)) <= 1e-8 and np.max(np.abs(b2 - b)) <= 1e-8


def test_box_oracle_is_independent_closed_form():
    # one constant block on [xa, xb]: N(xa) = exp(-(xb - xa) B) applied to the free column at xb
    g = Grid1D(256, 8.0)
    v = box_values(g, 0.5, 1.0)
    idx = np.nonzero(v)[0]
    xa, xb = g.nodes[idx[0]] - g.h / 2, g.nodes[idx[-1]] + g.h / 2
    lam = 0.9
    B = np.array([[-1j * lam, 0.5], [0.5, 1j * lam]])
    col = scipy.linalg.expm(-(xb - xa) * B) @ np.array([np.exp(-1j * lam * xb), 0])
    a, b = box_oracle(g, v, np.array([lam]))
    assert abs(a[0] - np.exp(1j * lam * xa) * col[0]) < 1e-14
    assert abs(b[0] - np.exp(-1j * lam * xa) * col[1]) < 1e-14


def test_determinant_conserved_along_sweep():
    q = gaussian(amp=1.0)
    traj = jost_sweep(q, 1.3)
    det = np.abs(traj.n11) ** 2 - np.abs(traj.n21) ** 2
    assert np.max(np.abs(det - 1)) <= 1e-10
    assert np.linalg.det(traj.matrix(len(traj.x) // 2)) == pytest.approx(1.0, abs=1e-10)


def test_left_sweep_endpoint():
    q = gaussian(512, 8.0, 0.6)
    lam = np.array([0.4, -1.1])
    a, b = transition_coefficients(q, lam)
    left = jost_sweep(q, lam, side="left")
    assert np.allclose(left.n11[-1], np.conj(a), atol=1e-9)
    assert np.allclose(left.n21[-1], -b, atol=1e-9)


def test_unitarity_on_grid():
    td = transition_data(gaussian(amp=1.0))
    assert td.unitarity_defect() <= 1e-8
    assert np.all(np.abs(td.a) >= 1 - 1e-8)


def test_richardson_oracle():
    q = gaussian(2048, 16.0, 0.5)
    fine = Potential1D(Field1D(Grid1D(4096, 16.0), 0.5 * np.exp(-Grid1D(4096, 16.0).nodes ** 2)))
    lam = np.linspace(-8, 8, 33)
    a1, b1 = transition_coefficients(q, lam)
    a2, b2 = transition_coefficients(fine, lam)
    assert max(np.max(np.abs(a1 - a2)), np.max(np.abs(b1 - b2))) <= 1e-8


def test_coarse_grid_rejected():
    q = gaussian(64, 16.0)
    with pytest.raises(GridTooCoarse):
        transition_coefficients(q, np.array([50.0]))


def test_volterra_matches_ode():
    q = gaussian(1024, 16.0, 0.1)
    tv = volterra_transition(q, n_max=6)
    td = transition_data(q)
    assert np.max(np.abs(tv.a - td.a)) <= 1e-7 and np.max(np.abs(tv.b - td.b)) <= 1e-7


def test_volterra_first_term_is_linearization():
    q = gaussian(1024, 16.0, 0.1)
    tv = volterra_transition(q, n_max=0)
    assert np.all(tv.a == 1)
    assert np.max(np.abs(tv.b - antilinear_fourier(q.field).values)) <= 1e-7


def test_volterra_bound_and_weights():
    assert volterra_bound(0.0, 3) == 0.0
    assert volterra_bound(1.0, 2) < volterra_bound(1.0, 1)
    w = filon_weights(np.array([0.0]))
    assert np.sum(w) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(TruncationBoundError):
        volterra_transition(gaussian(1024, 16.0, 3.0), n_max=1, tol=1e-12)


def test_reflection_identities():
    td = transition_data(gaussian(amp=1.0))
    r = reflection(td)
    assert np.max(np.abs(np.abs(r.r) ** 2 - (1 - 1 / np.abs(td.a) ** 2))) <= 1e-12
    assert r.sup_norm < 1


def test_transition_data_validation():
    g = Grid1D(16, 2.0)
    with pytest.raises(UnitarityError):
        TransitionData(g, np.full(16, 2.0 + 0j), np.zeros(16))
    with pytest.raises(ValueError):
        ReflectionCoefficient(g, np.full(16, 1.5 + 0j))


def test_linearization_slope():
    base = gaussian(2048, 16.0, 1.0)
    fa = antilinear_fourier(base.field).values
    errs = []
    eps = np.array([0.2, 0.1, 0.05])
    for e in eps:
        r = direct_scattering(Potential1D(base.field.with_values(e * base.values))).r
        errs.append(np.max(np.abs(r / e - fa)))
    slope = np.polyfit(np.log(eps), np.log(errs), 1)[0]
    assert abs(slope - 2) <= 0.3


def test_complex_lambda_continues_a():
    q = gaussian(2048, 16.0, 1.0)
    r = direct_scattering(q, Grid1D(8192, 16.0))
    a_sweep, _ = transition_coefficients(q, np.array([-2j]))
    assert abs(a_from_r(r, -2j) - a_sweep[0]) <= 1e-5
