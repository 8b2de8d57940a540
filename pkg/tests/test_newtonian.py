import math

import numpy as np
import pytest
from scipy import integrate

from igeochaos import geometry as ge
from igeochaos import newtonian as nw
from igeochaos.errors import DomainError, UsageError


def _harmonic_chart():
    pot = nw.harmonic_potential([1.0, 1.0], [1.0, 1.0])
    th, v = np.array([1.0, 0.0]), np.array([0.0, 0.8])
    return nw.ConformalChart(2, pot, 0.5 * v @ v + pot.phi(th)), th, v


def test_chart_invariants():
    ch = nw.ConformalChart(2, nw.free_potential(2), 1.0, sigmas=[1.0, 2.0], epsilon=2.0, kappa=3.0)
    np.testing.assert_allclose(ch.masses, [18.0, 4.5])
    np.testing.assert_allclose(ch.metric([0.1, 0.2]), np.diag([0.5, 0.125]))
    with pytest.raises(DomainError):
        nw.ConformalChart(1, nw.free_potential(1), 1.0, epsilon=0.0)
    with pytest.raises(DomainError):
        nw.ConformalChart(2, nw.free_potential(2), 1.0, sigmas=[1.0, -1.0])


def test_inaccessible_point_rejected():
    ch = nw.ConformalChart(1, nw.harmonic_potential([1.0], [1.0]), 0.5)
    with pytest.raises(DomainError):
        ch.validate([2.0])


def test_constant_phi_gives_straight_lines():
    ch = nw.ConformalChart(2, nw.free_potential(2), 2.0)
    v0 = np.array([1.0, 0.0])
    tr = nw.conformal_geodesic(ch, [0.3, -0.1], v0, 4.0)
    ref = np.array([0.3, -0.1]) + tr.xi[:, None] * v0
    assert np.max(np.abs(tr.points - ref)) < 1e-12
    # tau = kappa sqrt(T_xi / Phi) xi = xi / 2
    np.testing.assert_allclose(tr.tau, 0.5 * tr.xi, rtol=1e-12, atol=1e-14)


def test_coupling_produces_cross_force():
    pot = nw.coupled_potential(1, 1.0, 1.0)
    ch = nw.ConformalChart(2, pot, 2.0)
    v = np.array([0.5, 0.0])
    a1 = ch.geodesic_acc(np.array([0.0, 0.5]), v)
    a2 = ch.geodesic_acc(np.array([0.0, 1.0]), v)
    assert abs(a1[0] - a2[0]) > 1e-3
    np.testing.assert_allclose(pot.grad(np.array([0.0, 0.5])).sum(), 0.0, atol=1e-15)


def test_potential_gradients_match_differences():
    from igeochaos.tensors import central_gradient

    pot = nw.coupled_potential(2, 0.7, 1.3)
    t = np.array([0.2, -0.4, 0.9, 0.1])
    g = central_gradient(lambda x: np.array(pot.phi(x)), t)
    np.testing.assert_allclose(g, pot.grad(t), atol=1e-9)
    H = central_gradient(pot.grad, t)
    np.testing.assert_allclose(H, pot.hess(t), atol=1e-8)


def test_make_potential():
    assert nw.make_potential("harmonic", 2, [1, 1], omega=2.0).phi([1.0, 0.0]) == 2.0
    with pytest.raises(UsageError):
        nw.make_potential("coupled", 3, [1, 1, 1])
    with pytest.raises(UsageError):
        nw.make_potential("quartic", 1, [1])


def test_newton_pure_growing_mode():
    w, Xi = 0.7, 0.4
    tau = np.linspace(0, 5, 11)
    tr = nw.newton_integrate([1.0], lambda t: -w * w * t, [Xi], [w * Xi], 5.0, tau_grid=tau)
    np.testing.assert_allclose(tr.points[:, 0], Xi * np.exp(w * tau), rtol=1e-9)


def test_newton_free_and_period():
    tr = nw.newton_integrate([2.0], lambda t: np.zeros(1), [1.0], [0.5], 4.0, tau_grid=[0, 4.0])
    assert tr.points[-1, 0] == pytest.approx(3.0, abs=1e-12)
    w = 2.0
    T = 2 * math.pi / w
    tr = nw.newton_integrate([1.0], lambda t: w * w * t, [1.0], [0.0], T, tau_grid=[0, T])
    assert tr.points[-1, 0] == pytest.approx(1.0, abs=1e-6)
    assert tr.velocities[-1, 0] == pytest.approx(0.0, abs=1e-6)


def test_harmonic_geometrization():
    ch, th, v = _harmonic_chart()
    r = nw.geometrization_error(ch, th, v, tau_end=10.0)
    assert r["position_sup_error"] < 1e-5
    assert r["energy_drift"] < 1e-7
    assert r["phi_minus_T"] < 1e-6


def test_geometrized_path_satisfies_newton():
    ch, th, v = _harmonic_chart()
    tr = nw.geometrized_trajectory(ch, th, v, 6.0, tau_grid=np.linspace(0, 6, 601))
    h = tr.tau_grid[1] - tr.tau_grid[0]
    acc = (tr.points[2:] - 2 * tr.points[1:-1] + tr.points[:-2]) / h**2
    # second difference error is O(h^2 |theta''''|) ~ 1e-5
    assert np.max(np.abs(acc + tr.points[1:-1])) < 1e-4


def test_reparametrize_needs_reach():
    ch, th, v = _harmonic_chart()
    xt = nw.conformal_geodesic(ch, th, v, 2.0)
    with pytest.raises(DomainError):
        nw.reparametrize_to_time(xt, ch, np.linspace(0, 10 * xt.tau[-1], 5))


def test_iho_chart_metric_exceeds_identity():
    ch = nw.IHOChart([1.0, 2.0])
    g = ch.metric([0.5, -0.3])
    assert g[0, 0] == pytest.approx(1 + 0.5 * (0.25 + 4 * 0.09))
    assert ch.n_osc == 2
    with pytest.raises(DomainError):
        nw.IHOChart([1.0, 0.0])


def test_iho_curvature_at_origin():
    rep = nw.iho_curvature(nw.IHOChart([1.0, 1.0]), [0.0, 0.0])
    assert rep.scalar == pytest.approx(-2.0, abs=1e-12)
    assert rep.extras["printed_scalar"] == pytest.approx(-2.0, abs=1e-15)
    # two-dimensional Weyl projective tensor vanishes identically
    assert abs(rep.extras["computed_W1212"]) < 1e-12


@pytest.mark.parametrize("om,th", [((2.0, 0.1), (1.0, 1.0)), ((1.0, 3.0), (0.4, -0.2)),
                                   ((0.5, 0.5), (1.5, 0.3))])
def test_iho_scalar_matches_printed_and_oracle(om, th):
    ch = nw.IHOChart(list(om))
    a = nw.iho_curvature(ch, th)
    b = ge.curvature_numeric(ch, th)
    assert a.scalar == pytest.approx(a.extras["printed_scalar"], rel=1e-10, abs=1e-12)
    assert b.scalar == pytest.approx(a.scalar, abs=1e-4)


def test_iho_flat_limit_monotone():
    th = (0.5, 0.5)
    vals = [abs(nw.iho_curvature(nw.IHOChart([w, w]), th).scalar) for w in np.linspace(1.0, 1e-3, 12)]
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-5
    assert nw.printed_iho_weyl1212(1e-3, th) < 1e-10


@pytest.mark.parametrize("om,th", [((1.0, 2.0), (0.7, 1.3)), ((0.5, 0.5), (2.0, 3.0))])
def test_iho_box_volume_against_quadrature(om, th):
    w = np.array(om)
    f = lambda y, x: (1 + 0.5 * (w[0] ** 2 * x * x + w[1] ** 2 * y * y))
    ref, _ = integrate.dblquad(f, 0, th[0], 0, th[1], epsabs=0, epsrel=1e-12)
    val = nw.log_iho_volume(w, np.log(np.array(th))[:, None])[0]
    assert val == pytest.approx(math.log(ref), abs=1e-10)


def test_iho_box_volume_three_oscillators():
    w = np.array([1.0, 0.5, 2.0])
    th = np.array([0.6, 1.1, 0.4])
    f = lambda z, y, x: (1 + 0.5 * (w[0] ** 2 * x * x + w[1] ** 2 * y * y + w[2] ** 2 * z * z)) ** 1.5
    ref, _ = integrate.tplquad(f, 0, th[0], 0, th[1], 0, th[2], epsabs=0, epsrel=1e-10)
    val = nw.log_iho_volume(w, np.log(th)[:, None])[0]
    assert val == pytest.approx(math.log(ref), abs=1e-8)


def test_iho_regimes():
    assert nw.iho_regime([1.0, 1.03])[0] == "equal"
    assert nw.iho_regime([10.0, 0.1])[0] == "disparate"
    assert nw.iho_regime([1.0, 3.0])[0] == "ambiguous"


@pytest.mark.parametrize("om,slope", [((1.0, 1.0), 4.0), ((10.0, 0.1), 30.0)])
def test_iho_ige_slopes(om, slope):
    rep = nw.iho_ige(nw.IHOChart(list(om)))
    assert rep.slope_expected == pytest.approx(slope)
    assert rep.relative_error < 0.05
    assert "stated_coefficient_discrepancy" in rep.notes


def test_iho_decaying_mode_does_not_change_slope():
    ch = nw.IHOChart([1.0, 1.0])
    a = nw.iho_ige(ch)
    b = nw.iho_ige(ch, decay=0.5)
    assert b.slope == pytest.approx(a.slope, rel=1e-3)


def test_ohmic_spectrum():
    s = nw.OhmicSpectrum(3.0)
    assert s.normalization() == 1.0
    assert s.mean() == pytest.approx(2.0)
    val, _ = integrate.quad(lambda w: w * float(s.density(w)), 0, 3.0)
    assert val == pytest.approx(s.mean(), rel=1e-12)
    val, _ = integrate.quad(lambda w: float(s.density(w)), 0, 3.0)
    assert val == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        nw.OhmicSpectrum(0.0)


def test_ohmic_slope_linear_in_Omega():
    a = nw.ohmic_ensemble(2, 1.0, 0.5)
    b = nw.ohmic_ensemble(2, 2.0, 0.5)
    assert b.slope / a.slope == pytest.approx(2.0, rel=0.02)
    assert a.relative_error < 0.05
    assert a.notes["non_compactifiable"] is True
