import math

import numpy as np
import pytest

from igeochaos import dynamics as dy
from igeochaos.charts import EuclideanChart
from igeochaos.errors import DomainError
from igeochaos.families import build_family

GRID = np.linspace(0.0, 5.0, 51)


def _cases():
    return [
        (build_family("ED1"), dy.ed1_geodesic(A1=1.0, alpha1=1.0, B1=1.0, beta1=1.0, C1=0.3)),
        (build_family("ED2"), dy.ed2_geodesic(A2=1.2, alpha2=0.7, B2=0.9, beta2=1.1, C1=-0.4, C3=0.2)),
        (build_family("GaussianProduct6N", N=1), dy.gaussian6N_geodesic(
            [{"B": 1.0, "beta": 0.5}, {"B": 0.8, "beta": 1.0, "C": 1.0}, {"B": 1.5, "beta": 0.8}])),
    ]


def test_flat_chart_straight_line():
    ch = EuclideanChart(3)
    th0, v0 = np.array([0.5, -1.0, 2.0]), np.array([1.0, 0.3, -0.7])
    tr = dy.integrate_geodesic(ch, th0, v0, 4.0, tol=1e-12)
    ref = th0 + tr.tau_grid[:, None] * v0
    assert np.max(np.abs(tr.points - ref)) < 1e-12
    assert tr.status == "ok" and tr.tau_grid[0] == 0.0


@pytest.mark.parametrize("i", range(3))
def test_closed_form_matches_integrator(i):
    fam, geo = _cases()[i]
    th0, v0 = geo.initial_conditions()
    tr = dy.integrate_geodesic(fam, th0, v0, 5.0, tol=1e-12, tau_grid=GRID)
    assert np.max(np.abs(tr.points - geo.position(GRID))) < 1e-6
    assert tr.speed_drift() < 1e-6
    assert tr.speed_norm[0] == pytest.approx(geo.speed(), rel=1e-12)


@pytest.mark.parametrize("i", range(3))
def test_closed_form_ode_residual(i):
    fam, geo = _cases()[i]
    for t in np.linspace(0.5, 6.0, 20):
        assert dy.ode_residual(fam.chart, geo.position, t) < 1e-8


def test_reversibility():
    fam = build_family("ED2")
    th0, v0 = np.array([0.1, 1.0, -0.3, 0.8]), np.array([0.4, -0.2, 0.1, 0.3])
    fwd = dy.integrate_geodesic(fam, th0, v0, 3.0, tol=1e-12)
    back = dy.integrate_geodesic(fam, fwd.points[-1], -fwd.velocities[-1], 3.0, tol=1e-12)
    assert np.max(np.abs(back.points[-1] - th0)) < 1e-7


def test_closed_form_limits():
    c = dict(A1=2.0, alpha1=1.0, B1=1.0, beta1=1.5, C1=0.25, C2=0.0)
    assert dy.closed_form_ed1(c, 0.0)[0] == 2.0
    far = dy.closed_form_ed1(c, 40.0)
    assert far[0] < 1e-15
    assert far[1] == pytest.approx(4 * 1.5 + 0.25, rel=1e-12)
    assert far[2] < 1e-20


def test_ed2_initial_values():
    c = dict(A2=1.0, alpha2=1.0, B2=2.0, beta2=0.5, C1=0.1, C2=0.0, C3=-0.2, C4=0.0)
    p = dy.closed_form_ed2(c, 0.0)
    k1, k2 = 1 / 8, 4 / 2
    np.testing.assert_allclose(
        p, [1 / (2 * (1 + k1)) + 0.1, 1 / (1 + k1), 4.0 / (1 + k2) - 0.2, 2 / (1 + k2)], rtol=1e-14)


def test_6N_identical_blocks():
    b = {"B": 1.3, "beta": 0.9, "C": 0.2, "D": 0.0}
    p = dy.closed_form_gaussian6N([b, b, b], np.linspace(0, 3, 7))
    np.testing.assert_array_equal(p[:, 0:2], p[:, 2:4])
    np.testing.assert_array_equal(p[:, 0:2], p[:, 4:6])


def test_sigma_range():
    B, beta, D = 1.0, 1.0, 0.3
    lo, hi = dy.gauss_block_sigma_range(B, beta, D)
    assert (lo, hi) == (D, pytest.approx(math.sqrt(2) * beta + D))
    _, s, _, _ = dy.gauss_block(np.linspace(0, 40, 40001), B, beta, 0.0, D)
    assert s.max() == pytest.approx(hi, rel=1e-6)
    assert s.min() == pytest.approx(lo, abs=1e-15)


def test_bad_constants():
    with pytest.raises(DomainError):
        dy.ed1_geodesic(A1=1.0, alpha1=-1.0, B1=1.0, beta1=1.0)
    with pytest.raises(DomainError):
        dy.gaussian6N_geodesic([{"B": 1.0, "beta": 1.0}])


def test_constants_round_trip():
    geo = dy.ed2_geodesic(A2=1.2, alpha2=0.7, B2=0.9, beta2=1.1, C1=-0.4, C3=0.2)
    th0, v0 = geo.initial_conditions()
    c = dy.constants_from_initial("ED2", th0, v0)
    for k, v in geo.constants.items():
        assert c[k] == pytest.approx(v, abs=1e-10)


def test_generic_initial_data_leave_family():
    g = dy.gauss_block_from_initial(0.0, 1.0, 0.5, 0.1)
    assert not g["in_family"]
    m, s, dm, ds = dy.gauss_block(0.0, g["B"], g["beta"], g["C"], g["D"])
    np.testing.assert_allclose([m, s, dm, ds], [0.0, 1.0, 0.5, 0.1], atol=1e-12)


def test_domain_exit_returns_partial():
    fam = build_family("Gaussian1D")
    # a vertical dive reaches the sigma guard well before tau = 10
    tr = dy.integrate_geodesic(fam, [0.0, 1.0], [0.0, -50.0], 10.0, tol=1e-10)
    assert tr.status == "domain_exit" and tr.truncated
    assert tr.tau_grid[-1] < 10.0
    assert np.all(tr.points[:, 1] > 0)


def test_conserved_momenta():
    fam = build_family("ED2")
    th0, v0 = np.array([0.1, 1.0, -0.3, 0.8]), np.array([0.4, -0.2, 0.1, 0.3])
    tr = dy.integrate_geodesic(fam, th0, v0, 5.0, tol=1e-12)
    for k in (0, 2):
        p = np.array([fam.chart.metric(x)[k, k] * v[k] for x, v in zip(tr.points, tr.velocities)])
        assert np.max(np.abs(p - p[0])) < 1e-6 * abs(p[0])


def test_flat_length_is_tau():
    ch = EuclideanChart(2)
    tr = dy.integrate_geodesic(ch, [0.0, 0.0], [0.6, 0.8], 7.0)
    L = dy.geodesic_length(tr)
    assert L(7.0) == pytest.approx(7.0, abs=1e-12)


def test_length_slopes():
    grid = np.linspace(0.0, 40.0, 4001)
    L1 = dy.geodesic_length(dy.matched_geodesic("ED1", 1.0).trajectory(grid))
    L2 = dy.geodesic_length(dy.matched_geodesic("ED2", 1.0).trajectory(grid))
    for t in (10.0, 20.0, 40.0):
        # ED1 speed with equal rates is sqrt(alpha^2 + 2 beta^2)
        assert L1(t) / t == pytest.approx(math.sqrt(3), rel=0.05)
        assert L2(t) / t == pytest.approx(2.0, rel=0.05)


def test_length_sensitivity():
    assert dy.length_sensitivity("ED1", 1.0, 0.0, 50.0) == 0.0
    assert dy.length_sensitivity("ED1", 1.0, 0.01, 50.0) == pytest.approx(0.5 * math.sqrt(3), rel=0.1)
    assert dy.length_sensitivity("ED2", 1.0, 0.01, 50.0) == pytest.approx(1.0, rel=0.1)
    with pytest.raises(DomainError):
        dy.length_sensitivity("ED1", 1.0, 0.5, 10.0)


def test_csv_export():
    geo = dy.matched_geodesic("ED1", 1.0)
    tr = geo.trajectory(np.linspace(0, 1, 3))
    text = tr.to_csv(["mu1", "mu2", "sigma2"])
    lines = text.split("\r\n")
    assert lines[0] == "tau,mu1,mu2,sigma2,dmu1,dmu2,dsigma2,speed_norm"
    assert len([l for l in lines if l]) == 4
    assert float(lines[1].split(",")[1]) == 1.0
