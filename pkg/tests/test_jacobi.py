import math

import numpy as np
import pytest

from igeochaos import dynamics as dy
from igeochaos import jacobi as ja
from igeochaos.charts import EuclideanChart, HyperbolicChart
from igeochaos.errors import FitError
from igeochaos.families import build_family


def _matched_base(kind, alpha, tau_end, n=301):
    fam = build_family(kind)
    geo = dy.matched_geodesic(kind, alpha)
    return fam, geo.trajectory(np.linspace(0.0, tau_end, n), family_param=alpha)


def test_flat_deviation_is_linear():
    ch = EuclideanChart(2)
    base = dy.integrate_geodesic(ch, [0.0, 0.0], [1.0, 0.5], 3.0)
    J0, dJ0 = np.array([0.2, -0.1]), np.array([0.3, 0.7])
    f = ja.integrate_jlc(ch, base, J0, dJ0, tol=1e-12)
    ref = J0 + f.tau[:, None] * dJ0
    assert np.max(np.abs(f.deviation - ref)) < 1e-10


@pytest.mark.parametrize("K", [-1.0, -0.25])
def test_constant_curvature_sinh(K):
    ch = HyperbolicChart(2, K)
    c = math.sqrt(-K)
    # vertical unit-speed geodesic y = e^{c tau}
    base = dy.integrate_geodesic(ch, [0.0, 1.0], [0.0, c], 4.0, tol=1e-12)
    w = 0.3
    seed = np.array([w * c, 0.0])  # g-norm w, orthogonal to the base velocity
    f = ja.integrate_jlc(ch, base, np.zeros(2), seed, tol=1e-12, covariant_rate=True)
    ref = w * np.sinh(c * f.tau) / c
    np.testing.assert_allclose(f.intensity[1:], ref[1:], rtol=1e-7)


def test_intensity_nonnegative_and_shape():
    fam, base = _matched_base("ED1", 1.0, 5.0)
    f = ja.integrate_jlc(fam, base)
    assert f.deviation.shape == base.points.shape
    assert np.all(f.intensity >= 0)


def test_linearity_exact():
    fam, base = _matched_base("ED2", 1.0, 5.0)
    a = np.array([1e-3, 0.0, 2e-3, -1e-3])
    b = np.array([0.0, 0.1, 0.0, 0.05])
    f1 = ja.integrate_jlc(fam, base, a, b)
    f2 = ja.integrate_jlc(fam, base, 2 * a, 2 * b)
    np.testing.assert_array_equal(f2.intensity, 2 * f1.intensity)


def test_zero_seed_gives_zero_field():
    fam, base = _matched_base("ED1", 1.0, 2.0, 21)
    f = ja.integrate_jlc(fam, base, np.zeros(3), np.zeros(3))
    assert np.all(f.intensity == 0)


@pytest.mark.parametrize("kind,alpha", [("ED1", 1.0), ("ED2", 0.5), ("ED1", 2.0)])
def test_jlc_matches_variation_oracle(kind, alpha):
    fam = build_family(kind)
    tau_end = 5.0
    grid = np.linspace(0.0, tau_end, 201)
    th = lambda a: dy.matched_geodesic(kind, a).initial_conditions()[0]
    vv = lambda a: dy.matched_geodesic(kind, a).initial_conditions()[1]
    var = ja.jacobi_by_variation(fam, th, vv, alpha, 1e-5, tau_end, grid)
    assert not var.nonlinear
    da = 1e-5
    d0 = (th(alpha + da) - th(alpha - da)) / (2 * da) * da
    r0 = (vv(alpha + da) - vv(alpha - da)) / (2 * da) * da
    f = ja.integrate_jlc(fam, var.base, d0, r0, tol=1e-12)
    assert ja.relative_intensity_error(f, var) < 1e-3


def test_variation_zero_step():
    fam = build_family("ED1")
    th = lambda a: dy.matched_geodesic("ED1", a).initial_conditions()[0]
    vv = lambda a: dy.matched_geodesic("ED1", a).initial_conditions()[1]
    f = ja.jacobi_by_variation(fam, th, vv, 1.0, 0.0, 2.0)
    assert np.all(f.deviation == 0)


def test_variation_6N_identical_blocks():
    fam = build_family("GaussianProduct6N", N=1)

    def geo(a):
        return dy.gaussian6N_geodesic([{"B": 1.0, "beta": a}] * 3)

    th = lambda a: geo(a).initial_conditions()[0]
    vv = lambda a: geo(a).initial_conditions()[1]
    f = ja.jacobi_by_variation(fam, th, vv, 1.0, 1e-5, 3.0, np.linspace(0, 3, 31))
    np.testing.assert_array_equal(f.deviation[:, 0:2], f.deviation[:, 2:4])
    np.testing.assert_array_equal(f.deviation[:, 0:2], f.deviation[:, 4:6])


def test_ed1_lyapunov_rate():
    fam, base = _matched_base("ED1", 1.0, 15.0, 601)
    est = ja.intensity_asymptote(ja.integrate_jlc(fam, base))
    assert est.lambda_J == pytest.approx(1.0, abs=0.05)
    assert est.r_squared >= 0.999
    assert est.fit_window[1] > est.fit_window[0]


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_rate_scales_with_alpha(alpha):
    fam, base = _matched_base("ED2", alpha, 15.0 / alpha, 601)
    est = ja.intensity_asymptote(ja.integrate_jlc(fam, base))
    assert 0.95 * alpha <= est.lambda_J <= 1.05 * alpha


def test_6N_rate():
    fam = build_family("GaussianProduct6N", N=1)
    geo = dy.gaussian6N_geodesic([{"B": 1.0, "beta": 1.0}] * 3)
    base = geo.trajectory(np.linspace(0, 15, 601))
    est = ja.intensity_asymptote(ja.integrate_jlc(fam, base))
    assert est.lambda_J == pytest.approx(1.0, rel=0.05)


def test_tangential_closure():
    fam, base = _matched_base("ED1", 1.0, 5.0)
    assert ja.tangential_closure_error(fam, base, c=0.5) < 1e-4


def test_fit_rejects_decreasing_tail():
    ch = EuclideanChart(2)
    base = dy.integrate_geodesic(ch, [0.0, 0.0], [1.0, 0.0], 10.0)
    f = ja.integrate_jlc(ch, base, np.array([0.0, 1.0]), np.array([0.0, -0.05]))
    with pytest.raises(FitError):
        ja.intensity_asymptote(f)


def test_simplified_system_reference():
    a = 1.3
    y0 = [0.1, 0.2, 0.3, -0.1, 0.0, 0.2]
    tau = np.linspace(0, 4, 9)
    y = ja.simplified_jlc_ed1(a, y0, tau)
    # d3 solves the critically damped oscillator: (A + B tau) e^{-a tau}
    A, B = y0[2], y0[5] + a * y0[2]
    np.testing.assert_allclose(y[:, 2], (A + B * tau) * np.exp(-a * tau), rtol=1e-10, atol=1e-14)
    assert np.allclose(y[0], y0)


def test_csv_columns():
    fam, base = _matched_base("ED1", 1.0, 1.0, 5)
    text = ja.integrate_jlc(fam, base).to_csv()
    assert text.split("\r\n")[0] == "tau,J0,J1,J2,intensity"
