"""Geodesic deviation (Jacobi-Levi-Civita) fields and their growth rates."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .dynamics import GeodesicTrajectory, _domain_events, _f17, chart_of, integrate_geodesic, speed_norm
from .errors import DomainError, FitError, StiffnessError
from .fitting import MIN_R2, TAIL_HI, TAIL_LO, tail_fit


@dataclass
class JacobiField:
    base: GeodesicTrajectory
    deviation: np.ndarray
    deviation_rate: np.ndarray
    intensity: np.ndarray
    status: str = "ok"
    nonlinear: bool = False

    @property
    def tau(self):
        return self.base.tau_grid

    def to_csv(self):
        d = self.deviation.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["tau"] + [f"J{i}" for i in range(d)] + ["intensity"])
        for t, J, s in zip(self.tau, self.deviation, self.intensity):
            w.writerow([_f17(t)] + [_f17(x) for x in J] + [_f17(s)])
        return buf.getvalue()

    def to_dict(self):
        return {
            "tau": self.tau.tolist(),
            "deviation": self.deviation.tolist(),
            "intensity": self.intensity.tolist(),
            "status": self.status,
            "nonlinear": self.nonlinear,
        }


@dataclass
class LyapunovEstimate:
    lambda_J: float
    fit_window: tuple
    r_squared: float
    prefactor: float = None

    def to_dict(self):
        return {
            "lambda_J": self.lambda_J,
            "fit_window": list(self.fit_window),
            "r_squared": self.r_squared,
            "prefactor": self.prefactor,
        }


def _intensity(chart, points, dev):
    return np.array(
        [math.sqrt(max(float(J @ chart.metric(p) @ J), 0.0)) for p, J in zip(points, dev)]
    )


def default_seed(chart, theta0, v0):
    """delta theta_0 = 0 and a unit rate g-orthogonal to the base velocity."""
    g = chart.metric(theta0)
    u = 1.0 / np.sqrt(np.diag(g))
    vv = v0 @ g @ v0
    if vv > 0:
        u = u - (u @ g @ v0) / vv * v0
    n = math.sqrt(u @ g @ u)
    if not n > 1e-12:
        raise DomainError("could not build an orthogonal seed")
    return np.zeros(chart.dim), u / n


def integrate_jlc(family, base, dtheta0=None, ddtheta0=None, tol=1e-10, covariant_rate=False,
                  method="RK45"):
    """Integrate the full deviation equation along ``base``.

    The base geodesic is re-integrated together with the deviation so no
    interpolation of stored samples is needed; output is sampled on
    ``base.tau_grid``.

    Parameters
    ----------
    dtheta0, ddtheta0 : array_like, optional
        Initial deviation and its ordinary tau-derivative. With
        ``covariant_rate=True`` the second vector is D(delta theta)/dtau.
        Defaults to :func:`default_seed`.

    Notes
    -----
    The seed is normalized before integration and the result rescaled, so
    the output is exactly linear in the seed.
    """
    ch = chart_of(family)
    theta0 = base.points[0]
    v0 = base.velocities[0]
    if dtheta0 is None and ddtheta0 is None:
        dtheta0, ddtheta0 = default_seed(ch, theta0, v0)
        covariant_rate = False
    J0 = np.zeros(ch.dim) if dtheta0 is None else np.asarray(dtheta0, float)
    R0 = np.zeros(ch.dim) if ddtheta0 is None else np.asarray(ddtheta0, float)
    if covariant_rate:
        P0 = R0
    else:
        P0 = R0 + np.einsum("kij,i,j->k", ch.christoffel(theta0), J0, v0)
    grid = base.tau_grid
    d = ch.dim
    scale = math.sqrt(float(J0 @ J0 + P0 @ P0))
    if scale == 0.0:
        zeros = np.zeros((grid.size, d))
        return JacobiField(base, zeros, zeros.copy(), np.zeros(grid.size), base.status)
    J0 = J0 / scale
    P0 = P0 / scale

    def rhs(t, y):
        th, v, J, P = y[:d], y[d : 2 * d], y[2 * d : 3 * d], y[3 * d :]
        dJ, dP = ch.jlc_terms(th, v, J, P)
        return np.concatenate([v, ch.geodesic_acc(th, v), dJ, dP])

    sol = solve_ivp(
        rhs, (0.0, float(grid[-1])), np.concatenate([theta0, v0, J0, P0]), method=method,
        rtol=tol, atol=tol, t_eval=grid, events=_domain_events(ch) or None,
    )
    if sol.status == -1:
        raise StiffnessError(f"JLC integration failed: {sol.message}")
    status = "domain_exit" if sol.status == 1 else "ok"
    pts = sol.y[:d].T
    vel = sol.y[d : 2 * d].T
    dev = sol.y[2 * d : 3 * d].T * scale
    rate = sol.y[3 * d :].T * scale
    new_base = GeodesicTrajectory(
        ch.chart_id, sol.t.copy(), pts.copy(), vel.copy(), speed_norm(ch, pts, vel),
        base.family_param, status,
    )
    return JacobiField(new_base, dev, rate, _intensity(ch, pts, dev), status)


def jacobi_by_variation(family, theta0_fn, v0_fn, alpha, dalpha, tau_end, tau_grid=None,
                        tol=1e-12, halving_tol=1e-2, method="RK45"):
    """Deviation as the difference of two integrated geodesics at alpha, alpha + dalpha.

    delta theta(tau) = [theta(tau; alpha + dalpha) - theta(tau; alpha)] / dalpha * dalpha.
    A halving test (dalpha/2 must give half the deviation to ``halving_tol``)
    sets ``nonlinear`` when the step is outside the linear regime.
    """
    ch = chart_of(family)
    grid = np.linspace(0.0, tau_end, 401) if tau_grid is None else np.asarray(tau_grid, float)
    base = integrate_geodesic(family, theta0_fn(alpha), v0_fn(alpha), tau_end, tol=tol,
                              tau_grid=grid, method=method, family_param=alpha)
    if dalpha == 0:
        zeros = np.zeros_like(base.points)
        return JacobiField(base, zeros, zeros.copy(), np.zeros(base.tau_grid.size), base.status)

    def diff(da):
        other = integrate_geodesic(family, theta0_fn(alpha + da), v0_fn(alpha + da), tau_end,
                                   tol=tol, tau_grid=grid, method=method)
        n = min(other.tau_grid.size, base.tau_grid.size)
        return ((other.points[:n] - base.points[:n]) / da * da,
                (other.velocities[:n] - base.velocities[:n]) / da * da, n, other.status)

    dev, ddev, n, st = diff(dalpha)
    half, _, nh, _ = diff(0.5 * dalpha)
    m = min(n, nh)
    ref = np.linalg.norm(dev[:m], axis=1)
    bad = np.linalg.norm(dev[:m] - 2.0 * half[:m], axis=1)
    nonlinear = bool(np.any(bad > halving_tol * np.maximum(ref, 1e-300)))
    pts = base.points[:n]
    vel = base.velocities[:n]
    cov = ddev + np.array(
        [np.einsum("kij,i,j->k", ch.christoffel(p), J, v) for p, J, v in zip(pts, dev, vel)]
    )
    status = "ok" if (base.status == "ok" and st == "ok") else "domain_exit"
    b = GeodesicTrajectory(base.chart_id, base.tau_grid[:n], pts, vel, base.speed_norm[:n],
                           alpha, status)
    return JacobiField(b, dev, cov, _intensity(ch, pts, dev), status, nonlinear)


def intensity_asymptote(field, lo=TAIL_LO, hi=TAIL_HI, min_r2=MIN_R2):
    """Fit log J over the tail window; returns a :class:`LyapunovEstimate`."""
    J = field.intensity
    tau = field.tau
    m = (tau >= lo * tau[-1]) & (tau <= hi * tau[-1])
    if np.any(J[m] <= 0):
        raise FitError("non-positive Jacobi intensity in the tail")
    fit = tail_fit(tau, np.log(np.where(J > 0, J, np.nan)), lo, hi, min_r2, require_increasing=True)
    return LyapunovEstimate(fit.slope, fit.window, fit.r_squared, math.exp(fit.intercept))


def relative_intensity_error(a, b):
    """max |J_a - J_b| / J_b over the common grid (excluding J_b = 0)."""
    n = min(a.intensity.size, b.intensity.size)
    ja, jb = a.intensity[:n], b.intensity[:n]
    m = jb > 0
    return float(np.max(np.abs(ja[m] - jb[m]) / jb[m]))


def simplified_jlc_ed1(alpha, y0, tau):
    """Reference solution of the asymptotically truncated ED1 deviation system.

    d1'' + 2a d1' + a^2 d1 = 0, d2'' + 2a d2' + a^2 d3 = 0,
    d3'' + 2a d3' + a^2 d3 = 0, with y0 = (d1, d2, d3, d1', d2', d3').
    """
    a = float(alpha)
    M = np.zeros((6, 6))
    M[:3, 3:] = np.eye(3)
    M[3, 0] = -a * a
    M[3, 3] = -2 * a
    M[4, 2] = -a * a
    M[4, 4] = -2 * a
    M[5, 2] = -a * a
    M[5, 5] = -2 * a
    y0 = np.asarray(y0, float)
    return np.array([expm(M * t) @ y0 for t in np.atleast_1d(tau)])


def tangential_closure_error(family, base, c=1.0, tol=1e-10):
    """Seed delta theta = c theta'(0) with zero covariant rate and measure
    max |J - c theta'| / |c theta'| along the base."""
    fld = integrate_jlc(family, base, c * base.velocities[0], np.zeros(base.points.shape[1]),
                        tol=tol, covariant_rate=True)
    ref = c * fld.base.velocities
    return float(np.max(np.linalg.norm(fld.deviation - ref, axis=1) / np.linalg.norm(ref, axis=1)))
