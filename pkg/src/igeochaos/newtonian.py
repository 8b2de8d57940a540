"""Newtonian motion as geodesics of a conformally rescaled information metric.

A potential phi on a configuration space with mass metric
m = eps kappa^2 diag(1/sigma_n^2) defines the conformal metric
g = Phi m~ with Phi = (E - phi)/eps and m~ = diag(1/sigma_n^2). Its
geodesics, reparametrized by d tau = kappa sqrt(T_xi / Phi) d xi with
T_xi = (1/2) m~(theta', theta'), are the Newtonian trajectories at energy E.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

from . import geometry
from .charts import Chart
from .entropy import IGEReport, average_log_volume
from .errors import DomainError, StiffnessError, UsageError
from .fitting import MIN_R2, TAIL_HI, TAIL_LO, tail_fit


# -- potentials -------------------------------------------------------------


@dataclass
class Potential:
    """Scalar potential with gradient and Hessian callbacks."""

    name: str
    phi: callable
    grad: callable
    hess: callable = None
    params: dict = field(default_factory=dict)


def _quadratic(name, k, sign):
    k = np.asarray(k, float)
    return Potential(
        name,
        lambda t: sign * 0.5 * float(np.sum(k * np.asarray(t) ** 2)),
        lambda t: sign * k * np.asarray(t),
        lambda t: sign * np.diag(k),
        {"k": k.tolist()},
    )


def harmonic_potential(omegas, masses):
    """phi = (1/2) sum m_i omega_i^2 theta_i^2, so theta_i'' = -omega_i^2 theta_i."""
    return _quadratic("harmonic", np.asarray(masses, float) * np.asarray(omegas, float) ** 2, 1.0)


def inverted_potential(omegas, masses):
    """phi = -(1/2) sum m_i omega_i^2 theta_i^2, so theta_i'' = +omega_i^2 theta_i."""
    return _quadratic("inverted", np.asarray(masses, float) * np.asarray(omegas, float) ** 2, -1.0)


def free_potential(dim):
    return Potential("free", lambda t: 0.0, lambda t: np.zeros(dim), lambda t: np.zeros((dim, dim)))


def coupled_potential(dim_per_particle, strength, length):
    """Two particles with Gaussian attraction phi = -g exp(-|x1 - x2|^2 / (2 l^2)).

    Coordinates are (x1, x2), each of size ``dim_per_particle``.
    """
    d = int(dim_per_particle)
    g = float(strength)
    l2 = float(length) ** 2

    def split(t):
        t = np.asarray(t, float)
        r = t[:d] - t[d:]
        return r, math.exp(-float(r @ r) / (2 * l2))

    def phi(t):
        return -g * split(t)[1]

    def grad(t):
        r, e = split(t)
        f = g * e * r / l2
        return np.concatenate([f, -f])

    def hess(t):
        r, e = split(t)
        h = g * e / l2 * (np.eye(d) - np.outer(r, r) / l2)
        return np.block([[h, -h], [-h, h]])

    return Potential("coupled", phi, grad, hess, {"strength": g, "length": float(length)})


def make_potential(name, dim, masses, **params):
    """Named potentials used by scenarios."""
    if name == "harmonic":
        return harmonic_potential(np.broadcast_to(params.get("omega", 1.0), dim), masses)
    if name == "inverted":
        return inverted_potential(np.broadcast_to(params.get("omega", 1.0), dim), masses)
    if name == "free":
        return free_potential(dim)
    if name == "coupled":
        if dim % 2:
            raise UsageError("coupled potential needs an even dimension")
        return coupled_potential(dim // 2, params.get("strength", 1.0), params.get("length", 1.0))
    raise UsageError(f"unknown potential {name!r}")


# -- charts -----------------------------------------------------------------


class ConformalChart(Chart):
    """g_ij = Phi(theta) m~_ij with Phi = (E - phi)/eps and m~ = diag(1/sigma_n^2).

    Parameters
    ----------
    potential : Potential
    E : float
        Total energy.
    sigmas : array_like, optional
        Per-coordinate widths; default ``sigma0`` for every coordinate.
    epsilon, kappa, sigma0 : float
        Dimension carriers, all 1 by default.
    """

    def __init__(self, dim, potential, E, sigmas=None, epsilon=1.0, kappa=1.0, sigma0=1.0,
                 chart_id=None):
        super().__init__(dim, chart_id or f"Conformal({potential.name},dim={dim})")
        for k, v in (("epsilon", epsilon), ("kappa", kappa), ("sigma0", sigma0)):
            if not v > 0:
                raise DomainError(f"{k} must be positive")
        self.potential = potential
        self.E = float(E)
        self.epsilon = float(epsilon)
        self.kappa = float(kappa)
        self.sigma0 = float(sigma0)
        s = np.full(self.dim, self.sigma0) if sigmas is None else np.asarray(sigmas, float)
        if s.shape != (self.dim,) or not np.all(s > 0):
            raise DomainError("sigmas must be positive, one per coordinate")
        self.sigmas = s
        self.base_diag = 1.0 / s**2
        self.base_metric = np.diag(self.base_diag)

    @property
    def masses(self):
        return self.epsilon * self.kappa**2 * self.base_diag

    def Phi(self, theta):
        return (self.E - self.potential.phi(theta)) / self.epsilon

    def grad_Phi(self, theta):
        return -np.asarray(self.potential.grad(theta), float) / self.epsilon

    def hess_Phi(self, theta):
        if self.potential.hess is None:
            from .tensors import central_gradient
            return central_gradient(self.grad_Phi, theta)
        return -np.asarray(self.potential.hess(theta), float) / self.epsilon

    def contains(self, theta):
        return super().contains(theta) and self.Phi(theta) > 0

    def validate(self, theta):
        theta = super().validate(theta)
        if not self.Phi(theta) > 0:
            raise DomainError(f"{self.chart_id}: Phi <= 0 at {theta} (outside accessible region)")
        return theta

    def metric(self, theta):
        return self.Phi(theta) * self.base_metric

    def metric_grad(self, theta):
        return self.grad_Phi(theta)[:, None, None] * self.base_metric

    def metric_hess(self, theta):
        return self.hess_Phi(theta)[:, :, None, None] * self.base_metric

    def geodesic_acc(self, theta, v):
        P = self.Phi(theta)
        dP = self.grad_Phi(theta)
        vm = float(v @ (self.base_diag * v))
        return -(dP @ v) / P * v + 0.5 * vm / P * dP / self.base_diag

    def kinetic_xi(self, v):
        return 0.5 * float(v @ (self.base_diag * v))


class IHOChart(ConformalChart):
    """Inverted oscillators: g = (1 + (1/2) sum omega_j^2 theta_j^2) delta at E = 1."""

    def __init__(self, omegas, Xi=1.0, E=1.0):
        om = np.atleast_1d(np.asarray(omegas, float))
        if not np.all(om > 0):
            raise DomainError("all omegas must be positive")
        Xi = np.broadcast_to(np.asarray(Xi, float), om.shape).copy()
        super().__init__(om.size, inverted_potential(om, np.ones(om.size)), E,
                         chart_id=f"IHO(n={om.size})")
        self.omegas = om
        self.Xi = Xi

    @property
    def n_osc(self):
        return self.dim


# -- trajectories -----------------------------------------------------------


@dataclass
class XiTrajectory:
    chart_id: str
    xi: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    tau: np.ndarray
    status: str
    dense: object = None


@dataclass
class TimeTrajectory:
    tau_grid: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    energy: np.ndarray = None
    phi_minus_T: float = None
    status: str = "ok"

    @property
    def energy_drift(self):
        if self.energy is None:
            return None
        return float(np.max(np.abs(self.energy - self.energy[0])) / abs(self.energy[0]))


def _phi_event(chart):
    def ev(t, y):
        return chart.Phi(y[: chart.dim]) - 1e-12

    ev.terminal = True
    ev.direction = -1
    return ev


def conformal_geodesic(chart, theta0, v0, xi_end, tol=1e-12, n_samples=401, method="DOP853"):
    """Geodesic of the conformal metric in the affine parameter xi.

    tau(xi) is integrated alongside, so the result carries both clocks.
    Leaving the accessible region (Phi <= 0) truncates with
    ``status = "domain_exit"``.
    """
    theta0 = chart.validate(theta0)
    v0 = np.asarray(v0, float)
    d = chart.dim
    if not chart.kinetic_xi(v0) > 0:
        raise DomainError("initial xi-velocity must be nonzero")

    def rhs(x, y):
        th, v = y[:d], y[d : 2 * d]
        dtau = chart.kappa * math.sqrt(chart.kinetic_xi(v) / chart.Phi(th))
        return np.concatenate([v, chart.geodesic_acc(th, v), [dtau]])

    grid = np.linspace(0.0, float(xi_end), int(n_samples))
    sol = solve_ivp(rhs, (0.0, float(xi_end)), np.concatenate([theta0, v0, [0.0]]),
                    method=method, rtol=tol, atol=tol, t_eval=grid, dense_output=True,
                    events=[_phi_event(chart)])
    if sol.status == -1:
        raise StiffnessError(f"conformal geodesic failed: {sol.message}")
    return XiTrajectory(chart.chart_id, sol.t.copy(), sol.y[:d].T.copy(), sol.y[d : 2 * d].T.copy(),
                        sol.y[-1].copy(), "domain_exit" if sol.status == 1 else "ok", sol.sol)


def energy(chart, points, velocities):
    """(1/2) sum m theta_dot^2 + phi along a tau-trajectory."""
    return np.array([0.5 * float(v @ (chart.masses * v)) + chart.potential.phi(p)
                     for p, v in zip(points, velocities)])


def reparametrize_to_time(traj, chart, tau_grid=None):
    """Resample a xi-trajectory on a tau grid.

    xi(tau) is found by root-finding on the dense tau(xi) solution; the
    tau-velocity is theta'/(d tau/d xi).
    """
    if traj.dense is None:
        raise UsageError("trajectory lacks dense output")
    d = chart.dim
    tau_max = float(traj.tau[-1])
    if tau_grid is None:
        tau_grid = np.linspace(0.0, tau_max, traj.tau.size)
    tau_grid = np.asarray(tau_grid, float)
    if tau_grid[-1] > tau_max * (1 + 1e-12):
        raise DomainError(f"tau grid ends at {tau_grid[-1]} beyond reach {tau_max}")
    xi_lo, xi_hi = traj.xi[0], traj.xi[-1]
    pts, vel = [], []
    for t in tau_grid:
        if t <= 0:
            x = xi_lo
        elif t >= tau_max:
            x = xi_hi
        else:
            x = brentq(lambda s: traj.dense(s)[-1] - t, xi_lo, xi_hi, xtol=1e-14, rtol=1e-15)
        y = traj.dense(x)
        th, v = y[:d], y[d : 2 * d]
        T = chart.kinetic_xi(v)
        if not T > 0:
            raise DomainError("T_xi vanished along the trajectory")
        pts.append(th)
        vel.append(v / (chart.kappa * math.sqrt(T / chart.Phi(th))))
    pts = np.array(pts)
    vel = np.array(vel)
    Ph = np.array([chart.Phi(p) for p in pts])
    T_tau = 0.5 * chart.kappa**2 * np.sum(chart.base_diag * vel**2, axis=1)
    return TimeTrajectory(tau_grid, pts, vel, energy(chart, pts, vel),
                          float(np.max(np.abs(Ph - T_tau)) / np.max(np.abs(Ph))), traj.status)


def geometrized_trajectory(chart, theta0, thetadot0, tau_end, tau_grid=None, tol=1e-12):
    """Newtonian trajectory through the geometric route.

    The xi-velocity is set equal to the Newtonian velocity, which makes
    d tau/d xi = 1 at the start; xi is integrated until tau exceeds ``tau_end``.
    """
    v0 = np.asarray(thetadot0, float)
    xi_end = 1.2 * tau_end + 1.0
    for _ in range(20):
        tr = conformal_geodesic(chart, theta0, v0, xi_end, tol=tol)
        if tr.tau[-1] >= tau_end or tr.status != "ok":
            break
        xi_end *= 2.0
    if tr.tau[-1] < tau_end:
        raise DomainError(f"geodesic reaches only tau = {tr.tau[-1]:.6g} < {tau_end}")
    if tau_grid is None:
        tau_grid = np.linspace(0.0, tau_end, 401)
    return reparametrize_to_time(tr, chart, tau_grid)


def newton_integrate(masses, grad_phi, theta0, thetadot0, tau_end, tol=1e-12, tau_grid=None,
                     phi=None, method="DOP853"):
    """Direct integration of m theta'' = -grad phi."""
    m = np.asarray(masses, float)
    th0 = np.asarray(theta0, float)
    d = th0.size
    if tau_grid is None:
        tau_grid = np.linspace(0.0, tau_end, 401)

    def rhs(t, y):
        return np.concatenate([y[d:], -np.asarray(grad_phi(y[:d]), float) / m])

    sol = solve_ivp(rhs, (0.0, float(tau_end)), np.concatenate([th0, np.asarray(thetadot0, float)]),
                    method=method, rtol=tol, atol=tol, t_eval=np.asarray(tau_grid, float))
    if sol.status != 0:
        raise StiffnessError(f"Newton integration failed: {sol.message}")
    pts, vel = sol.y[:d].T.copy(), sol.y[d:].T.copy()
    E = None
    if phi is not None:
        E = np.array([0.5 * float(v @ (m * v)) + phi(p) for p, v in zip(pts, vel)])
    return TimeTrajectory(sol.t.copy(), pts, vel, E)


def geometrization_error(chart, theta0, thetadot0, tau_end=10.0, n=401, tol=1e-12):
    """Sup-norm position difference between both routes plus energy diagnostics."""
    grid = np.linspace(0.0, tau_end, n)
    geo = geometrized_trajectory(chart, theta0, thetadot0, tau_end, grid, tol)
    ref = newton_integrate(chart.masses, chart.potential.grad, theta0, thetadot0, tau_end, tol,
                           grid, chart.potential.phi)
    return {
        "position_sup_error": float(np.max(np.abs(geo.points - ref.points))),
        "energy_drift": geo.energy_drift,
        "newton_energy_drift": ref.energy_drift,
        "phi_minus_T": geo.phi_minus_T,
        "geometrized": geo,
        "newton": ref,
    }


# -- inverted oscillators: curvature ---------------------------------------


def printed_iho_scalar(omegas, theta):
    """Printed scalar curvature of the two-oscillator chart."""
    w1, w2 = omegas
    t1, t2 = theta
    num = 4 * (t1**2 * w1**4 + t2**2 * w2**4) - 4 * (t1**2 + t2**2) * w1**2 * w2**2 \
        - 8 * (w1**2 + w2**2)
    return num / (t1**2 * w1**2 + t2**2 * w2**2 + 2) ** 3


def printed_iho_weyl1212(omega, theta):
    """Printed equal-frequency W_1212 of the two-oscillator chart."""
    t1, t2 = theta
    w = omega
    num = 8 * w**4 * (t1**2 + t2**2) + 2 * w**6 * (t1**4 + t2**4) + 4 * w**6 * t1**2 * t2**2
    return num / (t1**2 * w**2 + t2**2 * w**2 + 2) ** 3


def iho_curvature(chart, theta):
    """Curvature report of an IHO chart; for two oscillators the printed
    scalar and W_1212 are attached under ``extras``."""
    rep = geometry.curvature(chart, theta)
    if chart.n_osc == 2:
        theta = np.asarray(theta, float)
        ex = {
            "printed_scalar": float(printed_iho_scalar(chart.omegas, theta)),
            "computed_W1212": float(rep.weyl_projective[0, 1, 0, 1]),
        }
        if np.isclose(chart.omegas[0], chart.omegas[1], rtol=1e-12):
            ex["printed_W1212"] = float(printed_iho_weyl1212(chart.omegas[0], theta))
        rep.extras.update(ex)
    return rep


# -- inverted oscillators: entropy -----------------------------------------

EQUAL_RATIO = 1.05
DISPARATE_RATIO = 20.0


def _compositions(p, parts):
    """All tuples of ``parts`` non-negative ints summing to ``p``."""
    for c in itertools.combinations(range(p + parts - 1), parts - 1):
        prev = -1
        out = []
        for x in c + (p + parts - 1,):
            out.append(x - prev - 1)
            prev = x
        yield out


def log_iho_volume(omegas, log_theta, n_gauss=24):
    """log of int_{prod [0, theta_j]} (1 + (1/2) sum omega_j^2 u_j^2)^{n/2} d^n u.

    ``log_theta`` has shape (n, m) for m samples. Even n uses the exact
    multinomial expansion; odd n <= 3 uses tensor Gauss-Legendre on the
    unit box after scaling.
    """
    om = np.asarray(omegas, float)
    lt = np.atleast_2d(np.asarray(log_theta, float))
    n = om.size
    if n % 2 == 0:
        p = n // 2
        terms = []
        for k in _compositions(p, n + 1):
            k0, kj = k[0], np.asarray(k[1:], float)
            c = gammaln(p + 1) - gammaln(k0 + 1) - np.sum(gammaln(kj + 1))
            c += np.sum(kj * np.log(0.5 * om**2)) - np.sum(np.log(2 * kj + 1))
            terms.append(c + np.sum((2 * kj + 1)[:, None] * lt, axis=0))
        return logsumexp(np.array(terms), axis=0)
    if n > 3:
        raise UsageError("odd oscillator counts above 3 are not supported")
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * n), indexing="ij")
    U2 = np.stack([g.ravel() ** 2 for g in grids])  # (n, q)
    W = np.prod(np.stack(np.meshgrid(*([w] * n), indexing="ij")), axis=0).ravel()
    # c_j = (1/2) omega_j^2 theta_j^2 ; log s = log(1 + sum c_j)
    logc = np.log(0.5 * om**2)[:, None] + 2 * lt
    log_s = np.logaddexp(0.0, logsumexp(logc, axis=0))
    chat = np.exp(logc - log_s)  # (n, m), each <= 1
    inner = np.exp(-log_s)[None, :] + U2.T @ chat  # (q, m)
    I = W @ inner ** (0.5 * n)
    return np.sum(lt, axis=0) + 0.5 * n * log_s + np.log(I)


def log_iho_volume_printed(omegas, log_theta):
    """Printed large-theta approximation (1/n) 2^{-n/2} prod theta [sum omega^2 theta^2]^{n/2}."""
    om = np.asarray(omegas, float)
    lt = np.atleast_2d(np.asarray(log_theta, float))
    n = om.size
    return (-math.log(n) - 0.5 * n * math.log(2.0) + np.sum(lt, axis=0)
            + 0.5 * n * logsumexp(2 * np.log(om)[:, None] + 2 * lt, axis=0))


def iho_regime(omegas):
    om = np.asarray(omegas, float)
    ratio = float(om.max() / om.min())
    if ratio <= EQUAL_RATIO:
        return "equal", ratio
    if ratio >= DISPARATE_RATIO:
        return "disparate", ratio
    return "ambiguous", ratio


def iho_predictions(omegas):
    """Slope predictions for two oscillators: volume-formula exponents and
    the coefficients stated for the entropy itself."""
    om = np.asarray(omegas, float)
    w = float(om.mean())
    wmax = float(om.max())
    return {
        "exact_exponent": float(om.sum() + om.size * wmax),
        "volume_formula_equal": 4.0 * w,
        "volume_formula_dominant": 3.0 * wmax,
        "stated_entropy_equal": 2.0 * w,
        "stated_entropy_dominant": wmax,
    }


def iho_ige(chart, tau_end=None, n_samples=2000, decay=0.0, lo=TAIL_LO, hi=TAIL_HI,
            min_r2=MIN_R2):
    """Entropy slope of the IHO chart along theta_j = Xi_j e^{omega_j tau}.

    ``decay`` adds a decaying mode: theta_j = Xi_j (e^{w tau} + c e^{-w tau})/(1 + c).
    """
    om = chart.omegas
    Xi = chart.Xi
    if not np.all(Xi > 0):
        raise DomainError("Xi must be positive")
    if tau_end is None:
        tau_end = 20.0 / float(om.max())
    tau = np.linspace(0.0, tau_end, n_samples + 1)[1:]
    tau = np.concatenate([[0.0], tau])
    lt = np.log(Xi)[:, None] + om[:, None] * tau[None, :]
    if decay:
        lt = (np.log(Xi)[:, None] + np.logaddexp(om[:, None] * tau, math.log(decay) - om[:, None] * tau)
              - math.log1p(decay))
    # exact volume of the box [0, theta(tau)]
    logV = log_iho_volume(om, lt)
    S = average_log_volume(tau, logV)
    fit = tail_fit(tau[1:], S[1:], lo, hi, min_r2)
    S_pr = average_log_volume(tau, log_iho_volume_printed(om, lt))
    fit_pr = tail_fit(tau[1:], S_pr[1:], lo, hi, 0.0)
    pred = iho_predictions(om)
    regime, ratio = iho_regime(om)
    if om.size != 2:
        expected = pred["exact_exponent"]
    elif regime == "equal":
        expected = pred["volume_formula_equal"]
    elif regime == "disparate":
        expected = pred["volume_formula_dominant"]
    else:
        expected = pred["exact_exponent"]
    notes = {
        "regime": regime,
        "frequency_ratio": ratio,
        "predictions": pred,
        "printed_approximation_slope": fit_pr.slope,
        "Omega": float(om.sum()),
    }
    if om.size == 2:
        stated = pred["stated_entropy_equal"] if regime == "equal" else pred["stated_entropy_dominant"]
        notes["stated_coefficient_discrepancy"] = {
            "stated_slope": stated, "volume_slope": expected, "ratio": expected / stated,
        }
    return IGEReport(
        chart_id=chart.chart_id,
        params={"omegas": om.tolist(), "Xi": Xi.tolist(), "tau_end": float(tau_end),
                "decay": float(decay)},
        slope=fit.slope,
        slope_expected=expected,
        relative_error=abs(fit.slope - expected) / expected,
        r_squared=fit.r_squared,
        fit_window=fit.window,
        notes=notes,
    )


# -- Ohmic ensemble ---------------------------------------------------------


@dataclass
class OhmicSpectrum:
    cutoff: float

    def __post_init__(self):
        if not self.cutoff > 0:
            raise DomainError("cutoff must be positive")

    def density(self, omega):
        w = np.asarray(omega, float)
        return np.where((w >= 0) & (w <= self.cutoff), 2.0 * w / self.cutoff**2, 0.0)

    def normalization(self):
        """int_0^cutoff rho = [w^2/cutoff^2]_0^cutoff."""
        return self.cutoff**2 / self.cutoff**2

    def mean(self):
        return 2.0 * self.cutoff / 3.0

    def second_moment(self):
        return self.cutoff**2 / 2.0

    def quantiles(self, m):
        """m frequencies at the midpoint quantiles of rho."""
        q = (np.arange(m) + 0.5) / m
        return self.cutoff * np.sqrt(q)


def log_ohmic_avg_volume(n, Omega, xi, tau, Xi=1.0):
    """Printed continuum-spectrum averaged volume, in log form."""
    tau = np.asarray(tau, float)
    c = xi * Omega
    return (-math.log(3 * n) - 1.5 * n * math.log(2.0) + 6 * n * math.log(Xi)
            + 1.5 * n * math.log(c * c / 2.0) + 1.5 * n * c * tau - np.log(tau))


def ohmic_ensemble(n, Omega, xi, tau_end=None, n_samples=2000, Xi=1.0, lo=TAIL_LO, hi=TAIL_HI,
                   min_r2=MIN_R2):
    """Entropy slope of the 3n-oscillator ensemble with an Ohmic spectrum.

    The averaged volume is the printed continuum expression; a discrete
    3n-frequency evaluation of the preceding (pre-continuum) volume is
    reported as a diagnostic together with its exponent.
    """
    if not (int(n) >= 1 and Omega > 0 and xi > 0):
        raise DomainError("need n >= 1, Omega > 0, xi > 0")
    n = int(n)
    rate = 1.5 * n * xi * Omega
    if tau_end is None:
        tau_end = 100.0 / rate
    tau = np.linspace(0.0, tau_end, n_samples + 1)[1:]
    S = log_ohmic_avg_volume(n, Omega, xi, tau, Xi)
    fit = tail_fit(tau, S, lo, hi, min_r2)
    spec = OhmicSpectrum(xi * Omega)
    # discrete diagnostic: 3n quantile frequencies in the pre-continuum volume
    w = spec.quantiles(3 * n)
    tg = np.concatenate([[0.0], tau])
    logV5 = (-math.log(3 * n) - 1.5 * n * math.log(2.0) + 3 * n * math.log(Xi) + Omega * tg
             + 1.5 * n * logsumexp(2 * math.log(Xi) + 2 * np.log(w)[:, None] + 2 * w[:, None] * tg,
                                   axis=0))
    S5 = average_log_volume(tg, logV5)
    fit5 = tail_fit(tg[1:], S5[1:], lo, hi, 0.0)
    return IGEReport(
        chart_id=f"IHO-Ohmic(3n={3 * n})",
        params={"n": n, "Omega": float(Omega), "xi": float(xi), "tau_end": float(tau_end)},
        slope=fit.slope,
        slope_expected=rate,
        relative_error=abs(fit.slope - rate) / rate,
        r_squared=fit.r_squared,
        fit_window=fit.window,
        notes={
            "normalization": spec.normalization(),
            "mean_frequency": spec.mean(),
            "discrete_pre_continuum_slope": fit5.slope,
            "discrete_pre_continuum_exponent": float(Omega + 3 * n * w.max()),
            "non_compactifiable": True,
        },
    )
