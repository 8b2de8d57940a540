"""Geodesic flows: adaptive integration, closed-form families, lengths."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .charts import Chart, SIGMA_GUARD
from .errors import DomainError, NumericError, StiffnessError
from .families import StatisticalFamily, as_coords, build_family


def chart_of(obj):
    if isinstance(obj, StatisticalFamily):
        return obj.chart
    if isinstance(obj, Chart):
        return obj
    raise TypeError(f"expected a family or chart, got {type(obj).__name__}")


def speed_norm(chart, points, velocities):
    return np.array(
        [math.sqrt(max(float(v @ chart.metric(p) @ v), 0.0)) for p, v in zip(points, velocities)]
    )


@dataclass
class GeodesicTrajectory:
    """Sampled geodesic. ``status`` is ``"ok"`` or ``"domain_exit"``."""

    chart_id: str
    tau_grid: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    speed_norm: np.ndarray
    family_param: float = None
    status: str = "ok"
    message: str = ""

    @property
    def truncated(self):
        return self.status != "ok"

    def speed_drift(self):
        s = self.speed_norm
        return float(np.max(np.abs(s - s[0])) / s[0]) if s[0] > 0 else 0.0

    def to_csv(self, names=None):
        d = self.points.shape[1]
        names = names or [f"x{i}" for i in range(d)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["tau"] + list(names) + [f"d{n}" for n in names] + ["speed_norm"])
        for t, p, v, s in zip(self.tau_grid, self.points, self.velocities, self.speed_norm):
            w.writerow([_f17(t)] + [_f17(x) for x in p] + [_f17(x) for x in v] + [_f17(s)])
        return buf.getvalue()

    def to_dict(self):
        return {
            "chart_id": self.chart_id,
            "tau": self.tau_grid.tolist(),
            "points": self.points.tolist(),
            "velocities": self.velocities.tolist(),
            "speed_norm": self.speed_norm.tolist(),
            "family_param": self.family_param,
            "status": self.status,
        }


def _f17(x):
    return format(float(x), ".17g")


def _domain_events(chart):
    events = []
    for k in np.flatnonzero(chart.positive):
        def ev(t, y, k=k):
            return y[k] - SIGMA_GUARD * 10

        ev.terminal = True
        ev.direction = -1
        events.append(ev)
    return events


def default_grid(tau_end, n=401):
    return np.linspace(0.0, float(tau_end), int(n))


def integrate_geodesic(family, theta0, v0, tau_end, tol=1e-10, tau_grid=None,
                       n_samples=401, method="RK45", family_param=None):
    """Integrate theta'' + Gamma(theta', theta') = 0 from (theta0, v0).

    Parameters
    ----------
    family : StatisticalFamily or Chart
    theta0, v0 : array_like
    tau_end : float
        May be negative for backward integration.
    tol : float
        Used for both rtol and atol.
    tau_grid : array_like, optional
        Output samples (default: ``n_samples`` uniform points).

    Returns
    -------
    GeodesicTrajectory
        Partial trajectory with ``status="domain_exit"`` when a sigma-type
        coordinate reaches the guard.
    """
    ch = chart_of(family)
    theta0 = as_coords(family, theta0) if isinstance(family, StatisticalFamily) else ch.validate(theta0)
    v0 = np.asarray(v0, dtype=float)
    if tau_end == 0 or not tol > 0:
        raise DomainError("need tau_end != 0 and tol > 0")
    d = ch.dim
    grid = default_grid(tau_end, n_samples) if tau_grid is None else np.asarray(tau_grid, float)

    def rhs(t, y):
        return np.concatenate([y[d:], ch.geodesic_acc(y[:d], y[d:])])

    sol = solve_ivp(
        rhs, (0.0, float(grid[-1])), np.concatenate([theta0, v0]), method=method,
        rtol=tol, atol=tol, t_eval=grid, events=_domain_events(ch) or None,
    )
    if sol.status == -1:
        raise StiffnessError(f"geodesic integration failed: {sol.message}", {"t": float(sol.t[-1]) if sol.t.size else 0.0})
    status = "domain_exit" if sol.status == 1 else "ok"
    pts = sol.y[:d].T.copy()
    vel = sol.y[d:].T.copy()
    return GeodesicTrajectory(
        chart_id=ch.chart_id,
        tau_grid=sol.t.copy(),
        points=pts,
        velocities=vel,
        speed_norm=speed_norm(ch, pts, vel),
        family_param=family_param,
        status=status,
        message=sol.message if status != "ok" else "",
    )


# ---------------------------------------------------------------------------
# closed-form blocks


def exp_block(tau, A, alpha):
    """mu(tau) = A [cosh(alpha tau) - sinh(alpha tau)] and its derivatives."""
    e = A * np.exp(-alpha * tau)
    return e, -alpha * e, alpha * alpha * e


def gauss_block(tau, B, beta, C, D):
    """Printed hyperbolic (mu, sigma) solution and its first derivatives.

    mu = B^2/(2 beta) / (e^{-2 beta tau} + k) + C,
    sigma = B e^{-beta tau} / (e^{-2 beta tau} + k) + D, k = B^2/(8 beta^2).
    """
    tau = np.asarray(tau, dtype=float)
    k = B * B / (8.0 * beta * beta)
    e1 = np.exp(-beta * tau)
    e2 = e1 * e1
    den = e2 + k
    mu = B * B / (2.0 * beta) / den + C
    sig = B * e1 / den + D
    dmu = B * B * e2 / den**2
    dsig = B * beta * e1 * (e2 - k) / den**2
    return mu, sig, dmu, dsig


def gauss_block_log_inv_sigma(tau, B, beta):
    """log(1/sigma) for D = 0, stable at large tau."""
    tau = np.asarray(tau, dtype=float)
    k = B * B / (8.0 * beta * beta)
    # 1/sigma = (e^{-beta tau} + k e^{beta tau}) / B
    return np.logaddexp(-beta * tau, math.log(k) + beta * tau) - math.log(B)


@dataclass
class ClosedFormGeodesic:
    """Closed-form geodesic assembled from exponential and Gaussian blocks.

    ``blocks`` is a list of ``("exp", {"A", "alpha"})`` or
    ``("gauss", {"B", "beta", "C", "D"})`` entries in chart order.
    """

    chart_id: str
    blocks: list
    constants: dict = field(default_factory=dict)

    @property
    def dim(self):
        return sum(1 if k == "exp" else 2 for k, _ in self.blocks)

    def evaluate(self, tau):
        """Return (points, velocities) with shape (len(tau), dim)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        pts, vel = [], []
        for kind, c in self.blocks:
            if kind == "exp":
                m, dm, _ = exp_block(tau, c["A"], c["alpha"])
                pts.append(m)
                vel.append(dm)
            else:
                m, s, dm, ds = gauss_block(tau, c["B"], c["beta"], c["C"], c["D"])
                pts += [m, s]
                vel += [dm, ds]
        return np.stack(pts, axis=1), np.stack(vel, axis=1)

    def position(self, tau):
        p, _ = self.evaluate(tau)
        return p[0] if np.ndim(tau) == 0 else p

    def initial_conditions(self):
        p, v = self.evaluate(0.0)
        return p[0], v[0]

    def rates(self):
        """Per-block growth rates (alpha for exp blocks, beta for Gaussian blocks)."""
        return [c["alpha"] if k == "exp" else c["beta"] for k, c in self.blocks]

    def speed(self):
        """Exact constant speed: sqrt(sum alpha^2 + sum 2 beta^2) when D = 0."""
        s2 = sum(c["alpha"] ** 2 if k == "exp" else 2.0 * c["beta"] ** 2 for k, c in self.blocks)
        return math.sqrt(s2)

    def trajectory(self, tau_grid, family_param=None):
        tau_grid = np.asarray(tau_grid, dtype=float)
        p, v = self.evaluate(tau_grid)
        fam = family_for_chart_id(self.chart_id)
        return GeodesicTrajectory(
            self.chart_id, tau_grid, p, v, speed_norm(fam.chart, p, v), family_param
        )


def family_for_chart_id(chart_id):
    if chart_id.startswith("GaussianProduct6N"):
        N = int(chart_id.split("N=")[1].rstrip(")"))
        return build_family("GaussianProduct6N", N=N)
    return build_family(chart_id)


def _need_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise DomainError(f"{k} must be positive, got {v!r}")


def ed1_geodesic(A1, alpha1, B1, beta1, C1=0.0, C2=0.0):
    _need_positive(A1=A1, alpha1=alpha1, beta1=beta1)
    consts = dict(A1=A1, alpha1=alpha1, B1=B1, beta1=beta1, C1=C1, C2=C2)
    return ClosedFormGeodesic(
        "ED1",
        [("exp", {"A": A1, "alpha": alpha1}), ("gauss", {"B": B1, "beta": beta1, "C": C1, "D": C2})],
        consts,
    )


def ed2_geodesic(A2, alpha2, B2, beta2, C1=0.0, C2=0.0, C3=0.0, C4=0.0):
    _need_positive(alpha2=alpha2, beta2=beta2)
    consts = dict(A2=A2, alpha2=alpha2, B2=B2, beta2=beta2, C1=C1, C2=C2, C3=C3, C4=C4)
    return ClosedFormGeodesic(
        "ED2",
        [
            ("gauss", {"B": A2, "beta": alpha2, "C": C1, "D": C2}),
            ("gauss", {"B": B2, "beta": beta2, "C": C3, "D": C4}),
        ],
        consts,
    )


def gaussian6N_geodesic(blocks):
    """``blocks``: 3N dicts with keys B, beta, C, D in (alpha, a) order."""
    blocks = list(blocks)
    if len(blocks) % 3 or not blocks:
        raise DomainError("need 3N Gaussian blocks")
    for b in blocks:
        _need_positive(beta=b["beta"])
    N = len(blocks) // 3
    return ClosedFormGeodesic(
        f"GaussianProduct6N(N={N})",
        [("gauss", {"B": b["B"], "beta": b["beta"], "C": b.get("C", 0.0), "D": b.get("D", 0.0)})
         for b in blocks],
        {"blocks": blocks},
    )


def closed_form_ed1(constants, tau):
    """(mu1, mu2, sigma2) at ``tau`` for constants A1, alpha1, B1, beta1, C1, C2."""
    return ed1_geodesic(**constants).position(tau)


def closed_form_ed2(constants, tau):
    """(mu1, sigma1, mu2, sigma2) for constants A2, alpha2, B2, beta2, C1..C4."""
    return ed2_geodesic(**constants).position(tau)


def closed_form_gaussian6N(blocks, tau):
    return gaussian6N_geodesic(blocks).position(tau)


def gauss_block_sigma_range(B, beta, D):
    """(inf, sup) of sigma over tau in [0, inf) for the printed block."""
    k = B * B / (8.0 * beta * beta)
    s0 = B / (1.0 + k) + D
    sup = math.sqrt(2.0) * beta + D if k < 1 else s0
    return D, sup


# ---------------------------------------------------------------------------
# initial conditions <-> constants


def exp_block_from_initial(mu0, dmu0):
    if not mu0 > 0:
        raise DomainError("exponential block needs mu(0) > 0")
    return {"A": float(mu0), "alpha": float(-dmu0 / mu0)}


def gauss_block_from_initial(mu0, sigma0, dmu0, dsigma0, tol=1e-13, max_iter=100):
    """Solve {mu, sigma, mu', sigma'}(0) -> {B, beta, C, D} by damped Newton.

    The printed family ties the semicircle radius to the speed, so generic
    data give D != 0 (``in_family`` False). The Newton iteration is seeded
    with the algebraic solution of the tau = 0 relations.
    """
    target = np.array([mu0, sigma0, dmu0, dsigma0], dtype=float)
    if not dmu0 > 0:
        raise DomainError("the printed Gaussian block has mu' > 0 for all tau")
    # tau = 0 relations: mu' = 8 k beta^2/(1+k)^2, sigma'/mu' = (1-k)/sqrt(8k)
    q = dsigma0 / dmu0
    sk = -math.sqrt(2.0) * q + math.sqrt(2.0 * q * q + 1.0)
    k = sk * sk
    beta = math.sqrt(dmu0 * (1.0 + k) ** 2 / (8.0 * k))
    B = math.sqrt(8.0 * k) * beta
    C = mu0 - B * B / (2.0 * beta * (1.0 + k))
    D0 = sigma0 - B / (1.0 + k)
    x = np.array([B, beta, C, D0])

    def F(x):
        m, s, dm, ds = gauss_block(0.0, *x)
        return np.array([m, s, dm, ds]) - target

    f = F(x)
    for it in range(max_iter):
        if np.max(np.abs(f)) < tol * max(1.0, np.max(np.abs(target))):
            break
        J = np.empty((4, 4))
        for j in range(4):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (F(xp) - F(xm)) / (2 * h)
        step = np.linalg.lstsq(J, -f, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            xn = x + lam * step
            if xn[1] > 0:
                fn = F(xn)
                if np.linalg.norm(fn) < np.linalg.norm(f):
                    break
            lam *= 0.5
        x, f = xn, fn
    else:
        raise NumericError("constant inversion did not converge", {"residual": float(np.max(np.abs(f)))})
    B, beta, C, D = (float(c) for c in x)
    return {"B": B, "beta": beta, "C": C, "D": D, "in_family": abs(D) < 1e-9}


def constants_from_initial(kind, theta0, v0):
    """Invert initial data to closed-form constants for ED1/ED2/6N charts."""
    th = np.asarray(theta0, float)
    v = np.asarray(v0, float)
    if kind == "ED1":
        e = exp_block_from_initial(th[0], v[0])
        g = gauss_block_from_initial(th[1], th[2], v[1], v[2])
        return dict(A1=e["A"], alpha1=e["alpha"], B1=g["B"], beta1=g["beta"], C1=g["C"], C2=g["D"])
    if kind == "ED2":
        a = gauss_block_from_initial(th[0], th[1], v[0], v[1])
        b = gauss_block_from_initial(th[2], th[3], v[2], v[3])
        return dict(A2=a["B"], alpha2=a["beta"], C1=a["C"], C2=a["D"],
                    B2=b["B"], beta2=b["beta"], C3=b["C"], C4=b["D"])
    if kind.startswith("GaussianProduct6N"):
        out = []
        for i in range(0, th.size, 2):
            g = gauss_block_from_initial(th[i], th[i + 1], v[i], v[i + 1])
            out.append({k: g[k] for k in ("B", "beta", "C", "D")})
        return out
    raise DomainError(f"no closed form for {kind!r}")


# ---------------------------------------------------------------------------
# residuals and lengths


def ode_residual(chart, path, tau, h=1e-3):
    """Max |theta'' + Gamma(theta', theta')| of a callable path at ``tau``.

    Derivatives by fourth-order central differences.
    """
    f = lambda t: np.asarray(path(t), dtype=float)
    p = f(tau)
    d1 = (f(tau - 2 * h) - 8 * f(tau - h) + 8 * f(tau + h) - f(tau + 2 * h)) / (12 * h)
    d2 = (-f(tau - 2 * h) + 16 * f(tau - h) - 30 * p + 16 * f(tau + h) - f(tau + 2 * h)) / (12 * h * h)
    return float(np.max(np.abs(d2 - chart.geodesic_acc(p, d1))))


class LengthFunction:
    """Cumulative arc length Theta(tau) on a trajectory's grid."""

    def __init__(self, tau, theta):
        self.tau = np.asarray(tau, float)
        self.values = np.asarray(theta, float)

    def __call__(self, tau):
        return np.interp(tau, self.tau, self.values)


def geodesic_length(trajectory):
    """Theta(tau) = int_0^tau |theta'| dtau' by composite trapezoid on the grid."""
    t = trajectory.tau_grid
    s = trajectory.speed_norm
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (s[1:] + s[:-1]) * np.diff(t))])
    return LengthFunction(t, cum)


def matched_geodesic(kind, alpha, A=1.0, B=1.0):
    """Geodesic of the alpha-labelled family used for ED1/ED2 comparisons.

    All block rates equal alpha; the remaining constants are shared.
    """
    if kind == "ED1":
        return ed1_geodesic(A1=A, alpha1=alpha, B1=B, beta1=alpha)
    if kind == "ED2":
        return ed2_geodesic(A2=B, alpha2=alpha, B2=B, beta2=alpha)
    raise DomainError(f"unknown comparison chart {kind!r}")


def length_sensitivity(chart, alpha, dalpha, tau, n=2001):
    """|Theta(tau; alpha + dalpha) - Theta(tau; alpha)| for ED1 or ED2."""
    if abs(dalpha) > 0.1 * alpha:
        raise DomainError("dalpha must satisfy |dalpha| <= 0.1 alpha")
    kind = chart if isinstance(chart, str) else chart.chart_id
    grid = np.linspace(0.0, tau, n)
    L0 = geodesic_length(matched_geodesic(kind, alpha).trajectory(grid))(tau)
    L1 = geodesic_length(matched_geodesic(kind, alpha + dalpha).trajectory(grid))(tau)
    return float(abs(L1 - L0))
