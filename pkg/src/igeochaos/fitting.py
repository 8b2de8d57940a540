"""Straight-line tail fits shared by the Jacobi and entropy modules."""

from dataclasses import dataclass

import numpy as np

from .errors import FitError

TAIL_LO = 0.6
TAIL_HI = 1.0
MIN_R2 = 0.999


@dataclass
class LineFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int


def linear_fit(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xm = x.mean()
    ym = y.mean()
    sxx = np.sum((x - xm) ** 2)
    sxy = np.sum((x - xm) * (y - ym))
    slope = sxy / sxx
    intercept = ym - slope * xm
    ss_res = np.sum((y - (intercept + slope * x)) ** 2)
    ss_tot = np.sum((y - ym) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def tail_fit(tau, y, lo=TAIL_LO, hi=TAIL_HI, min_r2=MIN_R2, require_increasing=False):
    """Least-squares line through ``y`` over ``[lo tau_end, hi tau_end]``.

    Raises
    ------
    FitError
        If the window is too small, the data are not finite, the tail is
        not increasing (when requested), or r^2 < ``min_r2``.
    """
    tau = np.asarray(tau, float)
    y = np.asarray(y, float)
    t_end = tau[-1]
    m = (tau >= lo * t_end) & (tau <= hi * t_end)
    if m.sum() < 3:
        raise FitError("fit window holds fewer than 3 samples", {"n": int(m.sum())})
    xt, yt = tau[m], y[m]
    if not np.all(np.isfinite(yt)):
        raise FitError("non-finite values in fit window (non-positive data?)")
    if require_increasing and np.any(np.diff(yt) < 0):
        raise FitError("tail is not monotone increasing")
    slope, icpt, r2 = linear_fit(xt, yt)
    if r2 < min_r2:
        raise FitError(f"tail fit r^2 = {r2:.6f} below {min_r2}", {"r_squared": r2, "slope": slope})
    return LineFit(slope, icpt, r2, (float(xt[0]), float(xt[-1])), int(m.sum()))
