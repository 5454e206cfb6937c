"""Logarithmic potential of a radial density on R^n.

    v(r) = -(1/gamma_n) int_{R^n} ln((1 + |y|)/|r e_1 - y|) f(|y|) dy

The density is supplied in sphere form: ``log_weight(tau)`` is
ln[f(s) e^{-n w0(s)}] at the height ``tau`` of s = |y|, so that

    int_{R^n} F(|y|) f(|y|) dy
        = |S^{n-1}| int_{-1}^{1} F(s(tau)) e^{log_weight(tau)} (1 - tau^2)^{(n-2)/2} dtau.

Radial integration uses Gauss-Legendre panels graded geometrically toward
both poles and toward the height of the evaluation radius (where the
angularly averaged kernel loses smoothness).  The angular average of the
log kernel uses a Gauss-Jacobi rule on the polar cosine; near the diagonal
the log singularity is split off and integrated in closed form.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import roots_jacobi, roots_legendre

from .problem import constants
from .spectral import plane_radius, sphere_height

# split threshold on delta = (r - s)^2 / (2rs)
NEAR_DIAGONAL = 1.0
SERIES_TERMS = 60
GRADING = 0.15
MIN_PANEL = 1e-13


class GreenError(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def _angular_rules(n: int, K: int):
    a = (n - 3) / 2.0
    c, w = roots_jacobi(K, a, a)
    w = w / w.sum()
    Z = 2.0 ** (2 * a + 1) * beta_fn(a + 1, a + 1)
    # [1, 2] piece of x = 1 - c in (0, 2]: weight (2 - x)^a, x^a smooth there
    y1, w1 = roots_jacobi(K, a, 0.0)
    x_hi = 1.0 + 0.5 * (1.0 + y1)
    w_hi = w1 * 0.5 ** (a + 1) * x_hi ** a / Z
    # [0, 1] piece: (2 - x)^a = 2^a sum_k binom(a, k) (-x/2)^k, ratio 1/2 on [0, 1]
    binom = [1.0]
    for k in range(1, SERIES_TERMS):
        binom.append(binom[-1] * (a - k + 1) / k * -0.5)
        if binom[-1] == 0.0:
            break
    series = np.array([2.0 ** a * b / Z for b in binom])
    return a, c, w, (x_hi, w_hi), series


def _power_log_moments(a: float, delta: np.ndarray, count: int) -> np.ndarray:
    """int_0^1 x^{a+k} ln(delta + x) dx, shape (len(delta), count), 0 <= delta < 1."""
    delta = np.asarray(delta, dtype=float)
    out = np.empty((delta.size, count))
    zero = delta == 0.0
    d = np.where(zero, 1.0, delta)
    # H_m = int_0^1 x^m/(x + delta) dx; H_m = 1/m - delta H_{m-1} is stable for delta < 1
    if float(a).is_integer():
        m, H = 0.0, np.log1p(1.0 / d)
    else:
        sd = np.sqrt(d)
        m, H = 0.5, 2.0 - 2.0 * sd * np.arctan(1.0 / sd)
    ld = np.log1p(d)
    k = 0
    while k < count:
        m += 1.0
        H = 1.0 / m - d * H
        if m >= a + 1.0 - 1e-12:
            out[:, k] = (ld - H) / m
            k += 1
    if np.any(zero):
        out[zero] = -1.0 / (a + 1.0 + np.arange(count)) ** 2
    return out


def mean_log_distance(n: int, r: float, s: np.ndarray, K: int) -> np.ndarray:
    """Average over omega in S^{n-1} of ln|r e_1 - s omega|, vectorized in s.

    Writing |r e_1 - s omega|^2 = 2rs (delta + x) with x = 1 - cos and
    delta = (r - s)^2 / (2rs), the log singularity at x = -delta is only
    troublesome for delta < 1; there the [0, 1] part of the x-integral is
    done in closed form and the rest by Gauss-Jacobi.
    """
    a, c, w, (x_hi, w_hi), series = _angular_rules(n, K)
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    delta = (r - s) ** 2 / (2.0 * r * s)
    near = delta < NEAR_DIAGONAL
    far = ~near
    if np.any(far):
        sf = s[far][:, None]
        d2 = (r - sf) ** 2 + 2.0 * r * sf * (1.0 - c[None, :])
        out[far] = 0.5 * (np.log(d2) @ w)
    if np.any(near):
        d = delta[near]
        mom = _power_log_moments(a, d, len(series))
        e = np.log(d[:, None] + x_hi[None, :]) @ w_hi + mom @ series
        out[near] = 0.5 * (np.log(2.0 * r * s[near]) + e)
    return out


def _graded(lo: float, hi: float, toward_lo: bool, toward_hi: bool) -> list[float]:
    """Breakpoints on [lo, hi] refined geometrically toward the flagged ends."""
    pts = [lo, hi]
    width = hi - lo
    mid = 0.5 * (lo + hi)
    pts.append(mid)
    for flag, end, sign in ((toward_lo, lo, 1.0), (toward_hi, hi, -1.0)):
        if not flag:
            continue
        h = 0.5 * width * GRADING
        while h > max(MIN_PANEL, 4e-16 * abs(end)):
            pts.append(end + sign * h)
            h *= GRADING
    return sorted(set(pts))


def radial_nodes(r: float, S_rad: int, breaks: Sequence[float] = ()):
    """Heights and weights (without the density) for the tau integral."""
    tau_r = sphere_height(r)
    cuts = sorted({-1.0, 1.0, tau_r, *breaks})
    x, w = roots_legendre(S_rad)
    T, W = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        pts = _graded(lo, hi, True, True)
        for a, b in zip(pts[:-1], pts[1:]):
            T.append(0.5 * (b - a) * x + 0.5 * (a + b))
            W.append(0.5 * (b - a) * w)
    T = np.concatenate(T)
    W = np.concatenate(W)
    keep = (T > -1.0) & (T < 1.0)
    return T[keep], W[keep]


def log_potential(n: int, r: float, log_weight: Callable[[np.ndarray], np.ndarray], *,
                  S_rad: int = 16, K_ang: int = 16, breaks: Sequence[float] = ()) -> float:
    """v(r) for the sphere-form density ``log_weight``."""
    if not r > 0:
        raise GreenError("the potential is evaluated at r > 0")
    c = constants(n)
    tau, wt = radial_nodes(r, S_rad, breaks)
    lw = np.asarray(log_weight(tau), dtype=float)
    with np.errstate(divide="ignore"):
        lw = lw + ((n - 2) / 2.0) * np.log1p(-tau * tau)
    live = lw > -745.0
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise GreenError("density not finite on the radial grid")
    tau, wt, lw = tau[live], wt[live], lw[live]
    s = plane_radius(tau)
    kern = np.log1p(s) - mean_log_distance(n, r, s, K_ang)
    integral = float(np.dot(wt * np.exp(lw), kern))
    if not math.isfinite(integral):
        raise GreenError("non-integrable tail in the potential integral")
    return -c.equator_volume * integral / c.gamma_n


def total_mass(n: int, log_weight, *, S_rad: int = 16, breaks: Sequence[float] = ()) -> float:
    """int f dy on the same radial grid family (evaluation radius fixed at 1)."""
    c = constants(n)
    tau, wt = radial_nodes(1.0, S_rad, breaks)
    with np.errstate(divide="ignore"):
        lw = np.asarray(log_weight(tau), dtype=float) + ((n - 2) / 2.0) * np.log1p(-tau * tau)
    return c.equator_volume * float(np.dot(wt, np.exp(lw)))
