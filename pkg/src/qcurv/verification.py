"""Assemble the Euclidean solution and check it against the classification.

The checks are independent of the solver's own bookkeeping wherever the
quantity allows it: the Green potential is an explicit quadrature of the
assembled density, the volume is re-integrated adaptively, and the Kelvin
identity is tested by recomputing the potential of the inverted density.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .functional import FunctionalState, jensen_lower_bound, log_base_at
from .green import log_potential
from .optimizer import SolveResult
from .problem import ProblemSpec, w0
from .spectral import ZonalBasis, plane_radius, sphere_height


class VerificationError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    slope_rel: float = 0.10  # outer slope of v relative to Lambda/gamma_n
    slope_abs_inner: float = 0.10
    drift: float = 0.05
    volume: float = 1e-6
    kelvin: float = 1e-2
    inner: tuple = (1e-3, 1e-2)
    outer: tuple = (1e2, 1e3)
    kelvin_radii: tuple = (0.5, 1.0, 2.0, 5.0)
    S_rad: int = 16
    K_ang: int = 16


@dataclass
class AssembledSolution:
    spec: ProblemSpec
    result: SolveResult
    basis: ZonalBasis

    def psi_at_height(self, t):
        return self.basis.series(self.result.psi.coeffs, t)

    def u(self, r):
        """u(r) = psi~(r) + c_psi - (Lambda/Lambda_1) w0(r) + beta ln r + p(r) + q(1/r)."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise VerificationError("u is defined for r > 0")
        spec = self.spec
        lam_ratio = spec.Lambda / spec.consts.lambda_1
        out = (self.psi_at_height(sphere_height(r)) + self.result.c_psi
               - lam_ratio * w0(r) + spec.beta * np.log(r) + spec.p(r) + spec.q(1.0 / r))
        return float(out) if np.ndim(out) == 0 else out

    def u_at_height(self, t):
        """Same as :meth:`u` but written in the height variable (second code path)."""
        t = np.asarray(t, dtype=float)
        spec = self.spec
        lam_ratio = spec.Lambda / spec.consts.lambda_1
        log_r = 0.5 * (np.log1p(t) - np.log1p(-t))
        r2 = (1.0 + t) / (1.0 - t)
        return (self.psi_at_height(t) + self.result.c_psi - lam_ratio * np.log1p(-t)
                + spec.beta * log_r + _poly_r2(spec.p.coeffs, r2)
                + _poly_r2(spec.q.coeffs, 1.0 / r2))

    def log_weight(self, tau):
        """ln[e^{nu} e^{-n w0}] at height tau (sphere-form density)."""
        tau = np.asarray(tau, dtype=float)
        return log_base_at(self.spec, tau) + self.spec.n * (
            self.psi_at_height(tau) + self.result.c_psi)

    def kelvin_log_weight(self, tau):
        """Sphere-form density of the inverted solution: reflection tau -> -tau."""
        return self.log_weight(-np.asarray(tau, dtype=float))


def _poly_r2(coeffs, r2):
    acc = np.zeros_like(np.asarray(r2, dtype=float))
    for c in reversed(coeffs):
        acc = acc * r2 + c
    return acc


def assemble_u(spec: ProblemSpec, result: SolveResult, basis: ZonalBasis) -> AssembledSolution:
    if result.psi.L > basis.L:
        raise VerificationError("solution degree exceeds the basis")
    return AssembledSolution(spec, result, basis)


def volume_check(sol: AssembledSolution, state: FunctionalState) -> tuple[float, float]:
    """Volume by the shared sphere quadrature; returns (volume, relative error)."""
    psi = sol.psi_at_height(state.quad.nodes)
    terms = (np.log(state.quad.weights) + state.log_base.values
             + sol.spec.n * (psi + sol.result.c_psi))
    top = float(np.max(terms))
    vol = math.exp(top) * float(np.sum(np.exp(terms - top)))
    return vol, abs(vol - sol.spec.Lambda) / sol.spec.Lambda


def volume_adaptive(sol: AssembledSolution) -> float:
    """Independent volume: adaptive radial integration of e^{nu(s)} |S^{n-1}| s^{n-1}."""
    n = sol.spec.n
    area = sol.spec.consts.equator_volume

    def f(s):
        if s <= 0.0:
            return 0.0
        val = n * sol.u(s) + (n - 1) * math.log(s)
        return math.exp(val) if val > -745 else 0.0

    total = 0.0
    edges = [0.0, 1e-3, 1e-2, 1e-1, 0.5, 1.0, 2.0, 10.0, 1e2, 1e3]
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-11, limit=400)
        total += val
    # tail with s = 1/x
    val, _ = integrate.quad(lambda x: f(1.0 / x) / (x * x) if x > 0 else 0.0, 0.0, 1e-3,
                            epsabs=0.0, epsrel=1e-11, limit=400)
    return area * (total + val)


def green_v(sol: AssembledSolution, r: float, K_ang: int = 16, S_rad: int = 16) -> float:
    return log_potential(sol.spec.n, r, sol.log_weight, S_rad=S_rad, K_ang=K_ang)


def green_v_point(sol: AssembledSolution, x: Sequence[float], K_ang: int = 16,
                  S_rad: int = 16) -> float:
    """v at a point of R^n; radial symmetry reduces it to its norm."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sol.spec.n,):
        raise VerificationError(f"point must have {sol.spec.n} components")
    return green_v(sol, float(np.linalg.norm(x)), K_ang=K_ang, S_rad=S_rad)


def worker_count() -> int:
    """Thread cap from QCURV_THREADS (default 1, i.e. serial)."""
    raw = os.environ.get("QCURV_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise VerificationError(f"QCURV_THREADS must be an integer, got {raw!r}") from None
    return max(1, k)


def map_radii(fn: Callable[[float], float], radii) -> list[float]:
    """fn over radii, concurrently when allowed; results keep the input order."""
    radii = [float(r) for r in radii]
    k = min(worker_count(), len(radii))
    if k <= 1:
        return [fn(r) for r in radii]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, radii))


def fit_log_slope(f: Callable | Sequence[float], r_lo: float, r_hi: float,
                  num: int = 9, radii: Optional[Sequence[float]] = None) -> tuple[float, float]:
    """Least-squares fit f(r) ~ slope * ln r + intercept on a log-uniform window.

    ``f`` is either a callable or an array of samples at ``radii``.
    """
    if not (r_hi > r_lo > 0):
        raise VerificationError("degenerate fitting window")
    if radii is None:
        if num < 8:
            raise VerificationError("need at least 8 samples")
        radii = np.geomspace(r_lo, r_hi, num)
        vals = np.array([f(r) for r in radii])
    else:
        radii = np.asarray(radii, dtype=float)
        vals = np.asarray(f, dtype=float)
        if radii.size < 8:
            raise VerificationError("need at least 8 samples")
    X = np.vstack([np.log(radii), np.ones_like(radii)]).T
    (slope, icpt), *_ = np.linalg.lstsq(X, vals, rcond=None)
    return float(slope), float(icpt)


@dataclass
class VerificationReport:
    volume: Optional[float] = None
    volume_rel_err: Optional[float] = None
    volume_adaptive_rel_err: Optional[float] = None
    slope_infinity: Optional[float] = None
    slope_zero: Optional[float] = None
    slope_target: Optional[float] = None
    kelvin_max_err: Optional[float] = None
    decomposition_drift: Optional[float] = None
    drift_sequence: list = field(default_factory=list)
    drift_monotone: bool = False
    jensen_ok: bool = False
    regular_case_constant: Optional[float] = None
    regular_case_decay_ok: Optional[bool] = None
    checks: dict = field(default_factory=dict)
    passed: bool = False

    def to_dict(self) -> dict:
        d = _plain(asdict(self))
        d["pass"] = d.pop("passed")
        return d


def _plain(x):
    """numpy scalars and containers -> JSON-native Python values."""
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None  # keep the document strict JSON
    return x


def decomposition_w(sol: AssembledSolution, r, v) -> np.ndarray:
    """w = u - v - p(r) - q(1/r) - beta ln r."""
    r = np.asarray(r, dtype=float)
    s = sol.spec
    return sol.u(r) - np.asarray(v) - s.p(r) - s.q(1.0 / r) - s.beta * np.log(r)


def verify_decomposition(sol: AssembledSolution, tol: Tolerances = Tolerances(),
                         per_decade: int = 8) -> dict:
    """Slopes of v at 0 and infinity and drift of the bounded remainder w."""
    lo, hi = tol.inner[0], tol.outer[1]
    decades = int(round(math.log10(hi / lo)))
    radii = np.geomspace(lo, hi, decades * per_decade + 1)
    v = np.array(map_radii(lambda r: green_v(sol, r, tol.K_ang, tol.S_rad), radii))
    target = sol.spec.lambda_over_gamma

    def window(a, b):
        m = (radii >= a * (1 - 1e-12)) & (radii <= b * (1 + 1e-12))
        return m

    mo = window(*tol.outer)
    mi = window(*tol.inner)
    s_inf, _ = fit_log_slope(v[mo], *tol.outer, radii=radii[mo])
    s_zero, _ = fit_log_slope(v[mi], *tol.inner, radii=radii[mi])
    w = decomposition_w(sol, radii, v)
    # window averages over the last four decades, outermost last
    top = math.log10(hi)
    avgs = []
    for k in range(4, 0, -1):
        m = window(10 ** (top - k), 10 ** (top - k + 1))
        avgs.append(float(np.mean(w[m])))
    drifts = [abs(b - a) for a, b in zip(avgs[:-1], avgs[1:])]
    return dict(radii=radii, v=v, w=w, slope_infinity=s_inf, slope_zero=s_zero,
                slope_target=target, drift_sequence=drifts,
                decomposition_drift=drifts[-1],
                drift_monotone=all(b <= a for a, b in zip(drifts[:-1], drifts[1:])))


def kelvin_check(sol: AssembledSolution, radii: Sequence[float] = (0.5, 1.0, 2.0, 5.0),
                 K_ang: int = 16, S_rad: int = 16) -> float:
    """max_r |v~(r) - v(1/r) - (Lambda/gamma_n) ln r| with v~ the potential of e^{n u~}."""
    n = sol.spec.n
    ratio = sol.spec.lambda_over_gamma
    errs = []
    for r in radii:
        if not r > 0:
            raise VerificationError("Kelvin radii must be positive")
        vt = log_potential(n, r, sol.kelvin_log_weight, S_rad=S_rad, K_ang=K_ang)
        v = log_potential(n, 1.0 / r, sol.log_weight, S_rad=S_rad, K_ang=K_ang)
        errs.append(abs(vt - v - ratio * math.log(r)))
    return max(errs)


def kelvin_volume(sol: AssembledSolution) -> float:
    """Adaptive volume of the inverted solution u~(x) = u(x/|x|^2) - 2 ln|x|."""
    n = sol.spec.n
    area = sol.spec.consts.equator_volume

    def f(s):
        val = n * (sol.u(1.0 / s) - 2.0 * math.log(s)) + (n - 1) * math.log(s)
        return math.exp(val) if val > -745 else 0.0

    edges = [1e-6, 1e-3, 1e-2, 1e-1, 0.5, 1.0, 2.0, 10.0, 1e2, 1e3, 1e6]
    total = sum(integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-11, limit=400)[0]
                for a, b in zip(edges[:-1], edges[1:]))
    return area * total


def regular_case_check(sol: AssembledSolution, K_ang: int = 16, S_rad: int = 16,
                       radii: Sequence[float] = (1e2, 1e3, 1e4)):
    """Slope-removed potential g(r) = v(r) - (Lambda/gamma_n) ln r at three decades.

    Returns ``None`` unless n in {3, 4}, beta = 0 and q is constant; otherwise
    ``(c0_estimate, decay_ok, g_values)``.
    """
    spec = sol.spec
    if spec.n not in (3, 4) or not spec.is_regular():
        return None
    ratio = spec.lambda_over_gamma
    g = [green_v(sol, r, K_ang, S_rad) - ratio * math.log(r) for r in radii]
    d1, d2 = g[1] - g[0], g[2] - g[1]
    decay_ok = abs(d2) < abs(d1)
    denom = d2 - d1
    c0 = g[2] - d2 * d2 / denom if denom != 0.0 else g[2]
    return c0, decay_ok, g


def verify(sol: AssembledSolution, state: FunctionalState,
           tol: Tolerances = Tolerances(), *, with_kelvin: bool = True,
           with_adaptive_volume: bool = True) -> tuple[VerificationReport, dict]:
    rep = VerificationReport()
    rep.volume, rep.volume_rel_err = volume_check(sol, state)
    checks = {"volume": rep.volume_rel_err <= tol.volume}
    if with_adaptive_volume:
        rep.volume_adaptive_rel_err = abs(volume_adaptive(sol) - sol.spec.Lambda) / sol.spec.Lambda
        checks["volume_adaptive"] = rep.volume_adaptive_rel_err <= 1e-3
    dec = verify_decomposition(sol, tol)
    rep.slope_infinity = dec["slope_infinity"]
    rep.slope_zero = dec["slope_zero"]
    rep.slope_target = dec["slope_target"]
    rep.drift_sequence = dec["drift_sequence"]
    rep.decomposition_drift = dec["decomposition_drift"]
    rep.drift_monotone = dec["drift_monotone"]
    checks["slope_infinity"] = abs(rep.slope_infinity - rep.slope_target) <= tol.slope_rel * rep.slope_target
    checks["slope_zero"] = abs(rep.slope_zero) <= tol.slope_abs_inner
    checks["drift"] = rep.decomposition_drift <= tol.drift
    # a non-monotone but bounded drift is flagged only
    rep.jensen_ok = evaluate_jensen(state, sol)
    checks["jensen"] = rep.jensen_ok
    if with_kelvin:
        rep.kelvin_max_err = kelvin_check(sol, tol.kelvin_radii, tol.K_ang, tol.S_rad)
        checks["kelvin"] = rep.kelvin_max_err <= tol.kelvin
    reg = regular_case_check(sol, tol.K_ang, tol.S_rad)
    if reg is not None:
        rep.regular_case_constant, rep.regular_case_decay_ok, _ = reg
        checks["regular_case_decay"] = bool(rep.regular_case_decay_ok)
    rep.checks = {k: bool(v) for k, v in checks.items()}
    rep.passed = all(rep.checks.values())
    return rep, dec


def evaluate_jensen(state: FunctionalState, sol: AssembledSolution) -> bool:
    from .functional import evaluate_J
    psi = sol.result.psi
    return evaluate_J(state, psi) >= jensen_lower_bound(state, psi) - 1e-12 * (
        1.0 + abs(evaluate_J(state, psi)))


def profiles(sol: AssembledSolution, dec: dict) -> list[dict]:
    rows = []
    for r, v, w in zip(dec["radii"], dec["v"], dec["w"]):
        t = sphere_height(r)
        rows.append(dict(r=float(r), t=float(t), psi=float(sol.psi_at_height(t)),
                         u=float(sol.u(r)), v=float(v), w_drift=float(w)))
    return rows
