"""The sphere-lifted energy and its Euler-Lagrange gradient.

For psi = sum_l a_l Y_l on S^n the energy is

    J(psi) = 1/2 sum_l mu_l a_l^2 - (Lambda/|S^n|) int psi dg0
             + (Lambda/n) ln int K~ e^{n(psi - w0 o pi)} dg0,

where K~ is the weight K pulled back by stereographic projection.  All
densities stay in log space until a single max-shifted sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import ProblemSpec, validate
from .spectral import (
    GridField,
    PaneitzSpectrum,
    QuadratureRule,
    SpectralField,
    ZonalBasis,
    analyze,
)

# max log-term below which every exponential underflows
DEGENERATE_LOG = -700.0


class DegenerateMassError(ArithmeticError):
    """The Gibbs mass underflows (or is not finite) at every node."""


def log_base_at(spec: ProblemSpec, t) -> np.ndarray:
    """ln[K~(t) e^{-n w0(r(t))}] evaluated directly in the height variable.

    Uses r^2 = (1+t)/(1-t) and w0(r(t)) = ln(1-t), which avoids forming r
    near the poles.
    """
    t = np.asarray(t, dtype=float)
    n = spec.n
    c = spec.consts
    with np.errstate(divide="ignore"):
        lp, lm = np.log1p(t), np.log1p(-t)
        r2 = (1.0 + t) / (1.0 - t)
        inv_r2 = (1.0 - t) / (1.0 + t)
    poly = spec.p.coeffs
    acc_p = np.zeros_like(t)
    for cj in reversed(poly):
        acc_p = acc_p * r2 + cj
    acc_q = np.zeros_like(t)
    for cj in reversed(spec.q.coeffs):
        acc_q = acc_q * inv_r2 + cj
    log_r = 0.5 * (lp - lm)
    out = n * (spec.beta * log_r + acc_p + acc_q
               - (spec.Lambda / c.lambda_1 + 1.0) * lm)
    return out


@dataclass(frozen=True)
class FunctionalState:
    spec: ProblemSpec
    quad: QuadratureRule
    basis: ZonalBasis
    spectrum: PaneitzSpectrum
    log_base: GridField
    # test hook: False drops the log-mass term, leaving the quadratic bowl
    nonlinear: bool = True

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def L(self) -> int:
        return self.basis.L


def build_state(spec: ProblemSpec, quad: QuadratureRule, basis: ZonalBasis,
                spectrum: PaneitzSpectrum, *, nonlinear: bool = True) -> FunctionalState:
    validate(spec)
    if not (quad.n == basis.n == spectrum.n == spec.n):
        raise ValueError("quadrature, basis and spectrum dimensions disagree with the spec")
    if spectrum.mu.size != basis.L + 1:
        raise ValueError("spectrum length must match basis degree")
    lb = log_base_at(spec, quad.nodes)
    if not np.all(np.isfinite(lb)):
        raise DegenerateMassError("log density not finite at an interior node")
    return FunctionalState(spec, quad, basis, spectrum, GridField(lb), nonlinear)


@dataclass(frozen=True)
class MassResult:
    log_mass: float
    density: GridField


def _log_terms(state: FunctionalState, psi: SpectralField) -> np.ndarray:
    grid = psi.coeffs @ state.basis.table[: psi.coeffs.size]
    return np.log(state.quad.weights) + state.log_base.values + state.n * grid


def mass_integral(state: FunctionalState, psi: SpectralField) -> MassResult:
    """ln int K~ e^{n(psi - w0 o pi)} dg0 and the normalized Gibbs density."""
    terms = _log_terms(state, psi)
    top = float(np.max(terms))
    if not math.isfinite(top) or top < DEGENERATE_LOG:
        raise DegenerateMassError(
            f"mass integrand underflows at every node (max log-term {top:.4g})"
        )
    e = np.exp(terms - top)
    s = float(np.sum(e))
    log_mass = top + math.log(s)
    # rho_m = e^{log_base + n psi} / mass, so that sum_m w_m rho_m = 1
    rho = e / (s * state.quad.weights)
    return MassResult(log_mass=log_mass, density=GridField(rho))


def evaluate_J(state: FunctionalState, psi: SpectralField) -> float:
    a = psi.coeffs
    S = state.spec.consts.sphere_volume
    Lam = state.spec.Lambda
    quad_term = 0.5 * float(np.dot(state.spectrum.mu[: a.size], a * a))
    lin = (Lam / S) * a[0] * math.sqrt(S)
    if not state.nonlinear:
        return quad_term - lin
    m = mass_integral(state, psi)
    return quad_term - lin + (Lam / state.n) * m.log_mass


def gradient_J(state: FunctionalState, psi: SpectralField) -> SpectralField:
    a = psi.coeffs
    S = state.spec.consts.sphere_volume
    Lam = state.spec.Lambda
    g = state.spectrum.mu[: a.size] * a
    g[0] -= Lam / math.sqrt(S)
    if state.nonlinear:
        rho = mass_integral(state, psi).density
        g = g + Lam * analyze(rho, state.basis, state.quad).coeffs[: a.size]
    return SpectralField(g)


def delta_J(state: FunctionalState, psi: SpectralField, new: SpectralField,
            mass: MassResult | None = None) -> float:
    """J(new) - J(psi) without cancellation between two large J values."""
    a, b = psi.coeffs, new.coeffs
    S = state.spec.consts.sphere_volume
    Lam = state.spec.Lambda
    d = b - a
    out = 0.5 * float(np.dot(state.spectrum.mu[: a.size] * d, a + b))
    out -= (Lam / S) * d[0] * math.sqrt(S)
    if state.nonlinear:
        if mass is None:
            mass = mass_integral(state, psi)
        dgrid = d @ state.basis.table[: d.size]
        x = state.n * dgrid
        wr = state.quad.weights * mass.density.values
        # ln E_rho[e^x], accurate when x is small
        xmax = float(np.max(x))
        if xmax < 0.5:
            out += (Lam / state.n) * math.log1p(float(np.dot(wr, np.expm1(x))))
        else:
            out += (Lam / state.n) * (xmax + math.log(float(np.dot(wr, np.exp(x - xmax)))))
    return out


def c_psi(state: FunctionalState, psi: SpectralField) -> float:
    """Additive constant restoring the volume: (ln Lambda - log_mass)/n."""
    m = mass_integral(state, psi)
    return (math.log(state.spec.Lambda) - m.log_mass) / state.n


def jensen_lower_bound(state: FunctionalState, psi: SpectralField) -> float:
    """Lower bound for J from Jensen's inequality applied to the log-mass."""
    a = psi.coeffs
    S = state.spec.consts.sphere_volume
    Lam = state.spec.Lambda
    psi_bar = a[0] / math.sqrt(S)
    mean_log_base = state.quad.integrate(state.log_base.values) / S
    quad_term = 0.5 * float(np.dot(state.spectrum.mu[: a.size], a * a))
    return quad_term - Lam * psi_bar + (Lam / state.n) * (
        mean_log_base + state.n * psi_bar + math.log(S))
