"""Preconditioned gradient descent with Armijo backtracking on mean-zero fields."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .functional import (
    FunctionalState,
    c_psi,
    delta_J,
    evaluate_J,
    gradient_J,
    mass_integral,
)
from .spectral import SpectralField, synthesize

log = logging.getLogger(__name__)


class LineSearchStall(ArithmeticError):
    """Backtracking drove the step below the underflow threshold."""

    def __init__(self, msg, iteration, J, grad_norm):
        super().__init__(msg)
        self.iteration = iteration
        self.J = J
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class SolveOptions:
    L: int = 64
    M: Optional[int] = None
    max_iter: int = 20000
    grad_tol: float = 1e-8
    step0: float = 1.0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    seed: int = 0
    random_start: bool = False
    min_step: float = 1e-16

    def __post_init__(self):
        if self.M is None:
            object.__setattr__(self, "M", 2 * self.L + 16)
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.step0 <= 0 or self.max_iter < 0:
            raise ValueError("step0 must be positive and max_iter nonnegative")
        if self.M <= self.L:
            raise ValueError("quadrature size M must exceed L")


@dataclass
class SolveResult:
    psi: SpectralField
    c_psi: float
    J_value: float
    grad_norm: float
    el_residual: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)  # (iteration, J, grad_norm, step)


def _project(g: np.ndarray) -> np.ndarray:
    g = g.copy()
    g[0] = 0.0
    return g


def el_residual(state: FunctionalState, psi: SpectralField) -> float:
    """Grid L^2(dg0) norm of P psi - (Lambda/|S^n| - Lambda rho)."""
    S = state.spec.consts.sphere_volume
    Lam = state.spec.Lambda
    a = psi.coeffs
    Ppsi = synthesize(SpectralField(state.spectrum.mu[: a.size] * a), state.basis).values
    rho = mass_integral(state, psi).density.values
    defect = Ppsi - (Lam / S - Lam * rho)
    return math.sqrt(float(np.dot(state.quad.weights, defect * defect)))


def minimize(state: FunctionalState, opts: SolveOptions,
             trace: Callable[[int, float, float, float], None] | None = None) -> SolveResult:
    """Minimize J over fields with zero mean.

    The search direction is the gradient scaled by 1/(1 + mu_l).  A step is
    accepted when ``J(new) <= J(old) - c * step * <g, D g>``; the decrease is
    computed by :func:`delta_J` so the test stays meaningful once J changes
    sit below the rounding level of J itself.  The recorded J history is the
    starting value plus the accepted decreases.
    """
    L = state.L
    precond = 1.0 / (1.0 + state.spectrum.mu)
    if opts.random_start:
        rng = np.random.default_rng(opts.seed)
        a0 = rng.normal(size=L + 1) / (1.0 + state.spectrum.mu)
        a0[0] = 0.0
    else:
        a0 = np.zeros(L + 1)
    psi = SpectralField(a0)
    J = evaluate_J(state, psi)
    g = _project(gradient_J(state, psi).coeffs)
    dg = precond * g
    gnorm = math.sqrt(float(np.dot(g, dg)))
    history = [(0, J, gnorm, 0.0)]
    if trace:
        trace(0, J, gnorm, 0.0)
    step = opts.step0
    it = 0
    converged = gnorm <= opts.grad_tol
    while not converged and it < opts.max_iter:
        it += 1
        mass = mass_integral(state, psi) if state.nonlinear else None
        slope = float(np.dot(g, dg))
        while True:
            cand = SpectralField(psi.coeffs - step * dg)
            dJ = delta_J(state, psi, cand, mass)
            if dJ <= -opts.armijo_c * step * slope:
                break
            step *= opts.backtrack
            if step < opts.min_step:
                raise LineSearchStall(
                    f"line search stalled at iteration {it}: step < {opts.min_step:g}, "
                    f"J={J:.17g}, grad_norm={gnorm:.3e}", it, J, gnorm)
        psi = cand
        J = J + dJ
        g = _project(gradient_J(state, psi).coeffs)
        dg = precond * g
        gnorm = math.sqrt(float(np.dot(g, dg)))
        history.append((it, J, gnorm, step))
        if trace:
            trace(it, J, gnorm, step)
        converged = gnorm <= opts.grad_tol
        step = min(step / opts.backtrack, 1e6 * opts.step0)
    if not converged:
        log.warning("minimize: max_iter=%d reached, grad_norm=%.3e", opts.max_iter, gnorm)
    return SolveResult(
        psi=psi,
        c_psi=c_psi(state, psi) if state.nonlinear else 0.0,
        J_value=evaluate_J(state, psi),
        grad_norm=gnorm,
        el_residual=el_residual(state, psi) if state.nonlinear else float("nan"),
        iterations=it,
        converged=converged,
        history=history,
    )
