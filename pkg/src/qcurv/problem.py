"""Problem data for singular constant negative Q-curvature metrics.

A problem is the tuple (n, Lambda, beta, p, q) of the existence result:
find ``u`` on R^n minus the origin with ``(-Delta)^{n/2} u = -e^{nu}`` and
total volume ``Lambda``, behaving like ``beta ln|x| + q(x/|x|^2)`` at the
origin and ``(Lambda/gamma_n + beta) ln|x| + p(x)`` at infinity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ProblemError(ValueError):
    """Invalid problem input (maps to CLI exit code 1)."""


class NonexistenceError(ProblemError):
    """Raised for n = 1, 2 where the equation has no solution at all."""


class UncoveredRegimeError(ProblemError):
    """Parameters outside every case of the existence theorem."""


NONEXISTENCE_MESSAGE = (
    "nonexistence regime: for n in {1, 2} there are no solutions to "
    "(-Delta)^{n/2} u = -e^{nu} on R^n \\ {0} with finite volume"
)


def sphere_volume(n: int) -> float:
    """Volume of the unit sphere S^n in R^{n+1}: 2 pi^{(n+1)/2} / Gamma((n+1)/2)."""
    if int(n) != n or n <= 0:
        raise ProblemError(f"sphere dimension must be a positive integer, got {n!r}")
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


@dataclass(frozen=True)
class Constants:
    n: int
    sphere_volume: float
    gamma_n: float
    lambda_1: float
    equator_volume: float  # |S^{n-1}|


def constants(n: int) -> Constants:
    if n < 3:
        raise NonexistenceError(NONEXISTENCE_MESSAGE) if n in (1, 2) else ProblemError(
            f"dimension must be >= 3, got {n}"
        )
    if n > 20:
        raise ProblemError("dimensions above 20 are not supported")
    vol = sphere_volume(n)
    fact = float(math.factorial(n - 1))
    lam1 = fact * vol
    return Constants(n=n, sphere_volume=vol, gamma_n=lam1 / 2.0, lambda_1=lam1,
                     equator_volume=sphere_volume(n - 1))


class Growth(str, enum.Enum):
    TENDS_TO_MINUS_INFINITY = "tends_to_minus_infinity"
    UPPER_BOUNDED_NONCONSTANT = "upper_bounded_nonconstant"
    CONSTANT = "constant"
    UNBOUNDED_ABOVE = "unbounded_above"


@dataclass(frozen=True)
class RadialPolynomial:
    """``P(x) = sum_j coeffs[j] * |x|^{2j}``."""

    coeffs: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs) or (0.0,)
        if not all(math.isfinite(v) for v in c):
            raise ProblemError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        """Degree in |x| (twice the index of the last nonzero coefficient)."""
        for j in range(len(self.coeffs) - 1, 0, -1):
            if self.coeffs[j] != 0.0:
                return 2 * j
        return 0

    def classify(self) -> Growth:
        d = self.degree
        if d == 0:
            return Growth.CONSTANT
        # A radial polynomial in |x|^2 is upper-bounded only if it tends to -inf.
        if self.coeffs[d // 2] < 0.0:
            return Growth.TENDS_TO_MINUS_INFINITY
        return Growth.UNBOUNDED_ABOVE

    def __call__(self, r):
        return eval_radial_poly(self, r)


def eval_radial_poly(P: RadialPolynomial, r):
    """Horner evaluation in ``r**2``; works on scalars and arrays."""
    r2 = np.square(np.asarray(r, dtype=float))
    acc = np.zeros_like(r2)
    for c in reversed(P.coeffs):
        acc = acc * r2 + c
    return float(acc) if acc.ndim == 0 else acc


class Case(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    Lambda: float
    beta: float = 0.0
    p: RadialPolynomial = field(default_factory=RadialPolynomial)
    q: RadialPolynomial = field(default_factory=RadialPolynomial)

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not isinstance(v, RadialPolynomial):
                object.__setattr__(self, name, RadialPolynomial(tuple(v)))

    @classmethod
    def from_ratio(cls, n: int, lambda_over_gamma: float, **kw) -> "ProblemSpec":
        return cls(n=n, Lambda=lambda_over_gamma * constants(n).gamma_n, **kw)

    @property
    def consts(self) -> Constants:
        return constants(self.n)

    @property
    def lambda_over_gamma(self) -> float:
        return self.Lambda / self.consts.gamma_n

    @property
    def case(self) -> Case:
        return validate(self)

    def kelvin(self) -> "ProblemSpec":
        """Data of the inverted problem: p and q swap, beta -> -(2 + beta) - Lambda/gamma_n."""
        return ProblemSpec(n=self.n, Lambda=self.Lambda,
                           beta=-(2.0 + self.beta) - self.lambda_over_gamma,
                           p=self.q, q=self.p)

    def is_regular(self) -> bool:
        return self.beta == 0.0 and self.q.classify() is Growth.CONSTANT


def validate(spec: ProblemSpec) -> Case:
    """Classify ``spec`` into the existence cases I, II, III (checked in that order).

    Raises
    ------
    NonexistenceError
        n in {1, 2}.
    ProblemError
        malformed data (n < 1, Lambda <= 0, degree bound, p or q unbounded above).
    UncoveredRegimeError
        no case applies, or the volume integral cannot be finite.
    """
    n = spec.n
    if int(n) != n or n < 1:
        raise ProblemError(f"dimension must be a positive integer, got {n!r}")
    if n in (1, 2):
        raise NonexistenceError(NONEXISTENCE_MESSAGE)
    if not (math.isfinite(spec.Lambda) and spec.Lambda > 0.0):
        raise ProblemError(f"Lambda must be positive and finite, got {spec.Lambda!r}")
    if not math.isfinite(spec.beta):
        raise ProblemError("beta must be finite")
    for name, P in (("p", spec.p), ("q", spec.q)):
        if P.degree > n - 1:
            raise ProblemError(
                f"degree bound violated: {name} has degree {P.degree} > n-1 = {n - 1}"
            )
        if P.classify() is Growth.UNBOUNDED_ABOVE:
            raise ProblemError(f"{name} must be bounded from above")

    gp, gq = spec.p.classify(), spec.q.classify()
    down = Growth.TENDS_TO_MINUS_INFINITY
    beta = spec.beta
    if gp is down and gq is down:
        return Case.I
    if beta > -1.0 and gp is down:
        return Case.II
    if beta < -1.0 and gq is down:
        # With p bounded, e^{nu} ~ |x|^{n(beta + Lambda/gamma_n)} at infinity.
        if beta >= -1.0 - spec.lambda_over_gamma:
            raise UncoveredRegimeError(
                "uncovered parameter regime: with p bounded the volume diverges "
                f"unless beta < -1 - Lambda/gamma_n = {-1.0 - spec.lambda_over_gamma:.6g}"
            )
        return Case.III
    raise UncoveredRegimeError(
        "uncovered parameter regime: (beta, p, q) matches none of the cases I, II, III"
    )


def w0(r):
    """Conformal factor of the stereographic projection, ln(2 / (1 + r^2))."""
    r = np.asarray(r, dtype=float)
    out = math.log(2.0) - np.log1p(r * r)
    return float(out) if out.ndim == 0 else out


def log_K(spec: ProblemSpec, r):
    """ln K(r) = n [beta ln r + p(r) + q(1/r) - (Lambda/Lambda_1) w0(r)], r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise ProblemError("log_K needs r >= 0")
    if np.any(r == 0.0):
        raise ProblemError("log_K is singular at r = 0; evaluate at interior nodes")
    c = spec.consts
    out = spec.n * (spec.beta * np.log(r) + spec.p(r) + spec.q(1.0 / r)
                    - (spec.Lambda / c.lambda_1) * w0(r))
    return float(out) if np.ndim(out) == 0 else out


def poly_from(coeffs: Sequence[float] | RadialPolynomial) -> RadialPolynomial:
    if isinstance(coeffs, RadialPolynomial):
        return coeffs
    return RadialPolynomial(tuple(coeffs))
