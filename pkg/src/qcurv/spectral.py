"""Zonal spectral machinery on S^n.

Every field in this package is axisymmetric, i.e. a function of the height
``t = xi_{n+1}`` alone, so the spherical-harmonic basis collapses to one
zonal harmonic per degree.  Integrals over S^n reduce to

    int_{S^n} f dg0 = |S^{n-1}| int_{-1}^{1} f(t) (1 - t^2)^{(n-2)/2} dt,

which a Gauss-Jacobi rule with equal exponents (n-2)/2 integrates exactly for
polynomial f of degree <= 2M - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .problem import ProblemError, sphere_volume


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    n: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def build_quadrature(n: int, M: int) -> QuadratureRule:
    if M < 2:
        raise SpectralError(f"quadrature needs M >= 2 nodes, got {M}")
    a = (n - 2) / 2.0
    t, w = roots_jacobi(M, a, a)
    w = w * sphere_volume(n - 1)
    t.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(n=n, nodes=t, weights=w)


def _recurrence(n: int, L: int) -> np.ndarray:
    """Monic three-term coefficients b_k, ``p_{k+1} = t p_k - b_k p_{k-1}``.

    Ultraspherical family with parameter lam = (n-1)/2, i.e. weight
    (1 - t^2)^{(n-2)/2}.
    """
    lam = (n - 1) / 2.0
    b = np.zeros(L + 1)
    for k in range(1, L + 1):
        b[k] = k * (k + 2 * lam - 1) / (4.0 * (k + lam) * (k + lam - 1))
    return b


def _monic_values(b: np.ndarray, L: int, t: np.ndarray) -> np.ndarray:
    P = np.empty((L + 1, t.size))
    P[0] = 1.0
    if L >= 1:
        P[1] = t
    for k in range(1, L):
        P[k + 1] = t * P[k] - b[k] * P[k - 1]
    return P


@dataclass(frozen=True)
class ZonalBasis:
    """Orthonormal zonal harmonics Y_0..Y_L tabulated on a quadrature rule.

    ``table[l, m] = Y_l(t_m)``.  ``norms[l]`` is the dg0 norm of the monic
    polynomial of degree l, so ``Y_l = p_l / norms[l]`` at any t.
    """

    n: int
    L: int
    table: np.ndarray
    norms: np.ndarray
    recurrence: np.ndarray

    def evaluate(self, t) -> np.ndarray:
        """Basis values at arbitrary heights, shape (L+1, len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return _monic_values(self.recurrence, self.L, t) / self.norms[:, None]

    def series(self, coeffs, t):
        """Clenshaw summation of ``sum_l coeffs[l] Y_l(t)``."""
        c = np.asarray(coeffs, dtype=float) / self.norms[: len(coeffs)]
        t = np.asarray(t, dtype=float)
        b = self.recurrence
        y1 = np.zeros_like(t)
        y2 = np.zeros_like(t)
        for k in range(len(c) - 1, 0, -1):
            nxt = b[k + 1] if k + 1 < len(b) else 0.0
            y1, y2 = c[k] + t * y1 - nxt * y2, y1
        out = c[0] + t * y1 - (b[1] if len(b) > 1 else 0.0) * y2
        return float(out) if out.ndim == 0 else out


def build_basis(n: int, L: int, quad: QuadratureRule) -> ZonalBasis:
    if L < 0:
        raise SpectralError("truncation degree must be >= 0")
    if quad.size <= L:
        raise SpectralError(f"aliasing: need M > L, got M={quad.size}, L={L}")
    b = _recurrence(n, L)
    P = _monic_values(b, L, quad.nodes)
    sq = P * P
    if L > 128:
        h = np.array([math.fsum(row) for row in sq * quad.weights])
    else:
        h = sq @ quad.weights
    norms = np.sqrt(h)
    table = P / norms[:, None]
    for arr in (table, norms, b):
        arr.setflags(write=False)
    return ZonalBasis(n=n, L=L, table=table, norms=norms, recurrence=b)


@dataclass(frozen=True)
class SpectralField:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise SpectralError("spectral coefficients must be a finite 1-D array")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, L: int) -> "SpectralField":
        return cls(np.zeros(L + 1))

    @property
    def L(self) -> int:
        return self.coeffs.size - 1

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + other.coeffs)

    def embed(self, L: int) -> "SpectralField":
        """Zero-pad (or truncate) to degree L."""
        out = np.zeros(L + 1)
        k = min(L, self.L) + 1
        out[:k] = self.coeffs[:k]
        return SpectralField(out)


@dataclass(frozen=True)
class GridField:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def analyze(g: GridField, basis: ZonalBasis, quad: QuadratureRule) -> SpectralField:
    v = g.values if isinstance(g, GridField) else np.asarray(g, dtype=float)
    if v.shape != (quad.size,) or basis.table.shape[1] != quad.size:
        raise SpectralError("grid field size does not match the quadrature rule")
    return SpectralField(basis.table @ (quad.weights * v))


def synthesize(a: SpectralField, basis: ZonalBasis) -> GridField:
    c = a.coeffs if isinstance(a, SpectralField) else np.asarray(a, dtype=float)
    if c.size > basis.L + 1:
        raise SpectralError(f"field of degree {c.size - 1} exceeds basis degree {basis.L}")
    return GridField(c @ basis.table[: c.size])


@dataclass(frozen=True)
class PaneitzSpectrum:
    n: int
    lam: np.ndarray  # Laplace-Beltrami eigenvalues l(l+n-1)
    mu: np.ndarray
    mu_sqrt: np.ndarray


def paneitz_spectrum(n: int, L: int) -> PaneitzSpectrum:
    """Eigenvalues of the order-n Paneitz operator on S^n and of its square root.

    Even n: ``prod_{k=0}^{(n-2)/2} (lam + k(n-k-1))``.
    Odd n: ``(lam + ((n-1)/2)^2)^{1/2} prod_{k=0}^{(n-3)/2} (lam + k(n-k-1))``.
    """
    if n < 3:
        raise ProblemError(f"Paneitz spectrum needs n >= 3, got {n}")
    ell = np.arange(L + 1, dtype=float)
    lam = ell * (ell + n - 1)
    kmax = (n - 2) // 2 if n % 2 == 0 else (n - 3) // 2
    prod = np.ones(L + 1)
    root = np.ones(L + 1)
    for k in range(kmax + 1):
        f = lam + k * (n - k - 1)
        prod *= f
        root *= np.sqrt(f)
    if n % 2 == 1:
        shift = lam + ((n - 1) / 2.0) ** 2
        prod *= np.sqrt(shift)
        root *= shift ** 0.25
    for arr in (lam, prod, root):
        arr.setflags(write=False)
    return PaneitzSpectrum(n=n, lam=lam, mu=prod, mu_sqrt=root)


def plane_radius(t):
    """Stereographic image radius of the point at height t: sqrt((1+t)/(1-t))."""
    t = np.asarray(t, dtype=float)
    if np.any(t >= 1.0) or np.any(t < -1.0):
        raise SpectralError("plane_radius needs -1 <= t < 1 (t = 1 is the north pole)")
    out = np.sqrt((1.0 + t) / (1.0 - t))
    return float(out) if out.ndim == 0 else out


def sphere_height(r):
    """Inverse of :func:`plane_radius`: (r^2 - 1)/(r^2 + 1)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise SpectralError("sphere_height needs r >= 0")
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(r), 1.0, (r * r - 1.0) / (r * r + 1.0))
    return float(out) if out.ndim == 0 else out
