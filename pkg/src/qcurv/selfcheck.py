"""Fast invariant suite behind ``qcurv selfcheck``."""

from __future__ import annotations

import math

import numpy as np

from .functional import evaluate_J, gradient_J, jensen_lower_bound
from .green import mean_log_distance
from .problem import NonexistenceError, ProblemError, ProblemSpec, constants, validate
from .spectral import (
    GridField,
    SpectralField,
    analyze,
    build_basis,
    build_quadrature,
    paneitz_spectrum,
    synthesize,
)


def _benchmark(L=24, M=64):
    from .pipeline import make_state
    spec = ProblemSpec(n=3, Lambda=2 * math.pi ** 2, beta=0.0, p=(0, -1), q=(0, -1))
    return make_state(spec, L, M)


def check_constants():
    return all(constants(n).lambda_1 == 2 * constants(n).gamma_n for n in range(3, 9))


def check_spectra():
    ok = np.allclose(paneitz_spectrum(3, 3).mu, [0, 6, 24, 60], rtol=1e-12, atol=0)
    ok &= np.allclose(paneitz_spectrum(4, 3).mu, [0, 24, 120, 360], rtol=1e-12, atol=0)
    for n in (3, 4, 5, 6):
        sp = paneitz_spectrum(n, 40)
        ok &= bool(np.all(np.diff(sp.mu) > 0))
        ok &= bool(np.allclose(sp.mu_sqrt ** 2, sp.mu, rtol=1e-12))
    return bool(ok)


def check_quadrature():
    ok = True
    for n in (3, 4, 5):
        q = build_quadrature(n, 40)
        ok &= abs(q.weights.sum() / constants(n).sphere_volume - 1) < 1e-12
    return ok


def check_transforms():
    rng = np.random.default_rng(1)
    q = build_quadrature(3, 80)
    b = build_basis(3, 64, q)
    gram = (b.table * q.weights) @ b.table.T
    a = rng.normal(size=65)
    g = synthesize(SpectralField(a), b)
    back = analyze(g, b, q).coeffs
    pars = abs(q.integrate(g.values ** 2) / np.dot(a, a) - 1)
    return (np.max(np.abs(gram - np.eye(65))) < 1e-10 and np.max(np.abs(back - a)) < 1e-10
            and pars < 1e-9)


def check_functional():
    st = _benchmark()
    rng = np.random.default_rng(2)
    a = rng.normal(size=st.L + 1) / (1 + st.spectrum.mu)
    psi = SpectralField(a)
    shifted = SpectralField(a + np.eye(st.L + 1)[0] * 3.0 * math.sqrt(constants(3).sphere_volume))
    gauge = abs(evaluate_J(st, shifted) - evaluate_J(st, psi)) <= 1e-9 * (1 + abs(evaluate_J(st, psi)))
    g = gradient_J(st, psi).coeffs
    h = 1e-5
    fd_ok = True
    for ell in (1, 3, 7):
        e = np.zeros_like(a)
        e[ell] = h
        fd = (evaluate_J(st, SpectralField(a + e)) - evaluate_J(st, SpectralField(a - e))) / (2 * h)
        fd_ok &= abs(g[ell] - fd) / (1 + abs(fd)) <= 1e-5
    jensen = evaluate_J(st, psi) >= jensen_lower_bound(st, psi)
    return bool(gauge and fd_ok and jensen)


def check_angular_kernel():
    # n = 3 closed form of the spherical mean of ln|r e - s w|
    r, s = 1.0, 0.8
    exact = ((r + s) ** 2 * math.log(r + s) - (r - s) ** 2 * math.log(r - s)) / (4 * r * s) - 0.5
    return abs(mean_log_distance(3, r, np.array([s]), 16)[0] - exact) < 1e-13


def check_negative_paths():
    try:
        validate(ProblemSpec(n=2, Lambda=1.0))
        return False
    except NonexistenceError:
        pass
    try:
        validate(ProblemSpec(n=4, Lambda=1.0, p=(0, 0, 0, -1), q=(0, -1)))
        return False
    except ProblemError:
        pass
    try:
        validate(ProblemSpec(n=3, Lambda=1.0, beta=-1.0, p=(0, -1), q=(0,)))
        return False
    except ProblemError:
        return True


def check_small_solve():
    from .optimizer import SolveOptions, minimize
    st = _benchmark()
    res = minimize(st, SolveOptions(L=st.L, M=st.quad.size))
    hist = [h[1] for h in res.history]
    return res.converged and all(b <= a for a, b in zip(hist, hist[1:])) and res.psi.coeffs[0] == 0


CHECKS = {
    "constants": check_constants,
    "paneitz_spectra": check_spectra,
    "quadrature": check_quadrature,
    "transforms": check_transforms,
    "functional": check_functional,
    "angular_kernel": check_angular_kernel,
    "negative_paths": check_negative_paths,
    "small_solve": check_small_solve,
}


def run_selfcheck(echo=print) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        try:
            passed = bool(fn())
        except Exception as exc:  # report, keep going
            passed = False
            echo(f"{name}: error {exc!r}")
        echo(f"{'PASS' if passed else 'FAIL'} {name}")
        ok &= passed
    return ok
