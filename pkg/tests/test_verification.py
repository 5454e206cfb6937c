import json
import math

import numpy as np
import pytest

from qcurv.optimizer import SolveOptions
from qcurv.pipeline import solve
from qcurv.problem import ProblemSpec
from qcurv.spectral import sphere_height
from qcurv.verification import (
    Tolerances,
    VerificationError,
    decomposition_w,
    fit_log_slope,
    green_v,
    green_v_point,
    kelvin_check,
    kelvin_volume,
    map_radii,
    verify,
    verify_decomposition,
    volume_adaptive,
    volume_check,
    worker_count,
)


def test_fit_log_slope_exact():
    s, b = fit_log_slope(lambda r: 2.5 * math.log(r) - 1.0, 1e2, 1e3)
    assert s == pytest.approx(2.5, rel=1e-12)
    assert b == pytest.approx(-1.0, rel=1e-10)
    with pytest.raises(VerificationError):
        fit_log_slope(math.log, 1.0, 1.0)
    with pytest.raises(VerificationError):
        fit_log_slope(math.log, 1.0, 2.0, num=3)


def test_two_code_paths_for_u(bench_solved):
    sol = bench_solved.solution
    r = np.geomspace(1e-2, 1e2, 17)
    np.testing.assert_allclose(sol.u_at_height(sphere_height(r)), sol.u(r), rtol=1e-9, atol=1e-9)
    with pytest.raises(VerificationError):
        sol.u(0.0)


def test_volume_identities(bench_solved):
    vol, err = volume_check(bench_solved.solution, bench_solved.state)
    assert err <= 1e-12
    assert volume_adaptive(bench_solved.solution) == pytest.approx(2 * math.pi ** 2, rel=1e-9)
    # inversion preserves the volume
    assert kelvin_volume(bench_solved.solution) == pytest.approx(2 * math.pi ** 2, rel=1e-6)


def test_remainder_is_constant(bench_solved):
    """For radial data the bounded polyharmonic remainder w is a constant."""
    sol = bench_solved.solution
    r = np.geomspace(1e-3, 1e3, 13)
    v = np.array([green_v(sol, x) for x in r])
    w = decomposition_w(sol, r, v)
    assert np.ptp(w) < 1e-6


def test_green_v_point_radial(bench_solved):
    sol = bench_solved.solution
    assert green_v_point(sol, [0.0, 3.0, 4.0]) == pytest.approx(green_v(sol, 5.0), rel=1e-15)
    with pytest.raises(VerificationError):
        green_v_point(sol, [1.0, 2.0])


def test_kelvin_identity_converges(bench_solved):
    sol = bench_solved.solution
    coarse = kelvin_check(sol, K_ang=8, S_rad=8)
    fine = kelvin_check(sol, K_ang=16, S_rad=16)
    assert fine <= 1e-8 and fine * 2 <= coarse
    with pytest.raises(VerificationError):
        kelvin_check(sol, radii=(0.0,))


def test_decomposition_slopes(bench_solved):
    dec = verify_decomposition(bench_solved.solution)
    assert dec["slope_infinity"] == pytest.approx(1.0, rel=1e-3)
    assert abs(dec["slope_zero"]) < 1e-3
    assert dec["decomposition_drift"] < 1e-6


def test_report_is_json_native(bench_solved):
    rep, _ = verify(bench_solved.solution, bench_solved.state, with_kelvin=False,
                    with_adaptive_volume=False)
    d = rep.to_dict()
    assert json.loads(json.dumps(d)) == d
    assert d["pass"] is True
    assert set(d["checks"]) == {"volume", "slope_infinity", "slope_zero", "drift", "jensen"}


def test_failing_tolerance_reported(bench_solved):
    rep, _ = verify(bench_solved.solution, bench_solved.state, Tolerances(kelvin=1e-30),
                    with_adaptive_volume=False)
    assert not rep.passed and rep.checks["kelvin"] is False


def test_map_radii_threads(monkeypatch):
    monkeypatch.setenv("QCURV_THREADS", "4")
    assert worker_count() == 4
    assert map_radii(lambda r: r * r, range(20)) == [float(r * r) for r in range(20)]
    monkeypatch.setenv("QCURV_THREADS", "zero")
    with pytest.raises(VerificationError):
        worker_count()
    monkeypatch.delenv("QCURV_THREADS")
    assert worker_count() == 1


def test_regular_case_constant_n4():
    spec = ProblemSpec(n=4, Lambda=16 * math.pi ** 2, p=(0, -1))
    s = solve(spec, SolveOptions(L=32, M=80))
    rep, _ = verify(s.solution, s.state, with_kelvin=False, with_adaptive_volume=False)
    assert rep.regular_case_decay_ok is True
    assert math.isfinite(rep.regular_case_constant)
    assert rep.checks["regular_case_decay"]


def test_potential_ratio_tends_to_slope(bench_solved):
    """v(r)/ln r -> Lambda/gamma_n only like 1 + c/ln r; v - ln r settles to a constant."""
    sol = bench_solved.solution
    offs = [green_v(sol, r) - math.log(r) for r in (1e4, 1e8, 1e12)]
    assert max(offs) - min(offs) < 1e-6
    ratios = [green_v(sol, r) / math.log(r) for r in (1e3, 1e6, 1e12)]
    assert ratios[0] < ratios[1] < ratios[2] < 1.0
    assert abs(ratios[2] - 1.0) < 0.05
