"""validate -> build -> minimize -> assemble -> verify, plus file outputs."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .config import RunConfig, RunSummary, SolveSummary
from .functional import FunctionalState, build_state
from .optimizer import SolveOptions, SolveResult, minimize
from .problem import ProblemSpec, validate
from .spectral import SpectralField, build_basis, build_quadrature, paneitz_spectrum
from .verification import (
    AssembledSolution,
    Tolerances,
    VerificationReport,
    assemble_u,
    profiles,
    verify,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
PROFILE_COLUMNS = ("r", "t", "psi", "u", "v", "w_drift")


@dataclass
class Solved:
    spec: ProblemSpec
    state: FunctionalState
    result: SolveResult
    solution: AssembledSolution


def make_state(spec: ProblemSpec, L: int, M: int) -> FunctionalState:
    validate(spec)
    quad = build_quadrature(spec.n, M)
    basis = build_basis(spec.n, L, quad)
    return build_state(spec, quad, basis, paneitz_spectrum(spec.n, L))


def solve(spec: ProblemSpec, opts: SolveOptions = SolveOptions(), trace=None) -> Solved:
    state = make_state(spec, opts.L, opts.M)
    result = minimize(state, opts, trace=trace)
    return Solved(spec, state, result, assemble_u(spec, result, state.basis))


def _solve_summary(s: Solved) -> SolveSummary:
    r = s.result
    return SolveSummary(case=s.spec.case.value, L=s.state.L, M=s.state.quad.size,
                        psi=[float(x) for x in r.psi.coeffs], c_psi=r.c_psi,
                        J_value=r.J_value, grad_norm=r.grad_norm, el_residual=r.el_residual,
                        iterations=r.iterations, converged=r.converged,
                        history=[(int(i), float(j), float(g), float(st))
                                 for i, j, g, st in r.history])


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_profiles(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_COLUMNS)
        for row in rows:
            w.writerow([fmt(row[c]) for c in PROFILE_COLUMNS])


def read_profiles(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _verify_and_write(cfg: RunConfig, solved: Solved, out: Path, timings: dict):
    t0 = time.perf_counter()
    report, dec = verify(solved.solution, solved.state, cfg.tolerances())
    timings["verify"] = time.perf_counter() - t0
    (out / "verification.json").write_text(json.dumps(report.to_dict(), indent=1))
    write_profiles(out / "profiles.csv", profiles(solved.solution, dec))
    return report


def run_solve(cfg: RunConfig, trace: Optional[Callable] = None) -> tuple[RunSummary, int]:
    """Solve, verify, and write result.json, profiles.csv and verification.json."""
    out = Path(cfg.out_dir)
    timings = {}
    t0 = time.perf_counter()
    spec = cfg.problem()
    solved = solve(spec, cfg.solve_options(), trace=trace)
    timings["solve"] = time.perf_counter() - t0
    report = _verify_and_write(cfg, solved, out, timings)
    summary = RunSummary(version=__version__, config=cfg.model_dump(mode="json"),
                         solve=_solve_summary(solved), verification=report.to_dict(),
                         timings=timings)
    (out / "result.json").write_text(summary.model_dump_json(indent=1))
    if not solved.result.converged:
        return summary, EXIT_NUMERIC
    return summary, EXIT_OK if report.passed else EXIT_VERIFY


def load_result(path) -> RunSummary:
    return RunSummary.model_validate_json(Path(path).read_text())


def run_verify(cfg: RunConfig, result_path) -> tuple[RunSummary, int]:
    """Re-verify a stored solution against ``cfg`` without re-solving."""
    prev = load_result(result_path)
    if prev.solve is None:
        raise ValueError("result file holds no solution")
    spec = cfg.problem()
    sv = prev.solve
    state = make_state(spec, sv.L, sv.M)
    psi = SpectralField(np.array(sv.psi))
    result = SolveResult(psi=psi, c_psi=sv.c_psi, J_value=sv.J_value, grad_norm=sv.grad_norm,
                         el_residual=sv.el_residual, iterations=sv.iterations,
                         converged=sv.converged, history=[tuple(h) for h in sv.history])
    solved = Solved(spec, state, result, assemble_u(spec, result, state.basis))
    out = Path(cfg.out_dir)
    timings = {}
    report = _verify_and_write(cfg, solved, out, timings)
    summary = RunSummary(version=__version__, config=cfg.model_dump(mode="json"),
                         solve=sv, verification=report.to_dict(), timings=timings)
    return summary, EXIT_OK if report.passed else EXIT_VERIFY


def run_eigs(n: int, L: int) -> str:
    """CSV table ell, lambda_ell, mu_ell, mu_sqrt_ell."""
    sp = paneitz_spectrum(n, L)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ell", "lambda_ell", "mu_ell", "mu_sqrt_ell"])
    for ell in range(L + 1):
        w.writerow([ell, fmt(sp.lam[ell]), fmt(sp.mu[ell]), fmt(sp.mu_sqrt[ell])])
    return buf.getvalue()
