"""Command line entry point: ``qcurv solve|verify|eigs|selfcheck``.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, parse_config
from .functional import DegenerateMassError
from .green import GreenError
from .optimizer import LineSearchStall
from .pipeline import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, run_eigs, run_solve, run_verify
from .problem import ProblemError
from .spectral import SpectralError

log = logging.getLogger("qcurv")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcurv", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", help="solve, verify and write result files")
    s.add_argument("config")
    s.add_argument("--out-dir", default=None)
    s.add_argument("--trace", action="store_true", help="stream iteration,J,grad_norm,step CSV")

    v = sub.add_parser("verify", help="re-verify a stored result.json")
    v.add_argument("config")
    v.add_argument("result")
    v.add_argument("--out-dir", default=None)

    e = sub.add_parser("eigs", help="print the Paneitz eigenvalue table as CSV")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--L", type=int, required=True)

    sub.add_parser("selfcheck", help="run the fast invariant suite")
    return ap


def _report(summary, out=None):
    out = out or sys.stdout
    sv = summary.solve
    if sv is not None:
        print(f"case {sv.case}: converged={sv.converged} iterations={sv.iterations} "
              f"J={sv.J_value:.12g} grad_norm={sv.grad_norm:.3e} el_residual={sv.el_residual:.3e}",
              file=out)
    rep = summary.verification or {}
    for k, ok in rep.get("checks", {}).items():
        print(f"  {'PASS' if ok else 'FAIL'} {k}", file=out)
    print(f"verification pass={rep.get('pass')}", file=out)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.cmd == "eigs":
            if args.L < 0:
                raise ConfigError("--L must be >= 0")
            sys.stdout.write(run_eigs(args.n, args.L))
            return EXIT_OK
        if args.cmd == "selfcheck":
            from .selfcheck import run_selfcheck
            return EXIT_OK if run_selfcheck() else EXIT_VERIFY
        cfg = parse_config(args.config, out_dir=args.out_dir)
        if args.cmd == "solve":
            trace = None
            if args.trace:
                print("iteration,J,grad_norm,step", file=sys.stderr)

                def trace(i, J, g, st):
                    print(f"{i},{J:.17g},{g:.17g},{st:.17g}", file=sys.stderr, flush=True)
            summary, code = run_solve(cfg, trace=trace)
        else:
            summary, code = run_verify(cfg, args.result)
        _report(summary)
        return code
    except (ConfigError, ProblemError, SpectralError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LineSearchStall, DegenerateMassError, GreenError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
