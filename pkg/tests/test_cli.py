import json
import math

import pytest

from qcurv.cli import main
from qcurv.config import ConfigError, RunConfig, RunSummary, load_config, parse_config
from qcurv.pipeline import fmt, load_result, read_profiles, run_eigs

SMALL = dict(n=3, Lambda=2 * math.pi ** 2, beta=0.0, p=[0, -1], q=[0, -1], L=24, M=64)


def write_cfg(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_eigs_table(capsys):
    assert main(["eigs", "--n", "3", "--L", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "ell,lambda_ell,mu_ell,mu_sqrt_ell"
    assert [row.split(",")[2] for row in lines[1:]] == ["0", "6", "24", "60"]
    assert main(["eigs", "--n", "3", "--L", "-1"]) == 1
    assert main(["eigs", "--n", "2", "--L", "3"]) == 1


def test_eigs_round_trip():
    rows = run_eigs(5, 12).splitlines()[1:]
    from qcurv.spectral import paneitz_spectrum
    mu = paneitz_spectrum(5, 12).mu
    assert [float(r.split(",")[2]) for r in rows] == list(mu)


def test_selfcheck(capsys):
    assert main(["selfcheck"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 8


def test_solve_writes_outputs(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["solve", cfg, "--out-dir", str(out)]) == 0
    for name in ("result.json", "profiles.csv", "verification.json"):
        assert (out / name).exists()
    ver = json.loads((out / "verification.json").read_text())
    assert ver["pass"] is True
    assert "verification pass=True" in capsys.readouterr().out


def test_solve_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, {**SMALL, "random_start": True, "seed": 3})
    out = tmp_path / "o"
    main(["solve", cfg, "--out-dir", str(out)])
    first = load_result(out / "result.json").deterministic_json()
    prof = (out / "profiles.csv").read_text()
    main(["solve", cfg, "--out-dir", str(out)])
    assert load_result(out / "result.json").deterministic_json() == first
    assert (out / "profiles.csv").read_text() == prof


def test_profiles_round_trip(tmp_path):
    out = tmp_path / "o"
    main(["solve", write_cfg(tmp_path, SMALL), "--out-dir", str(out)])
    rows = read_profiles(out / "profiles.csv")
    text = (out / "profiles.csv").read_text().splitlines()
    assert text[0] == "r,t,psi,u,v,w_drift"
    # 17 significant digits round-trip exactly
    assert ",".join(fmt(rows[3][k]) for k in ("r", "t", "psi", "u", "v", "w_drift")) == text[4]


def test_verify_subcommand(tmp_path):
    out = tmp_path / "o"
    cfg = write_cfg(tmp_path, SMALL)
    main(["solve", cfg, "--out-dir", str(out)])
    assert main(["verify", cfg, str(out / "result.json"), "--out-dir", str(tmp_path / "v")]) == 0
    strict = write_cfg(tmp_path, {**SMALL, "tol_kelvin": 1e-30}, "strict.json")
    assert main(["verify", strict, str(out / "result.json"),
                 "--out-dir", str(tmp_path / "v2")]) == 3


def test_trace_goes_to_stderr(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMALL)
    main(["solve", cfg, "--out-dir", str(tmp_path / "o"), "--trace"])
    err = capsys.readouterr().err.splitlines()
    assert err[0] == "iteration,J,grad_norm,step"
    assert err[1].startswith("0,")


def test_exit_codes(tmp_path, capsys):
    o = ["--out-dir", str(tmp_path / "o")]
    assert main(["solve", write_cfg(tmp_path, {**SMALL, "max_iter": 1}, "a.json"), *o]) == 2
    assert main(["solve", write_cfg(tmp_path, {**SMALL, "tol_volume": 0.0}, "b.json"), *o]) == 3
    assert main(["solve", write_cfg(tmp_path, {**SMALL, "n": 2}, "c.json"), *o]) == 1
    assert "there are no solutions to" in capsys.readouterr().err
    assert main(["solve", write_cfg(tmp_path, {**SMALL, "bogus": 1}, "d.json"), *o]) == 1
    assert main(["solve", str(tmp_path / "missing.json"), *o]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", str(bad), *o]) == 1
    huge = {**SMALL, "Lambda": None, "lambda_over_gamma": 1.0, "beta": -1.0, "q": [0]}
    assert main(["solve", write_cfg(tmp_path, huge, "e.json"), *o]) == 1


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        load_config({"n": 3}, str(tmp_path))
    with pytest.raises(ConfigError):
        load_config({**SMALL, "lambda_over_gamma": 1.0}, str(tmp_path))
    with pytest.raises(ConfigError):
        load_config({**SMALL, "backtrack": 2.0}, str(tmp_path))
    with pytest.raises(ConfigError):
        parse_config(write_cfg(tmp_path, [1, 2], "list.json"))
    cfg = load_config({**{k: v for k, v in SMALL.items() if k != "Lambda"},
                       "lambda_over_gamma": 1.0}, str(tmp_path))
    assert cfg.problem().Lambda == pytest.approx(2 * math.pi ** 2)
    assert RunConfig(n=3, Lambda=1.0, L=10).M == 36


def test_summary_round_trip(tmp_path):
    out = tmp_path / "o"
    main(["solve", write_cfg(tmp_path, SMALL), "--out-dir", str(out)])
    s = load_result(out / "result.json")
    again = RunSummary.model_validate_json(s.model_dump_json())
    assert again == s
    assert "timings" not in json.loads(s.deterministic_json())
