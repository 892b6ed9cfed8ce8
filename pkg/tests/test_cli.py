import csv
import math
import subprocess
import sys

import numpy as np
import pytest

from greedy_kaczmarz.cli import (
    CURVE_COLUMNS,
    RATE_COLUMNS,
    SUMMARY_COLUMNS,
    RunConfig,
    compare_rates,
    config_from_args,
    main,
    run,
)
from greedy_kaczmarz.linalg import ContractError
from greedy_kaczmarz.problems import ProblemSpec, mk9_b3_path
from greedy_kaczmarz.selection import SelectionRule
from greedy_kaczmarz.solve import StopCriteria


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _strip_timing(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = lines[0].split(",")
    drop = {head.index(c) for c in ("elapsed_ns", "median_time_s") if c in head}
    return [",".join(v for j, v in enumerate(l.split(",")) if j not in drop) for l in lines]


def test_identity_grmk_ten_iterations(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["--problem", "identity", "--m", "10", "--methods", "grmk", "--trials", "1",
                 "--summary-out", str(out)]) == 0
    (row,) = _rows(out)
    assert float(row["median_iters"]) == 10.0
    assert list(row) == list(SUMMARY_COLUMNS)


def test_dense_grk_grmk_all_converge(tmp_path):
    out, curves = tmp_path / "s.csv", tmp_path / "c.csv"
    assert main(["--problem", "gaussian", "--m", "500", "--n", "100", "--methods", "grk,grmk",
                 "--trials", "20", "--tol", "1e-10", "--summary-out", str(out),
                 "--curves-out", str(curves)]) == 0
    rows = {r["method"]: r for r in _rows(out)}
    for m in ("grk", "grmk"):
        assert int(rows[m]["converged"]) == 20 and int(rows[m]["trials"]) == 20
        assert 0 < float(rows[m]["rho_at_final"]) < float(rows[m]["bound_factor"]) < 1
    with open(curves) as fh:
        assert fh.readline().strip() == ",".join(CURVE_COLUMNS)


def test_gmbk_gdbk_median_iterations_close(tmp_path):
    out = tmp_path / "s.csv"
    main(["--problem", "gaussian", "--m", "300", "--n", "60", "--methods", "gmbk,gdbk",
          "--trials", "20", "--summary-out", str(out)])
    it = {r["method"]: float(r["median_iters"]) for r in _rows(out)}
    assert abs(it["gmbk"] - it["gdbk"]) <= 0.15 * min(it.values())


def test_reproducible_bytes(tmp_path):
    args = ["--problem", "sparse-normal", "--m", "80", "--n", "20", "--density", "0.3",
            "--methods", "grk,grmk,gmbk,rk", "--trials", "3", "--seed", "99"]
    outs = []
    for tag, threads in (("a", "1"), ("b", "2")):
        c, s = tmp_path / f"c{tag}.csv", tmp_path / f"s{tag}.csv"
        assert main(args + ["--threads", threads, "--curves-out", str(c), "--summary-out", str(s)]) == 0
        outs.append((_strip_timing(c), _strip_timing(s)))
    assert outs[0] == outs[1]


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("KACZ_SEED", "1234")
    cfg, _ = config_from_args(["--methods", "grk"])
    assert cfg.seed == 1234
    cfg, _ = config_from_args(["--methods", "grk", "--seed", "5"])
    assert cfg.seed == 5


def test_config_file_and_override(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# benchmark\nmethods = gmbk,gbk-eta=0.5\nm=40\nn = 8\ntrials=2\ntol=1e-8\n"
                 "fixed-problem = yes\n")
    cfg, _ = config_from_args(["--config", str(f), "--trials", "4"])
    assert [r.label for r in cfg.methods] == ["gmbk", "gbk-eta=0.5"]
    assert cfg.problem.m == 40 and cfg.trials == 4 and cfg.stop.tol == 1e-8 and cfg.fixed_problem
    f.write_text("colour = red\n")
    with pytest.raises(ContractError):
        config_from_args(["--config", str(f)])


def test_mm_file_flag(tmp_path):
    cfg, _ = config_from_args(["--mm-file", mk9_b3_path(), "--methods", "gmbk"])
    assert cfg.problem.source == "mm"


@pytest.mark.parametrize("argv", [
    ["--methods", "gbk"],
    ["--methods", "nope"],
    ["--trials", "0"],
    ["--tol", "-1"],
    ["--problem", "sparse-normal", "--density", "2"],
])
def test_bad_config_exit_status(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_unwritable_output_exit_status(tmp_path, capsys):
    bad = tmp_path / "missing-dir" / "s.csv"
    assert main(["--m", "20", "--n", "5", "--methods", "grk", "--trials", "1",
                 "--summary-out", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_max_iters_is_not_a_failure(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["--m", "50", "--n", "20", "--methods", "rk", "--trials", "2", "--max-iters", "3",
                 "--summary-out", str(out)]) == 0
    (row,) = _rows(out)
    assert row["converged"] == "0" and float(row["median_iters"]) == 3


def test_summary_to_stdout(capsys):
    assert main(["--m", "30", "--n", "5", "--methods", "grmk", "--trials", "1"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == ",".join(SUMMARY_COLUMNS)


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "greedy_kaczmarz", "--m", "20", "--n", "4",
                           "--methods", "grk", "--trials", "1"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.startswith("method,")


# -- compare_rates -----------------------------------------------------------

def _cfg(source, m, n, trials=5, **kw):
    return RunConfig(ProblemSpec(source, m, n), [SelectionRule("grk"), SelectionRule("grmk")],
                     trials=trials, **kw)


def test_compare_rates_unit_rows(tmp_path):
    path = tmp_path / "r.csv"
    rows = compare_rates(_cfg("identity", 12, 12, stop=StopCriteria(tol=1e-30)), str(path))
    with open(path) as fh:
        assert fh.readline().strip() == ",".join(RATE_COLUMNS)
    for k, gb, mb, gr, mr in rows:
        if not math.isnan(mb):
            assert mb == pytest.approx(gb, rel=1e-14)
    # orthogonal rows: exact solution after 12 steps, rates end at 0
    assert rows[-1][3] == 0.0 and rows[-1][4] == 0.0


def test_compare_rates_grmk_bound_dominates():
    rows = compare_rates(_cfg("uniform", 400, 40, trials=4))
    assert all(mb >= gb for _, gb, mb, _, _ in rows if not math.isnan(mb))
    assert all(0 <= gr < 1 and 0 <= mr < 1 for _, _, _, gr, mr in rows)


def test_run_writes_rates(tmp_path):
    cfg = _cfg("gaussian", 60, 10, trials=2, rates_out=str(tmp_path / "r.csv"),
               summary_out=str(tmp_path / "s.csv"))
    assert run(cfg) == 0
    assert _rows(tmp_path / "r.csv")[0]["k"] == "1"


def test_runconfig_validation():
    with pytest.raises(ContractError):
        RunConfig(ProblemSpec("gaussian", 5, 5), [], trials=1)
    with pytest.raises(ContractError):
        RunConfig(ProblemSpec("gaussian", 5, 5), [SelectionRule("rk")], trials=0)
