"""Benchmark harness: run methods over seeded trials and write CSV curves.

Example::

    greedy-kaczmarz --problem gaussian --m 500 --n 100 --methods grk,grmk \\
        --trials 20 --curves-out curves.csv --summary-out summary.csv

Options may also come from a ``key=value`` file given with ``--config``
(keys are flag names without the leading dashes); command-line flags win.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import error_matrix, gmbk_bound, grk_factor, grmk_bound_general, grmk_step_factor, rate_curve
from .block import WeightScheme
from .linalg import ContractError, lambda_min_pos, min_norm_solution
from .problems import SOURCES, ProblemSpec, generate
from .selection import SelectionRule
from .solve import SolveReport, StopCriteria, solve

__all__ = ["RunConfig", "run", "compare_rates", "main", "CURVE_COLUMNS", "SUMMARY_COLUMNS", "RATE_COLUMNS"]

log = logging.getLogger(__name__)

CURVE_COLUMNS = ("method", "trial", "k", "res", "rr", "elapsed_ns", "set_size")
SUMMARY_COLUMNS = ("method", "median_iters", "median_time_s", "rho_at_final", "bound_factor",
                   "trials", "converged")
RATE_COLUMNS = ("k", "grk_bound", "grmk_bound", "grk_rho", "grmk_rho")


@dataclass
class RunConfig:
    """One benchmark: a problem family, methods, stopping rule and trial count.

    Each trial draws a fresh problem from ``(seed, trial)`` unless
    ``fixed_problem`` is set, in which case every trial shares the problem
    drawn from ``seed`` and only the sampling differs.
    """

    problem: ProblemSpec
    methods: list[SelectionRule]
    stop: StopCriteria = field(default_factory=StopCriteria)
    trials: int = 30
    seed: int = 0
    curves_out: str | None = None
    summary_out: str | None = None
    rates_out: str | None = None
    threads: int = 1
    fixed_problem: bool = False
    weights: WeightScheme = field(default_factory=WeightScheme)

    def __post_init__(self):
        if self.trials < 1:
            raise ContractError(f"trials must be >= 1, got {self.trials}")
        if not self.methods:
            raise ContractError("at least one method is required")
        if self.threads < 1:
            raise ContractError(f"threads must be >= 1, got {self.threads}")


def _problem_for(config: RunConfig, trial: int) -> ProblemSpec:
    seed = (config.seed,) if config.fixed_problem else (config.seed, trial)
    p = config.problem
    return ProblemSpec(p.source, p.m, p.n, p.density, p.path, seed, p.solution)


def _solver_rng(config: RunConfig, trial: int, rule: SelectionRule) -> np.random.Generator:
    return np.random.default_rng([config.seed, trial, zlib.crc32(rule.label.encode())])


@dataclass
class _TrialResult:
    trial: int
    reports: dict
    factors: dict


def _bound_for(rule: SelectionRule, A, rep: SolveReport, lam: float) -> float:
    if rule.kind == "grk":
        return grk_factor(A, lam)
    if rep.iterations == 0:
        return math.nan
    if rule.kind == "grmk" and rule.theta == 0.5:
        return grmk_bound_general(A, rep.sets[1:], rep.chosen[1:], lam).general
    if rule.kind == "gmbk" and rule.xi is None:
        return gmbk_bound(A, rep.sets[1:], lam).general
    return math.nan


def _run_trial(config: RunConfig, trial: int) -> _TrialResult:
    A, b, _ = generate(_problem_for(config, trial))
    x_star = min_norm_solution(A, b)
    needs_bound = any(r.kind in ("grk", "grmk", "gmbk") for r in config.methods)
    lam = lambda_min_pos(A) if needs_bound else math.nan
    reports, factors = {}, {}
    for rule in config.methods:
        rep = solve(rule, A, b, stop=config.stop, rng=_solver_rng(config, trial, rule), x_star=x_star,
                    weights=config.weights, record_sets=rule.kind in ("grmk", "gmbk"))
        reports[rule.label] = rep
        factors[rule.label] = _bound_for(rule, A, rep, lam)
    return _TrialResult(trial, reports, factors)


def _trials(config: RunConfig) -> list[_TrialResult]:
    if config.threads == 1:
        return [_run_trial(config, t) for t in range(config.trials)]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(lambda t: _run_trial(config, t), range(config.trials)))


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: str, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _curve_rows(results: list[_TrialResult], labels: list[str]):
    for label in labels:
        for res in results:
            rep = res.reports[label]
            for k in range(rep.iterations + 1):
                yield (label, res.trial, k, float(rep.res[k]), float(rep.rr[k]),
                       int(rep.elapsed_ns[k]), int(rep.set_size[k]))


def _summary_rows(results: list[_TrialResult], labels: list[str]):
    for label in labels:
        reps = [res.reports[label] for res in results]
        iters = np.array([r.iterations for r in reps])
        times = np.array([r.elapsed_s for r in reps])
        K = int(iters.max())
        rho = math.nan
        if K > 0 and all(r.err_sq[0] > 0 for r in reps):
            rho = float(rate_curve(error_matrix(reps, K + 1))[-1])
        factors = np.array([res.factors[label] for res in results])
        factors = factors[np.isfinite(factors)]
        bound = float(np.median(factors)) if factors.size else math.nan
        yield (label, float(np.median(iters)), float(np.median(times)), rho, bound,
               len(reps), sum(r.converged for r in reps))


def run(config: RunConfig) -> int:
    """Run every (method, trial) pair and write the requested CSV files.

    Returns the process exit status: 0 on success. Methods that hit
    ``max_iters`` are reported in the summary, not treated as failures.
    """
    results = _trials(config)
    labels = [r.label for r in config.methods]
    summary = list(_summary_rows(results, labels))
    if config.curves_out:
        _write_csv(config.curves_out, CURVE_COLUMNS, _curve_rows(results, labels))
    if config.summary_out:
        _write_csv(config.summary_out, SUMMARY_COLUMNS, summary)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        w.writerows([[_fmt(v) for v in row] for row in summary])
        sys.stdout.write(buf.getvalue())
    if config.rates_out:
        compare_rates(config, config.rates_out)
    return 0


def compare_rates(config: RunConfig, path: str | None = None) -> list[tuple]:
    """Per-iteration GRK/GRMK factors next to their empirical rates.

    Both methods run ``config.trials`` times on the single problem drawn from
    ``config.seed``. Row ``k`` holds the GRK factor, the trial mean of the
    GRMK factor of step ``k`` (blank once every trial has stopped) and the
    empirical rates at iterate ``k``. Rows are returned and, if ``path`` is
    given, written as CSV.
    """
    A, b, _ = generate(_problem_for(RunConfig(config.problem, config.methods, seed=config.seed,
                                              fixed_problem=True), 0))
    x_star = min_norm_solution(A, b)
    lam = lambda_min_pos(A)
    grk_rule, grmk_rule = SelectionRule("grk"), SelectionRule("grmk")
    runs = {}
    for rule in (grk_rule, grmk_rule):
        runs[rule.kind] = [solve(rule, A, b, stop=config.stop, rng=_solver_rng(config, t, rule),
                                 x_star=x_star, record_sets=True) for t in range(config.trials)]
    K = max(r.iterations for reps in runs.values() for r in reps)
    rows = []
    if K == 0:
        return rows
    rho = {kind: rate_curve(error_matrix(reps, K + 1)) for kind, reps in runs.items()}
    g = grk_factor(A, lam)
    for k in range(1, K + 1):
        steps = [grmk_step_factor(A, rep.sets[k + 1], rep.chosen[k], lam)
                 for rep in runs["grmk"] if rep.iterations > k]
        grmk_b = math.fsum(steps) / len(steps) if steps else math.nan
        rows.append((k, g, grmk_b, float(rho["grk"][k - 1]), float(rho["grmk"][k - 1])))
    if path:
        _write_csv(path, RATE_COLUMNS, rows)
    return rows


# -- command line -----------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greedy-kaczmarz", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key=value file with default option values")
    p.add_argument("--problem", choices=SOURCES, default="gaussian")
    p.add_argument("--m", type=int, default=500)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--mm-file", help="Matrix Market file (implies --problem mm)")
    p.add_argument("--methods", default="grk,grmk",
                   help="comma list of rk,mr,md,grk,grmk,grmk-theta=<v>,gk,gbk-eta=<v>,gdbk,gmbk,gmbk-xi=<v>,avg-block")
    p.add_argument("--weights", choices=("norm", "uniform"), default="norm",
                   help="weights of the avg-block method")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--metric", choices=("res", "rr"), default="res")
    p.add_argument("--max-iters", type=int, default=None, help="default 200*m")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=None, help="falls back to $KACZ_SEED, then 0")
    p.add_argument("--fixed-problem", action="store_true", help="share one problem across trials")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--curves-out")
    p.add_argument("--summary-out")
    p.add_argument("--rates-out")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ContractError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def _truthy(value) -> bool:
    return value if isinstance(value, bool) else str(value).strip().lower() in ("1", "true", "yes", "on")


def config_from_args(argv=None) -> tuple[RunConfig, bool]:
    """Build a :class:`RunConfig` (and the verbosity flag) from command-line arguments."""
    parser = _parser()
    args = parser.parse_args(argv)
    if args.config:
        file_values = _read_config_file(args.config)
        known = {a.dest for a in parser._actions}
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise ContractError(f"{args.config}: unknown option(s) {', '.join(unknown)}")
        parser.set_defaults(**file_values)
        args = parser.parse_args(argv)
        args.fixed_problem = _truthy(args.fixed_problem)
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("KACZ_SEED", "0"))
    source = "mm" if args.mm_file else args.problem
    if source == "identity":
        args.n = args.m
    problem = ProblemSpec(source, args.m, args.n, args.density, args.mm_file, seed)
    methods = [SelectionRule.parse(tok) for tok in args.methods.split(",") if tok.strip()]
    return RunConfig(
        problem=problem,
        methods=methods,
        stop=StopCriteria(args.tol, args.metric, args.max_iters),
        trials=args.trials,
        seed=seed,
        curves_out=args.curves_out,
        summary_out=args.summary_out,
        rates_out=args.rates_out,
        threads=args.threads,
        fixed_problem=args.fixed_problem,
        weights=WeightScheme(args.weights),
    ), args.verbose


def main(argv=None) -> int:
    try:
        config, verbose = config_from_args(argv)
    except (ContractError, OSError, ValueError) as exc:
        print(f"greedy-kaczmarz: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)
    try:
        return run(config)
    except (ContractError, OSError, ValueError) as exc:
        print(f"greedy-kaczmarz: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
