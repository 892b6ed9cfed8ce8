"""Solver driver: selection, update, history and stopping."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .block import WeightScheme, average_projections, pick_block, project_block
from .linalg import ContractError, RowMatrix, as_vector, min_norm_solution
from .selection import SelectionRule
from .single import pick_row, project_row

__all__ = ["StopCriteria", "Status", "SolveReport", "solve", "RECOMPUTE_EVERY"]

#: the incrementally updated residual is recomputed from scratch this often
RECOMPUTE_EVERY = 1000


@dataclass(frozen=True)
class StopCriteria:
    """Stop when the chosen metric drops below ``tol`` or after ``max_iters`` steps.

    ``metric`` is ``"res"`` (relative squared error to the minimum-norm
    solution) or ``"rr"`` (relative squared residual). ``max_iters=None``
    means ``200 * m``.
    """

    tol: float = 1e-10
    metric: str = "res"
    max_iters: int | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ContractError(f"tol must be positive, got {self.tol}")
        if self.metric not in ("res", "rr"):
            raise ContractError(f"metric must be 'res' or 'rr', got {self.metric!r}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ContractError(f"max_iters must be >= 1, got {self.max_iters}")

    def cap(self, m: int) -> int:
        return 200 * m if self.max_iters is None else self.max_iters


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"


@dataclass
class SolveReport:
    """Outcome of :func:`solve`.

    All history arrays have ``iterations + 1`` entries, entry ``k`` describing
    the iterate ``x_k``. ``chosen[k]`` and ``set_size[k]`` describe the
    selection that produced ``x_k`` (``-1``/``0`` at ``k = 0``; ``chosen`` is
    ``-1`` for block updates).
    """

    method: str
    iterations: int
    status: Status
    x: np.ndarray
    err_sq: np.ndarray
    res: np.ndarray
    rr: np.ndarray
    elapsed_ns: np.ndarray
    chosen: np.ndarray
    set_size: np.ndarray
    sets: list | None = field(default=None, repr=False)
    x_star: np.ndarray | None = field(default=None, repr=False)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def elapsed_s(self) -> float:
        return float(self.elapsed_ns[-1]) * 1e-9


def _as_rule(method) -> SelectionRule:
    if isinstance(method, SelectionRule):
        return method
    if isinstance(method, str):
        return SelectionRule.parse(method)
    raise ContractError(f"cannot interpret {method!r} as a method")


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(0 if rng is None else rng)


def solve(method, A: RowMatrix, b, x0=None, stop: StopCriteria | None = None, rng=None,
          x_star=None, *, weights: WeightScheme | None = None, record_sets: bool = False,
          compute_x_star: bool = True) -> SolveReport:
    """Run one Kaczmarz-type method until the stopping rule fires.

    Parameters
    ----------
    method : SelectionRule or str
        Method tag, e.g. ``"grmk"``, ``"gdbk"`` or ``"gbk-eta=0.5"``.
    A : RowMatrix
    b : array_like, shape (m,)
    x0 : array_like, optional
        Starting point, zero by default.
    stop : StopCriteria, optional
    rng : numpy.random.Generator or int, optional
        Generator (or seed) for the randomized rules. Seed 0 if omitted.
    x_star : array_like, optional
        Reference solution for the error history. When omitted and
        ``compute_x_star`` is true it is computed once with
        :func:`min_norm_solution`; otherwise RES is unavailable and the
        ``"res"`` metric falls back to ``"rr"``.
    weights : WeightScheme, optional
        Weights of the ``avg-block`` method (norm-proportional by default).
    record_sets : bool
        Keep every working set (needed for the convergence-factor analysis).

    Returns
    -------
    SolveReport
    """
    rule = _as_rule(method)
    stop = stop or StopCriteria()
    rng = _as_rng(rng)
    b = as_vector(b, A.m, "b")
    x = np.zeros(A.n) if x0 is None else as_vector(x0, A.n, "x0").copy()
    if x_star is None and compute_x_star:
        x_star = min_norm_solution(A, b)
    if x_star is not None:
        x_star = as_vector(x_star, A.n, "x_star")
    metric = stop.metric if x_star is not None else "rr"
    cap = stop.cap(A.m)
    weights = weights or WeightScheme()

    r = b - A.matvec(x)
    rr0 = float(r @ r)
    xs_sq = float(x_star @ x_star) if x_star is not None else np.nan
    work = np.zeros(A.n) if A.is_sparse else None
    cdf = np.cumsum(A.row_sq_norms) if rule.kind == "rk" else None

    err_sq, rr, elapsed, chosen, sizes = [], [], [], [], []
    sets = [] if record_sets else None

    def record(t_ns, i, size):
        if x_star is not None:
            e = x - x_star
            err_sq.append(float(e @ e))
        else:
            err_sq.append(np.nan)
        rr.append(float(r @ r) / rr0 if rr0 > 0 else 0.0)
        elapsed.append(t_ns)
        chosen.append(i)
        sizes.append(size)

    def done() -> bool:
        if rr0 == 0.0 or rr[-1] == 0.0:
            return True
        if metric == "res":
            return xs_sq > 0 and err_sq[-1] / xs_sq < stop.tol
        return rr[-1] < stop.tol

    record(0, -1, 0)
    if sets is not None:
        sets.append(None)
    status = Status.CONVERGED if done() else Status.MAX_ITERS
    k = 0
    t0 = time.perf_counter_ns()
    while status is Status.MAX_ITERS and k < cap:
        if rule.is_block:
            s = pick_block(rule, A, r)
            rows = s.indices
            if rule.kind == "avg-block":
                average_projections(A, x, r, rows, weights.weights(A, rows))
            else:
                project_block(A, x, r, rows, work)
            i, size = -1, rows.size
        else:
            i, s = pick_row(rule, A, r, rng, cdf)
            project_row(A, x, r, i, work)
            size = 1 if s is None else len(s)
        k += 1
        if k % RECOMPUTE_EVERY == 0:
            r[:] = b - A.matvec(x)
        record(time.perf_counter_ns() - t0, i, size)
        if sets is not None:
            sets.append(None if s is None else s.indices)
        if done():
            status = Status.CONVERGED

    err = np.asarray(err_sq)
    return SolveReport(
        method=rule.label,
        iterations=k,
        status=status,
        x=x,
        err_sq=err,
        res=err / xs_sq if x_star is not None and xs_sq > 0 else np.full(err.size, np.nan),
        rr=np.asarray(rr),
        elapsed_ns=np.asarray(elapsed, dtype=np.int64),
        chosen=np.asarray(chosen, dtype=np.int64),
        set_size=np.asarray(sizes, dtype=np.int64),
        sets=sets,
        x_star=x_star,
    )
